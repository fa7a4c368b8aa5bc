"""
Конфігурація симуляції та стан траєкторії x_t^i
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, Field, model_validator

from utils.errors import ShapeError


class StateMode(str, Enum):
    """Склад стану гравця"""
    LOCAL = "local"                    # (t, S_t)
    PLAIN = "plain"                    # (t, S_t, σ_{t-1})
    PATH_DEPENDENT = "path_dependent"  # (t, S_t, σ_{t-1}, S_{t∧t1}, σ_{(t-1)∧t1})


STATE_DIMS = {StateMode.LOCAL: 2, StateMode.PLAIN: 3, StateMode.PATH_DEPENDENT: 5}


class SimConfig(BaseModel):
    """Параметри Монте-Карло: n траєкторій, T кроків по δ, B паралельних прогонів"""
    n_paths: int = Field(default=120_000, ge=2)
    n_steps: int = Field(default=51, ge=2)
    dt: float = Field(default=1.0 / 252.0, gt=0)
    n_runs: int = Field(default=10, ge=1)
    seed: int = Field(default=0, ge=0)
    t1: int = Field(default=21, ge=1)
    t2: int = Field(default=51, ge=2)
    sigma_init: float = Field(default=0.2, gt=0)
    spot0: float = Field(default=1.0, gt=0)

    @model_validator(mode="after")
    def _check_dates(self) -> "SimConfig":
        if not 0 < self.t1 < self.t2 <= self.n_steps:
            raise ValueError(f"Потрібно 0 < t1 < t2 <= T, отримано t1={self.t1}, t2={self.t2}, T={self.n_steps}")
        return self

    def scaled(self, scale: int, min_paths: int = 2) -> "SimConfig":
        """Ділить n та B на scale (n не менше min_paths)"""
        scale = max(int(scale), 1)
        return self.model_copy(update={
            "n_paths": max(self.n_paths // scale, min_paths),
            "n_runs": max(self.n_runs // scale, 1),
        })


@dataclass
class PathState:
    """Стан усіх траєкторій одного прогону на кроці t"""
    t: int
    spot: np.ndarray
    prev_vol: np.ndarray
    frozen_spot: np.ndarray
    frozen_vol: np.ndarray
    mode: StateMode = StateMode.PATH_DEPENDENT

    @property
    def path_dependent(self) -> bool:
        return self.mode == StateMode.PATH_DEPENDENT

    @property
    def dim(self) -> int:
        return STATE_DIMS[self.mode]

    def features(self, n_steps: int) -> np.ndarray:
        """Вхід мереж: (t/T, ln S, ln σ_{t-1}[, ln S_{t∧t1}, ln σ_{(t-1)∧t1}])"""

        n = self.spot.shape[0]
        columns = [np.full(n, self.t / n_steps), np.log(self.spot)]
        if self.mode != StateMode.LOCAL:
            columns.append(np.log(self.prev_vol))
        if self.mode == StateMode.PATH_DEPENDENT:
            columns.extend([np.log(self.frozen_spot), np.log(self.frozen_vol)])
        return np.column_stack(columns)

    def take(self, index: np.ndarray) -> "PathState":
        return PathState(
            t=self.t,
            spot=self.spot[index],
            prev_vol=self.prev_vol[index],
            frozen_spot=self.frozen_spot[index],
            frozen_vol=self.frozen_vol[index],
            mode=self.mode,
        )


def build_state(
    spots: np.ndarray,
    vols: np.ndarray,
    t: int,
    config: SimConfig,
    mode: StateMode = StateMode.PATH_DEPENDENT,
) -> PathState:
    """
    Стан з історії: spots містить стовпці 0..t, vols - стовпці 0..t-1.

    Заморожені поля стежать за поточними до t1, потім фіксуються.
    """

    if spots.shape[1] < t + 1 or vols.shape[1] < t:
        raise ShapeError(f"Історія не покриває крок {t}")

    n = spots.shape[0]
    init = np.full(n, config.sigma_init)
    prev_vol = vols[:, t - 1] if t >= 1 else init
    frozen_step = min(t - 1, config.t1)
    frozen_vol = vols[:, frozen_step] if frozen_step >= 0 else init
    return PathState(
        t=t,
        spot=spots[:, t],
        prev_vol=prev_vol,
        frozen_spot=spots[:, min(t, config.t1)],
        frozen_vol=frozen_vol,
        mode=mode,
    )
