"""
Pydantic-схеми конфігурацій навчання та експериментів
"""

import os
from enum import Enum
from typing import List, Optional

from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from config import config
from engine.dynamics import ActionVariant
from engine.state import SimConfig, StateMode
from game.specs import FakeStrikeMode
from market.surface import DAYS_PER_YEAR
from services.exploration_service import InterpolationMode
from utils.errors import ConfigError


class PolicyAlgorithm(str, Enum):
    PPO = "ppo"
    A2C = "a2c"


class TrainerConfig(BaseModel):
    """Гіперпараметри MARL-циклу"""
    n_basis: int = Field(default=100, ge=1)
    interpolation: InterpolationMode = InterpolationMode.LINEAR
    knn_k: int = Field(default=4, ge=1)
    inverse_distance: bool = False

    algorithm: PolicyAlgorithm = PolicyAlgorithm.PPO
    clip: float = Field(default=0.3, gt=0)
    kl_target: float = Field(default=0.01, gt=0)
    kl_coef: float = Field(default=0.2, ge=0)
    learning_rate: float = Field(default=1e-4, ge=0)
    sgd_epochs: int = Field(default=30, ge=1)
    minibatch_fraction: float = Field(default=0.1, gt=0, le=1)
    normalize_advantages: bool = True

    value_learning_rate: float = Field(default=1e-3, ge=0)
    value_epochs: int = Field(default=5, ge=0)

    hidden_sizes: List[int] = Field(default_factory=lambda: [50, 50, 50])
    state_dependent_std: bool = True
    init_log_std: float = -2.0

    state_mode: StateMode = StateMode.PATH_DEPENDENT
    action_variant: ActionVariant = ActionVariant.LOGNORMAL
    localize: bool = False

    amc_degree: int = Field(default=8, ge=0)
    amc_itm_only: bool = False
    amc_frozen_vol: bool = False

    max_iterations: int = Field(default=500, ge=0)
    convergence_window: int = Field(default=50, ge=2)
    convergence_tol: float = Field(default=1e-3, ge=0)
    smoothing: int = Field(default=10, ge=1)
    reward_scale: float = Field(default_factory=lambda: config.REWARD_SCALE, gt=0)
    checkpoint_every: int = Field(default_factory=lambda: config.CHECKPOINT_EVERY, ge=1)
    resample_noise: bool = True

    @field_validator("hidden_sizes")
    @classmethod
    def _positive_layers(cls, value: List[int]) -> List[int]:
        if any(size < 1 for size in value):
            raise ValueError("Розміри прихованих шарів мають бути додатними")
        return value

    def minibatch_size(self, buffer_size: int) -> int:
        """⌊fraction · n_p·T·B⌋, не більше розміру буфера"""
        return max(1, min(int(self.minibatch_fraction * buffer_size), buffer_size))


class ExperimentKind(str, Enum):
    VANILLA = "vanilla"
    BERMUDAN = "bermudan"


class VanillaTargets(BaseModel):
    """Сітка цільових колів"""
    maturities_days: List[int] = Field(default_factory=lambda: [11, 21, 36, 51])
    strikes: List[float] = Field(default_factory=lambda: [0.95, 1.0, 1.05])
    vega_weighted: bool = False


class BermudanTarget(BaseModel):
    """Бермудський кол; дати виконання беруться з sim.t1, sim.t2"""
    k1: float = Field(default=1.0, gt=0)
    k2: float = Field(default=1.012, gt=0)
    fake_strike_mode: FakeStrikeMode = FakeStrikeMode.DELTA
    weight: float = Field(default=1.0, ge=0)
    shaping: bool = False
    sanity_strikes: List[float] = Field(default_factory=lambda: [0.95, 1.0, 1.05])


class ExperimentConfig(BaseModel):
    """Повний опис експерименту; перевіряється до будь-яких обчислень"""
    kind: ExperimentKind = ExperimentKind.VANILLA
    name: str = "experiment"
    surface: str
    sim: SimConfig = Field(default_factory=SimConfig)
    trainer: TrainerConfig = Field(default_factory=TrainerConfig)
    targets: VanillaTargets = Field(default_factory=VanillaTargets)
    bermudan: Optional[BermudanTarget] = None
    steps_per_day: int = Field(default=1, ge=1)
    output_dir: str = Field(default_factory=lambda: config.OUTPUT_DIR)

    @model_validator(mode="after")
    def _check_kind(self) -> "ExperimentConfig":
        if self.kind == ExperimentKind.BERMUDAN:
            if self.bermudan is None:
                self.bermudan = BermudanTarget()
            # локалізація на (t1, t2] увімкнена, якщо не вимкнена явно
            if "localize" not in self.trainer.model_fields_set:
                self.trainer.localize = True
        if abs(self.sim.dt * DAYS_PER_YEAR * self.steps_per_day - 1.0) > 1e-9:
            raise ValueError(f"dt={self.sim.dt:g} не відповідає {self.steps_per_day} крокам на день")
        horizon_days = self.sim.n_steps / self.steps_per_day
        if self.kind == ExperimentKind.VANILLA and any(d > horizon_days for d in self.targets.maturities_days):
            raise ValueError(f"Строки котирувань виходять за горизонт {horizon_days:g} днів")
        return self

    @classmethod
    def load(cls, path: str) -> "ExperimentConfig":
        """JSON-файл → конфігурація; відносний шлях поверхні - від теки конфігурації"""

        if not os.path.exists(path):
            raise ConfigError(f"Файл конфігурації не знайдено: {path}")
        try:
            with open(path, "r", encoding="utf-8") as handle:
                experiment = cls.model_validate_json(handle.read())
        except ValidationError as e:
            raise ConfigError(f"Невалідна конфігурація {path}: {e}") from e
        except OSError as e:
            raise ConfigError(f"Не вдалося прочитати {path}: {e}") from e

        if not os.path.isabs(experiment.surface) and not os.path.exists(experiment.surface):
            experiment.surface = os.path.join(os.path.dirname(os.path.abspath(path)), experiment.surface)
        experiment.check_files()
        return experiment

    @property
    def run_dir(self) -> str:
        return os.path.join(self.output_dir, self.name)

    def check_files(self) -> None:
        if not os.path.exists(self.surface):
            raise ConfigError(f"Файл поверхні не знайдено: {self.surface}")
