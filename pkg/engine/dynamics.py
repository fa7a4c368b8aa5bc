"""
Динаміка спота та відображення дій гравців у волатильність
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from engine.state import PathState
from utils.errors import DomainError, NumericError, ShapeError
from utils.logger import setup_logger
from utils.validators import first_non_finite, validate_correlation, validate_non_negative

logger = setup_logger()

VOL_FLOOR = 0.01
VOL_CAP = 2.0
SAMPLE_LOG_STD_MIN = float(np.log(1e-8))
SAMPLE_LOG_STD_MAX = 0.0


class ActionVariant(str, Enum):
    """Як дія гравця задає σ_t"""
    DIRECT = "direct"        # ln σ_t = a
    LOGNORMAL = "lognormal"  # a = (середнє, log-std) для ln σ_t
    SDE = "sde"              # a = (μ, η, ρ) рівняння для ln σ


ACTION_DIMS = {ActionVariant.DIRECT: 1, ActionVariant.LOGNORMAL: 2, ActionVariant.SDE: 3}


@dataclass
class VolAction:
    """Дії всіх траєкторій на кроці; для SDE значення вже у допустимій області"""
    variant: ActionVariant
    values: np.ndarray

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if self.values.shape[1] != ACTION_DIMS[self.variant]:
            raise ShapeError(f"Варіант {self.variant.value} потребує {ACTION_DIMS[self.variant]} вимірів дії")
        if self.variant == ActionVariant.SDE:
            if not validate_non_negative(self.values[:, 1]):
                raise DomainError("η має бути >= 0")
            if not validate_correlation(self.values[:, 2]):
                raise DomainError("ρ має бути в [-1, 1]")

    @classmethod
    def from_raw(cls, variant: ActionVariant, raw: np.ndarray) -> "VolAction":
        """Вихід політики → дія: для SDE η = softplus, ρ = tanh"""
        raw = np.atleast_2d(np.asarray(raw, dtype=float))
        if variant != ActionVariant.SDE:
            return cls(variant, raw)
        mapped = np.column_stack([raw[:, 0], np.logaddexp(0.0, raw[:, 1]), np.tanh(raw[:, 2])])
        return cls(variant, mapped)

    @classmethod
    def lognormal(cls, mean, log_std) -> "VolAction":
        return cls(ActionVariant.LOGNORMAL, np.column_stack([np.ravel(mean), np.ravel(log_std)]))

    @classmethod
    def sde(cls, drift, vol_of_vol, correlation) -> "VolAction":
        return cls(ActionVariant.SDE, np.column_stack([np.ravel(drift), np.ravel(vol_of_vol), np.ravel(correlation)]))


@dataclass
class VolNormals:
    """Шуми для відображення дії: вибірка ln σ, шум спота попереднього кроку, незалежний Z⊥"""
    sample: Optional[np.ndarray] = None
    spot: Optional[np.ndarray] = None
    perp: Optional[np.ndarray] = None


def step_spot(spots: np.ndarray, vols: np.ndarray, normals: np.ndarray, dt: float) -> np.ndarray:
    """ln S_{t+1} = ln S_t − ½σ²δ + σ√δ Z"""

    log_next = np.log(spots) - 0.5 * vols ** 2 * dt + vols * np.sqrt(dt) * normals
    next_spots = np.exp(log_next)
    bad = first_non_finite(next_spots)
    if bad >= 0 or np.any(next_spots <= 0):
        index = bad if bad >= 0 else int(np.argmax(next_spots <= 0))
        raise NumericError(f"Нескінченний спот на траєкторії {index}")
    return next_spots


def action_to_vol(
    action: VolAction,
    state: PathState,
    normals: Optional[VolNormals] = None,
    dt: float = 1.0 / 252.0,
    base_vol: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int]:
    """
    σ_t^i з дії. Повертає (волатильності в [0.01, 2.0], кількість обрізань).

    SDE: ln σ_t = ln σ_{t-1} + μδ + ηρ√δ Z + η√(1−ρ²)√δ Z⊥, де Z - шум спота,
    що вже реалізувався на попередньому кроці.
    """

    values = action.values
    if action.variant == ActionVariant.DIRECT:
        log_vol = values[:, 0]
    elif action.variant == ActionVariant.LOGNORMAL:
        if normals is None or normals.sample is None:
            raise ShapeError("Логнормальний варіант потребує шуму вибірки")
        std = np.exp(np.clip(values[:, 1], SAMPLE_LOG_STD_MIN, SAMPLE_LOG_STD_MAX))
        log_vol = values[:, 0] + std * normals.sample
    else:
        if normals is None or normals.spot is None or normals.perp is None:
            raise ShapeError("SDE-варіант потребує шумів Z та Z⊥")
        base = state.prev_vol if base_vol is None else base_vol
        drift, eta, rho = values[:, 0], values[:, 1], values[:, 2]
        sqrt_dt = np.sqrt(dt)
        log_vol = (
            np.log(base)
            + drift * dt
            + eta * rho * sqrt_dt * normals.spot
            + eta * np.sqrt(np.maximum(1.0 - rho ** 2, 0.0)) * sqrt_dt * normals.perp
        )

    vols = np.exp(log_vol)
    bad = first_non_finite(log_vol)
    if bad >= 0:
        raise NumericError(f"Нескінченна волатильність на траєкторії {bad}")

    n_clamped = int(np.sum((vols < VOL_FLOOR) | (vols > VOL_CAP)))
    if n_clamped:
        logger.debug(f"🔧 Волатильність обрізана на {n_clamped} траєкторіях (t={state.t})")
    return np.clip(vols, VOL_FLOOR, VOL_CAP), n_clamped
