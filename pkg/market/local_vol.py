"""
Локальна волатильність Дюпіра у формі повної дисперсії
"""

import numpy as np

from market.surface import MarketSurface
from utils.errors import ArbitrageError, DomainError
from utils.logger import setup_logger

logger = setup_logger()

DUPIRE_DT = 1.0 / 365.0
DUPIRE_DY = 0.005
LOCAL_VAR_FLOOR = 1e-4
LOCAL_VAR_CAP = 4.0


def _time_derivative(surface: MarketSurface, t: float, y: np.ndarray, dt: float) -> np.ndarray:
    # шаблон не перетинає останній стовп: за ним w стала
    t_lo = t - dt
    t_hi = min(t + dt, surface.last_maturity) if t <= surface.last_maturity else t + dt
    lo_ok = t_lo > 0 and surface.covers(t_lo)
    hi_ok = t_hi > t and surface.covers(t_hi)
    if lo_ok and hi_ok:
        return (surface.total_variance(t_hi, y) - surface.total_variance(t_lo, y)) / (t_hi - t_lo)
    if hi_ok:
        return (surface.total_variance(t_hi, y) - surface.total_variance(t, y)) / (t_hi - t)
    if lo_ok:
        return (surface.total_variance(t, y) - surface.total_variance(t_lo, y)) / dt
    raise DomainError(f"Неможливо продиференціювати w за t у точці t={t:.6f}")


def dupire_local_vol(
    surface: MarketSurface,
    t: float,
    spot_level,
    dt: float = DUPIRE_DT,
    dy: float = DUPIRE_DY,
):
    """
    σ_loc(t, S) з центральними різницями за t та y = ln(S/S0).

    σ_loc² = ∂_t w / (1 − (y/w)∂_y w + ¼(−¼ − 1/w + y²/w²)(∂_y w)² + ½∂²_y w),
    результат обрізається до [1e-4, 4] у дисперсії.
    """

    if t <= 0:
        raise DomainError("dupire_local_vol: t > 0")
    spots = np.asarray(spot_level, dtype=float)
    if np.any(spots <= 0):
        raise DomainError("dupire_local_vol: спот має бути додатним")

    y = np.log(spots / surface.spot)
    w = surface.total_variance(t, y)
    w_up = surface.total_variance(t, y + dy)
    w_down = surface.total_variance(t, y - dy)
    w_t = _time_derivative(surface, t, y, dt)
    w_y = (w_up - w_down) / (2.0 * dy)
    w_yy = (w_up - 2.0 * w + w_down) / dy ** 2

    denominator = (
        1.0
        - (y / w) * w_y
        + 0.25 * (-0.25 - 1.0 / w + y ** 2 / w ** 2) * w_y ** 2
        + 0.5 * w_yy
    )
    if np.any(denominator <= 0):
        index = int(np.argmax(np.ravel(denominator <= 0)))
        raise ArbitrageError("Батерфляй-арбітраж (знаменник Дюпіра <= 0)", t, float(np.ravel(y)[index]))

    local_var = w_t / denominator
    clamped = (local_var < LOCAL_VAR_FLOOR) | (local_var > LOCAL_VAR_CAP)
    if np.any(clamped):
        logger.debug(f"🔧 Дисперсія Дюпіра обрізана у {int(np.sum(clamped))} точках (t={t:.4f})")
    vol = np.sqrt(np.clip(local_var, LOCAL_VAR_FLOOR, LOCAL_VAR_CAP))
    return float(vol) if vol.ndim == 0 else vol
