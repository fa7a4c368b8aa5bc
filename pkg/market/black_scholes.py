"""
Формула Блека (нульові ставки) та обернення у неявну волатильність
"""

from typing import Tuple

import numpy as np
from scipy.special import ndtr

from utils.errors import DomainError, ImpliedVolError, NumericError
from utils.logger import setup_logger

logger = setup_logger()

VOL_LOWER = 1e-4
VOL_UPPER = 5.0
PRICE_TOLERANCE = 1e-10
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _normal_pdf(x):
    return _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def bs_call_price(forward, strike, maturity, vol):
    """Недисконтована ціна колу Блека; при T=0 або σ=0 - внутрішня вартість"""

    F, K, T, sigma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (forward, strike, maturity, vol)))
    if np.any(F <= 0) or np.any(K <= 0) or np.any(T < 0) or np.any(sigma < 0):
        raise DomainError("bs_call_price: F, K > 0 та T, σ >= 0")

    intrinsic = np.maximum(F - K, 0.0)
    total = sigma * np.sqrt(T)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(F / K) + 0.5 * total ** 2) / total
        price = F * ndtr(d1) - K * ndtr(d1 - total)
    price = np.where(total > 0, np.maximum(price, intrinsic), intrinsic)
    return float(price) if price.ndim == 0 else price


def bs_vega(forward, strike, maturity, vol):
    """∂C/∂σ"""

    F, K, T, sigma = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (forward, strike, maturity, vol)))
    total = sigma * np.sqrt(T)
    with np.errstate(divide="ignore", invalid="ignore"):
        d1 = (np.log(F / K) + 0.5 * total ** 2) / total
        vega = F * _normal_pdf(d1) * np.sqrt(T)
    vega = np.where(total > 0, vega, 0.0)
    return float(vega) if vega.ndim == 0 else vega


def implied_vol(
    price: float,
    forward: float,
    strike: float,
    maturity: float,
    tolerance: float = PRICE_TOLERANCE,
    max_iterations: int = 100,
) -> float:
    """
    Неявна волатильність: Ньютон з вегою, бісекція як запасний варіант на [1e-4, 5].

    Ціна повинна лежати у безарбітражній смузі [(F-K)+, F); інакше ImpliedVolError.
    """

    if forward <= 0 or strike <= 0 or maturity <= 0:
        raise DomainError("implied_vol: F, K, T мають бути додатними")

    lower_band = max(forward - strike, 0.0)
    if not (lower_band < price < forward) or not np.isfinite(price):
        raise ImpliedVolError(f"Ціна {price:.12g} поза безарбітражною смугою", (lower_band, forward))

    lo, hi = VOL_LOWER, VOL_UPPER
    price_lo = bs_call_price(forward, strike, maturity, lo)
    price_hi = bs_call_price(forward, strike, maturity, hi)
    if not (price_lo <= price <= price_hi):
        raise ImpliedVolError(f"Ціна {price:.12g} поза брекетом волатильності", (price_lo, price_hi))

    sigma = min(max(np.sqrt(2.0 * abs(np.log(forward / strike)) / maturity), 0.2), 1.0)
    for _ in range(max_iterations):
        diff = bs_call_price(forward, strike, maturity, sigma) - price
        if diff > 0:
            hi = sigma
        else:
            lo = sigma

        vega = bs_vega(forward, strike, maturity, sigma)
        step = diff / vega if vega > 1e-300 else np.inf
        candidate = sigma - step
        if not (lo < candidate < hi):
            candidate = 0.5 * (lo + hi)
            step = sigma - candidate

        if abs(diff) <= tolerance and abs(step) <= 1e-13:
            return float(sigma)
        sigma = candidate
        if hi - lo < 1e-15:
            break

    diff = bs_call_price(forward, strike, maturity, sigma) - price
    if abs(diff) > tolerance:
        raise NumericError(f"implied_vol не зійшлася: залишок {diff:.3e}")
    return float(sigma)


def implied_vol_or_edge(price: float, forward: float, strike: float, maturity: float) -> Tuple[float, bool]:
    """
    Як implied_vol, але ціни поза смугою відображаються на край брекету.

    Повертає (волатильність, чи_на_краю). Використовується у винагородах, де ранні
    випадкові політики дають екстремальні ціни.
    """

    price_lo = bs_call_price(forward, strike, maturity, VOL_LOWER)
    if price <= max(price_lo, max(forward - strike, 0.0)):
        logger.warning(f"⚠️ Ціна {price:.6g} нижче смуги (K={strike:.4f}, T={maturity:.4f}), φ = {VOL_LOWER}")
        return VOL_LOWER, True
    price_hi = bs_call_price(forward, strike, maturity, VOL_UPPER)
    if price >= min(price_hi, forward):
        logger.warning(f"⚠️ Ціна {price:.6g} вище смуги (K={strike:.4f}, T={maturity:.4f}), φ = {VOL_UPPER}")
        return VOL_UPPER, True
    return implied_vol(price, forward, strike, maturity), False
