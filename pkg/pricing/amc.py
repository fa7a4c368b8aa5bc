"""
Американський Монте-Карло: регресія E_{t1}[(S_{t2} − k2)+] на поліноми від S_{t1}

Стовпці дизайн-матриці - стандартизовані мономи; розв'язок через np.linalg.lstsq.
При виродженому дизайні степінь зменшується з попередженням.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from numpy.polynomial import polynomial as P

from game.specs import BermudanSpec
from utils.errors import EstimationError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

DEFAULT_DEGREE = 8


@dataclass
class AmcRegression:
    """Налаштування регресії та діагностика останнього підгону"""
    degree: int = DEFAULT_DEGREE
    use_frozen_vol: bool = False
    itm_only: bool = False
    coefficients: Optional[np.ndarray] = field(default=None, repr=False)
    effective_degree: Optional[int] = None
    condition_number: float = float("nan")
    n_fit: int = 0

    def __post_init__(self):
        if self.degree < 0:
            raise ShapeError("Степінь регресії має бути >= 0")

    def configured(self) -> "AmcRegression":
        """Чиста копія налаштувань без результатів підгону"""
        return AmcRegression(degree=self.degree, use_frozen_vol=self.use_frozen_vol, itm_only=self.itm_only)


def _standardize(x: np.ndarray) -> np.ndarray:
    scale = x.std()
    return (x - x.mean()) / scale if scale > 0 else np.zeros_like(x)


def _design(regressor: np.ndarray, degree: int, extra: Optional[np.ndarray]) -> np.ndarray:
    columns = P.polyvander(_standardize(regressor), degree)
    if extra is not None and degree > 0:
        z = _standardize(extra)
        columns = np.column_stack([columns, z, z * _standardize(regressor)])
    return columns


def regress_continuation(
    regressor: np.ndarray,
    payoff: np.ndarray,
    regression: AmcRegression,
    extra: Optional[np.ndarray] = None,
    fit_mask: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, AmcRegression]:
    """
    Підгін payoff ~ поліном(regressor) та оцінка на всіх траєкторіях.

    Повертає (продовження >= 0, діагностика). Степінь 0 дає рівно вибіркове середнє.
    """

    regressor = np.asarray(regressor, dtype=float)
    payoff = np.asarray(payoff, dtype=float)
    if regressor.shape != payoff.shape or regressor.ndim != 1:
        raise ShapeError("Регресор та виплата - вектори однакової довжини")
    if regressor.size == 0:
        raise EstimationError("Порожня вибірка для регресії")

    rows = np.ones(regressor.size, dtype=bool) if fit_mask is None else np.asarray(fit_mask, dtype=bool)
    if rows.sum() == 0:
        logger.warning("⚠️ Немає траєкторій для підгону, використовується вся вибірка")
        rows = np.ones(regressor.size, dtype=bool)

    result = regression.configured()
    result.n_fit = int(rows.sum())
    n_distinct = np.unique(regressor[rows]).size
    degree = regression.degree
    if degree > n_distinct - 1:
        logger.warning(f"⚠️ Лише {n_distinct} різних значень регресора, степінь {degree} → {n_distinct - 1}")
        degree = n_distinct - 1

    if degree == 0:
        mean = float(np.sort(payoff[rows]).mean())
        result.coefficients = np.array([mean])
        result.effective_degree = 0
        result.condition_number = 1.0
        return np.full(regressor.size, max(mean, 0.0)), result

    while True:
        design = _design(regressor, degree, extra if regression.use_frozen_vol else None)
        coefficients, _, rank, singular = np.linalg.lstsq(design[rows], payoff[rows], rcond=None)
        if rank == design.shape[1] or degree == 0:
            break
        logger.warning(f"⚠️ Вироджений дизайн (ранг {rank} < {design.shape[1]}), степінь {degree} → {degree - 1}")
        degree -= 1

    result.coefficients = coefficients
    result.effective_degree = degree
    result.condition_number = float(singular[0] / singular[-1]) if singular.size and singular[-1] > 0 else float("inf")
    return np.maximum(design @ coefficients, 0.0), result


def amc_continuation(
    spots: np.ndarray,
    spec: BermudanSpec,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, AmcRegression]:
    """Продовження на t1 для кожної траєкторії: spots (n, T+1), vols (n, T)"""

    regression = regression or AmcRegression()
    spots = np.asarray(spots, dtype=float)
    if spots.ndim != 2 or spots.shape[1] <= spec.t2:
        raise ShapeError(f"Траєкторії мають покривати крок t2={spec.t2}")

    s1, s2 = spots[:, spec.t1], spots[:, spec.t2]
    extra = None
    if regression.use_frozen_vol:
        if vols is None:
            raise ShapeError("Регресор замороженої волатильності потребує vols")
        extra = np.asarray(vols, dtype=float)[:, spec.t1]
    fit_mask = s1 > spec.k1 if regression.itm_only else None
    payoff = np.maximum(s2 - spec.k2, 0.0)
    return regress_continuation(s1, payoff, regression, extra=extra, fit_mask=fit_mask)
