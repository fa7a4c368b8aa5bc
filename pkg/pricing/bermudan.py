"""
Бермудський кол з двома датами, максимальний європейський та switch value
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from game.specs import BermudanSpec
from market.black_scholes import implied_vol
from pricing.amc import AmcRegression, amc_continuation
from pricing.vanilla import mc_vanilla_price
from utils.errors import DomainError, ImpliedVolError
from utils.logger import setup_logger

logger = setup_logger()


@dataclass
class MaxEuropean:
    """max{E(S_{t1}−k1)+, E(S_{t2}−k2)+} з обома компонентами"""
    price: float
    price_se: float
    eu1: float
    eu1_se: float
    eu2: float
    eu2_se: float


@dataclass
class BermudanResult:
    bermudan: float
    bermudan_se: float
    eu1: float
    eu1_se: float
    eu2: float
    eu2_se: float
    max_eu: float
    max_eu_se: float
    switch_value: float
    exercise_fraction: float
    exercise: Optional[np.ndarray] = field(default=None, repr=False)
    regression: Optional[AmcRegression] = field(default=None, repr=False)
    flags: List[str] = field(default_factory=list)

    def as_row(self) -> dict:
        return {
            "bermudan": self.bermudan,
            "eu1": self.eu1,
            "eu2": self.eu2,
            "max_eu": self.max_eu,
            "switch_value_volpts": self.switch_value,
            "se_bermudan": self.bermudan_se,
            "se_eu1": self.eu1_se,
            "se_eu2": self.eu2_se,
            "exercise_fraction": self.exercise_fraction,
            "flags": ";".join(self.flags),
        }


def canonical_order(spots: np.ndarray, spec: BermudanSpec, vols: Optional[np.ndarray] = None) -> np.ndarray:
    """Порядок траєкторій, що залежить лише від їхніх значень"""
    keys = [spots[:, spec.t2], spots[:, spec.t1]]
    if vols is not None:
        keys.insert(0, vols[:, spec.t1])
    return np.lexsort(keys)


def max_european(spots: np.ndarray, spec: BermudanSpec) -> MaxEuropean:
    spots = np.asarray(spots, dtype=float)
    eu1, eu1_se = mc_vanilla_price(spots[:, spec.t1], spec.k1)
    eu2, eu2_se = mc_vanilla_price(spots[:, spec.t2], spec.k2)
    if eu1 >= eu2:
        return MaxEuropean(eu1, eu1_se, eu1, eu1_se, eu2, eu2_se)
    return MaxEuropean(eu2, eu2_se, eu1, eu1_se, eu2, eu2_se)


def _vol_points(price: float, spec: BermudanSpec, label: str, flags: List[str]) -> float:
    try:
        return 100.0 * implied_vol(price, spec.spot0, spec.k2, spec.maturity2)
    except (ImpliedVolError, DomainError) as e:
        logger.warning(f"⚠️ IV для {label} не обчислена: {e}")
        flags.append(f"iv_{label}_out_of_band")
        return float("nan")


@dataclass
class BermudanCashflow:
    """Виплата max{(S_{t1}−k1)+, продовження} по траєкторіях у канонічному порядку"""
    values: np.ndarray
    continuation: np.ndarray
    intrinsic: np.ndarray
    order: np.ndarray
    regression: AmcRegression

    @property
    def mean(self) -> float:
        return float(self.values.mean())


def bermudan_cashflow(
    spots: np.ndarray,
    spec: BermudanSpec,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> BermudanCashflow:
    """Результат не залежить від перестановки траєкторій"""

    spots = np.asarray(spots, dtype=float)
    regression = regression or AmcRegression()
    use_vols = np.asarray(vols, dtype=float) if (vols is not None and regression.use_frozen_vol) else None
    order = canonical_order(spots, spec, use_vols)
    spots = spots[order]
    if use_vols is not None:
        use_vols = use_vols[order]

    continuation, fitted = amc_continuation(spots, spec, regression, use_vols)
    intrinsic = np.maximum(spots[:, spec.t1] - spec.k1, 0.0)
    return BermudanCashflow(
        values=np.maximum(intrinsic, continuation),
        continuation=continuation,
        intrinsic=intrinsic,
        order=order,
        regression=fitted,
    )


def bermudan_price(
    spots: np.ndarray,
    spec: BermudanSpec,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> BermudanResult:
    """
    Ціна = середнє max{(S_{t1}−k1)+, продовження}; виконання на t1, якщо продовження < внутрішньої.

    Switch value - різниця IV (у пунктах) бермудської та максимальної європейської цін на (t2, k2).
    """

    cashflow = bermudan_cashflow(spots, spec, regression, vols)
    exercise = cashflow.continuation < cashflow.intrinsic

    bound = max_european(spots, spec)
    flags: List[str] = []
    price = cashflow.mean
    # похибка за реалізованими виплатами: (S_t1-k1)+ при виконанні, інакше (S_t2-k2)+
    payoff2 = np.maximum(np.asarray(spots, dtype=float)[cashflow.order, spec.t2] - spec.k2, 0.0)
    realized = np.where(exercise, cashflow.intrinsic, payoff2)
    se = float(realized.std(ddof=1) / np.sqrt(realized.size))
    iv_bermudan = _vol_points(price, spec, "bermudan", flags)
    iv_max = _vol_points(bound.price, spec, "max_eu", flags)

    exercise_in_path_order = np.empty_like(exercise)
    exercise_in_path_order[cashflow.order] = exercise
    return BermudanResult(
        bermudan=price,
        bermudan_se=se,
        eu1=bound.eu1,
        eu1_se=bound.eu1_se,
        eu2=bound.eu2,
        eu2_se=bound.eu2_se,
        max_eu=bound.price,
        max_eu_se=bound.price_se,
        switch_value=iv_bermudan - iv_max,
        exercise_fraction=float(exercise.mean()),
        exercise=exercise_in_path_order,
        regression=cashflow.regression,
        flags=flags,
    )
