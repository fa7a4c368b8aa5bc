"""
Опис цілей кооперативної гри: ванільні котирування, бермудський опціон, винагороди кроку
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np

from market.surface import VanillaQuote
from utils.errors import ConfigError


class FakeStrikeMode(str, Enum):
    """Розклад фіктивного страйку k̃_{2,t}"""
    FORWARD_PERCENT = "forward_percent"
    DELTA = "delta"


@dataclass(frozen=True)
class BermudanSpec:
    """Бермудський кол з двома датами виконання t1 < t2 (у кроках)"""
    t1: int
    t2: int
    k1: float = 1.0
    k2: float = 1.012
    fake_strike_mode: FakeStrikeMode = FakeStrikeMode.DELTA
    weight: float = 1.0
    dt: float = 1.0 / 252.0
    spot0: float = 1.0

    def __post_init__(self):
        if not 0 <= self.t1 < self.t2:
            raise ConfigError(f"Потрібно t1 < t2, отримано {self.t1}, {self.t2}")
        if self.k1 <= 0 or self.k2 <= 0:
            raise ConfigError("Страйки мають бути додатними")
        if self.weight < 0:
            raise ConfigError("Вага має бути невід'ємною")

    @property
    def maturity1(self) -> float:
        return self.t1 * self.dt

    @property
    def maturity2(self) -> float:
        return self.t2 * self.dt

    @property
    def option_id(self) -> str:
        return f"bermudan_{self.t1}_{self.t2}"


@dataclass
class RewardSpec:
    """Набір опціонів, еталонні помилки e_ref(t) та режим формування винагород"""
    n_steps: int
    quotes: List[VanillaQuote] = field(default_factory=list)
    bermudan: Optional[BermudanSpec] = None
    bermudan_target: Optional[float] = None
    reference_errors: Optional[np.ndarray] = None
    shaping: bool = False
    steps_per_day: int = 1

    def __post_init__(self):
        if self.reference_errors is None:
            self.reference_errors = np.zeros(self.n_steps + 1)
        self.reference_errors = np.asarray(self.reference_errors, dtype=float)
        if self.reference_errors.shape != (self.n_steps + 1,):
            raise ConfigError(f"Таблиця e_ref має довжину T+1 = {self.n_steps + 1}")
        if np.any(self.reference_errors < 0):
            raise ConfigError("e_ref має бути невід'ємною")
        if any(q.weight < 0 for q in self.quotes):
            raise ConfigError("Ваги котирувань мають бути невід'ємними")
        if self.bermudan is not None and self.bermudan_target is None:
            raise ConfigError("Бермудська ціль потребує target (IV максимального європейського)")
        for quote in self.quotes:
            step = self.quote_step(quote)
            if not 1 <= step <= self.n_steps:
                raise ConfigError(f"Котирування {quote.option_id} поза горизонтом симуляції")

    def quote_step(self, quote: VanillaQuote) -> int:
        return int(quote.t_days * self.steps_per_day)

    def quotes_by_step(self) -> Dict[int, List[VanillaQuote]]:
        grouped: Dict[int, List[VanillaQuote]] = {}
        for quote in self.quotes:
            grouped.setdefault(self.quote_step(quote), []).append(quote)
        return grouped

    def with_reference_errors(self, errors: Sequence[float]) -> "RewardSpec":
        return RewardSpec(
            n_steps=self.n_steps,
            quotes=list(self.quotes),
            bermudan=self.bermudan,
            bermudan_target=self.bermudan_target,
            reference_errors=np.asarray(errors, dtype=float),
            shaping=self.shaping,
            steps_per_day=self.steps_per_day,
        )


@dataclass
class StepReward:
    """Спільна винагорода прогону на переході t → t+1 з розкладом по опціонах"""
    step: int
    value: float
    components: Dict[str, float] = field(default_factory=dict)
    model_values: Dict[str, float] = field(default_factory=dict)
    targets: Dict[str, float] = field(default_factory=dict)
    prices: Dict[str, float] = field(default_factory=dict)

    def trace_rows(self, iteration: int, run: int) -> List[dict]:
        """Рядки трасування: (iteration, run, step, option_id, model_value, target, reward_component)"""
        return [
            {
                "iteration": iteration,
                "run": run,
                "step": self.step,
                "option_id": option_id,
                "model_value": self.model_values.get(option_id, float("nan")),
                "target": self.targets.get(option_id, float("nan")),
                "reward_component": component,
            }
            for option_id, component in self.components.items()
        ]
