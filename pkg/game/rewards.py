"""
Винагороди кооперативної гри

r = −Σ_m ω_m (φ_m(X̂_m) − c_m)² + e_ref(t+1). Усі траєкторії прогону отримують однакову
винагороду; середні рахуються по впорядкованих виплатах, тому перестановка траєкторій
не змінює результат.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence

import numpy as np

from game.specs import BermudanSpec, FakeStrikeMode, RewardSpec, StepReward
from market.black_scholes import implied_vol_or_edge
from market.surface import VanillaQuote
from pricing.amc import AmcRegression
from pricing.bermudan import bermudan_cashflow
from pricing.vanilla import mc_vanilla_price
from utils.errors import DomainError, NumericError, RewardError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()


def _implied(price: float, forward: float, strike: float, maturity: float, option_id: str) -> float:
    try:
        vol, _ = implied_vol_or_edge(price, forward, strike, maturity)
    except NumericError as e:
        raise RewardError(f"Не вдалося обернути ціну {option_id}: {e}") from e
    return vol


def vanilla_reward(
    spots: np.ndarray,
    quotes: Sequence[VanillaQuote],
    reference_error: float = 0.0,
    step: int = 0,
    forward: float = 1.0,
) -> StepReward:
    """Винагорода на переході step → step+1 від колів, що закінчуються на step+1"""

    spots = np.asarray(spots, dtype=float)
    if spots.ndim != 1 or spots.size < 2:
        raise ShapeError("vanilla_reward: потрібен вектор щонайменше з 2 спотів")

    reward = StepReward(step=step, value=0.0)
    total = 0.0
    for quote in quotes:
        price, _ = mc_vanilla_price(spots, quote.strike * forward)
        vol = _implied(price, forward, quote.strike * forward, quote.maturity, quote.option_id)
        component = -quote.weight * (vol - quote.target_vol) ** 2
        reward.components[quote.option_id] = component
        reward.model_values[quote.option_id] = vol
        reward.targets[quote.option_id] = quote.target_vol
        reward.prices[quote.option_id] = price
        total += component
    reward.value = total + reference_error
    return reward


def bermudan_component(price: float, spec: BermudanSpec, target: float) -> tuple:
    """(−ω(φ(X̂) − c)², φ) з φ - неявна волатильність на (t2, k2)"""
    vol = _implied(price, spec.spot0, spec.k2, spec.maturity2, spec.option_id)
    return -spec.weight * (vol - target) ** 2, vol


def bermudan_terminal_reward(
    spots: np.ndarray,
    spec: BermudanSpec,
    target: float,
    reference_error: float = 0.0,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> StepReward:
    """Розріджена винагорода на t2: X_t = 0 до t2, X_{t2} - бермудська виплата"""

    price = bermudan_cashflow(spots, spec, regression, vols).mean
    component, vol = bermudan_component(price, spec, target)
    return StepReward(
        step=spec.t2 - 1,
        value=component + reference_error,
        components={spec.option_id: component},
        model_values={spec.option_id: vol},
        targets={spec.option_id: target},
        prices={spec.option_id: price},
    )


def fake_strike(t: int, spec: BermudanSpec) -> float:
    """k̃_{2,t}: у дельта-просторі S0(k2/S0)^sqrt(t/t2), інакше k2"""

    if not spec.t1 <= t <= spec.t2:
        raise DomainError(f"fake_strike: t={t} поза [{spec.t1}, {spec.t2}]")
    if spec.fake_strike_mode == FakeStrikeMode.FORWARD_PERCENT:
        return spec.k2
    return spec.spot0 * (spec.k2 / spec.spot0) ** np.sqrt(t / spec.t2)


def fake_cashflow_means(
    spots: np.ndarray,
    spec: BermudanSpec,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> np.ndarray:
    """X̃_t = max{(S_{t1}−k1)+, E_{t1}[(S_t − k̃_{2,t})+]} для t = t1..t2 (середнє по траєкторіях)"""

    spots = np.asarray(spots, dtype=float)
    means = []
    s1 = spots[:, spec.t1]
    at_t1 = np.maximum(np.maximum(s1 - spec.k1, 0.0), np.maximum(s1 - fake_strike(spec.t1, spec), 0.0))
    means.append(float(np.sort(at_t1).mean()))
    for t in range(spec.t1 + 1, spec.t2 + 1):
        partial = replace(spec, t2=t, k2=fake_strike(t, spec))
        means.append(bermudan_cashflow(spots, partial, regression, vols).mean)
    return np.asarray(means)


def fake_rewards(
    spots: np.ndarray,
    spec: BermudanSpec,
    target: float,
    regression: Optional[AmcRegression] = None,
    vols: Optional[np.ndarray] = None,
) -> List[StepReward]:
    """r_X̃(t) для t = t1..t2; φ завжди відносно (k2, t2)"""

    rewards = []
    for offset, price in enumerate(fake_cashflow_means(spots, spec, regression, vols)):
        component, vol = bermudan_component(price, spec, target)
        t = spec.t1 + offset
        rewards.append(StepReward(
            step=t - 1,
            value=component,
            components={spec.option_id: component},
            model_values={spec.option_id: vol},
            targets={spec.option_id: target},
            prices={spec.option_id: price},
        ))
    return rewards


def shaped_rewards(
    fake_values: Sequence[float],
    terminal_reward: Optional[float] = None,
    first_step: int = 0,
    anchor: float = 0.0,
) -> List[StepReward]:
    """
    r̃_t = r_X̃(t) − r_X̃(t−1), де перед першим кроком стоїть anchor.

    Якщо передано terminal_reward, він замінює останнє значення, щоб сума збігалася
    з розрідженою винагородою точно.
    """

    values = np.asarray(fake_values, dtype=float).copy()
    if values.size == 0:
        return []
    if terminal_reward is not None:
        values[-1] = terminal_reward
    previous = np.concatenate([[anchor], values[:-1]])
    return [StepReward(step=first_step + i, value=float(v)) for i, v in enumerate(values - previous)]


@dataclass
class RunRewards:
    """Винагороди одного прогону по кроках та розклад для трасування"""
    rewards: np.ndarray
    steps: List[StepReward] = field(default_factory=list)

    def trace_rows(self, iteration: int, run: int) -> List[dict]:
        rows = []
        for step_reward in self.steps:
            rows.extend(step_reward.trace_rows(iteration, run))
        return rows

    @property
    def total(self) -> float:
        return float(self.rewards.sum())


def run_rewards(
    spots: np.ndarray,
    reward_spec: RewardSpec,
    vols: Optional[np.ndarray] = None,
    regression: Optional[AmcRegression] = None,
    forward: float = 1.0,
) -> RunRewards:
    """Винагороди (T,) одного прогону: індекс t - перехід t → t+1"""

    spots = np.asarray(spots, dtype=float)
    T = reward_spec.n_steps
    if spots.shape[1] != T + 1:
        raise ShapeError(f"Очікувалось {T + 1} стовпців спота, отримано {spots.shape[1]}")

    rewards = np.zeros(T)
    steps: List[StepReward] = []
    for maturity_step, quotes in sorted(reward_spec.quotes_by_step().items()):
        step_reward = vanilla_reward(spots[:, maturity_step], quotes, 0.0, maturity_step - 1, forward)
        rewards[maturity_step - 1] += step_reward.value
        steps.append(step_reward)

    spec = reward_spec.bermudan
    if spec is not None:
        target = float(reward_spec.bermudan_target)
        terminal = bermudan_terminal_reward(spots, spec, target, 0.0, regression, vols)
        if reward_spec.shaping:
            fakes = fake_rewards(spots, spec, target, regression, vols)
            shaped = shaped_rewards([r.value for r in fakes], terminal.value, first_step=spec.t1 - 1)
            for step_reward in shaped:
                rewards[step_reward.step] += step_reward.value
            steps.extend(fakes[:-1])
        steps.append(terminal)
        if not reward_spec.shaping:
            rewards[terminal.step] += terminal.value

    # e_ref отримується на момент t+1
    rewards += reward_spec.reference_errors[1:]
    return RunRewards(rewards=rewards, steps=steps)


def episode_rewards(
    spots: np.ndarray,
    reward_spec: RewardSpec,
    vols: Optional[np.ndarray] = None,
    regression: Optional[AmcRegression] = None,
    forward: float = 1.0,
) -> List[RunRewards]:
    """spots (B, n, T+1), vols (B, n, T)"""
    return [
        run_rewards(spots[b], reward_spec, None if vols is None else vols[b], regression, forward)
        for b in range(spots.shape[0])
    ]


def reference_errors(
    spots: np.ndarray,
    reward_spec: RewardSpec,
    vols: Optional[np.ndarray] = None,
    regression: Optional[AmcRegression] = None,
    forward: float = 1.0,
) -> np.ndarray:
    """
    e_ref(t): калібрувальна помилка еталонної моделі на тих самих шумах, усереднена по прогонах.

    Повертає таблицю довжини T+1 з нулем на t=0.
    """

    base = replace_reference(reward_spec, np.zeros(reward_spec.n_steps + 1), shaping=False)
    losses = np.zeros(reward_spec.n_steps + 1)
    runs = episode_rewards(spots, base, vols, regression, forward)
    for run in runs:
        losses[1:] -= run.rewards
    table = np.maximum(losses / len(runs), 0.0)
    logger.info(f"📐 Еталонна помилка: Σ e_ref = {table.sum():.6e}")
    return table


def replace_reference(reward_spec: RewardSpec, errors: np.ndarray, shaping: Optional[bool] = None) -> RewardSpec:
    """Копія RewardSpec з новою таблицею e_ref (і, за потреби, режимом формування)"""
    updated = reward_spec.with_reference_errors(errors)
    if shaping is not None:
        updated.shaping = shaping
    return updated

