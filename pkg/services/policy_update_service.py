"""
Оновлення спільної політики та мережі цінності на досвіді базисних гравців

PPO з обрізаним сурогатом та адаптивним KL-штрафом (основний режим), A2C як
альтернатива, регресія V_ψ на суму майбутніх винагород.
"""

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from network.distributions import GaussianHead, gaussian_kl, gaussian_kl_grads, gaussian_log_prob, gaussian_log_prob_grads
from network.optimizer import AdamState, adam_step
from network.policy import GaussianPolicy, ValueNetwork
from services.schemas import TrainerConfig
from utils.errors import NumericError, ShapeError
from utils.logger import setup_logger
from utils.validators import validate_finite

logger = setup_logger()

KL_EXPLOSION_FACTOR = 10.0


@dataclass
class RolloutBuffer:
    """Досвід базисних гравців по (гравець, прогін, крок)"""
    state_dim: int
    action_dim: int
    _states: List[np.ndarray] = field(default_factory=list, repr=False)
    _actions: List[np.ndarray] = field(default_factory=list, repr=False)
    _noises: List[np.ndarray] = field(default_factory=list, repr=False)
    _log_probs: List[np.ndarray] = field(default_factory=list, repr=False)
    _means: List[np.ndarray] = field(default_factory=list, repr=False)
    _log_stds: List[np.ndarray] = field(default_factory=list, repr=False)
    _runs: List[np.ndarray] = field(default_factory=list, repr=False)
    _steps: List[np.ndarray] = field(default_factory=list, repr=False)
    _players: List[np.ndarray] = field(default_factory=list, repr=False)

    states: Optional[np.ndarray] = None
    actions: Optional[np.ndarray] = None
    noises: Optional[np.ndarray] = None
    log_probs: Optional[np.ndarray] = None
    old_mean: Optional[np.ndarray] = None
    old_log_std: Optional[np.ndarray] = None
    runs: Optional[np.ndarray] = None
    steps: Optional[np.ndarray] = None
    players: Optional[np.ndarray] = None
    rewards: Optional[np.ndarray] = None
    returns: Optional[np.ndarray] = None
    advantages: Optional[np.ndarray] = None

    def add(
        self,
        run: int,
        step: int,
        players: np.ndarray,
        states: np.ndarray,
        actions: np.ndarray,
        noises: np.ndarray,
        log_probs: np.ndarray,
        head: GaussianHead,
    ) -> None:
        states = np.atleast_2d(states)
        if states.shape[1] != self.state_dim or np.atleast_2d(actions).shape[1] != self.action_dim:
            raise ShapeError("Розмір стану або дії не відповідає буферу")
        m = states.shape[0]
        self._states.append(states)
        self._actions.append(np.atleast_2d(actions))
        self._noises.append(np.atleast_2d(noises))
        self._log_probs.append(np.atleast_1d(log_probs))
        self._means.append(head.mean)
        self._log_stds.append(head.log_std)
        self._runs.append(np.full(m, run))
        self._steps.append(np.full(m, step))
        self._players.append(np.asarray(players))

    def finalize(self) -> "RolloutBuffer":
        """Склеює записи у масиви у фіксованому порядку (прогін, крок)"""

        if not self._states:
            raise ShapeError("Порожній буфер")
        runs = np.concatenate(self._runs)
        steps = np.concatenate(self._steps)
        order = np.lexsort((steps, runs))
        self.states = np.concatenate(self._states)[order]
        self.actions = np.concatenate(self._actions)[order]
        self.noises = np.concatenate(self._noises)[order]
        self.log_probs = np.concatenate(self._log_probs)[order]
        self.old_mean = np.concatenate(self._means)[order]
        self.old_log_std = np.concatenate(self._log_stds)[order]
        self.runs = runs[order]
        self.steps = steps[order]
        self.players = np.concatenate(self._players)[order]
        return self

    def __len__(self) -> int:
        return 0 if self.states is None else int(self.states.shape[0])

    def old_head(self, index: Optional[np.ndarray] = None) -> GaussianHead:
        head = GaussianHead(mean=self.old_mean, log_std=self.old_log_std)
        return head if index is None else head.take(index)

    def assign_rewards(self, rewards: np.ndarray) -> None:
        """rewards (B, T): спільна винагорода кожного прогону на кожному кроці"""
        rewards = np.asarray(rewards, dtype=float)
        self.rewards = rewards[self.runs, self.steps]
        self.returns = returns_to_go(rewards)[self.runs, self.steps]


def returns_to_go(rewards: np.ndarray) -> np.ndarray:
    """G_t = Σ_{t' >= t} r_{t'} без дисконтування; rewards (..., T)"""
    rewards = np.asarray(rewards, dtype=float)
    return np.flip(np.cumsum(np.flip(rewards, axis=-1), axis=-1), axis=-1)


def normalize(values: np.ndarray) -> np.ndarray:
    std = values.std()
    centered = values - values.mean()
    return centered / std if std > 0 else centered


def compute_advantages(buffer: RolloutBuffer, value: ValueNetwork, normalize_advantages: bool = True) -> np.ndarray:
    """A = G_t − V_ψ(x_t), за потреби нормовані в межах пакета"""

    if buffer.returns is None:
        raise ShapeError("Спочатку потрібно призначити винагороди (assign_rewards)")
    advantages = buffer.returns - value.predict(buffer.states)
    if normalize_advantages:
        advantages = normalize(advantages)
    if not validate_finite(advantages):
        raise NumericError("Нескінченні переваги")
    buffer.advantages = advantages
    return advantages


def log_prob_gradient(policy: GaussianPolicy, states: np.ndarray, actions: np.ndarray, advantages: np.ndarray) -> np.ndarray:
    """∇_θ середнього A·log π_θ(a|x)"""

    head = policy.head(states)
    g_mean, g_log_std = gaussian_log_prob_grads(head, actions)
    weights = np.asarray(advantages, dtype=float)[:, None] / len(advantages)
    return policy.backward(states, weights * g_mean, weights * g_log_std)


@dataclass
class PolicyStats:
    kl: float = 0.0
    clip_fraction: float = 0.0
    policy_loss: float = 0.0
    kl_coef: float = 0.0
    epochs: int = 0
    early_stopped: bool = False


def surrogate_loss_and_grad(
    policy: GaussianPolicy,
    buffer: RolloutBuffer,
    index: np.ndarray,
    clip: float,
    kl_coef: float,
):
    states = buffer.states[index]
    actions = buffer.actions[index]
    advantages = buffer.advantages[index]
    old = buffer.old_head(index)
    head = policy.head(states)

    ratio = np.exp(gaussian_log_prob(head, actions) - buffer.log_probs[index])
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - clip, 1.0 + clip) * advantages
    kl = gaussian_kl(old, head)
    loss = float(-np.minimum(unclipped, clipped).mean() + kl_coef * kl.mean())

    # градієнт min(...) проходить лише через необрізану гілку
    coefficient = np.where(unclipped <= clipped, ratio * advantages, 0.0)
    m = len(index)
    g_mean, g_log_std = gaussian_log_prob_grads(head, actions)
    k_mean, k_log_std = gaussian_kl_grads(old, head)
    d_mean = -coefficient[:, None] / m * g_mean + kl_coef / m * k_mean
    d_log_std = -coefficient[:, None] / m * g_log_std + kl_coef / m * k_log_std
    return loss, policy.backward(states, d_mean, d_log_std)


def _measure(policy: GaussianPolicy, buffer: RolloutBuffer, clip: float):
    head = policy.head(buffer.states)
    ratio = np.exp(gaussian_log_prob(head, buffer.actions) - buffer.log_probs)
    kl = float(gaussian_kl(buffer.old_head(), head).mean())
    return kl, float(np.mean(np.abs(ratio - 1.0) > clip))


def ppo_update(
    policy: GaussianPolicy,
    buffer: RolloutBuffer,
    trainer: TrainerConfig,
    optimizer: AdamState,
    rng: np.random.Generator,
    kl_coef: float,
) -> PolicyStats:
    """Епохи мінібатч-спуску на обрізаному сурогаті з адаптивним KL-штрафом"""

    if buffer.advantages is None:
        raise ShapeError("Спочатку потрібно обчислити переваги")
    n = len(buffer)
    batch = trainer.minibatch_size(n)
    stats = PolicyStats(kl_coef=kl_coef)
    losses = []

    for epoch in range(trainer.sgd_epochs):
        permutation = rng.permutation(n)
        for start in range(0, n, batch):
            index = np.sort(permutation[start:start + batch])
            loss, grads = surrogate_loss_and_grad(policy, buffer, index, trainer.clip, kl_coef)
            policy.set_flat(adam_step(optimizer, policy.get_flat(), grads))
            losses.append(loss)
        stats.epochs = epoch + 1

        kl, _ = _measure(policy, buffer, trainer.clip)
        if kl > KL_EXPLOSION_FACTOR * trainer.kl_target:
            logger.warning(f"⚠️ KL={kl:.4f} перевищує {KL_EXPLOSION_FACTOR:g}·ціль, зупинка після епохи {epoch + 1}")
            stats.early_stopped = True
            break

    stats.kl, stats.clip_fraction = _measure(policy, buffer, trainer.clip)
    stats.policy_loss = float(np.mean(losses)) if losses else 0.0
    if stats.kl > 1.5 * trainer.kl_target:
        kl_coef *= 2.0
    elif stats.kl < trainer.kl_target / 1.5:
        kl_coef /= 2.0
    stats.kl_coef = kl_coef
    return stats


def a2c_update(policy: GaussianPolicy, buffer: RolloutBuffer, optimizer: AdamState) -> PolicyStats:
    """Один крок градієнта на −mean(A·log π) по всьому пулу досвіду"""

    if buffer.advantages is None:
        raise ShapeError("Спочатку потрібно обчислити переваги")
    head = policy.head(buffer.states)
    loss = float(-(buffer.advantages * gaussian_log_prob(head, buffer.actions)).mean())
    grads = -log_prob_gradient(policy, buffer.states, buffer.actions, buffer.advantages)
    policy.set_flat(adam_step(optimizer, policy.get_flat(), grads))
    kl, _ = _measure(policy, buffer, clip=np.inf)
    return PolicyStats(kl=kl, clip_fraction=0.0, policy_loss=loss, epochs=1)


@dataclass
class ValueStats:
    loss_before: float
    loss_after: float


def value_loss(value: ValueNetwork, states: np.ndarray, returns: np.ndarray) -> float:
    return float(np.mean((value.predict(states) - returns) ** 2))


def value_update(
    value: ValueNetwork,
    states: np.ndarray,
    returns: np.ndarray,
    optimizer: AdamState,
    epochs: int,
    batch_size: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
) -> ValueStats:
    """
    Мінібатч-спуск на MSE між V_ψ(x) та G.

    Без batch_size або rng - повнопакетний режим (детермінований).
    """

    states = np.atleast_2d(states)
    returns = np.asarray(returns, dtype=float)
    n = states.shape[0]
    before = value_loss(value, states, returns)
    full_batch = batch_size is None or rng is None or batch_size >= n

    for _ in range(epochs):
        batches = [np.arange(n)] if full_batch else np.array_split(rng.permutation(n), max(n // batch_size, 1))
        for index in batches:
            residual = value.predict(states[index]) - returns[index]
            grads = value.backward(states[index], 2.0 * residual / len(index))
            value.set_flat(adam_step(optimizer, value.get_flat(), grads))

    return ValueStats(loss_before=before, loss_after=value_loss(value, states, returns))
