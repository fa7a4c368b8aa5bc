"""
Сервіс навчання MARLVol

Одна ітерація: B прогонів (паралельно) → на кожному кроці базисні гравці, інтерполяція
дослідження, дія → σ, (локалізація), крок спота → спільні винагороди → оновлення
спільної політики на досвіді базисних гравців та мережі цінності.
"""

import asyncio
import os
import time
from dataclasses import asdict, dataclass, field
from typing import Awaitable, Callable, List, Optional

import numpy as np

from config import config
from engine.dynamics import ACTION_DIMS, ActionVariant, VolAction, action_to_vol
from engine.localization import Localizer
from engine.noise import NoiseGenerator, NoiseStream
from engine.simulator import EpisodePaths, StepCallback, StepContext, StepDecision, simulate_episode_async
from engine.state import STATE_DIMS, SimConfig
from game.rewards import RunRewards, episode_rewards
from game.specs import RewardSpec
from game.value import estimate_game_value
from network.checkpoint import Checkpoint, save_checkpoint
from network.optimizer import AdamState
from network.policy import GaussianPolicy, ValueNetwork
from pricing.amc import AmcRegression
from pricing.bermudan import bermudan_price
from services.exploration_service import (
    BasisActions,
    ExplorationField,
    basis_actions,
    exploration_coordinates,
    interpolate_exploration,
    pick_basis_players,
)
from services.policy_update_service import (
    RolloutBuffer,
    a2c_update,
    compute_advantages,
    ppo_update,
    value_update,
)
from services.schemas import PolicyAlgorithm, TrainerConfig
from utils.errors import ConfigError, MarlVolError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

_INIT_STREAM = 99
_UPDATE_STREAM = 98


def initial_action_bias(variant: ActionVariant, sigma_init: float) -> np.ndarray:
    """Зсув останнього шару, з яким початкова дія дає σ ≈ sigma_init"""

    if variant == ActionVariant.DIRECT:
        return np.array([np.log(sigma_init)])
    if variant == ActionVariant.LOGNORMAL:
        return np.array([np.log(sigma_init), np.log(0.01)])
    # μ = 0, softplus(x) = 0.1, tanh(x) = 0
    return np.array([0.0, np.log(np.expm1(0.1)), 0.0])


@dataclass
class StepRecord:
    """Досвід базисних гравців на одному кроці прогону"""
    basis: np.ndarray
    features: np.ndarray
    actions: BasisActions


@dataclass
class IterationRecord:
    iteration: int
    game_value: float
    game_value_se: float
    kl: float
    clip_fraction: float
    policy_loss: float
    value_loss: float
    switch_value: float
    kl_coef: float
    n_clamped: int
    wallclock_s: float


@dataclass
class TrainingResult:
    policy: GaussianPolicy
    value: ValueNetwork
    history: List[IterationRecord] = field(default_factory=list)
    converged: bool = False
    last_paths: Optional[EpisodePaths] = None
    last_rewards: List[RunRewards] = field(default_factory=list)

    def history_rows(self) -> List[dict]:
        return [asdict(record) for record in self.history]


def plateau_reached(values: List[float], window: int, tolerance: float, smoothing: int) -> bool:
    """Відносне покращення згладженої цінності гри за window ітерацій < tolerance"""

    if len(values) < window + smoothing:
        return False
    series = np.asarray(values, dtype=float)
    now = series[-smoothing:].mean()
    then = series[-window - smoothing:-window].mean()
    improvement = (now - then) / max(abs(then), 1e-12)
    return improvement < tolerance


class MarlVolTrainer:
    """Спільна політика π_θ, мережа цінності V_ψ та цикл навчання"""

    def __init__(
        self,
        sim: SimConfig,
        reward_spec: RewardSpec,
        trainer: TrainerConfig,
        localizer: Optional[Localizer] = None,
        policy: Optional[GaussianPolicy] = None,
        value: Optional[ValueNetwork] = None,
        checkpoint_dir: Optional[str] = None,
        max_workers: Optional[int] = None,
    ):
        if trainer.n_basis > sim.n_paths:
            raise ConfigError(f"n_p={trainer.n_basis} більше за кількість траєкторій n={sim.n_paths}")
        if reward_spec.n_steps != sim.n_steps:
            raise ConfigError("Горизонт винагород не збігається з горизонтом симуляції")

        self.sim = sim
        self.reward_spec = reward_spec
        self.trainer = trainer
        self.localizer = localizer
        self.checkpoint_dir = checkpoint_dir
        self.max_workers = max_workers or config.MARLVOL_THREADS
        self.noise = NoiseGenerator(sim.seed)
        self.state_dim = STATE_DIMS[trainer.state_mode]
        self.action_dim = ACTION_DIMS[trainer.action_variant]

        init_rng = np.random.default_rng(np.random.SeedSequence(sim.seed, spawn_key=(_INIT_STREAM,)))
        self.policy = policy or GaussianPolicy.create(
            self.state_dim,
            self.action_dim,
            trainer.hidden_sizes,
            init_rng,
            state_dependent_std=trainer.state_dependent_std,
            init_log_std=trainer.init_log_std,
            mean_bias=initial_action_bias(trainer.action_variant, sim.sigma_init),
        )
        self.value = value or ValueNetwork.create(self.state_dim, trainer.hidden_sizes, init_rng)
        if self.policy.state_dim != self.state_dim or self.policy.action_dim != self.action_dim:
            raise ShapeError(
                f"Політика має розміри стан={self.policy.state_dim}, дія={self.policy.action_dim}; "
                f"очікувалось стан={self.state_dim} ({trainer.state_mode.value}), "
                f"дія={self.action_dim} ({trainer.action_variant.value})"
            )

        self.policy_optimizer = AdamState.create(self.policy.num_parameters, trainer.learning_rate)
        self.value_optimizer = AdamState.create(self.value.num_parameters, trainer.value_learning_rate)
        self.kl_coef = trainer.kl_coef
        self.regression = AmcRegression(
            degree=trainer.amc_degree,
            use_frozen_vol=trainer.amc_frozen_vol,
            itm_only=trainer.amc_itm_only,
        )

    # --- розгортання --------------------------------------------------------

    def _noise_iteration(self, iteration: int) -> int:
        return iteration if self.trainer.resample_noise else 0

    def policy_callback(self, iteration: int, deterministic: bool = False) -> StepCallback:
        """Крок гравців; deterministic - дія = π^μ(x) без дослідження"""

        policy = self.policy
        trainer = self.trainer
        variant = trainer.action_variant
        key = self._noise_iteration(iteration)

        def _callback(context: StepContext) -> StepDecision:
            features = context.state.features(self.sim.n_steps)
            n = features.shape[0]
            head = policy.head(features)

            record = None
            if deterministic:
                raw_actions = head.mean
            else:
                basis = pick_basis_players(n, trainer.n_basis, self.noise.rng(NoiseStream.BASIS, key, context.run, context.t))
                basis_features = features[basis]
                sampled = basis_actions(
                    policy,
                    basis_features,
                    self.noise.rng(NoiseStream.EXPLORATION, key, context.run, context.t),
                )
                exploration = ExplorationField(
                    t=context.t,
                    run=context.run,
                    basis_index=basis,
                    basis_states=exploration_coordinates(basis_features),
                    basis_noises=sampled.noises,
                    mode=trainer.interpolation,
                    k=trainer.knn_k,
                    inverse_distance=trainer.inverse_distance,
                ).fit()
                raw_actions = head.sample(interpolate_exploration(exploration, features))
                raw_actions[basis] = sampled.actions
                record = StepRecord(basis=basis, features=basis_features, actions=sampled)

            action = VolAction.from_raw(variant, raw_actions)
            vols, n_clamped = action_to_vol(action, context.state, context.normals, self.sim.dt, base_vol=context.prev_raw_vol)
            return StepDecision(vols=vols, n_clamped=n_clamped, record=record)

        return _callback

    async def rollout(self, iteration: int, deterministic: bool = False) -> EpisodePaths:
        return await simulate_episode_async(
            self.sim,
            self.policy_callback(iteration, deterministic),
            self.trainer.state_mode,
            self.localizer if self.trainer.localize else None,
            self._noise_iteration(iteration),
            self.max_workers,
        )

    def rewards(self, paths: EpisodePaths) -> List[RunRewards]:
        return episode_rewards(paths.spots, self.reward_spec, paths.vols, self.regression, self.sim.spot0)

    def switch_value(self, paths: EpisodePaths) -> float:
        """Середній switch value по прогонах (у пунктах волатильності)"""

        spec = self.reward_spec.bermudan
        if spec is None:
            return float("nan")
        values = [
            bermudan_price(paths.spots[b], spec, self.regression, paths.vols[b]).switch_value
            for b in range(paths.n_runs)
        ]
        return float(np.nanmean(values)) if np.any(np.isfinite(values)) else float("nan")

    # --- оновлення ----------------------------------------------------------

    def build_buffer(self, paths: EpisodePaths) -> RolloutBuffer:
        buffer = RolloutBuffer(self.state_dim, self.action_dim)
        for run, records in enumerate(paths.records):
            for step, record in enumerate(records):
                buffer.add(
                    run,
                    step,
                    record.basis,
                    record.features,
                    record.actions.actions,
                    record.actions.noises,
                    record.actions.log_probs,
                    record.actions.head,
                )
        return buffer.finalize()

    def update(self, buffer: RolloutBuffer, rewards: np.ndarray, iteration: int):
        trainer = self.trainer
        rng = np.random.default_rng(np.random.SeedSequence(self.sim.seed, spawn_key=(_UPDATE_STREAM, iteration)))
        buffer.assign_rewards(rewards * trainer.reward_scale)
        compute_advantages(buffer, self.value, trainer.normalize_advantages)

        if trainer.algorithm == PolicyAlgorithm.PPO:
            stats = ppo_update(self.policy, buffer, trainer, self.policy_optimizer, rng, self.kl_coef)
            self.kl_coef = stats.kl_coef
        else:
            stats = a2c_update(self.policy, buffer, self.policy_optimizer)

        value_stats = value_update(
            self.value,
            buffer.states,
            buffer.returns,
            self.value_optimizer,
            trainer.value_epochs,
            trainer.minibatch_size(len(buffer)),
            rng,
        )
        return stats, value_stats

    # --- цикл ---------------------------------------------------------------

    def checkpoint(self, iteration: int) -> Optional[str]:
        if not self.checkpoint_dir:
            return None
        path = os.path.join(self.checkpoint_dir, f"checkpoint_{iteration:05d}.npz")
        return save_checkpoint(path, self.snapshot(iteration))

    def snapshot(self, iteration: int) -> Checkpoint:
        return Checkpoint(
            policy=self.policy,
            value=self.value,
            policy_optimizer=self.policy_optimizer,
            value_optimizer=self.value_optimizer,
            metadata={
                "iteration": iteration,
                "state_mode": self.trainer.state_mode.value,
                "action_variant": self.trainer.action_variant.value,
                "seed": self.sim.seed,
                "kl_coef": self.kl_coef,
            },
        )

    async def train(
        self,
        max_iterations: Optional[int] = None,
        on_iteration: Optional[Callable[[IterationRecord], Awaitable[None]]] = None,
    ) -> TrainingResult:
        """Цикл до max_iterations або плато згладженої цінності гри"""

        max_iterations = self.trainer.max_iterations if max_iterations is None else max_iterations
        result = TrainingResult(policy=self.policy, value=self.value)
        game_values: List[float] = []
        logger.info(
            f"🚀 Навчання: n={self.sim.n_paths}, B={self.sim.n_runs}, T={self.sim.n_steps}, "
            f"n_p={self.trainer.n_basis}, {self.trainer.algorithm.value}, "
            f"стан={self.trainer.state_mode.value}, дія={self.trainer.action_variant.value}"
        )

        for iteration in range(max_iterations):
            started = time.perf_counter()
            try:
                paths = await self.rollout(iteration)
                runs = await asyncio.to_thread(self.rewards, paths)
                table = np.stack([run.rewards for run in runs])
                game = estimate_game_value(table)
                switch = await asyncio.to_thread(self.switch_value, paths)
                buffer = self.build_buffer(paths)
                stats, value_stats = self.update(buffer, table, iteration)
            except MarlVolError as e:
                logger.error(f"❌ Ітерація {iteration}: {e}")
                e.args = (f"Ітерація {iteration}: {e}",)
                raise

            record = IterationRecord(
                iteration=iteration,
                game_value=game.mean,
                game_value_se=game.se,
                kl=stats.kl,
                clip_fraction=stats.clip_fraction,
                policy_loss=stats.policy_loss,
                value_loss=value_stats.loss_after,
                switch_value=switch,
                kl_coef=self.kl_coef,
                n_clamped=paths.n_clamped,
                wallclock_s=time.perf_counter() - started,
            )
            result.history.append(record)
            result.last_paths = paths
            result.last_rewards = runs
            game_values.append(game.mean)
            logger.info(
                f"📈 Ітерація {iteration}: v={game.mean:.6e} ± {game.se:.1e}, KL={stats.kl:.4f}, "
                f"clip={stats.clip_fraction:.2f}, V-loss={value_stats.loss_after:.3e}"
                + (f", switch={switch:.3f}" if np.isfinite(switch) else "")
            )
            if on_iteration is not None:
                await on_iteration(record)

            if (iteration + 1) % self.trainer.checkpoint_every == 0:
                self.checkpoint(iteration)
            if plateau_reached(game_values, self.trainer.convergence_window, self.trainer.convergence_tol, self.trainer.smoothing):
                logger.info(f"✅ Плато цінності гри на ітерації {iteration}")
                result.converged = True
                break

        result.policy, result.value = self.policy, self.value
        return result


async def marlvol_train(
    sim: SimConfig,
    reward_spec: RewardSpec,
    trainer: TrainerConfig,
    localizer: Optional[Localizer] = None,
    checkpoint_dir: Optional[str] = None,
) -> TrainingResult:
    """Навчена політика та історія навчання"""
    service = MarlVolTrainer(sim, reward_spec, trainer, localizer, checkpoint_dir=checkpoint_dir)
    return await service.train()
