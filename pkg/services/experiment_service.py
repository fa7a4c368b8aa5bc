"""
Сервіс експериментів: калібрування посмішки, бермудський експеримент, оцінювання чекпоінта
"""

import json
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from config import config
from database.models import Experiment, ExperimentStatus, PricingReportRow, TrainingHistoryRow
from engine.dynamics import ACTION_DIMS, ActionVariant
from engine.localization import Localizer
from engine.path_dump import write_path_dump
from engine.simulator import StepCallback, constant_vol_callback, local_vol_callback, simulate_episode_async
from engine.state import STATE_DIMS, StateMode
from game.rewards import episode_rewards, reference_errors, replace_reference
from game.specs import BermudanSpec, RewardSpec
from game.value import estimate_game_value
from market.black_scholes import bs_call_price, implied_vol
from market.surface import DAYS_PER_YEAR, MarketSurface, export_target_set, make_target_set, surface_implied_vol
from network.checkpoint import load_checkpoint, save_checkpoint
from pricing.amc import AmcRegression
from pricing.bermudan import bermudan_price
from services.exploration_service import InterpolationMode
from services.registry_service import RegistryService
from services.report_service import (
    ReportService,
    heatmap_monotonicity,
    sanity_quotes,
    smile_table,
    volatility_heatmap,
)
from services.schemas import ExperimentConfig, ExperimentKind
from services.trainer_service import IterationRecord, MarlVolTrainer, TrainingResult
from utils.decorators import log_execution
from utils.errors import ConfigError, MarlVolError
from utils.io import write_atomic
from utils.logger import run_log, setup_logger

logger = setup_logger()


@dataclass
class Overrides:
    """Прапорці командного рядка поверх файлу конфігурації"""
    seed: Optional[int] = None
    scale: Optional[int] = None
    out: Optional[str] = None
    state_mode: Optional[StateMode] = None
    action_variant: Optional[ActionVariant] = None
    interpolation: Optional[InterpolationMode] = None
    shaping: Optional[bool] = None


@dataclass
class RunSummary:
    """Підсумок запуску для CLI та тестів"""
    run_dir: str
    artifacts: Dict[str, str] = field(default_factory=dict)
    game_value: float = float("nan")
    game_value_se: float = float("nan")
    switch_value: float = float("nan")
    converged: bool = False
    metrics: Dict[str, float] = field(default_factory=dict)


def apply_overrides(experiment: ExperimentConfig, overrides: Overrides) -> ExperimentConfig:
    """Нова конфігурація з урахуванням прапорців; --scale ділить n та B, n_p не змінюється"""

    sim = experiment.sim
    trainer = experiment.trainer
    update: Dict[str, object] = {}

    if overrides.seed is not None:
        sim = sim.model_copy(update={"seed": overrides.seed})
    if overrides.scale is not None:
        if overrides.scale < 1:
            raise ConfigError(f"--scale має бути >= 1, отримано {overrides.scale}")
        sim = sim.scaled(overrides.scale, min_paths=trainer.n_basis)

    trainer_update = {}
    if overrides.state_mode is not None:
        trainer_update["state_mode"] = overrides.state_mode
    if overrides.action_variant is not None:
        trainer_update["action_variant"] = overrides.action_variant
    if overrides.interpolation is not None:
        trainer_update["interpolation"] = overrides.interpolation
    if trainer_update:
        trainer = trainer.model_copy(update=trainer_update)

    if overrides.shaping is not None:
        if experiment.kind != ExperimentKind.BERMUDAN:
            logger.warning("⚠️ --shaping діє лише для бермудського експерименту")
        else:
            update["bermudan"] = experiment.bermudan.model_copy(update={"shaping": overrides.shaping})
    if overrides.out is not None:
        update["output_dir"] = overrides.out

    update.update({"sim": sim, "trainer": trainer})
    return experiment.model_copy(update=update)


def load_surface(experiment: ExperimentConfig) -> MarketSurface:
    experiment.check_files()
    return MarketSurface.from_file(experiment.surface)


def bermudan_spec(experiment: ExperimentConfig) -> BermudanSpec:
    target = experiment.bermudan
    sim = experiment.sim
    return BermudanSpec(
        t1=sim.t1,
        t2=sim.t2,
        k1=target.k1 * sim.spot0,
        k2=target.k2 * sim.spot0,
        fake_strike_mode=target.fake_strike_mode,
        weight=target.weight,
        dt=sim.dt,
        spot0=sim.spot0,
    )


def bermudan_target(surface: MarketSurface, spec: BermudanSpec) -> float:
    """IV на (t2, k2) ціни max{C(t1,k1), C(t2,k2)} за поверхнею"""

    price1 = bs_call_price(
        spec.spot0, spec.k1, spec.maturity1,
        surface_implied_vol(surface, spec.maturity1, spec.k1 / spec.spot0),
    )
    price2 = bs_call_price(
        spec.spot0, spec.k2, spec.maturity2,
        surface_implied_vol(surface, spec.maturity2, spec.k2 / spec.spot0),
    )
    return implied_vol(max(price1, price2), spec.spot0, spec.k2, spec.maturity2)


def build_reward_spec(experiment: ExperimentConfig, surface: MarketSurface) -> RewardSpec:
    """Набір цілей: сітка колів або бермудський опціон"""

    steps_per_day = experiment.steps_per_day
    if experiment.kind == ExperimentKind.VANILLA:
        targets = experiment.targets
        quotes = make_target_set(surface, targets.maturities_days, targets.strikes, targets.vega_weighted)
        return RewardSpec(n_steps=experiment.sim.n_steps, quotes=quotes, steps_per_day=steps_per_day)

    spec = bermudan_spec(experiment)
    target = bermudan_target(surface, spec)
    logger.info(f"🎯 Ціль {spec.option_id}: IV максимального європейського = {target:.4%}")
    return RewardSpec(
        n_steps=experiment.sim.n_steps,
        bermudan=spec,
        bermudan_target=target,
        shaping=experiment.bermudan.shaping,
        steps_per_day=steps_per_day,
    )


def reference_callback(experiment: ExperimentConfig, surface: MarketSurface) -> StepCallback:
    """Блек-Шоулз з ATM волатильністю на горизонті для колів; Дюпір для бермудського"""

    if experiment.kind == ExperimentKind.BERMUDAN:
        return local_vol_callback(surface, experiment.sim.dt)
    horizon = experiment.sim.n_steps * experiment.sim.dt
    return constant_vol_callback(surface_implied_vol(surface, horizon, 1.0))


def make_regression(experiment: ExperimentConfig) -> AmcRegression:
    trainer = experiment.trainer
    return AmcRegression(degree=trainer.amc_degree, use_frozen_vol=trainer.amc_frozen_vol, itm_only=trainer.amc_itm_only)


async def with_reference_errors(
    experiment: ExperimentConfig,
    reward_spec: RewardSpec,
    surface: MarketSurface,
) -> RewardSpec:
    """e_ref на тих самих шумах (ітерація 0)"""

    sim = experiment.sim
    paths = await simulate_episode_async(
        sim,
        reference_callback(experiment, surface),
        experiment.trainer.state_mode,
        None,
        0,
        config.MARLVOL_THREADS,
    )
    table = reference_errors(paths.spots, reward_spec, paths.vols, make_regression(experiment), sim.spot0)
    return replace_reference(reward_spec, table)


def build_localizer(experiment: ExperimentConfig, surface: MarketSurface) -> Optional[Localizer]:
    if not experiment.trainer.localize:
        return None
    sim = experiment.sim
    return Localizer(surface, sim.t1, sim.t2, sim.dt)


class ExperimentService:
    """Оркестрація одного запуску: навчання, звіти, реєстр"""

    def __init__(self, experiment: ExperimentConfig, registry: Optional[RegistryService] = None):
        self.experiment = experiment
        self.registry = registry
        self.reports = ReportService(experiment.run_dir)
        self.experiment_id: Optional[int] = None
        self.final_checkpoint: Optional[str] = None

    # --- реєстр (best-effort) ----------------------------------------------

    async def _register(self):
        if self.registry is None:
            return
        experiment = self.experiment
        try:
            await self.registry.init()
            self.experiment_id = await self.registry.create_experiment(Experiment(
                name=experiment.name,
                kind=experiment.kind.value,
                seed=experiment.sim.seed,
                state_mode=experiment.trainer.state_mode.value,
                action_variant=experiment.trainer.action_variant.value,
                config_json=experiment.model_dump_json(),
                output_dir=experiment.run_dir,
            ))
        except Exception as e:
            logger.warning(f"⚠️ Реєстр запусків недоступний: {e}")
            self.experiment_id = None

    async def _record_iteration(self, record: IterationRecord):
        if self.registry is None or self.experiment_id is None:
            return
        try:
            await self.registry.record_iteration(TrainingHistoryRow(
                experiment_id=self.experiment_id,
                iteration=record.iteration,
                game_value=record.game_value,
                game_value_se=record.game_value_se,
                kl=record.kl,
                clip_fraction=record.clip_fraction,
                policy_loss=record.policy_loss,
                value_loss=record.value_loss,
                switch_value=record.switch_value,
                wallclock_s=record.wallclock_s,
            ))
        except Exception as e:
            logger.warning(f"⚠️ Не вдалося записати ітерацію {record.iteration} у реєстр: {e}")

    async def _record_pricing(self, results):
        if self.registry is None or self.experiment_id is None:
            return
        try:
            for result in results:
                await self.registry.record_pricing(PricingReportRow(
                    experiment_id=self.experiment_id,
                    seed=self.experiment.sim.seed,
                    bermudan=result.bermudan,
                    eu1=result.eu1,
                    eu2=result.eu2,
                    max_eu=result.max_eu,
                    switch_value_volpts=result.switch_value,
                    se_bermudan=result.bermudan_se,
                ))
        except Exception as e:
            logger.warning(f"⚠️ Не вдалося записати звіт ціноутворення: {e}")

    async def _history_readout(self, experiment_id: int) -> Optional[str]:
        if self.registry is None:
            logger.warning("⚠️ Історія з реєстру недоступна: реєстр вимкнено")
            return None
        try:
            await self.registry.init()
            stored = await self.registry.get_experiment(experiment_id)
            rows = await self.registry.get_history(experiment_id) if stored is not None else []
        except Exception as e:
            logger.warning(f"⚠️ Не вдалося прочитати реєстр: {e}")
            return None
        if stored is None:
            logger.warning(f"⚠️ Запуску {experiment_id} немає в реєстрі")
            return None
        logger.info(f"📊 Запуск {experiment_id} ({stored.name}, {stored.status.value}): {len(rows)} ітерацій у реєстрі")
        return self.reports.write_registry_history(rows)

    async def _finish(self, status: ExperimentStatus):
        if self.registry is None or self.experiment_id is None:
            return
        try:
            await self.registry.finish_experiment(self.experiment_id, status)
        except Exception as e:
            logger.warning(f"⚠️ Не вдалося оновити статус запуску: {e}")

    # --- спільні кроки ------------------------------------------------------

    def _echo(self):
        experiment = self.experiment
        sim, trainer = experiment.sim, experiment.trainer
        logger.info(
            f"🔧 {experiment.name} ({experiment.kind.value}): n={sim.n_paths}, B={sim.n_runs}, "
            f"T={sim.n_steps}, δ={sim.dt:.6g}, n_p={trainer.n_basis}, seed={sim.seed}, "
            f"стан={trainer.state_mode.value}, дія={trainer.action_variant.value}, "
            f"інтерполяція={trainer.interpolation.value}, локалізація={trainer.localize}"
        )

    def _write_config(self) -> str:
        path = self.reports.path("resolved_config.json")
        payload = json.loads(self.experiment.model_dump_json())

        def _write(tmp_path: str) -> None:
            with open(tmp_path, "w", encoding="utf-8") as handle:
                json.dump(payload, handle, indent=2, ensure_ascii=False)

        return write_atomic(path, _write)

    async def _prepare(self):
        surface = load_surface(self.experiment)
        reward_spec = build_reward_spec(self.experiment, surface)
        reward_spec = await with_reference_errors(self.experiment, reward_spec, surface)
        return surface, reward_spec

    async def _train(self, surface: MarketSurface, reward_spec: RewardSpec) -> TrainingResult:
        trainer = MarlVolTrainer(
            self.experiment.sim,
            reward_spec,
            self.experiment.trainer,
            build_localizer(self.experiment, surface),
            checkpoint_dir=self.reports.path("checkpoints"),
        )
        result = await trainer.train(on_iteration=self._record_iteration)
        last = len(result.history) - 1
        self.final_checkpoint = save_checkpoint(self.reports.path("checkpoint_final.npz"), trainer.snapshot(last))
        return result

    def _summary(self, result: TrainingResult) -> RunSummary:
        summary = RunSummary(run_dir=self.experiment.run_dir, converged=result.converged)
        if result.history:
            last = result.history[-1]
            summary.game_value = last.game_value
            summary.game_value_se = last.game_value_se
            summary.switch_value = last.switch_value
        return summary

    # --- експерименти -------------------------------------------------------

    @log_execution
    async def calibrate_vanilla(self) -> RunSummary:
        """Навчання проти сітки колів; історія, посмішка, цілі, чекпоінт"""

        experiment = self.experiment
        if experiment.kind != ExperimentKind.VANILLA:
            raise ConfigError(f"Очікувався експеримент vanilla, отримано {experiment.kind.value}")
        self._echo()
        surface, reward_spec = await self._prepare()
        await self._register()
        try:
            result = await self._train(surface, reward_spec)
            summary = self._summary(result)
            summary.artifacts["config"] = self._write_config()
            summary.artifacts["history"] = self.reports.write_history(result.history_rows())
            export_target_set(reward_spec.quotes, self.reports.path("targets.csv"))
            summary.artifacts["targets"] = self.reports.path("targets.csv")
            if result.last_paths is not None:
                smile = smile_table(result.last_paths.spots, reward_spec.quotes, experiment.steps_per_day, experiment.sim.spot0)
                summary.artifacts["smile"] = self.reports.write(smile, "smile.csv")
                summary.metrics["max_abs_error_volpts"] = float(smile["error"].abs().max() * 100)
                summary.metrics["rmse_volpts"] = float(np.sqrt((smile["error"] ** 2).mean()) * 100)
                logger.info(
                    f"📊 Посмішка: max|похибка| = {summary.metrics['max_abs_error_volpts']:.3f}, "
                    f"RMSE = {summary.metrics['rmse_volpts']:.3f} пунктів"
                )
            summary.artifacts["checkpoint"] = self.final_checkpoint
        except MarlVolError:
            await self._finish(ExperimentStatus.FAILED)
            raise
        await self._finish(ExperimentStatus.COMPLETED)
        return summary

    @log_execution
    async def calibrate_bermudan(self) -> RunSummary:
        """Мінімізація бермудської ціни з локалізацією; switch value, теплова карта, перевірка посмішки"""

        experiment = self.experiment
        if experiment.kind != ExperimentKind.BERMUDAN:
            raise ConfigError(f"Очікувався експеримент bermudan, отримано {experiment.kind.value}")
        if not experiment.trainer.localize:
            logger.warning("⚠️ Локалізацію вимкнено: ванільна посмішка не утримується")
        self._echo()
        surface, reward_spec = await self._prepare()
        await self._register()
        try:
            result = await self._train(surface, reward_spec)
            summary = self._summary(result)
            rows = result.history_rows()
            summary.artifacts["config"] = self._write_config()
            summary.artifacts["history"] = self.reports.write_history(rows)
            summary.artifacts["switch_value"] = self.reports.write_switch_values(rows)

            paths = result.last_paths
            if paths is not None:
                spec = reward_spec.bermudan
                heatmap = volatility_heatmap(paths.spots, paths.raw_vols, paths.vols, spec.t1, spec.t2)
                summary.artifacts["heatmap"] = self.reports.write(heatmap, "heatmap.csv")
                summary.metrics.update(heatmap_monotonicity(heatmap))
                logger.info(
                    f"📊 Монотонність σ: ρ(ln S_t1) = {summary.metrics['spearman_s1']:.2f}, "
                    f"ρ(ln S_t) = {summary.metrics['spearman_st']:.2f}"
                )
                quotes = sanity_quotes(surface, spec, experiment.bermudan.sanity_strikes, experiment.steps_per_day)
                smile = smile_table(paths.spots, quotes, experiment.steps_per_day, experiment.sim.spot0)
                summary.artifacts["smile"] = self.reports.write(smile, "smile_sanity.csv")
                summary.artifacts["reward_trace"] = self.reports.write_reward_trace(result.last_rewards, result.history[-1].iteration)
            summary.artifacts["checkpoint"] = self.final_checkpoint
        except MarlVolError:
            await self._finish(ExperimentStatus.FAILED)
            raise
        await self._finish(ExperimentStatus.COMPLETED)
        return summary

    @log_execution
    async def evaluate(
        self,
        checkpoint_path: str,
        deterministic: bool = False,
        dump_paths: bool = False,
        history_of: Optional[int] = None,
    ) -> RunSummary:
        """
        Симуляція замороженої політики: звіт ціноутворення та посмішка без навчання.

        dump_paths - додатково записати paths.bin (споти та волатильності всіх прогонів);
        history_of - id запуску в реєстрі, чия історія навчання вивантажується у registry_history.csv.
        """

        experiment = self.experiment
        checkpoint = load_checkpoint(checkpoint_path)
        state_dim = STATE_DIMS[experiment.trainer.state_mode]
        action_dim = ACTION_DIMS[experiment.trainer.action_variant]
        if checkpoint.policy.state_dim != state_dim:
            raise ConfigError(
                f"Розмірність стану чекпоінта {checkpoint.policy.state_dim} не відповідає "
                f"state_mode={experiment.trainer.state_mode.value} ({state_dim})"
            )
        if checkpoint.policy.action_dim != action_dim:
            raise ConfigError(
                f"Розмірність дії чекпоінта {checkpoint.policy.action_dim} не відповідає "
                f"action_variant={experiment.trainer.action_variant.value} ({action_dim})"
            )
        if checkpoint.value.net.layer_sizes[0] != state_dim:
            raise ConfigError(f"Розмірність стану мережі цінності {checkpoint.value.net.layer_sizes[0]} ≠ {state_dim}")

        self._echo()
        surface, reward_spec = await self._prepare()
        trainer = MarlVolTrainer(
            experiment.sim,
            reward_spec,
            experiment.trainer,
            build_localizer(experiment, surface),
            policy=checkpoint.policy,
            value=checkpoint.value,
        )
        iteration = int(checkpoint.metadata.get("iteration", 0)) + 1
        paths = await trainer.rollout(iteration, deterministic=deterministic)
        runs = episode_rewards(paths.spots, reward_spec, paths.vols, trainer.regression, experiment.sim.spot0)
        game = estimate_game_value(np.stack([run.rewards for run in runs]))

        summary = RunSummary(run_dir=experiment.run_dir, game_value=game.mean, game_value_se=game.se)
        summary.artifacts["reward_trace"] = self.reports.write_reward_trace(runs, iteration, "eval_reward_trace.csv")
        if dump_paths:
            summary.artifacts["paths"] = write_path_dump(self.reports.path("paths.bin"), paths)
            logger.info(f"💾 Дамп шляхів: {paths.n_runs}×{paths.vols.shape[1]}×{paths.vols.shape[2]}")

        if reward_spec.bermudan is not None:
            spec = reward_spec.bermudan
            results = [bermudan_price(paths.spots[b], spec, trainer.regression, paths.vols[b]) for b in range(paths.n_runs)]
            summary.switch_value = float(np.nanmean([r.switch_value for r in results]))
            summary.artifacts["pricing"] = self.reports.write_pricing(results, experiment.sim.seed)
            quotes = sanity_quotes(surface, spec, experiment.bermudan.sanity_strikes, experiment.steps_per_day)
        else:
            results = []
            quotes = reward_spec.quotes

        smile = smile_table(paths.spots, quotes, experiment.steps_per_day, experiment.sim.spot0)
        summary.artifacts["smile"] = self.reports.write(smile, "eval_smile.csv")
        if history_of is not None:
            readout = await self._history_readout(history_of)
            if readout is not None:
                summary.artifacts["registry_history"] = readout
        await self._register()
        await self._record_pricing(results)
        await self._finish(ExperimentStatus.COMPLETED)
        logger.info(f"✅ Оцінка: v={game.mean:.6e} ± {game.se:.1e}" + (
            f", switch={summary.switch_value:.3f}" if np.isfinite(summary.switch_value) else ""
        ))
        return summary


async def run_calibrate_vanilla(experiment: ExperimentConfig, registry: Optional[RegistryService] = None) -> RunSummary:
    with run_log(experiment.run_dir, experiment.name):
        return await ExperimentService(experiment, registry).calibrate_vanilla()


async def run_calibrate_bermudan(experiment: ExperimentConfig, registry: Optional[RegistryService] = None) -> RunSummary:
    with run_log(experiment.run_dir, experiment.name):
        return await ExperimentService(experiment, registry).calibrate_bermudan()


async def run_evaluate(
    checkpoint_path: str,
    experiment: ExperimentConfig,
    deterministic: bool = False,
    registry: Optional[RegistryService] = None,
    dump_paths: bool = False,
    history_of: Optional[int] = None,
) -> RunSummary:
    with run_log(experiment.run_dir, experiment.name):
        return await ExperimentService(experiment, registry).evaluate(checkpoint_path, deterministic, dump_paths, history_of)


def make_surface(
    path: str,
    kind: str = "equity",
    atm_vols: Optional[List[float]] = None,
    pillar_days: Optional[List[float]] = None,
    skew_per_5pct: float = -0.025,
    flat_vol: float = 0.2,
) -> str:
    """Синтетичний SVI-файл поверхні: пласка або «акційна» з від'ємним нахилом"""

    pillar_days = pillar_days or [21, 51]
    if kind == "flat":
        surface = MarketSurface.flat(flat_vol, pillar_days)
    elif kind == "equity":
        surface = MarketSurface.equity_like(atm_vols or [0.14, 0.135], pillar_days, skew_per_5pct)
    else:
        raise ConfigError(f"Невідомий тип поверхні: {kind}")
    surface.to_file(path)
    atm = [surface_implied_vol(surface, d / DAYS_PER_YEAR, 1.0) for d in pillar_days]
    logger.info(f"💾 Поверхню {kind} записано у {path}; ATM: " + ", ".join(f"{v:.2%}" for v in atm))
    return path
