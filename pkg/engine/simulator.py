"""
Векторизована дифузія n траєкторій з волатильністю, яку обирає політика
"""

import asyncio
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional

import numpy as np

from engine.dynamics import VolNormals, step_spot
from engine.localization import Localizer
from engine.noise import NoiseGenerator, NoiseStream
from engine.state import PathState, SimConfig, StateMode, build_state
from market.local_vol import dupire_local_vol
from market.surface import MarketSurface
from utils.errors import NumericError
from utils.logger import setup_logger

logger = setup_logger()


@dataclass
class StepContext:
    """Інформація, доступна на кроці t до появи шуму спота Z_t"""
    iteration: int
    run: int
    t: int
    state: PathState
    prev_raw_vol: np.ndarray
    normals: VolNormals


@dataclass
class StepDecision:
    """Відповідь політики: σ_t для всіх траєкторій (до локалізації)"""
    vols: np.ndarray
    n_clamped: int = 0
    record: Any = None


StepCallback = Callable[[StepContext], StepDecision]


@dataclass
class RunPaths:
    """Шляхи одного прогону"""
    spots: np.ndarray
    vols: np.ndarray
    raw_vols: np.ndarray
    records: List[Any] = field(default_factory=list)
    n_clamped: int = 0


@dataclass
class EpisodePaths:
    """Шляхи всіх B прогонів: spots (B, n, T+1), vols (B, n, T)"""
    spots: np.ndarray
    vols: np.ndarray
    raw_vols: np.ndarray
    records: List[List[Any]]
    n_clamped: int = 0

    @classmethod
    def from_runs(cls, runs: List[RunPaths]) -> "EpisodePaths":
        return cls(
            spots=np.stack([r.spots for r in runs]),
            vols=np.stack([r.vols for r in runs]),
            raw_vols=np.stack([r.raw_vols for r in runs]),
            records=[r.records for r in runs],
            n_clamped=sum(r.n_clamped for r in runs),
        )

    @property
    def n_runs(self) -> int:
        return int(self.spots.shape[0])


def simulate_run(
    config: SimConfig,
    run: int,
    callback: StepCallback,
    mode: StateMode = StateMode.PATH_DEPENDENT,
    localizer: Optional[Localizer] = None,
    iteration: int = 0,
) -> RunPaths:
    """Один прогін: на кожному кроці стан → дія → (локалізація) → крок спота"""

    noise = NoiseGenerator(config.seed)
    n, T = config.n_paths, config.n_steps
    spots = np.empty((n, T + 1))
    spots[:, 0] = config.spot0
    vols = np.empty((n, T))
    raw_vols = np.empty((n, T))
    records: List[Any] = []
    n_clamped = 0

    prev_raw = np.full(n, config.sigma_init)
    spot_noise = noise.normals(NoiseStream.SPOT, iteration, run, -1, n)
    for t in range(T):
        state = build_state(spots[:, :t + 1], vols[:, :t], t, config, mode)
        normals = VolNormals(
            sample=noise.normals(NoiseStream.VOL_SAMPLE, iteration, run, t, n),
            spot=spot_noise,
            perp=noise.normals(NoiseStream.VOL_PERP, iteration, run, t, n),
        )
        try:
            decision = callback(StepContext(iteration, run, t, state, prev_raw, normals))
            raw = np.asarray(decision.vols, dtype=float)
            effective = localizer.apply(raw, spots[:, t], t) if localizer and localizer.applies(t) else raw
            spot_noise = noise.normals(NoiseStream.SPOT, iteration, run, t, n)
            spots[:, t + 1] = step_spot(spots[:, t], effective, spot_noise, config.dt)
        except NumericError as e:
            raise NumericError(f"Прогін {run}, крок {t}: {e}") from e

        raw_vols[:, t] = raw
        vols[:, t] = effective
        records.append(decision.record)
        n_clamped += decision.n_clamped
        prev_raw = raw

    return RunPaths(spots=spots, vols=vols, raw_vols=raw_vols, records=records, n_clamped=n_clamped)


def simulate_episode(
    config: SimConfig,
    callback: StepCallback,
    mode: StateMode = StateMode.PATH_DEPENDENT,
    localizer: Optional[Localizer] = None,
    iteration: int = 0,
) -> EpisodePaths:
    """Усі B прогонів послідовно"""
    runs = [simulate_run(config, b, callback, mode, localizer, iteration) for b in range(config.n_runs)]
    return EpisodePaths.from_runs(runs)


async def simulate_episode_async(
    config: SimConfig,
    callback: StepCallback,
    mode: StateMode = StateMode.PATH_DEPENDENT,
    localizer: Optional[Localizer] = None,
    iteration: int = 0,
    max_workers: int = 1,
) -> EpisodePaths:
    """Прогони паралельно у потоках; результат не залежить від кількості воркерів"""

    semaphore = asyncio.Semaphore(max(int(max_workers), 1))

    async def _run(b: int) -> RunPaths:
        async with semaphore:
            return await asyncio.to_thread(simulate_run, config, b, callback, mode, localizer, iteration)

    runs = await asyncio.gather(*(_run(b) for b in range(config.n_runs)))
    return EpisodePaths.from_runs(list(runs))


def constant_vol_callback(vol: float) -> StepCallback:
    """Політика зі сталою волатильністю (еталонна модель Блека-Шоулза)"""

    def _callback(context: StepContext) -> StepDecision:
        return StepDecision(vols=np.full(context.state.spot.shape[0], vol))

    return _callback


def local_vol_callback(surface: MarketSurface, dt: float) -> StepCallback:
    """Еталонна модель локальної волатильності Дюпіра"""

    def _callback(context: StepContext) -> StepDecision:
        return StepDecision(vols=dupire_local_vol(surface, max(context.t, 0.5) * dt, context.state.spot))

    return _callback
