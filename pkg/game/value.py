"""
Оцінка цінності гри v(π) = E Σ_t r_t
"""

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from utils.errors import ShapeError
from utils.logger import setup_logger

logger = setup_logger()


@dataclass
class GameValue:
    mean: float
    se: float
    n_runs: int

    @property
    def has_se(self) -> bool:
        return bool(np.isfinite(self.se))


def estimate_game_value(episode_rewards: Union[np.ndarray, Sequence[Sequence[float]]]) -> GameValue:
    """Середнє по прогонах сум винагород та його стандартна похибка (NaN при B = 1)"""

    sums = np.array([np.sum(np.asarray(run, dtype=float)) for run in episode_rewards])
    if sums.size == 0:
        raise ShapeError("estimate_game_value: потрібен щонайменше один прогін")
    if sums.size < 2:
        logger.warning("⚠️ Один прогін: стандартна похибка цінності гри не визначена")
        return GameValue(mean=float(sums[0]), se=float("nan"), n_runs=1)
    return GameValue(
        mean=float(sums.mean()),
        se=float(sums.std(ddof=1) / np.sqrt(sums.size)),
        n_runs=int(sums.size),
    )
