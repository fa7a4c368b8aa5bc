"""
Локалізація частинковим методом: σ̃ = σ_loc(t,S)·σ / sqrt(Ê[σ²|S])

Ê[σ²|S] оцінюється кусково-сталою регресією на рівночисельних бінах спота;
біни з малою заповненістю зливаються з сусідом.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from market.local_vol import dupire_local_vol
from market.surface import MarketSurface
from utils.errors import EstimationError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

DEFAULT_BINS = 50
DEFAULT_MIN_COUNT = 10


@dataclass
class LeverageFunction:
    """Оцінка E[σ_t²|S_t] по бінах та зріз локальної волатильності"""
    t: int
    edges: np.ndarray
    conditional_variance: np.ndarray
    counts: np.ndarray
    local_vol: Optional[np.ndarray] = None

    def bin_index(self, spots: np.ndarray) -> np.ndarray:
        return np.searchsorted(self.edges, spots, side="right")

    def conditional_variance_at(self, spots: np.ndarray) -> np.ndarray:
        return self.conditional_variance[self.bin_index(spots)]


def _merge_sparse(edges: np.ndarray, spots: np.ndarray, min_count: int) -> np.ndarray:
    edges = list(edges)
    while edges:
        counts = np.bincount(np.searchsorted(edges, spots, side="right"), minlength=len(edges) + 1)
        smallest = int(np.argmin(counts))
        if counts[smallest] >= min_count:
            break
        # прибираємо межу до меншого з сусідів
        if smallest == 0:
            edges.pop(0)
        elif smallest == len(counts) - 1:
            edges.pop(-1)
        elif counts[smallest - 1] <= counts[smallest + 1]:
            edges.pop(smallest - 1)
        else:
            edges.pop(smallest)
    return np.asarray(edges, dtype=float)


def estimate_leverage(
    vols: np.ndarray,
    spots: np.ndarray,
    t: int,
    n_bins: int = DEFAULT_BINS,
    min_count: int = DEFAULT_MIN_COUNT,
    local_vol: Optional[np.ndarray] = None,
) -> LeverageFunction:
    """Кусково-стала регресія σ² на спот по n_bins рівночисельних бінах"""

    vols = np.asarray(vols, dtype=float)
    spots = np.asarray(spots, dtype=float)
    if vols.shape != spots.shape:
        raise ShapeError("Волатильності та споти мають однаковий розмір")
    if spots.size == 0:
        raise EstimationError("Порожня хмара частинок")

    inner = np.quantile(spots, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    edges = np.unique(inner)
    # межа на мінімумі дає порожній перший бін
    edges = edges[edges > spots.min()]
    edges = _merge_sparse(edges, spots, min(min_count, spots.size))

    index = np.searchsorted(edges, spots, side="right")
    counts = np.bincount(index, minlength=edges.size + 1)
    if np.any(counts == 0):
        raise EstimationError(f"Порожній бін після злиття на кроці {t}")
    second_moment = np.bincount(index, weights=vols ** 2, minlength=edges.size + 1) / counts
    if np.any(second_moment <= 0):
        raise EstimationError(f"Нульова умовна дисперсія на кроці {t}")

    return LeverageFunction(t=t, edges=edges, conditional_variance=second_moment, counts=counts, local_vol=local_vol)


def localize(vols: np.ndarray, spots: np.ndarray, t: int, leverage: LeverageFunction) -> np.ndarray:
    """σ̃ = σ_loc·σ / sqrt(Ê[σ²|S])"""

    if leverage.local_vol is None:
        raise EstimationError("Функція левериджу не містить локальної волатильності")
    return leverage.local_vol * np.asarray(vols, dtype=float) / np.sqrt(leverage.conditional_variance_at(spots))


class Localizer:
    """Застосовує локалізацію на кроках дифузії [t, t+1] всередині [first_step, last_step]"""

    def __init__(
        self,
        surface: MarketSurface,
        first_step: int,
        last_step: int,
        dt: float,
        n_bins: int = DEFAULT_BINS,
        min_count: int = DEFAULT_MIN_COUNT,
    ):
        self.surface = surface
        self.first_step = first_step
        self.last_step = last_step
        self.dt = dt
        self.n_bins = n_bins
        self.min_count = min_count

    def applies(self, t: int) -> bool:
        # приріст t -> t+1 локалізується для t1 <= t < t2, тобто маргінали S_{t1+1} .. S_{t2}
        return self.first_step <= t < self.last_step

    def apply(self, vols: np.ndarray, spots: np.ndarray, t: int) -> np.ndarray:
        sigma_loc = dupire_local_vol(self.surface, max(t, 0.5) * self.dt, spots)
        leverage = estimate_leverage(vols, spots, t, self.n_bins, self.min_count, local_vol=sigma_loc)
        return localize(vols, spots, t, leverage)
