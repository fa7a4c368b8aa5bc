"""
Сервіс дослідження через базисних гравців

На кожному кроці t та прогоні b обирається n_p базисних траєкторій; їхній шум Z
вибирається напряму, а для решти траєкторій інтерполюється у просторі станів
(без часу, координати стандартизовані на кроці).
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np
from scipy.interpolate import LinearNDInterpolator
from scipy.spatial import QhullError, cKDTree
from sklearn.preprocessing import StandardScaler

from network.distributions import GaussianHead, gaussian_log_prob
from network.policy import GaussianPolicy
from utils.errors import ConfigError, NumericError, ShapeError
from utils.logger import setup_logger

logger = setup_logger()

DEFAULT_NEIGHBOURS = 4
_RANK_TOLERANCE = 1e-8


class InterpolationMode(str, Enum):
    LINEAR = "linear"
    KNN = "knn"


def pick_basis_players(n: int, n_p: int, rng: np.random.Generator) -> np.ndarray:
    """n_p різних індексів з [0, n), рівномірно без повторень (відсортовані)"""

    if not 1 <= n_p <= n:
        raise ConfigError(f"Кількість базисних гравців n_p={n_p} має бути в [1, n={n}]")
    return np.sort(rng.choice(n, size=n_p, replace=False))


@dataclass
class BasisActions:
    """Дії базисних гравців: a = μ + Z·σ та log π(a|x) поведінкової політики"""
    actions: np.ndarray
    noises: np.ndarray
    log_probs: np.ndarray
    head: GaussianHead


def basis_actions(
    policy: GaussianPolicy,
    states: np.ndarray,
    rng: Optional[np.random.Generator] = None,
    noises: Optional[np.ndarray] = None,
) -> BasisActions:
    states = np.atleast_2d(states)
    head = policy.head(states)
    if not (np.all(np.isfinite(head.mean)) and np.all(np.isfinite(head.log_std))):
        raise NumericError("Політика повернула нескінченні значення на базисних станах")

    if noises is None:
        if rng is None:
            raise ShapeError("basis_actions потребує rng або готових шумів")
        noises = rng.standard_normal(head.mean.shape)
    noises = np.asarray(noises, dtype=float)
    if noises.shape != head.mean.shape:
        raise ShapeError(f"Шуми мають розмір {noises.shape}, очікувалось {head.mean.shape}")

    actions = head.sample(noises)
    return BasisActions(actions=actions, noises=noises, log_probs=gaussian_log_prob(head, actions), head=head)


@dataclass
class ExplorationField:
    """Шуми базисних гравців на кроці t прогону b та підігнаний інтерполятор"""
    t: int
    run: int
    basis_index: np.ndarray
    basis_states: np.ndarray
    basis_noises: np.ndarray
    mode: InterpolationMode = InterpolationMode.LINEAR
    k: int = DEFAULT_NEIGHBOURS
    inverse_distance: bool = False
    _scaler: Optional[StandardScaler] = field(default=None, init=False, repr=False)
    _projection: Optional[np.ndarray] = field(default=None, init=False, repr=False)
    _tree: Optional[cKDTree] = field(default=None, init=False, repr=False)
    _linear: Optional[LinearNDInterpolator] = field(default=None, init=False, repr=False)
    _effective_mode: Optional[InterpolationMode] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.basis_states = np.atleast_2d(np.asarray(self.basis_states, dtype=float))
        self.basis_noises = np.asarray(self.basis_noises, dtype=float)
        if self.basis_noises.ndim == 1:
            self.basis_noises = self.basis_noises[:, None]
        if self.basis_states.shape[0] != self.basis_noises.shape[0] or self.basis_states.shape[0] == 0:
            raise ShapeError("Потрібна щонайменше одна базисна точка зі своїм шумом")
        if self.k < 1:
            raise ConfigError("k має бути >= 1")

    @property
    def n_basis(self) -> int:
        return int(self.basis_states.shape[0])

    @property
    def effective_mode(self) -> Optional[InterpolationMode]:
        return self._effective_mode

    def _reduce(self, coords: np.ndarray) -> np.ndarray:
        return self._scaler.transform(coords) @ self._projection

    def fit(self) -> "ExplorationField":
        self._scaler = StandardScaler().fit(self.basis_states)
        scaled = self._scaler.transform(self.basis_states)
        _, singular, vt = np.linalg.svd(scaled, full_matrices=False)
        keep = singular > _RANK_TOLERANCE * max(singular.max(initial=0.0), 1.0)
        self._projection = vt[keep].T

        if not keep.any():
            logger.debug(f"🔧 Вироджена геометрія базису (t={self.t}, b={self.run}), k-NN з k={self.n_basis}")
            self._effective_mode = InterpolationMode.KNN
            self.k = self.n_basis
            self._projection = np.zeros((scaled.shape[1], 1))

        reduced = self._reduce(self.basis_states)
        self._tree = cKDTree(reduced)
        if self._effective_mode is None:
            self._effective_mode = self.mode

        if self._effective_mode == InterpolationMode.LINEAR and reduced.shape[1] >= 2:
            try:
                self._linear = LinearNDInterpolator(reduced, self.basis_noises)
            except (QhullError, ValueError) as e:
                logger.debug(f"🔧 Триангуляція неможлива (t={self.t}, b={self.run}): {e}; k-NN")
                self._effective_mode = InterpolationMode.KNN
        return self

    def _knn(self, query: np.ndarray) -> np.ndarray:
        k = min(self.k, self.n_basis)
        distances, index = self._tree.query(query, k=k)
        if k == 1:
            return self.basis_noises[index]
        neighbours = self.basis_noises[index]
        if not self.inverse_distance:
            return neighbours.mean(axis=1)
        with np.errstate(divide="ignore"):
            weights = 1.0 / distances
        exact = ~np.isfinite(weights)
        weights = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), weights)
        weights /= weights.sum(axis=1, keepdims=True)
        return np.einsum("nk,nkd->nd", weights, neighbours)

    def _linear_1d(self, query: np.ndarray) -> np.ndarray:
        x = self._reduce(self.basis_states)[:, 0]
        order = np.argsort(x, kind="stable")
        x_sorted = x[order]
        return np.column_stack([
            np.interp(query[:, 0], x_sorted, self.basis_noises[order, j])
            for j in range(self.basis_noises.shape[1])
        ])

    def interpolate(self, states: np.ndarray) -> np.ndarray:
        """Ẑ для довільних станів (n, d) без стовпця часу"""

        if self._tree is None:
            self.fit()
        query = self._reduce(np.atleast_2d(np.asarray(states, dtype=float)))
        if self._effective_mode == InterpolationMode.KNN:
            return self._knn(query)

        if self._linear is None:
            values = self._linear_1d(query)
        else:
            values = self._linear(query)
            outside = np.isnan(values).any(axis=1)
            if outside.any():
                _, nearest = self._tree.query(query[outside], k=1)
                values[outside] = self.basis_noises[nearest]

        # у вузлах значення дорівнює власному шуму
        distances, nearest = self._tree.query(query, k=1)
        at_node = distances == 0.0
        values[at_node] = self.basis_noises[nearest[at_node]]
        return values


def exploration_coordinates(features: np.ndarray) -> np.ndarray:
    """Координати інтерполяції: ознаки стану без часу"""
    return np.atleast_2d(features)[:, 1:]


def interpolate_exploration(exploration: ExplorationField, features: np.ndarray) -> np.ndarray:
    """Ẑ для всіх траєкторій; базисні траєкторії зберігають свій Z"""

    noises = exploration.interpolate(exploration_coordinates(features))
    noises[exploration.basis_index] = exploration.basis_noises
    return noises
