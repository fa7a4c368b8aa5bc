"""
Гаусова голова політики: середнє та log-std дій, щільність, KL та їх похідні
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np

from utils.errors import DomainError, ShapeError

LOG_STD_MIN = float(np.log(1e-3))
LOG_STD_MAX = 0.0
_HALF_LOG_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass
class GaussianHead:
    """Вихід π_θ = (π^μ, π^σ) для пакета станів"""
    mean: np.ndarray
    log_std: np.ndarray

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float)
        self.log_std = np.broadcast_to(np.asarray(self.log_std, dtype=float), self.mean.shape).copy()

    @property
    def std(self) -> np.ndarray:
        return np.exp(self.log_std)

    @property
    def action_dim(self) -> int:
        return int(self.mean.shape[-1]) if self.mean.ndim else 1

    def sample(self, noises: np.ndarray) -> np.ndarray:
        """a = μ + Z·σ"""
        return self.mean + np.asarray(noises, dtype=float) * self.std

    def take(self, index: np.ndarray) -> "GaussianHead":
        return GaussianHead(mean=self.mean[index], log_std=self.log_std[index])


def _check(head: GaussianHead, action: np.ndarray) -> np.ndarray:
    action = np.asarray(action, dtype=float)
    if action.shape != head.mean.shape:
        raise ShapeError(f"Дія має розмір {action.shape}, голова - {head.mean.shape}")
    std = head.std
    if not np.all(np.isfinite(head.log_std)) or np.any(std <= 0):
        raise DomainError("Стандартне відхилення має бути додатним")
    return action


def gaussian_log_prob(head: GaussianHead, action: np.ndarray):
    """log N(a; μ, σ²), підсумований по вимірах дії"""

    action = _check(head, action)
    z = (action - head.mean) / head.std
    log_prob = -0.5 * z ** 2 - head.log_std - _HALF_LOG_2PI
    total = log_prob.sum(axis=-1)
    return float(total) if np.ndim(total) == 0 else total


def gaussian_log_prob_grads(head: GaussianHead, action: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Похідні log-ймовірності за середнім та log-std"""

    action = _check(head, action)
    variance = head.std ** 2
    diff = action - head.mean
    return diff / variance, diff ** 2 / variance - 1.0


def gaussian_kl(old: GaussianHead, new: GaussianHead) -> np.ndarray:
    """KL(old || new) для діагональних гаусіан, по кожному зразку"""

    var_old = old.std ** 2
    var_new = new.std ** 2
    kl = new.log_std - old.log_std + (var_old + (old.mean - new.mean) ** 2) / (2.0 * var_new) - 0.5
    return kl.sum(axis=-1)


def gaussian_kl_grads(old: GaussianHead, new: GaussianHead) -> Tuple[np.ndarray, np.ndarray]:
    """Похідні KL(old || new) за параметрами new"""

    var_new = new.std ** 2
    diff = new.mean - old.mean
    d_mean = diff / var_new
    d_log_std = 1.0 - (old.std ** 2 + diff ** 2) / var_new
    return d_mean, d_log_std
