"""
Мережі політики (θ) та функції цінності (ψ)
"""

from typing import Optional, Sequence, Tuple

import numpy as np

from network.distributions import LOG_STD_MAX, LOG_STD_MIN, GaussianHead
from network.mlp import MlpParams, backward, flatten, forward, forward_cache, init_mlp, unflatten
from utils.errors import ShapeError


class GaussianPolicy:
    """
    Спільна політика гравців з гаусовою головою.

    За замовчуванням std залежить від стану (мережа видає 2·action_dim чисел);
    з state_dependent_std=False мережа видає лише середнє, а log-std - окремий
    вектор параметрів. log-std обрізається до [ln 1e-3, 0] перед експонентою.
    """

    def __init__(
        self,
        net: MlpParams,
        action_dim: int,
        state_dependent_std: bool = True,
        log_std: Optional[np.ndarray] = None,
    ):
        expected = 2 * action_dim if state_dependent_std else action_dim
        if net.output_size != expected:
            raise ShapeError(f"Вихід мережі {net.output_size}, очікувалось {expected}")
        self.net = net
        self.action_dim = int(action_dim)
        self.state_dependent_std = state_dependent_std
        if state_dependent_std:
            self.log_std = None
        else:
            self.log_std = np.zeros(action_dim) if log_std is None else np.asarray(log_std, dtype=float).copy()

    @classmethod
    def create(
        cls,
        state_dim: int,
        action_dim: int,
        hidden_sizes: Sequence[int],
        rng: np.random.Generator,
        state_dependent_std: bool = True,
        init_log_std: float = -0.5,
        mean_bias: Optional[np.ndarray] = None,
    ) -> "GaussianPolicy":
        """Нова політика з малими вихідними вагами (початкова дія ≈ mean_bias)"""

        out = 2 * action_dim if state_dependent_std else action_dim
        net = init_mlp([state_dim, *hidden_sizes, out], rng, output_scale=0.01)
        bias = np.zeros(action_dim) if mean_bias is None else np.asarray(mean_bias, dtype=float)
        net.biases[-1][:action_dim] = bias
        if state_dependent_std:
            net.biases[-1][action_dim:] = init_log_std
            return cls(net, action_dim, True)
        return cls(net, action_dim, False, np.full(action_dim, init_log_std))

    @property
    def state_dim(self) -> int:
        return self.net.input_size

    @property
    def num_parameters(self) -> int:
        extra = 0 if self.state_dependent_std else self.action_dim
        return self.net.num_parameters + extra

    def _raw(self, outputs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        mean = outputs[:, :self.action_dim]
        if self.state_dependent_std:
            raw_log_std = outputs[:, self.action_dim:]
        else:
            raw_log_std = np.broadcast_to(self.log_std, mean.shape)
        return mean, raw_log_std

    def head(self, states: np.ndarray) -> GaussianHead:
        """Середнє та log-std дій для пакета станів"""
        outputs = forward(self.net, np.atleast_2d(states))
        mean, raw_log_std = self._raw(outputs)
        return GaussianHead(mean=mean.copy(), log_std=np.clip(raw_log_std, LOG_STD_MIN, LOG_STD_MAX))

    def backward(self, states: np.ndarray, d_mean: np.ndarray, d_log_std: np.ndarray) -> np.ndarray:
        """Плаский градієнт скалярної втрати з похідних за μ та log-std"""

        states = np.atleast_2d(states)
        activations = forward_cache(self.net, states)
        _, raw_log_std = self._raw(activations[-1])
        # обрізаний log-std не пропускає градієнт
        active = (raw_log_std > LOG_STD_MIN) & (raw_log_std < LOG_STD_MAX)
        d_log_std = np.where(active, d_log_std, 0.0)

        if self.state_dependent_std:
            upstream = np.concatenate([d_mean, d_log_std], axis=1)
            grads, _ = backward(self.net, states, upstream, activations)
            return flatten(grads)

        grads, _ = backward(self.net, states, d_mean, activations)
        return np.concatenate([flatten(grads), d_log_std.sum(axis=0)])

    def get_flat(self) -> np.ndarray:
        flat = flatten(self.net)
        return flat if self.state_dependent_std else np.concatenate([flat, self.log_std])

    def set_flat(self, flat: np.ndarray) -> None:
        n_net = self.net.num_parameters
        self.net = unflatten(self.net.layer_sizes, flat[:n_net])
        if not self.state_dependent_std:
            self.log_std = np.asarray(flat[n_net:], dtype=float).copy()

    def copy(self) -> "GaussianPolicy":
        return GaussianPolicy(self.net.copy(), self.action_dim, self.state_dependent_std, self.log_std)


class ValueNetwork:
    """V_ψ(x): оцінка суми майбутніх винагород"""

    def __init__(self, net: MlpParams):
        if net.output_size != 1:
            raise ShapeError("Мережа цінності має один вихід")
        self.net = net

    @classmethod
    def create(cls, state_dim: int, hidden_sizes: Sequence[int], rng: np.random.Generator) -> "ValueNetwork":
        return cls(init_mlp([state_dim, *hidden_sizes, 1], rng))

    @property
    def num_parameters(self) -> int:
        return self.net.num_parameters

    def predict(self, states: np.ndarray) -> np.ndarray:
        return forward(self.net, np.atleast_2d(states))[:, 0]

    def backward(self, states: np.ndarray, d_values: np.ndarray) -> np.ndarray:
        grads, _ = backward(self.net, np.atleast_2d(states), np.asarray(d_values, dtype=float)[:, None])
        return flatten(grads)

    def get_flat(self) -> np.ndarray:
        return flatten(self.net)

    def set_flat(self, flat: np.ndarray) -> None:
        self.net = unflatten(self.net.layer_sizes, flat)
