"""
Щільна нейромережа фіксованої топології: tanh на прихованих шарах, тотожна активація на виході.

Ваги зберігаються як матриці (fan_in, fan_out), тому прямий прохід для пакета
станів X розміру (batch, fan_in) - це X @ W + b.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from utils.errors import NumericError, ShapeError
from utils.validators import validate_finite


@dataclass
class MlpParams:
    """Параметри MLP (θ політики або ψ функції цінності)"""
    layer_sizes: List[int]
    weights: List[np.ndarray]
    biases: List[np.ndarray]

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ShapeError(f"Потрібно щонайменше 2 шари, отримано {len(self.layer_sizes)}")
        if any(int(size) <= 0 for size in self.layer_sizes):
            raise ShapeError(f"Розміри шарів мають бути додатними: {self.layer_sizes}")
        if len(self.weights) != len(self.layer_sizes) - 1 or len(self.biases) != len(self.weights):
            raise ShapeError("Кількість матриць ваг не відповідає кількості шарів")

        for index, (fan_in, fan_out) in enumerate(zip(self.layer_sizes[:-1], self.layer_sizes[1:])):
            if self.weights[index].shape != (fan_in, fan_out):
                raise ShapeError(
                    f"Шар {index}: очікувалось {(fan_in, fan_out)}, отримано {self.weights[index].shape}"
                )
            if self.biases[index].shape != (fan_out,):
                raise ShapeError(f"Шар {index}: зсув має розмір {(fan_out,)}")
            if not (validate_finite(self.weights[index]) and validate_finite(self.biases[index])):
                raise NumericError(f"Шар {index}: нескінченні параметри")

    @property
    def input_size(self) -> int:
        return int(self.layer_sizes[0])

    @property
    def output_size(self) -> int:
        return int(self.layer_sizes[-1])

    @property
    def num_parameters(self) -> int:
        return int(sum(w.size + b.size for w, b in zip(self.weights, self.biases)))

    def copy(self) -> "MlpParams":
        return MlpParams(
            layer_sizes=list(self.layer_sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


def init_mlp(
    layer_sizes: Sequence[int],
    rng: np.random.Generator,
    output_scale: float = 1.0,
    zero: bool = False,
) -> MlpParams:
    """Ініціалізація: рівномірний розподіл з масштабом 1/sqrt(fan_in)"""

    sizes = [int(size) for size in layer_sizes]
    weights, biases = [], []
    for index, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
        if zero:
            weights.append(np.zeros((fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
            continue
        bound = 1.0 / np.sqrt(fan_in)
        weight = rng.uniform(-bound, bound, size=(fan_in, fan_out))
        bias = rng.uniform(-bound, bound, size=fan_out)
        if index == len(sizes) - 2:
            weight *= output_scale
            bias *= output_scale
        weights.append(weight)
        biases.append(bias)

    return MlpParams(layer_sizes=sizes, weights=weights, biases=biases)


def _as_batch(params: MlpParams, inputs: np.ndarray) -> Tuple[np.ndarray, bool]:
    x = np.asarray(inputs, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != params.input_size:
        raise ShapeError(f"Очікувався вхід довжини {params.input_size}, отримано {np.shape(inputs)}")
    return x, single


def forward_cache(params: MlpParams, inputs: np.ndarray) -> List[np.ndarray]:
    """Прямий прохід зі збереженням активацій усіх шарів"""

    x, _ = _as_batch(params, inputs)
    activations = [x]
    last = len(params.weights) - 1
    for index, (weight, bias) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ weight + bias
        activations.append(z if index == last else np.tanh(z))
    return activations


def forward(params: MlpParams, inputs: np.ndarray) -> np.ndarray:
    """Прямий прохід; для вектора повертає вектор, для пакета - матрицю"""

    _, single = _as_batch(params, inputs)
    output = forward_cache(params, inputs)[-1]
    return output[0] if single else output


def backward(
    params: MlpParams,
    inputs: np.ndarray,
    upstream_grad: np.ndarray,
    activations: Optional[List[np.ndarray]] = None,
) -> Tuple[MlpParams, np.ndarray]:
    """
    Зворотний прохід для фіксованої топології.

    upstream_grad - похідна скалярної втрати за виходом мережі (той самий розмір,
    що й вихід). Градієнти параметрів підсумовуються по пакету.
    """

    x, single = _as_batch(params, inputs)
    if activations is None:
        activations = forward_cache(params, x)
    if not all(validate_finite(a) for a in activations):
        raise NumericError("Нескінченні активації у прямому проході")

    delta = np.asarray(upstream_grad, dtype=float)
    if delta.ndim == 1:
        delta = delta[None, :]
    if delta.shape != activations[-1].shape:
        raise ShapeError(f"Градієнт виходу має розмір {delta.shape}, очікувалось {activations[-1].shape}")

    n_layers = len(params.weights)
    grad_weights: List[np.ndarray] = [np.empty(0)] * n_layers
    grad_biases: List[np.ndarray] = [np.empty(0)] * n_layers
    for index in range(n_layers - 1, -1, -1):
        grad_weights[index] = activations[index].T @ delta
        grad_biases[index] = delta.sum(axis=0)
        delta = delta @ params.weights[index].T
        if index > 0:
            delta = delta * (1.0 - activations[index] ** 2)

    grads = MlpParams(layer_sizes=list(params.layer_sizes), weights=grad_weights, biases=grad_biases)
    return grads, (delta[0] if single else delta)


def flatten(params: MlpParams) -> np.ndarray:
    """Плаский вектор параметрів (ваги та зсуви пошарово)"""
    chunks = []
    for weight, bias in zip(params.weights, params.biases):
        chunks.append(weight.ravel())
        chunks.append(bias.ravel())
    return np.concatenate(chunks)


def unflatten(layer_sizes: Sequence[int], flat: np.ndarray) -> MlpParams:
    """Відновлення параметрів з плаского вектора"""

    sizes = [int(size) for size in layer_sizes]
    flat = np.asarray(flat, dtype=float)
    expected = sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))
    if flat.size != expected:
        raise ShapeError(f"Очікувалось {expected} параметрів, отримано {flat.size}")

    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[offset:offset + fan_in * fan_out].reshape(fan_in, fan_out).copy())
        offset += fan_in * fan_out
        biases.append(flat[offset:offset + fan_out].copy())
        offset += fan_out
    return MlpParams(layer_sizes=sizes, weights=weights, biases=biases)
