"""
Оптимізатор Adam над плоским вектором параметрів
"""

from dataclasses import dataclass

import numpy as np

from utils.errors import NumericError, ShapeError
from utils.validators import validate_finite


@dataclass
class AdamState:
    """Стан Adam: моменти, лічильник кроків та гіперпараметри"""
    learning_rate: float
    first_moment: np.ndarray
    second_moment: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def create(cls, num_parameters: int, learning_rate: float, **kwargs) -> "AdamState":
        return cls(
            learning_rate=float(learning_rate),
            first_moment=np.zeros(num_parameters),
            second_moment=np.zeros(num_parameters),
            **kwargs,
        )


def adam_step(state: AdamState, params: np.ndarray, grads: np.ndarray) -> np.ndarray:
    """Крок спуску Adam з корекцією зміщення; стан оновлюється на місці"""

    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape or params.shape != state.first_moment.shape:
        raise ShapeError(
            f"Розміри не збігаються: параметри {params.shape}, градієнти {grads.shape}, "
            f"моменти {state.first_moment.shape}"
        )
    if not validate_finite(grads):
        raise NumericError("Нескінченні градієнти, крок Adam пропущено")

    state.step += 1
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads
    state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads ** 2

    m_hat = state.first_moment / (1.0 - state.beta1 ** state.step)
    v_hat = state.second_moment / (1.0 - state.beta2 ** state.step)
    return params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.epsilon)
