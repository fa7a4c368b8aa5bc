"""
Біноміальне дерево CRR для бермудського колу з виконанням лише на t1 та t2
"""

import numpy as np

from utils.errors import DomainError

DEFAULT_TREE_STEPS = 2000


def bermudan_lattice_price(
    spot: float,
    vol: float,
    maturity1: float,
    maturity2: float,
    k1: float,
    k2: float,
    n_steps: int = DEFAULT_TREE_STEPS,
) -> float:
    if not 0 < maturity1 < maturity2 or vol <= 0 or spot <= 0:
        raise DomainError("Потрібно 0 < T1 < T2, σ > 0, S0 > 0")

    dt = maturity2 / n_steps
    up = np.exp(vol * np.sqrt(dt))
    p = (1.0 - 1.0 / up) / (up - 1.0 / up)
    exercise_step = int(round(n_steps * maturity1 / maturity2))

    j = np.arange(n_steps + 1)
    values = np.maximum(spot * up ** (n_steps - 2 * j) - k2, 0.0)
    for i in range(n_steps - 1, -1, -1):
        values = p * values[:-1] + (1.0 - p) * values[1:]
        if i == exercise_step:
            nodes = spot * up ** (i - 2 * np.arange(i + 1))
            values = np.maximum(values, nodes - k1)
    return float(values[0])


def european_lattice_price(spot: float, vol: float, maturity: float, strike: float, n_steps: int = DEFAULT_TREE_STEPS) -> float:
    """Європейський кол на тому ж дереві (перевірка збіжності)"""

    dt = maturity / n_steps
    up = np.exp(vol * np.sqrt(dt))
    p = (1.0 - 1.0 / up) / (up - 1.0 / up)
    j = np.arange(n_steps + 1)
    values = np.maximum(spot * up ** (n_steps - 2 * j) - strike, 0.0)
    for _ in range(n_steps):
        values = p * values[:-1] + (1.0 - p) * values[1:]
    return float(values[0])
