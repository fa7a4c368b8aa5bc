"""
Допоміжні функції тестів
"""

import numpy as np


def finite_difference(loss, flat: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Центральні різниці скалярної функції плаского вектора"""
    grads = np.zeros_like(flat, dtype=float)
    for i in range(flat.size):
        bumped = np.array(flat, dtype=float)
        bumped[i] += h
        up = loss(bumped)
        bumped[i] -= 2 * h
        down = loss(bumped)
        grads[i] = (up - down) / (2 * h)
    return grads


def relative_error(a: np.ndarray, b: np.ndarray) -> float:
    """||a − b|| / (||a|| + ||b||)"""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a) + np.linalg.norm(b), 1e-12))
