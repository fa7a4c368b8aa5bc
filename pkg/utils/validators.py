"""
Валідатори даних
"""

from typing import Any

import numpy as np


def validate_non_negative(value: Any) -> bool:
    """Усі значення скінченні та невід'ємні"""
    arr = np.asarray(value, dtype=float)
    return bool(np.all(np.isfinite(arr)) and np.all(arr >= 0))


def validate_finite(value: Any) -> bool:
    """Усі значення скінченні"""
    return bool(np.all(np.isfinite(np.asarray(value, dtype=float))))


def validate_correlation(rho: Any) -> bool:
    """Кореляція в [-1, 1]"""
    arr = np.asarray(rho, dtype=float)
    return bool(np.all(np.isfinite(arr)) and np.all(np.abs(arr) <= 1.0))


def first_non_finite(value: Any) -> int:
    """Індекс першого нескінченного значення або -1"""
    arr = np.asarray(value, dtype=float).ravel()
    bad = np.flatnonzero(~np.isfinite(arr))
    return int(bad[0]) if bad.size else -1
