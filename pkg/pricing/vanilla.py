"""
Монте-Карло ціна ванільного колу
"""

from typing import Tuple

import numpy as np

from utils.errors import DomainError


def mc_vanilla_price(spots: np.ndarray, strike: float) -> Tuple[float, float]:
    """Середнє (S−k)+ та його стандартна похибка"""

    spots = np.asarray(spots, dtype=float).ravel()
    if spots.size < 2:
        raise DomainError("mc_vanilla_price: потрібно щонайменше 2 траєкторії")
    # сортування робить суму незалежною від порядку траєкторій
    payoff = np.sort(np.maximum(spots - strike, 0.0))
    return float(payoff.mean()), float(payoff.std(ddof=1) / np.sqrt(payoff.size))
