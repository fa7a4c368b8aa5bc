"""
Генератор шумів, ключований координатами (потік, ітерація, прогін, крок)

Кожен блок нормальних величин залежить лише від своїх координат, тому додавання
базисних гравців чи зміна кількості воркерів не змінює шум спота.
"""

from enum import IntEnum

import numpy as np


class NoiseStream(IntEnum):
    """Незалежні потоки шуму"""
    SPOT = 0
    VOL_PERP = 1
    VOL_SAMPLE = 2
    EXPLORATION = 3
    BASIS = 4


class NoiseGenerator:
    """Детермінований шум за координатами"""

    def __init__(self, seed: int):
        self.seed = int(seed)

    def rng(self, stream: NoiseStream, iteration: int, run: int, step: int) -> np.random.Generator:
        # step = -1 зарезервовано під шум спота «до нульового кроку»
        key = (int(stream), int(iteration), int(run), int(step) + 1)
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=key))

    def normals(self, stream: NoiseStream, iteration: int, run: int, step: int, size) -> np.ndarray:
        return self.rng(stream, iteration, run, step).standard_normal(size)
