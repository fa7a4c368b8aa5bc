"""
Бінарний дамп шляхів для офлайн-аналізу

Формат: заголовок int64[3] = (B, n, T), далі float64 у порядку рядків:
споти (B, n, T+1), потім волатильності (B, n, T).
"""

from typing import Tuple

import numpy as np

from engine.simulator import EpisodePaths
from utils.errors import ArtifactError
from utils.io import write_atomic


def write_path_dump(path: str, paths: EpisodePaths) -> str:
    B, n, steps = paths.vols.shape
    header = np.array([B, n, steps], dtype=np.int64)

    def _write(tmp_path: str) -> None:
        with open(tmp_path, "wb") as handle:
            header.tofile(handle)
            np.ascontiguousarray(paths.spots, dtype=np.float64).tofile(handle)
            np.ascontiguousarray(paths.vols, dtype=np.float64).tofile(handle)

    return write_atomic(path, _write)


def read_path_dump(path: str) -> Tuple[np.ndarray, np.ndarray]:
    try:
        with open(path, "rb") as handle:
            B, n, steps = (int(v) for v in np.fromfile(handle, dtype=np.int64, count=3))
            spots = np.fromfile(handle, dtype=np.float64, count=B * n * (steps + 1)).reshape(B, n, steps + 1)
            vols = np.fromfile(handle, dtype=np.float64, count=B * n * steps).reshape(B, n, steps)
    except (OSError, ValueError) as e:
        raise ArtifactError(f"Не вдалося прочитати дамп {path}: {e}") from e
    return spots, vols
