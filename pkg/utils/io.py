"""
Атомарний запис артефактів (тимчасовий файл + перейменування)
"""

import os
import tempfile
from typing import Callable

import pandas as pd

from utils.errors import ArtifactError


def write_atomic(path: str, writer: Callable[[str], None]) -> str:
    """Виклик writer(tmp_path) і перейменування у path; обірваний запис не залишає файлів"""

    directory = os.path.dirname(os.path.abspath(path))
    tmp_path = None
    try:
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
        os.close(fd)
        writer(tmp_path)
        os.replace(tmp_path, path)
    except OSError as e:
        if tmp_path and os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise ArtifactError(f"Не вдалося записати {path}: {e}") from e
    return path


def write_csv_atomic(frame: pd.DataFrame, path: str) -> str:
    """CSV без індексу"""
    return write_atomic(path, lambda tmp: frame.to_csv(tmp, index=False))
