"""
Ієрархія помилок MARLVol

Кожен клас несе код виходу, який CLI повертає процесу.
"""

from typing import Optional, Tuple


class MarlVolError(Exception):
    """Базова помилка"""
    exit_code = 1


class ConfigError(MarlVolError):
    """Невалідна конфігурація або файл поверхні"""
    exit_code = 2


class NumericError(MarlVolError):
    """Чисельна помилка (нескінченні значення, розбіжність)"""
    exit_code = 3


class ShapeError(NumericError):
    """Невідповідність розмірностей"""


class DomainError(NumericError):
    """Аргумент поза областю визначення"""


class ImpliedVolError(NumericError):
    """Ціна поза безарбітражною смугою"""

    def __init__(self, message: str, band: Tuple[float, float]):
        super().__init__(f"{message} (смуга: [{band[0]:.12g}, {band[1]:.12g}))")
        self.band = band


class ArbitrageError(NumericError):
    """Порушення безарбітражності поверхні"""

    def __init__(self, message: str, t: float, y: Optional[float] = None):
        location = f"t={t:.6g}" if y is None else f"t={t:.6g}, y={y:.6g}"
        super().__init__(f"{message} у точці {location}")
        self.t = t
        self.y = y


class EstimationError(NumericError):
    """Неможливо оцінити умовне сподівання"""


class RewardError(NumericError):
    """Помилка обчислення винагороди"""


class ArtifactError(MarlVolError):
    """Помилка запису артефактів"""
    exit_code = 4
