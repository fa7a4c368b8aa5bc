"""
Конфігурація MARLVol
"""

import os
from dataclasses import dataclass
from dotenv import load_dotenv

load_dotenv()

_LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


@dataclass
class Config:
    """Клас конфігурації процесу"""

    # Логування
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")
    LOG_DIR: str = os.getenv("LOG_DIR", "logs")

    # Паралельні прогони (B runs)
    MARLVOL_THREADS: int = int(os.getenv("MARLVOL_THREADS", str(os.cpu_count() or 1)))

    # Артефакти та реєстр запусків
    OUTPUT_DIR: str = os.getenv("OUTPUT_DIR", "./outputs")
    DATABASE_PATH: str = os.getenv("DATABASE_PATH", "./marlvol_runs.db")

    # Навчання
    REWARD_SCALE: float = float(os.getenv("REWARD_SCALE", "1e4"))
    CHECKPOINT_EVERY: int = int(os.getenv("CHECKPOINT_EVERY", "50"))

    def __post_init__(self):
        self.LOG_LEVEL = self.LOG_LEVEL.upper()
        if self.LOG_LEVEL not in _LOG_LEVELS:
            raise ValueError(f"LOG_LEVEL має бути одним з {_LOG_LEVELS}, отримано {self.LOG_LEVEL}")
        if self.MARLVOL_THREADS < 1:
            raise ValueError("MARLVOL_THREADS має бути >= 1")
        if self.REWARD_SCALE <= 0:
            raise ValueError("REWARD_SCALE має бути додатним")
        if self.CHECKPOINT_EVERY < 1:
            raise ValueError("CHECKPOINT_EVERY має бути >= 1")


config = Config()
