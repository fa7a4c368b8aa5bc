"""
Моделі даних реєстру запусків
"""

from dataclasses import dataclass
from datetime import datetime
from enum import Enum
from typing import Optional


class ExperimentStatus(Enum):
    """Стан запуску"""
    RUNNING = "running"
    COMPLETED = "completed"
    FAILED = "failed"


@dataclass
class Experiment:
    """Модель експерименту"""
    experiment_id: Optional[int] = None
    name: str = ""
    kind: str = ""
    seed: int = 0
    state_mode: str = ""
    action_variant: str = ""
    config_json: Optional[str] = None
    output_dir: Optional[str] = None
    status: ExperimentStatus = ExperimentStatus.RUNNING
    started_at: Optional[datetime] = None
    finished_at: Optional[datetime] = None


@dataclass
class TrainingHistoryRow:
    """Рядок історії навчання"""
    experiment_id: int
    iteration: int
    game_value: float
    game_value_se: float
    kl: float
    clip_fraction: float
    policy_loss: float
    value_loss: float
    switch_value: float
    wallclock_s: float
    history_id: Optional[int] = None


@dataclass
class PricingReportRow:
    """Звіт ціноутворення бермудського опціону"""
    experiment_id: int
    seed: int
    bermudan: float
    eu1: float
    eu2: float
    max_eu: float
    switch_value_volpts: float
    se_bermudan: float
    report_id: Optional[int] = None
