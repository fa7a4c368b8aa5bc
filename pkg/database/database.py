"""
Підключення та ініціалізація реєстру запусків SQLite
"""

import os
from typing import Optional

import aiosqlite

from config import config
from utils.logger import setup_logger

logger = setup_logger()


async def init_db(path: Optional[str] = None):
    """Ініціалізація бази даних"""
    path = path or config.DATABASE_PATH
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        async with aiosqlite.connect(path) as db:
            # Таблиця експериментів
            await db.execute("""
                CREATE TABLE IF NOT EXISTS experiments (
                    experiment_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    name TEXT NOT NULL,
                    kind TEXT NOT NULL,
                    seed INTEGER NOT NULL,
                    state_mode TEXT NOT NULL,
                    action_variant TEXT NOT NULL,
                    config_json TEXT,
                    output_dir TEXT,
                    status TEXT DEFAULT 'running',
                    started_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    finished_at TIMESTAMP
                )
            """)

            # Історія навчання по ітераціях
            await db.execute("""
                CREATE TABLE IF NOT EXISTS training_history (
                    history_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    experiment_id INTEGER,
                    iteration INTEGER NOT NULL,
                    game_value REAL,
                    game_value_se REAL,
                    kl REAL,
                    clip_fraction REAL,
                    policy_loss REAL,
                    value_loss REAL,
                    switch_value REAL,
                    wallclock_s REAL,
                    FOREIGN KEY (experiment_id) REFERENCES experiments(experiment_id)
                )
            """)

            # Звіти ціноутворення
            await db.execute("""
                CREATE TABLE IF NOT EXISTS pricing_reports (
                    report_id INTEGER PRIMARY KEY AUTOINCREMENT,
                    experiment_id INTEGER,
                    seed INTEGER NOT NULL,
                    bermudan REAL,
                    eu1 REAL,
                    eu2 REAL,
                    max_eu REAL,
                    switch_value_volpts REAL,
                    se_bermudan REAL,
                    created_at TIMESTAMP DEFAULT CURRENT_TIMESTAMP,
                    FOREIGN KEY (experiment_id) REFERENCES experiments(experiment_id)
                )
            """)

            await db.execute("CREATE INDEX IF NOT EXISTS idx_history_experiment ON training_history(experiment_id)")
            await db.execute("CREATE INDEX IF NOT EXISTS idx_reports_experiment ON pricing_reports(experiment_id)")

            await db.commit()
            logger.info("✅ Реєстр запусків ініціалізовано")

    except Exception as e:
        logger.error(f"❌ Помилка ініціалізації БД: {e}")
        raise


async def get_db_connection(path: Optional[str] = None):
    """Отримати підключення до БД"""
    return aiosqlite.connect(path or config.DATABASE_PATH)
