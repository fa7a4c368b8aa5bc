"""
Сервіс реєстру запусків (SQLite)
"""

from typing import List, Optional

import aiosqlite

from database.database import get_db_connection, init_db
from database.models import Experiment, ExperimentStatus, PricingReportRow, TrainingHistoryRow
from utils.decorators import async_retry
from utils.logger import setup_logger

logger = setup_logger()


def _real(value) -> float:
    return float("nan") if value is None else float(value)


class RegistryService:
    """Запис експериментів, історії навчання та звітів ціноутворення"""

    def __init__(self, path: Optional[str] = None):
        self.path = path

    async def init(self):
        await init_db(self.path)

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def create_experiment(self, experiment: Experiment) -> int:
        """Реєстрація нового запуску"""

        async with await get_db_connection(self.path) as db:
            cursor = await db.execute("""
                INSERT INTO experiments (name, kind, seed, state_mode, action_variant, config_json, output_dir, status)
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                experiment.name,
                experiment.kind,
                experiment.seed,
                experiment.state_mode,
                experiment.action_variant,
                experiment.config_json,
                experiment.output_dir,
                experiment.status.value,
            ))
            await db.commit()
            experiment.experiment_id = cursor.lastrowid
            logger.info(f"✅ Зареєстровано експеримент {experiment.experiment_id}: {experiment.name}")
            return experiment.experiment_id

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def finish_experiment(self, experiment_id: int, status: ExperimentStatus):
        async with await get_db_connection(self.path) as db:
            await db.execute("""
                UPDATE experiments SET status = ?, finished_at = CURRENT_TIMESTAMP
                WHERE experiment_id = ?
            """, (status.value, experiment_id))
            await db.commit()

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def record_iteration(self, row: TrainingHistoryRow):
        async with await get_db_connection(self.path) as db:
            await db.execute("""
                INSERT INTO training_history (
                    experiment_id, iteration, game_value, game_value_se, kl,
                    clip_fraction, policy_loss, value_loss, switch_value, wallclock_s
                )
                VALUES (?, ?, ?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                row.experiment_id, row.iteration, row.game_value, row.game_value_se, row.kl,
                row.clip_fraction, row.policy_loss, row.value_loss, row.switch_value, row.wallclock_s,
            ))
            await db.commit()

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def record_pricing(self, row: PricingReportRow):
        async with await get_db_connection(self.path) as db:
            await db.execute("""
                INSERT INTO pricing_reports (
                    experiment_id, seed, bermudan, eu1, eu2, max_eu, switch_value_volpts, se_bermudan
                )
                VALUES (?, ?, ?, ?, ?, ?, ?, ?)
            """, (
                row.experiment_id, row.seed, row.bermudan, row.eu1, row.eu2,
                row.max_eu, row.switch_value_volpts, row.se_bermudan,
            ))
            await db.commit()

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def get_experiment(self, experiment_id: int) -> Optional[Experiment]:
        """Отримання запуску за id"""

        async with await get_db_connection(self.path) as db:
            cursor = await db.execute("""
                SELECT experiment_id, name, kind, seed, state_mode, action_variant, config_json, output_dir, status
                FROM experiments WHERE experiment_id = ?
            """, (experiment_id,))
            row = await cursor.fetchone()

        if not row:
            return None
        return Experiment(
            experiment_id=row[0],
            name=row[1],
            kind=row[2],
            seed=row[3],
            state_mode=row[4],
            action_variant=row[5],
            config_json=row[6],
            output_dir=row[7],
            status=ExperimentStatus(row[8]),
        )

    @async_retry(max_attempts=3, delay=0.1, exceptions=(aiosqlite.Error,))
    async def get_history(self, experiment_id: int) -> List[TrainingHistoryRow]:
        """Історія навчання у порядку ітерацій"""

        async with await get_db_connection(self.path) as db:
            cursor = await db.execute("""
                SELECT history_id, iteration, game_value, game_value_se, kl, clip_fraction,
                       policy_loss, value_loss, switch_value, wallclock_s
                FROM training_history WHERE experiment_id = ?
                ORDER BY iteration
            """, (experiment_id,))
            rows = await cursor.fetchall()

        return [
            TrainingHistoryRow(
                experiment_id=experiment_id,
                iteration=row[1],
                game_value=_real(row[2]),
                game_value_se=_real(row[3]),
                kl=_real(row[4]),
                clip_fraction=_real(row[5]),
                policy_loss=_real(row[6]),
                value_loss=_real(row[7]),
                switch_value=_real(row[8]),
                wallclock_s=_real(row[9]),
                history_id=row[0],
            )
            for row in rows
        ]
