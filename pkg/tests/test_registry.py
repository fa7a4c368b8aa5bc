"""
Тести реєстру запусків SQLite
"""

import math

import pytest

from database.database import get_db_connection
from database.models import Experiment, ExperimentStatus, PricingReportRow, TrainingHistoryRow
from services.registry_service import RegistryService


@pytest.fixture
async def registry(tmp_path):
    service = RegistryService(str(tmp_path / "registry" / "runs.db"))
    await service.init()
    return service


def _history(experiment_id, iteration, switch_value=float("nan")):
    return TrainingHistoryRow(
        experiment_id=experiment_id,
        iteration=iteration,
        game_value=-1e-3 / (iteration + 1),
        game_value_se=1e-5,
        kl=0.01,
        clip_fraction=0.1,
        policy_loss=0.2,
        value_loss=0.3,
        switch_value=switch_value,
        wallclock_s=1.5,
    )


async def test_experiment_round_trip(registry):
    experiment = Experiment(name="flat", kind="vanilla", seed=7, state_mode="local", action_variant="lognormal", output_dir="out")
    experiment_id = await registry.create_experiment(experiment)
    assert experiment.experiment_id == experiment_id

    stored = await registry.get_experiment(experiment_id)
    assert stored.name == "flat"
    assert stored.seed == 7
    assert stored.status == ExperimentStatus.RUNNING

    await registry.finish_experiment(experiment_id, ExperimentStatus.COMPLETED)
    assert (await registry.get_experiment(experiment_id)).status == ExperimentStatus.COMPLETED


async def test_missing_experiment_is_none(registry):
    assert await registry.get_experiment(999) is None


async def test_history_is_ordered_and_keeps_nan(registry):
    experiment_id = await registry.create_experiment(Experiment(name="b", kind="bermudan", state_mode="path_dependent", action_variant="lognormal"))
    for iteration in (2, 0, 1):
        await registry.record_iteration(_history(experiment_id, iteration, switch_value=0.5 if iteration == 1 else float("nan")))

    history = await registry.get_history(experiment_id)
    assert [row.iteration for row in history] == [0, 1, 2]
    assert history[1].switch_value == 0.5
    assert math.isnan(history[0].switch_value)
    assert history[2].game_value == pytest.approx(-1e-3 / 3)


async def test_pricing_report_is_stored(registry):
    experiment_id = await registry.create_experiment(Experiment(name="b", kind="bermudan", state_mode="plain", action_variant="sde"))
    await registry.record_pricing(PricingReportRow(
        experiment_id=experiment_id, seed=3, bermudan=0.02, eu1=0.015, eu2=0.018,
        max_eu=0.018, switch_value_volpts=0.4, se_bermudan=1e-4,
    ))
    async with await get_db_connection(registry.path) as db:
        cursor = await db.execute("SELECT seed, bermudan, switch_value_volpts FROM pricing_reports WHERE experiment_id = ?", (experiment_id,))
        rows = await cursor.fetchall()
    assert rows == [(3, 0.02, 0.4)]
