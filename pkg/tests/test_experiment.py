"""
Тести сервісу експериментів та звітів
"""

import numpy as np
import pandas as pd
import pytest

from engine.dynamics import ActionVariant
from engine.simulator import constant_vol_callback, simulate_episode
from engine.state import SimConfig, StateMode
from game.specs import BermudanSpec
from market.black_scholes import bs_call_price, implied_vol
from market.surface import MarketSurface, VanillaQuote
from services.experiment_service import (
    Overrides,
    apply_overrides,
    bermudan_spec,
    bermudan_target,
    build_reward_spec,
    make_surface,
)
from services.report_service import (
    HISTORY_COLUMNS,
    ReportService,
    heatmap_monotonicity,
    sanity_quotes,
    smile_table,
    volatility_heatmap,
)
from services.schemas import ExperimentConfig, ExperimentKind
from utils.errors import ConfigError


@pytest.fixture
def surface_file(tmp_path):
    return make_surface(str(tmp_path / "flat.json"), kind="flat", flat_vol=0.2)


@pytest.fixture
def vanilla_experiment(surface_file):
    return ExperimentConfig(
        kind=ExperimentKind.VANILLA,
        surface=surface_file,
        sim=SimConfig(n_paths=64, n_steps=6, n_runs=4, t1=2, t2=5),
        trainer={"n_basis": 8, "state_mode": "local"},
        targets={"maturities_days": [3, 6], "strikes": [0.98, 1.0, 1.02]},
    )


def test_scale_divides_paths_and_runs_only(vanilla_experiment):
    scaled = apply_overrides(vanilla_experiment, Overrides(scale=4, seed=11))
    assert scaled.sim.n_paths == 16
    assert scaled.sim.n_runs == 1
    assert scaled.sim.seed == 11
    assert scaled.trainer.n_basis == 8
    assert vanilla_experiment.sim.n_paths == 64


def test_scale_keeps_enough_paths_for_basis(vanilla_experiment):
    assert apply_overrides(vanilla_experiment, Overrides(scale=100)).sim.n_paths == 8
    with pytest.raises(ConfigError):
        apply_overrides(vanilla_experiment, Overrides(scale=0))


def test_flags_override_trainer_and_output(vanilla_experiment, tmp_path):
    updated = apply_overrides(vanilla_experiment, Overrides(
        state_mode=StateMode.PLAIN,
        action_variant=ActionVariant.SDE,
        out=str(tmp_path / "runs"),
        shaping=True,
    ))
    assert updated.trainer.state_mode == StateMode.PLAIN
    assert updated.trainer.action_variant == ActionVariant.SDE
    assert updated.run_dir == str(tmp_path / "runs" / "experiment")
    assert updated.bermudan is None


def test_bermudan_defaults_enable_localization(surface_file):
    experiment = ExperimentConfig(kind="bermudan", surface=surface_file, sim={"n_steps": 51, "t1": 21, "t2": 51})
    assert experiment.trainer.localize
    assert experiment.bermudan.k2 == 1.012
    explicit = ExperimentConfig(kind="bermudan", surface=surface_file, trainer={"localize": False})
    assert not explicit.trainer.localize
    shaped = apply_overrides(experiment, Overrides(shaping=True))
    assert shaped.bermudan.shaping


def test_experiment_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(tmp_path / "missing.json"))
    broken = tmp_path / "broken.json"
    broken.write_text('{"kind": "vanilla", "surface": "x.json", "sim": {"n_paths": 1}}')
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(broken))
    no_surface = tmp_path / "no_surface.json"
    no_surface.write_text('{"kind": "vanilla", "surface": "nowhere.json"}')
    with pytest.raises(ConfigError):
        ExperimentConfig.load(str(no_surface))


def test_relative_surface_path_resolves_from_config_dir(tmp_path, surface_file):
    config_path = tmp_path / "experiment.json"
    config_path.write_text('{"kind": "vanilla", "surface": "flat.json"}')
    assert ExperimentConfig.load(str(config_path)).surface == surface_file


def test_bermudan_target_is_max_european_vol_on_flat_surface():
    spec = BermudanSpec(t1=21, t2=51, k1=1.0, k2=1.012)
    flat = MarketSurface.flat(0.2)
    target = bermudan_target(flat, spec)
    price1 = bs_call_price(1.0, 1.0, spec.maturity1, 0.2)
    price2 = bs_call_price(1.0, 1.012, spec.maturity2, 0.2)
    assert target == pytest.approx(implied_vol(max(price1, price2), 1.0, 1.012, spec.maturity2))
    assert target >= 0.2 - 1e-9


def test_reward_spec_for_each_kind(vanilla_experiment, surface_file):
    surface = MarketSurface.from_file(surface_file)
    vanilla = build_reward_spec(vanilla_experiment, surface)
    assert len(vanilla.quotes) == 6
    assert vanilla.bermudan is None

    bermudan = ExperimentConfig(kind="bermudan", surface=surface_file, sim={"n_steps": 51, "t1": 21, "t2": 51, "spot0": 2.0})
    spec = bermudan_spec(bermudan)
    assert spec.k2 == pytest.approx(2.024)
    reward_spec = build_reward_spec(bermudan, surface)
    assert reward_spec.bermudan_target > 0


def test_make_surface_kinds(tmp_path):
    equity = MarketSurface.from_file(make_surface(str(tmp_path / "eq.json"), kind="equity"))
    assert len(equity.pillars) == 2
    with pytest.raises(ConfigError):
        make_surface(str(tmp_path / "bad.json"), kind="sticky")


def test_smile_table_pools_runs():
    config = SimConfig(n_paths=5000, n_steps=6, n_runs=2, seed=1, t1=2, t2=5)
    paths = simulate_episode(config, constant_vol_callback(0.2), StateMode.LOCAL)
    quotes = [VanillaQuote(t_days=6, strike=k, target_vol=0.2) for k in (0.98, 1.0, 1.02)]
    table = smile_table(paths.spots, quotes)
    assert list(table.columns) == ["t_days", "strike", "model_iv", "target_iv", "error", "price", "price_se", "at_edge"]
    assert table["error"].abs().max() < 0.02
    assert not table["at_edge"].any()


def test_sanity_quotes_sit_on_exercise_dates(equity_surface):
    spec = BermudanSpec(t1=21, t2=51)
    quotes = sanity_quotes(equity_surface, spec, [0.95, 1.0, 1.05])
    assert [q.t_days for q in quotes] == [21] * 3 + [51] * 3
    assert quotes[1].target_vol == pytest.approx(0.14)


def test_heatmap_detects_increasing_vol():
    rng = np.random.default_rng(2)
    n, steps = 2000, 6
    spots = np.exp(np.cumsum(rng.normal(scale=0.01, size=(1, n, steps + 1)), axis=2))
    raw = np.broadcast_to(0.2 + 2.0 * np.log(spots[:, :, 2:3]), (1, n, steps)).copy()
    heatmap = volatility_heatmap(spots, raw, raw, t1=2, t2=5)
    assert heatmap["count"].sum() == n * 2
    metrics = heatmap_monotonicity(heatmap)
    assert metrics["spearman_s1"] == pytest.approx(1.0)


def test_heatmap_without_inner_steps_is_empty():
    spots = np.ones((1, 10, 4))
    vols = np.full((1, 10, 3), 0.2)
    assert volatility_heatmap(spots, vols, vols, t1=2, t2=3).empty


def test_history_csv_has_fixed_columns(tmp_path):
    reports = ReportService(str(tmp_path / "run"))
    row = {column: 0.0 for column in HISTORY_COLUMNS}
    path = reports.write_history([row, {**row, "iteration": 1}])
    frame = pd.read_csv(path)
    assert list(frame.columns) == HISTORY_COLUMNS
    assert len(frame) == 2
    switch = pd.read_csv(reports.write_switch_values([row]))
    assert list(switch.columns) == ["iteration", "switch_value", "game_value"]


def test_registry_history_csv_keeps_columns_when_empty(tmp_path):
    reports = ReportService(str(tmp_path / "run"))
    frame = pd.read_csv(reports.write_registry_history([]))
    assert frame.empty
    assert "iteration" in frame.columns and "switch_value" in frame.columns
