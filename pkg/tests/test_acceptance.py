"""
Довгі перевірки якості калібрування (запуск: pytest -m slow)
"""

import asyncio
import os

import numpy as np
import pandas as pd
import pytest

from engine.simulator import constant_vol_callback, simulate_episode
from engine.state import SimConfig, StateMode
from game.specs import BermudanSpec
from market.black_scholes import bs_vega, implied_vol
from network.optimizer import AdamState
from network.policy import GaussianPolicy
from pricing.bermudan import bermudan_price
from pricing.lattice import bermudan_lattice_price
from pricing.vanilla import mc_vanilla_price
from services.exploration_service import basis_actions
from services.experiment_service import Overrides, apply_overrides, run_calibrate_bermudan, run_calibrate_vanilla, run_evaluate
from services.policy_update_service import RolloutBuffer, normalize, ppo_update
from services.report_service import heatmap_monotonicity
from services.schemas import ExperimentConfig, TrainerConfig

pytestmark = pytest.mark.slow

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")
BERMUDAN_SEEDS = range(5)
BERMUDAN_SCALE = 5
BERMUDAN_ITERATIONS = 150


def _load(name, tmp_path, **overrides):
    experiment = ExperimentConfig.load(os.path.join(CONFIG_DIR, name))
    return apply_overrides(experiment, Overrides(out=str(tmp_path), **overrides))


def _with_iterations(experiment, iterations):
    return experiment.model_copy(update={"trainer": experiment.trainer.model_copy(update={"max_iterations": iterations})})


@pytest.fixture(scope="module")
def event_loop():
    loop = asyncio.new_event_loop()
    yield loop
    loop.close()


@pytest.fixture(scope="module")
async def bermudan_runs(tmp_path_factory):
    """Однакові бюджети для обох режимів стану, 5 зерен"""

    runs = {}
    for mode in (StateMode.PATH_DEPENDENT, StateMode.PLAIN):
        for seed in BERMUDAN_SEEDS:
            out = tmp_path_factory.mktemp(f"{mode.value}_{seed}")
            experiment = _load("bermudan.json", out, seed=seed, state_mode=mode, scale=BERMUDAN_SCALE)
            runs[mode, seed] = await run_calibrate_bermudan(_with_iterations(experiment, BERMUDAN_ITERATIONS))
    return runs


def _switch_history(summary):
    return pd.read_csv(summary.artifacts["switch_value"])


def _constant_vol_paths(n_paths, seed):
    config = SimConfig(n_paths=n_paths, n_steps=51, n_runs=1, seed=seed, t1=21, t2=51)
    return config, simulate_episode(config, constant_vol_callback(0.2), StateMode.PLAIN).spots[0]


def test_constant_vol_is_martingale_and_reprices_atm():
    config, spots = _constant_vol_paths(200_000, seed=1)
    terminal = spots[:, -1]
    se = terminal.std(ddof=1) / np.sqrt(terminal.size)
    assert abs(terminal.mean() - config.spot0) < 4 * se

    maturity = config.n_steps * config.dt
    price, price_se = mc_vanilla_price(terminal, 1.0)
    vol = implied_vol(price, 1.0, 1.0, maturity)
    vol_se = price_se / bs_vega(1.0, 1.0, maturity, vol)
    assert abs(vol - 0.2) < 3 * vol_se


def test_standard_error_shrinks_with_more_paths():
    _, small = _constant_vol_paths(20_000, seed=2)
    _, large = _constant_vol_paths(40_000, seed=3)
    _, small_se = mc_vanilla_price(small[:, -1], 1.0)
    _, large_se = mc_vanilla_price(large[:, -1], 1.0)
    assert small_se / large_se == pytest.approx(np.sqrt(2.0), rel=0.2)


def test_bermudan_dominates_max_european_over_seeds():
    spec = BermudanSpec(t1=21, t2=51, k1=1.0, k2=1.012)
    oracle = bermudan_lattice_price(1.0, 0.2, spec.maturity1, spec.maturity2, spec.k1, spec.k2)
    for seed in range(20):
        _, spots = _constant_vol_paths(50_000, seed=100 + seed)
        result = bermudan_price(spots, spec)
        assert result.bermudan >= result.max_eu - 3 * result.bermudan_se, f"seed {seed}"
        assert abs(result.bermudan - oracle) < 3 * result.bermudan_se, f"seed {seed}"


def test_ppo_bandit_reaches_optimum():
    rng = np.random.default_rng(8)
    policy = GaussianPolicy.create(1, 1, [8], rng, state_dependent_std=False, init_log_std=0.0)
    trainer = TrainerConfig(learning_rate=1e-2, sgd_epochs=10, minibatch_fraction=0.25, clip=0.2, kl_coef=0.2)
    optimizer = AdamState.create(policy.num_parameters, trainer.learning_rate)
    states = np.ones((256, 1))
    kl_coef = trainer.kl_coef
    for _ in range(200):
        sampled = basis_actions(policy, states, rng)
        buffer = RolloutBuffer(1, 1)
        buffer.add(0, 0, np.arange(256), states, sampled.actions, sampled.noises, sampled.log_probs, sampled.head)
        buffer.finalize()
        buffer.advantages = normalize(-(buffer.actions[:, 0] - 2.0) ** 2)
        kl_coef = ppo_update(policy, buffer, trainer, optimizer, rng, kl_coef).kl_coef
    assert policy.head(np.ones((1, 1))).mean[0, 0] == pytest.approx(2.0, abs=0.1)


async def test_flat_smile_calibration(tmp_path):
    summary = await run_calibrate_vanilla(_load("vanilla_flat_desk.json", tmp_path))
    assert summary.metrics["max_abs_error_volpts"] < 0.5


async def test_skewed_smile_calibration(tmp_path):
    summary = await run_calibrate_vanilla(_load("vanilla_skew.json", tmp_path))
    assert summary.metrics["rmse_volpts"] < 1.0


async def test_evaluation_reproduces_training_game_value(tmp_path):
    experiment = _load("vanilla_flat_desk.json", tmp_path, scale=2)
    experiment = _with_iterations(experiment, 20)
    trained = await run_calibrate_vanilla(experiment)
    evaluated = await run_evaluate(trained.artifacts["checkpoint"], experiment)
    pooled_se = np.hypot(trained.game_value_se, evaluated.game_value_se)
    assert abs(evaluated.game_value - trained.game_value) < 2 * pooled_se


def test_path_dependent_state_lowers_switch_value(bermudan_runs):
    final = {mode: [] for mode in (StateMode.PATH_DEPENDENT, StateMode.PLAIN)}
    initial = []
    for (mode, seed), summary in bermudan_runs.items():
        history = _switch_history(summary)
        final[mode].append(history["switch_value"].tail(10).mean())
        if mode == StateMode.PATH_DEPENDENT:
            initial.append(history["switch_value"].iloc[0])

    path_dependent = np.asarray(final[StateMode.PATH_DEPENDENT])
    plain = np.asarray(final[StateMode.PLAIN])
    pooled_se = np.hypot(path_dependent.std(ddof=1), plain.std(ddof=1)) / np.sqrt(len(BERMUDAN_SEEDS))
    assert plain.mean() - path_dependent.mean() > 2 * pooled_se
    assert path_dependent.mean() <= 0.7 * np.nanmean(initial)


def test_learned_vol_is_monotone_in_both_spots(bermudan_runs):
    for seed in BERMUDAN_SEEDS:
        summary = bermudan_runs[StateMode.PATH_DEPENDENT, seed]
        heatmap = pd.read_csv(summary.artifacts["heatmap"])
        assert heatmap["bin_s1"].nunique() >= 10
        monotonicity = heatmap_monotonicity(heatmap)
        assert monotonicity["spearman_s1"] == pytest.approx(summary.metrics["spearman_s1"])
        assert monotonicity["spearman_s1"] > 0.5, f"seed {seed}"
        assert monotonicity["spearman_st"] < -0.3, f"seed {seed}"
