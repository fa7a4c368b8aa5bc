"""
Спільні фікстури тестів
"""

import numpy as np
import pytest

from engine.state import SimConfig
from market.surface import MarketSurface
from services.schemas import TrainerConfig


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def flat_surface():
    return MarketSurface.flat(0.2)


@pytest.fixture
def equity_surface():
    return MarketSurface.equity_like()


@pytest.fixture
def tiny_sim():
    return SimConfig(n_paths=64, n_steps=6, n_runs=2, seed=7, t1=2, t2=5)


@pytest.fixture
def tiny_trainer():
    return TrainerConfig(
        n_basis=8,
        hidden_sizes=[8],
        sgd_epochs=2,
        value_epochs=1,
        max_iterations=2,
        checkpoint_every=100,
        convergence_window=2,
        smoothing=1,
    )
