"""
Тести базисних гравців та інтерполяції шуму дослідження
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from network.policy import GaussianPolicy
from services.exploration_service import (
    ExplorationField,
    InterpolationMode,
    basis_actions,
    interpolate_exploration,
    pick_basis_players,
)
from utils.errors import ConfigError, ShapeError


def _square_basis(rng, m=40):
    corners = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    return np.vstack([corners, rng.uniform(0.0, 1.0, size=(m - 4, 2))])


@settings(max_examples=200, deadline=None)
@given(n=st.integers(1, 500), data=st.data())
def test_basis_players_are_distinct_and_sorted(n, data):
    n_p = data.draw(st.integers(1, n))
    seed = data.draw(st.integers(0, 2**32 - 1))
    basis = pick_basis_players(n, n_p, np.random.default_rng(seed))
    assert basis.size == n_p
    assert np.unique(basis).size == n_p
    assert np.all(np.diff(basis) > 0)
    assert basis.min() >= 0 and basis.max() < n


def test_basis_count_is_validated():
    rng = np.random.default_rng(0)
    with pytest.raises(ConfigError):
        pick_basis_players(10, 0, rng)
    with pytest.raises(ConfigError):
        pick_basis_players(10, 11, rng)


def test_all_players_can_be_basis():
    np.testing.assert_array_equal(pick_basis_players(7, 7, np.random.default_rng(1)), np.arange(7))


def _random_geometry(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 5))
    m = int(rng.integers(dim + 2, 80))
    states = rng.normal(size=(m, dim)) @ rng.normal(size=(dim, dim)) * rng.uniform(0.01, 10.0)
    if dim > 1 and seed % 5 == 0:
        # колінеарний базис
        states = np.outer(rng.normal(size=m), rng.normal(size=dim)) + rng.normal(size=dim)
    return states, rng.normal(size=(m, 2))


@pytest.mark.parametrize("seed", range(100))
@pytest.mark.parametrize("mode", [InterpolationMode.LINEAR, InterpolationMode.KNN])
def test_basis_nodes_keep_their_noise(seed, mode):
    states, noises = _random_geometry(seed)
    m = states.shape[0]
    field = ExplorationField(t=3, run=0, basis_index=np.arange(m), basis_states=states, basis_noises=noises, mode=mode, k=1).fit()
    np.testing.assert_array_equal(field.interpolate(states), noises)


def test_linear_mode_reproduces_affine_noise(rng):
    states = _square_basis(rng)
    noises = 0.5 + 2.0 * states[:, 0] - states[:, 1]
    field = ExplorationField(t=1, run=0, basis_index=np.arange(40), basis_states=states, basis_noises=noises).fit()
    query = rng.uniform(0.05, 0.95, size=(200, 2))
    expected = 0.5 + 2.0 * query[:, 0] - query[:, 1]
    np.testing.assert_allclose(field.interpolate(query)[:, 0], expected, atol=1e-10)
    assert field.effective_mode == InterpolationMode.LINEAR


def test_points_outside_hull_take_nearest_noise(rng):
    states = _square_basis(rng)
    noises = rng.normal(size=40)
    field = ExplorationField(t=1, run=0, basis_index=np.arange(40), basis_states=states, basis_noises=noises).fit()
    value = field.interpolate(np.array([[5.0, 5.0]]))
    assert value[0, 0] == noises[3]


def test_knn_averages_neighbours():
    states = np.array([[0.0, 0.0], [1.0, 0.0], [10.0, 0.0], [0.0, 10.0]])
    noises = np.array([1.0, 3.0, 100.0, -100.0])
    field = ExplorationField(t=0, run=0, basis_index=np.arange(4), basis_states=states, basis_noises=noises,
                             mode=InterpolationMode.KNN, k=2).fit()
    assert field.interpolate(np.array([[0.5, 0.0]]))[0, 0] == pytest.approx(2.0)


def test_inverse_distance_weights_are_exact_at_nodes():
    states = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    noises = np.array([1.0, 2.0, 3.0, 4.0])
    field = ExplorationField(t=0, run=0, basis_index=np.arange(4), basis_states=states, basis_noises=noises,
                             mode=InterpolationMode.KNN, k=3, inverse_distance=True).fit()
    np.testing.assert_allclose(field.interpolate(states)[:, 0], noises)
    centre = field.interpolate(np.array([[0.5, 0.5]]))[0, 0]
    assert min(noises) < centre < max(noises)


def test_identical_basis_states_fall_back_to_mean(rng):
    states = np.tile([[0.3, -1.2]], (6, 1))
    noises = rng.normal(size=6)
    field = ExplorationField(t=2, run=1, basis_index=np.arange(6), basis_states=states, basis_noises=noises).fit()
    assert field.effective_mode == InterpolationMode.KNN
    np.testing.assert_allclose(field.interpolate(rng.normal(size=(5, 2)))[:, 0], noises.mean())


def test_collinear_basis_interpolates_along_the_line(rng):
    x = np.sort(rng.uniform(0.0, 1.0, size=12))
    states = np.column_stack([x, 2.0 * x + 1.0])
    field = ExplorationField(t=2, run=0, basis_index=np.arange(12), basis_states=states, basis_noises=3.0 * x).fit()
    query_x = np.linspace(x[0], x[-1], 25)
    values = field.interpolate(np.column_stack([query_x, 2.0 * query_x + 1.0]))
    np.testing.assert_allclose(values[:, 0], 3.0 * query_x, atol=1e-10)


def test_exploration_field_validation():
    with pytest.raises(ShapeError):
        ExplorationField(t=0, run=0, basis_index=np.arange(2), basis_states=np.zeros((2, 2)), basis_noises=np.zeros(3))
    with pytest.raises(ConfigError):
        ExplorationField(t=0, run=0, basis_index=np.arange(2), basis_states=np.zeros((2, 2)), basis_noises=np.zeros(2), k=0)


def test_interpolated_field_keeps_basis_noise_on_all_paths(rng):
    features = np.column_stack([np.full(100, 0.2), rng.normal(size=(100, 2))])
    basis = pick_basis_players(100, 20, rng)
    noises = rng.normal(size=(20, 1))
    field = ExplorationField(t=4, run=0, basis_index=basis, basis_states=features[basis, 1:], basis_noises=noises).fit()
    full = interpolate_exploration(field, features)
    assert full.shape == (100, 1)
    np.testing.assert_array_equal(full[basis], noises)
    assert np.all(np.isfinite(full))


def test_basis_actions_sample_the_policy_head(rng):
    policy = GaussianPolicy.create(3, 2, [6], rng, init_log_std=-1.0)
    states = rng.normal(size=(5, 3))
    noises = rng.normal(size=(5, 2))
    sampled = basis_actions(policy, states, noises=noises)
    head = policy.head(states)
    np.testing.assert_allclose(sampled.actions, head.mean + np.exp(head.log_std) * noises)
    assert sampled.log_probs.shape == (5,)
    with pytest.raises(ShapeError):
        basis_actions(policy, states)
    with pytest.raises(ShapeError):
        basis_actions(policy, states, noises=np.zeros((5, 3)))
