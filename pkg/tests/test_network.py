"""
Тести нейромережевого ядра: прямий/зворотний прохід, гаусова голова, Adam, чекпоінти
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from network.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from network.distributions import (
    GaussianHead,
    gaussian_kl,
    gaussian_kl_grads,
    gaussian_log_prob,
    gaussian_log_prob_grads,
)
from network.mlp import MlpParams, backward, flatten, forward, init_mlp, unflatten
from network.optimizer import AdamState, adam_step
from network.policy import GaussianPolicy, ValueNetwork
from utils.errors import ConfigError, DomainError, NumericError, ShapeError

from .helpers import finite_difference, relative_error


def test_zero_network_maps_to_zero(rng):
    params = init_mlp([3, 5, 2], rng, zero=True)
    np.testing.assert_array_equal(forward(params, np.array([0.3, -1.0, 2.0])), np.zeros(2))


def test_single_identity_layer_is_identity():
    params = MlpParams(layer_sizes=[3, 3], weights=[np.eye(3)], biases=[np.zeros(3)])
    v = np.array([0.5, -0.25, 4.0])
    np.testing.assert_array_equal(forward(params, v), v)


def test_forward_matches_layer_by_layer_evaluation(rng):
    params = init_mlp([2, 3, 1], rng)
    x = np.array([0.5, -0.2])
    hidden = np.tanh(x @ params.weights[0] + params.biases[0])
    expected = hidden @ params.weights[1] + params.biases[1]
    np.testing.assert_allclose(forward(params, x), expected, rtol=0, atol=1e-15)


def test_forward_rejects_wrong_input_length(rng):
    params = init_mlp([2, 3, 1], rng)
    with pytest.raises(ShapeError):
        forward(params, np.ones(3))


def test_mlp_rejects_inconsistent_dimensions():
    with pytest.raises(ShapeError):
        MlpParams(layer_sizes=[2, 3], weights=[np.zeros((3, 2))], biases=[np.zeros(3)])
    with pytest.raises(ShapeError):
        MlpParams(layer_sizes=[2], weights=[], biases=[])


def test_forward_is_deterministic(rng):
    params = init_mlp([4, 8, 8, 2], rng)
    x = rng.normal(size=(5, 4))
    np.testing.assert_array_equal(forward(params, x), forward(params, x))


def test_zero_upstream_gives_zero_gradients(rng):
    params = init_mlp([3, 4, 2], rng)
    grads, _ = backward(params, np.ones(3), np.zeros(2))
    assert np.all(flatten(grads) == 0.0)


def test_tanh_derivative_at_origin():
    params = MlpParams(layer_sizes=[1, 1, 1], weights=[np.zeros((1, 1)), np.ones((1, 1))], biases=[np.zeros(1), np.zeros(1)])
    grads, _ = backward(params, np.array([1.0]), np.array([1.0]))
    assert grads.weights[0][0, 0] == pytest.approx(1.0)


def test_backward_rejects_non_finite_activations():
    params = MlpParams(layer_sizes=[1, 1], weights=[np.ones((1, 1))], biases=[np.zeros(1)])
    with pytest.raises(NumericError):
        backward(params, np.array([np.inf]), np.array([1.0]))


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_backward_matches_finite_differences(seed):
    rng = np.random.default_rng(seed)
    params = init_mlp([3, 4, 2], rng)
    x = rng.normal(size=(4, 3))
    weights = rng.normal(size=(4, 2))

    def loss(flat):
        return float(np.sum(weights * forward(unflatten(params.layer_sizes, flat), x)))

    grads, _ = backward(params, x, weights)
    numeric = finite_difference(loss, flatten(params))
    assert relative_error(flatten(grads), numeric) < 1e-4


def test_input_gradient_matches_finite_differences(rng):
    params = init_mlp([3, 5, 1], rng)
    x = rng.normal(size=3)
    _, d_input = backward(params, x, np.array([1.0]))
    numeric = finite_difference(lambda v: float(forward(params, v)[0]), x)
    assert relative_error(d_input, numeric) < 1e-4


def test_flatten_round_trip(rng):
    params = init_mlp([2, 6, 3], rng)
    restored = unflatten(params.layer_sizes, flatten(params))
    np.testing.assert_array_equal(flatten(restored), flatten(params))
    with pytest.raises(ShapeError):
        unflatten(params.layer_sizes, np.zeros(3))


def test_standard_normal_log_prob_at_zero():
    head = GaussianHead(mean=np.zeros(1), log_std=np.zeros(1))
    assert gaussian_log_prob(head, np.zeros(1)) == pytest.approx(-0.918938533, abs=1e-8)


@given(log_std=st.floats(-6.0, 0.0))
def test_log_prob_at_mean(log_std):
    head = GaussianHead(mean=np.array([0.3]), log_std=np.array([log_std]))
    assert gaussian_log_prob(head, np.array([0.3])) == pytest.approx(-log_std - 0.5 * np.log(2 * np.pi))


def test_log_prob_sums_over_dimensions():
    head = GaussianHead(mean=np.array([0.0, 1.0]), log_std=np.array([-0.5, 0.2]))
    action = np.array([0.4, 0.3])
    parts = [
        gaussian_log_prob(GaussianHead(mean=head.mean[i:i + 1], log_std=head.log_std[i:i + 1]), action[i:i + 1])
        for i in range(2)
    ]
    assert gaussian_log_prob(head, action) == pytest.approx(sum(parts))


def test_log_prob_rejects_zero_std():
    head = GaussianHead(mean=np.zeros(1), log_std=np.array([-np.inf]))
    with pytest.raises(DomainError):
        gaussian_log_prob(head, np.zeros(1))


def test_density_integrates_to_one():
    head = GaussianHead(mean=np.array([0.2]), log_std=np.array([np.log(0.3)]))
    grid = np.linspace(-4.0, 4.0, 8001)
    density = np.exp([gaussian_log_prob(head, np.array([a])) for a in grid])
    assert integrate.trapezoid(density, grid) == pytest.approx(1.0, abs=1e-3)


def test_log_prob_grads_match_finite_differences(rng):
    mean = rng.normal(size=2)
    log_std = rng.uniform(-1.0, 0.0, size=2)
    action = rng.normal(size=2)
    d_mean, d_log_std = gaussian_log_prob_grads(GaussianHead(mean, log_std), action)
    numeric_mean = finite_difference(lambda m: gaussian_log_prob(GaussianHead(m, log_std), action), mean)
    numeric_std = finite_difference(lambda s: gaussian_log_prob(GaussianHead(mean, s), action), log_std)
    assert relative_error(d_mean, numeric_mean) < 1e-4
    assert relative_error(d_log_std, numeric_std) < 1e-4


def test_kl_of_identical_heads_is_zero(rng):
    head = GaussianHead(mean=rng.normal(size=(3, 2)), log_std=rng.uniform(-1, 0, size=(3, 2)))
    np.testing.assert_allclose(gaussian_kl(head, head), 0.0, atol=1e-15)
    d_mean, d_log_std = gaussian_kl_grads(head, head)
    np.testing.assert_allclose(d_mean, 0.0, atol=1e-15)
    np.testing.assert_allclose(d_log_std, 0.0, atol=1e-15)


def test_adam_zero_gradient_keeps_parameters():
    state = AdamState.create(3, 0.01)
    params = np.array([1.0, -2.0, 0.5])
    np.testing.assert_array_equal(adam_step(state, params, np.zeros(3)), params)
    assert state.step == 1


def test_adam_first_step_is_sign_of_gradient():
    state = AdamState.create(3, 0.01)
    params = np.zeros(3)
    updated = adam_step(state, params, np.array([2.0, -0.5, 1e-3]))
    np.testing.assert_allclose(updated, -0.01 * np.array([1.0, -1.0, 1.0]), rtol=1e-4)


def test_adam_matches_reference_equations():
    state = AdamState.create(1, 0.05)
    params = np.array([1.0])
    m = v = 0.0
    expected = 1.0
    for step in range(1, 11):
        params = adam_step(state, params, np.array([0.7]))
        m = 0.9 * m + 0.1 * 0.7
        v = 0.999 * v + 0.001 * 0.49
        expected -= 0.05 * (m / (1 - 0.9 ** step)) / (np.sqrt(v / (1 - 0.999 ** step)) + 1e-8)
        assert params[0] == pytest.approx(expected, rel=1e-10)
    assert params[0] < 1.0


def test_adam_rejects_non_finite_gradients():
    state = AdamState.create(2, 0.01)
    with pytest.raises(NumericError):
        adam_step(state, np.zeros(2), np.array([np.nan, 0.0]))
    assert state.step == 0
    with pytest.raises(ShapeError):
        adam_step(state, np.zeros(2), np.zeros(3))


@pytest.mark.parametrize("dependent", [True, False])
def test_policy_backward_matches_finite_differences(rng, dependent):
    policy = GaussianPolicy.create(3, 2, [6], rng, state_dependent_std=dependent, init_log_std=-0.5)
    states = rng.normal(size=(5, 3))
    actions = rng.normal(size=(5, 2))
    advantages = rng.normal(size=5)

    def loss(flat):
        candidate = policy.copy()
        candidate.set_flat(flat)
        return float(np.sum(advantages * gaussian_log_prob(candidate.head(states), actions)))

    d_mean, d_log_std = gaussian_log_prob_grads(policy.head(states), actions)
    grads = policy.backward(states, advantages[:, None] * d_mean, advantages[:, None] * d_log_std)
    assert relative_error(grads, finite_difference(loss, policy.get_flat())) < 1e-4


def test_value_backward_matches_finite_differences(rng):
    value = ValueNetwork.create(3, [5, 5], rng)
    states = rng.normal(size=(6, 3))
    targets = rng.normal(size=6)

    def loss(flat):
        candidate = ValueNetwork(unflatten(value.net.layer_sizes, flat))
        return float(0.5 * np.mean((candidate.predict(states) - targets) ** 2))

    grads = value.backward(states, (value.predict(states) - targets) / states.shape[0])
    assert relative_error(grads, finite_difference(loss, value.get_flat())) < 1e-4


def test_policy_log_std_is_clipped(rng):
    policy = GaussianPolicy.create(2, 1, [4], rng, state_dependent_std=False, init_log_std=-20.0)
    head = policy.head(np.zeros((1, 2)))
    assert head.log_std[0, 0] == pytest.approx(np.log(1e-3))


@pytest.mark.parametrize("dependent", [True, False])
def test_checkpoint_round_trip_is_bit_exact(tmp_path, rng, dependent):
    policy = GaussianPolicy.create(5, 2, [7, 7], rng, state_dependent_std=dependent)
    value = ValueNetwork.create(5, [7, 7], rng)
    optimizer = AdamState.create(policy.num_parameters, 1e-4)
    adam_step(optimizer, policy.get_flat(), rng.normal(size=policy.num_parameters))

    path = save_checkpoint(str(tmp_path / "model.npz"), Checkpoint(policy, value, optimizer, metadata={"iteration": 3}))
    restored = load_checkpoint(path)

    np.testing.assert_array_equal(restored.policy.get_flat(), policy.get_flat())
    np.testing.assert_array_equal(restored.value.get_flat(), value.get_flat())
    np.testing.assert_array_equal(restored.policy_optimizer.second_moment, optimizer.second_moment)
    assert restored.policy_optimizer.step == 1
    assert restored.value_optimizer is None
    assert restored.metadata["iteration"] == 3


def test_missing_checkpoint_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_checkpoint(str(tmp_path / "missing.npz"))
