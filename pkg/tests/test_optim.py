"""Tests for the Adam step and the gradient checks."""
import sys, os
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '..'))

import numpy as np
import pytest

from src.nn.gradcheck import check_layer_gradients, gradient_check, relative_error
from src.nn.layers import ShapeError
from src.nn.network import Network, NetworkConfig
from src.nn.optim import AdamState, NonFiniteGradientError, sgd_adam_step


@pytest.fixture
def tiny_net():
    return Network(NetworkConfig(input_size=8, in_channels=1, conv_channels=(2, 2, 2), hidden_units=4, seed=0))


def test_zero_gradients_leave_params(tiny_net):
    before = tiny_net.state_dict()
    sgd_adam_step(tiny_net, {n: np.zeros_like(v) for n, v in before.items()}, 0.1, AdamState())
    for name, value in before.items():
        assert np.array_equal(tiny_net.params[name], value)


def test_first_step_is_lr_sized(tiny_net):
    before = tiny_net.params["fc2.bias"].copy()
    grads = {"fc2.bias": np.ones_like(before)}
    sgd_adam_step(tiny_net, grads, 0.1, AdamState())
    np.testing.assert_allclose(tiny_net.params["fc2.bias"] - before, -0.1, rtol=1e-5)


def test_frozen_names_untouched(tiny_net):
    state = AdamState()
    grads = {n: np.ones_like(v) for n, v in tiny_net.params.items()}
    conv = tiny_net.conv_param_names()
    before = tiny_net.state_dict()
    sgd_adam_step(tiny_net, grads, 0.01, state, frozen=conv)
    for name in conv:
        assert np.array_equal(tiny_net.params[name], before[name])
    assert not np.array_equal(tiny_net.params["fc1.weight"], before["fc1.weight"])


def test_non_finite_gradient_aborts(tiny_net):
    before = tiny_net.state_dict()
    grads = {"fc1.bias": np.array([np.nan, 0, 0, 0])}
    with pytest.raises(NonFiniteGradientError, match="fc1.bias"):
        sgd_adam_step(tiny_net, grads, 0.1, AdamState())
    assert np.array_equal(tiny_net.params["fc1.bias"], before["fc1.bias"])


def test_gradient_shape_mismatch(tiny_net):
    with pytest.raises(ShapeError, match="fc1"):
        sgd_adam_step(tiny_net, {"fc1.bias": np.zeros(3)}, 0.1, AdamState())


def test_loss_decreases_on_fixed_batch(tiny_net):
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(4, 1, 8, 8)).astype(np.float32)
    labels = np.array([0, 3, 5, 7])
    state = AdamState()
    losses = []
    for _ in range(50):
        loss, _, grads = tiny_net.loss_and_gradients(batch, labels)
        losses.append(loss)
        sgd_adam_step(tiny_net, grads, 0.01, state)
    assert losses[-1] < losses[0]


def test_overfit_two_samples():
    net = Network(NetworkConfig(input_size=16, in_channels=1, conv_channels=(4, 8, 8), hidden_units=32, seed=1))
    rng = np.random.default_rng(5)
    batch = rng.normal(size=(2, 1, 16, 16)).astype(np.float32)
    labels = np.array([2, 6])
    state = AdamState()
    for _ in range(200):
        loss, probs, grads = net.loss_and_gradients(batch, labels)
        sgd_adam_step(net, grads, 0.01, state)
    loss, probs, _ = net.loss_and_gradients(batch, labels)
    assert loss < 0.01
    assert probs.argmax(axis=1).tolist() == [2, 6]


# ----------------------------------------------------------------------
def test_relative_error_floor():
    assert relative_error(0.0, 1e-9, 1e-2) < 1e-6
    assert relative_error(1.0, 1.1, 1e-2) == pytest.approx(0.1 / 1.1)


def test_every_layer_passes_float32():
    for layer, results in check_layer_gradients(np.float32, n_coords=100, seed=0).items():
        for r in results:
            assert r.passed(1e-2), (layer, r)


def test_every_layer_passes_float64():
    for layer, results in check_layer_gradients(np.float64, n_coords=100, seed=1).items():
        for r in results:
            assert r.passed(1e-5), (layer, r)


def test_whole_network_float64():
    net = Network(NetworkConfig(input_size=16, in_channels=1, conv_channels=(2, 3, 4), hidden_units=8, seed=0),
                  dtype=np.float64)
    rng = np.random.default_rng(0)
    batch = rng.normal(size=(2, 1, 16, 16))
    results = gradient_check(net, batch, [1, 4], n_coords=100, step=1e-6)
    assert sum(r.coords for r in results.values()) >= 100
    for r in results.values():
        assert r.passed(1e-4), r
