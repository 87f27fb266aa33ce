"""Network forward/backward math, checked against finite differences."""

from __future__ import annotations

import numpy as np
import pytest

from rlsched import errors
from rlsched.simcore import make_rng
from rlsched.valuenet import TargetNetwork, ValueNetwork, sgd_step, sync_target


def batch_loss(net: ValueNetwork, states, actions, targets) -> float:
    """Reference loss computed through the public forward pass only."""
    q = net.forward(states)
    taken = q[np.arange(len(actions)), actions]
    return float(np.mean((taken - targets) ** 2))


def finite_diff_grads(net, states, actions, targets, h=1e-6):
    """Central differences over every parameter."""
    grads_w = [np.zeros_like(w) for w in net.weights]
    grads_b = [np.zeros_like(b) for b in net.biases]
    for param, grad in list(zip(net.weights, grads_w)) + list(zip(net.biases, grads_b)):
        for idx in np.ndindex(param.shape):
            orig = param[idx]
            param[idx] = orig + h
            hi = batch_loss(net, states, actions, targets)
            param[idx] = orig - h
            lo = batch_loss(net, states, actions, targets)
            param[idx] = orig
            grad[idx] = (hi - lo) / (2.0 * h)
    return grads_w, grads_b


def random_case(rng):
    """A small net and batch kept away from ReLU kinks."""
    n_in = int(rng.integers(2, 6))
    n_out = int(rng.integers(2, 5))
    hidden = [int(rng.integers(3, 8)) for _ in range(int(rng.integers(1, 3)))]
    sizes = [n_in, *hidden, n_out]
    batch = int(rng.integers(3, 7))
    for _ in range(200):
        net = ValueNetwork.initialized(sizes, rng)
        states = rng.normal(0.0, 1.0, size=(batch, n_in))
        _, pre = net._forward_cached(states)
        if min(float(np.abs(z).min()) for z in pre) > 1e-3:
            break
    actions = rng.integers(0, n_out, size=batch)
    targets = rng.normal(0.0, 2.0, size=batch)
    return net, states, actions, targets


def relative_error(a, b):
    return np.abs(a - b) / (np.abs(a) + np.abs(b) + 1e-8)


# ----- gradient correctness -----


def test_backprop_matches_finite_differences():
    rng = make_rng(2024, 0)
    worst = 0.0
    for _ in range(20):
        net, states, actions, targets = random_case(rng)
        loss, gw, gb = net.loss_and_grads(states, actions, targets)
        assert loss == pytest.approx(batch_loss(net, states, actions, targets), rel=1e-12)
        fw, fb = finite_diff_grads(net, states, actions, targets)
        for a, b in zip(gw + gb, fw + fb):
            worst = max(worst, float(relative_error(a, b).max()))
    assert worst < 1e-4


def test_gradient_zero_for_untaken_actions():
    # a batch where action 0 is never taken leaves column 0 of the output
    # layer untouched
    rng = make_rng(7, 0)
    net = ValueNetwork.initialized([3, 4, 2], rng)
    states = rng.normal(size=(5, 3))
    actions = np.ones(5, dtype=np.int64)
    targets = rng.normal(size=5)
    _, gw, gb = net.loss_and_grads(states, actions, targets)
    assert np.all(gw[-1][0] == 0.0)
    assert gb[-1][0] == 0.0
    assert np.any(gw[-1][1] != 0.0)


# ----- forward pass -----


def test_forward_shapes_and_dtype():
    net = ValueNetwork.initialized([4, 8, 3], make_rng(1, 0))
    assert all(w.dtype == np.float64 for w in net.weights)
    single = net.forward(np.zeros(4))
    assert single.shape == (3,)
    batch = net.forward(np.zeros((5, 4)))
    assert batch.shape == (5, 3)


def test_forward_batch_matches_single():
    # batch and single paths may differ in the last ulp (BLAS summation
    # order); repeated calls of either shape are bit-identical
    rng = make_rng(2, 0)
    net = ValueNetwork.initialized([4, 6, 6, 3], rng)
    X = rng.normal(size=(8, 4))
    batch = net.forward(X)
    for i in range(8):
        np.testing.assert_allclose(batch[i], net.forward(X[i]), rtol=1e-12, atol=1e-12)
    assert np.array_equal(batch, net.forward(X))
    assert np.array_equal(net.forward(X[0]), net.forward(X[0]))


def test_forward_dimension_mismatch():
    net = ValueNetwork.initialized([4, 8, 3], make_rng(1, 0))
    with pytest.raises(errors.DimensionMismatch):
        net.forward(np.zeros(5))


def test_hand_computed_forward():
    # identity-weight single layer: outputs equal inputs
    net = ValueNetwork([2, 2], [np.eye(2)], [np.zeros(2)])
    out = net.forward(np.array([1.5, -2.0]))
    assert np.array_equal(out, np.array([1.5, -2.0]))
    # relu hides negatives between layers
    net2 = ValueNetwork(
        [1, 2, 1],
        [np.array([[1.0], [-1.0]]), np.array([[1.0, 1.0]])],
        [np.zeros(2), np.zeros(1)],
    )
    # x=3: hidden = relu([3, -3]) = [3, 0]; out = 3
    assert net2.forward(np.array([3.0]))[0] == pytest.approx(3.0)
    # x=-2: hidden = relu([-2, 2]) = [0, 2]; out = 2
    assert net2.forward(np.array([-2.0]))[0] == pytest.approx(2.0)


def test_parameter_count():
    net = ValueNetwork.initialized([24, 64, 64, 3], make_rng(3, 0))
    assert net.n_params == 24 * 64 + 64 + 64 * 64 + 64 + 64 * 3 + 3


# ----- training step -----


def test_sgd_step_descends_on_fixed_batch():
    rng = make_rng(11, 0)
    net = ValueNetwork.initialized([3, 8, 2], rng)
    states = rng.normal(size=(16, 3))
    actions = rng.integers(0, 2, size=16)
    targets = rng.normal(size=16)
    losses = [sgd_step(net, states, actions, targets, 0.05) for _ in range(200)]
    assert losses[-1] < losses[0] * 0.1


def test_sgd_step_rejects_nonfinite():
    net = ValueNetwork.initialized([2, 3, 2], make_rng(5, 0))
    states = np.zeros((2, 2))
    actions = np.array([0, 1])
    with pytest.raises(errors.NonFiniteLoss):
        sgd_step(net, states, actions, np.array([np.inf, 0.0]), 0.01)


# ----- target network -----


def test_sync_target_bit_identical():
    rng = make_rng(13, 0)
    online = ValueNetwork.initialized([4, 8, 3], rng)
    target = ValueNetwork.initialized([4, 8, 3], rng)
    sync_target(online, target)
    probes = rng.normal(size=(100, 4))
    assert np.array_equal(online.forward(probes), target.forward(probes))


def test_sync_architecture_mismatch():
    a = ValueNetwork.initialized([4, 8, 3], make_rng(1, 0))
    b = ValueNetwork.initialized([4, 6, 3], make_rng(1, 0))
    with pytest.raises(errors.ArchitectureMismatch):
        sync_target(a, b)


def test_target_frozen_until_sync():
    rng = make_rng(17, 0)
    online = ValueNetwork.initialized([3, 6, 2], rng)
    holder = TargetNetwork(online, sync_interval=10)
    probes = rng.normal(size=(20, 3))
    before = holder.net.forward(probes)
    states = rng.normal(size=(8, 3))
    actions = rng.integers(0, 2, size=8)
    targets = rng.normal(size=8)
    for _ in range(5):
        sgd_step(online, states, actions, targets, 0.05)
    assert np.array_equal(holder.net.forward(probes), before)
    assert not np.array_equal(online.forward(probes), before)
    assert holder.maybe_sync(online, 10)
    assert np.array_equal(holder.net.forward(probes), online.forward(probes))
    assert not holder.maybe_sync(online, 11)


# ----- serialization -----


def test_save_load_round_trip(tmp_path):
    net = ValueNetwork.initialized([5, 7, 4], make_rng(19, 0))
    p = tmp_path / "net.txt"
    net.save(str(p))
    back = ValueNetwork.load(str(p))
    assert back.sizes == net.sizes
    for a, b in zip(net.weights + net.biases, back.weights + back.biases):
        assert np.array_equal(a, b)
    p2 = tmp_path / "net2.txt"
    back.save(str(p2))
    assert p.read_bytes() == p2.read_bytes()


def test_load_rejects_other_files(tmp_path):
    p = tmp_path / "junk.txt"
    p.write_text("qtable v1\n")
    with pytest.raises(errors.InvalidSpec):
        ValueNetwork.load(str(p))
