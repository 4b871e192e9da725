import math

import numpy as np
import pytest

from raggededge.nn import AdamW


def _quadratic_grads(theta):
    # L = (t0 - 1)^2 + 2 (t1 + 0.5)^2
    return np.array([2.0 * (theta[0] - 1.0), 4.0 * (theta[1] + 0.5)])


def _hand_rolled_trace(theta0, lr, wd, steps, beta1=0.9, beta2=0.999, eps=1e-8):
    """Scalar Adam with a decoupled multiplicative decay, written out longhand."""
    t0, t1 = theta0
    m0 = m1 = v0 = v1 = 0.0
    trace = []
    for step in range(1, steps + 1):
        g0 = 2.0 * (t0 - 1.0)
        g1 = 4.0 * (t1 + 0.5)
        m0 = beta1 * m0 + (1 - beta1) * g0
        m1 = beta1 * m1 + (1 - beta1) * g1
        v0 = beta2 * v0 + (1 - beta2) * g0 * g0
        v1 = beta2 * v1 + (1 - beta2) * g1 * g1
        mhat0 = m0 / (1 - beta1**step)
        mhat1 = m1 / (1 - beta1**step)
        vhat0 = v0 / (1 - beta2**step)
        vhat1 = v1 / (1 - beta2**step)
        t0 = t0 - lr * mhat0 / (math.sqrt(vhat0) + eps)
        t1 = t1 - lr * mhat1 / (math.sqrt(vhat1) + eps)
        t0 = t0 - wd * t0
        t1 = t1 - wd * t1
        trace.append((t0, t1))
    return trace


@pytest.mark.parametrize("wd", [0.0, 0.01])
def test_ten_step_trace_matches_scalar_oracle(wd):
    theta = {"W1": np.array([0.3, -0.2])}
    opt = AdamW(learning_rate=0.05, weight_decay=wd, decay_keys=frozenset({"W1"}))
    expected = _hand_rolled_trace((0.3, -0.2), lr=0.05, wd=wd, steps=10)
    for step in range(10):
        grads = {"W1": _quadratic_grads(theta["W1"])}
        opt.step(theta, grads)
        assert theta["W1"][0] == pytest.approx(expected[step][0], abs=1e-10)
        assert theta["W1"][1] == pytest.approx(expected[step][1], abs=1e-10)


def test_decay_is_decoupled_from_learning_rate():
    # lr = 0: the gradient path is frozen but weights still shrink by (1 - wd)
    theta = {"W1": np.array([2.0, -4.0]), "b1": np.array([3.0])}
    opt = AdamW(learning_rate=0.0, weight_decay=0.1, decay_keys=frozenset({"W1"}))
    for step in range(1, 4):
        opt.step(theta, {"W1": np.array([5.0, 5.0]), "b1": np.array([5.0])})
        assert np.allclose(theta["W1"], np.array([2.0, -4.0]) * 0.9**step)
    assert np.array_equal(theta["b1"], np.array([3.0]))  # biases never decay


def test_zero_decay_reduces_to_adam():
    theta = {"W1": np.array([0.3, -0.2])}
    opt = AdamW(learning_rate=0.05, weight_decay=0.0)
    expected = _hand_rolled_trace((0.3, -0.2), lr=0.05, wd=0.0, steps=10)
    for step in range(10):
        opt.step(theta, {"W1": _quadratic_grads(theta["W1"])})
    assert theta["W1"][0] == pytest.approx(expected[-1][0], abs=1e-12)
    assert theta["W1"][1] == pytest.approx(expected[-1][1], abs=1e-12)
