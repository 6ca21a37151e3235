import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmdplab.checks import adversarial_reward_stream, adversarial_transition_stream
from cmdplab.core import FunctionClass
from cmdplab.oracles import ZERO_LIKELIHOOD_LOSS, LogLossOracle, RealizabilityError, SquareLossOracle


def sigmoid(x):
    return 1.0 / (1.0 + math.exp(-x))


def reward_class(values):
    """Context-free constant members, one (1, 1, 1) table each."""
    return FunctionClass(np.asarray(values, float).reshape(-1, 1, 1, 1), "reward")


def test_initial_state():
    o = SquareLossOracle(reward_class([0.2, 0.6]))
    np.testing.assert_allclose(o.weights, [0.5, 0.5])
    assert o.realized_regret() == 0.0
    assert o.predict(0)[0, 0] == pytest.approx(0.4)


def test_constant_members_hand_recursion():
    o = SquareLossOracle(reward_class([0.0, 1.0]))
    own = 0.0
    for k in range(3):
        gap = o.log_weights[1] - o.log_weights[0]
        assert gap == pytest.approx(0.5 * k)
        y_hat = sigmoid(gap)
        assert o.predict(0)[0, 0] == pytest.approx(y_hat)
        own += (1.0 - y_hat) ** 2
        o.update([((0, 0, 0), 1.0)])
    # 0.25 + (1 - s(1/2))^2 + (1 - s(1))^2, evaluated with mpmath
    assert o.cumulative_own_loss == pytest.approx(own)
    assert o.cumulative_own_loss == pytest.approx(0.4648664447250642, rel=1e-14)
    assert o.realized_regret() == pytest.approx(own)


def test_three_updates_explicit_weights():
    F = np.array([[[[0.2, 0.9]]], [[[0.7, 0.4]]]])  # (N=2, C=1, S=1, A=2)
    o = SquareLossOracle(FunctionClass(F, "reward"))
    samples = [((0, 0, 0), 1.0), ((0, 0, 1), 0.0), ((0, 0, 0), 0.0)]
    o.update(samples)
    # w_i ∝ exp(-1/2 * sum of squared errors of member i)
    l0 = (0.2 - 1) ** 2 + 0.9**2 + 0.2**2
    l1 = (0.7 - 1) ** 2 + 0.4**2 + 0.7**2
    w = np.array([math.exp(-0.5 * l0), math.exp(-0.5 * l1)])
    w /= w.sum()
    np.testing.assert_allclose(o.weights, w, rtol=1e-12)
    np.testing.assert_allclose(o.predict(0)[0], w @ F[:, 0, 0], rtol=1e-12)
    np.testing.assert_allclose(o.cumulative_member_loss, [l0, l1])


def test_reward_outside_unit_interval_rejected_before_update():
    o = SquareLossOracle(reward_class([0.0, 1.0]))
    with pytest.raises(ValueError):
        o.update([((0, 0, 0), 1.0), ((0, 0, 0), 1.5)])
    assert o.samples_seen == 0


def two_member_dynamics():
    P = np.array([[0.2, 0.8], [0.6, 0.4]])
    return FunctionClass(P.reshape(2, 1, 1, 1, 2), "dynamics"), P


def test_bayes_posterior_and_mixture_loss():
    fc, P = two_member_dynamics()
    o = LogLossOracle(fc)
    obs = [1, 0, 1, 1]
    o.update((0, 0, 0, s) for s in obs)
    lik = np.prod(P[:, obs], axis=1)
    np.testing.assert_allclose(o.weights, lik / lik.sum(), rtol=1e-12)
    # chain rule: cumulative mixture loss is minus log marginal likelihood
    assert o.cumulative_own_loss == pytest.approx(-math.log(0.5 * lik.sum()), rel=1e-12)
    np.testing.assert_allclose(o.predict(0)[0, 0], (lik / lik.sum()) @ P, rtol=1e-12)
    assert o.realized_regret() <= math.log(2) + 1e-12


def test_zero_likelihood_member_removed():
    P = np.array([[1.0, 0.0], [0.5, 0.5]]).reshape(2, 1, 1, 1, 2)
    o = LogLossOracle(FunctionClass(P, "dynamics", 1))
    o.update([(0, 0, 0, 1)])
    np.testing.assert_array_equal(o.weights, [0.0, 1.0])
    assert o.cumulative_member_loss[0] == ZERO_LIKELIHOOD_LOSS
    o.update([(0, 0, 0, 0)] * 5)
    assert o.weights[0] == 0.0


def test_realizability_error():
    P = np.array([[1.0, 0.0], [1.0, 0.0]]).reshape(2, 1, 1, 1, 2)
    o = LogLossOracle(FunctionClass(P, "dynamics"))
    with pytest.raises(RealizabilityError):
        o.update([(0, 0, 0, 1)])


def test_kind_mismatch():
    fc, _ = two_member_dynamics()
    with pytest.raises(ValueError):
        SquareLossOracle(fc)


def test_adversarial_two_member_streams():
    g = np.random.default_rng(3)
    F = g.random((2, 1, 2, 2))
    Pm = g.dirichlet(np.ones(3), size=(2, 1, 2, 2))
    sq = adversarial_reward_stream(g, F, 50)
    lg = adversarial_transition_stream(g, Pm, 50)
    assert sq.realized_regret() <= 2 * math.log(2)
    assert lg.realized_regret() <= math.log(2) + 1e-9


@given(
    n=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
    length=st.integers(1, 200),
)
def test_square_loss_bound_arbitrary_stream(n, seed, length):
    g = np.random.default_rng(seed)
    F = g.random((n, 2, 2, 2))
    o = SquareLossOracle(FunctionClass(F, "reward"))
    o.update(((int(g.integers(2)), int(g.integers(2)), int(g.integers(2))), float(g.integers(2) if g.random() < 0.5 else g.random()))
             for _ in range(length))
    assert o.realized_regret() <= 2 * math.log(n) + 1e-9
    assert o.samples_seen == length


@given(
    n=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
    length=st.integers(1, 200),
)
def test_log_loss_bound_arbitrary_stream(n, seed, length):
    g = np.random.default_rng(seed)
    Pm = g.dirichlet(np.full(3, 0.3), size=(n, 1, 2, 2))
    Pm = np.maximum(Pm, 1e-300)
    Pm /= Pm.sum(axis=-1, keepdims=True)
    o = LogLossOracle(FunctionClass(Pm, "dynamics"))
    o.update((0, int(g.integers(2)), int(g.integers(2)), int(g.integers(3))) for _ in range(length))
    assert o.realized_regret() <= math.log(n) + 1e-9
