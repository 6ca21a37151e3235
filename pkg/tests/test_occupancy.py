import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cmdplab.occupancy import (
    compute_occupancy,
    greedy_policy,
    hellinger_sq,
    is_occupancy,
    occupancy_violations,
    optimal_policy,
    policy_from_occupancy,
    q_values,
    value_backward_induction,
    value_from_occupancy,
)
from cmdplab.core import TabularMDP

from strategies import mdp_instances

# sum_x (sqrt p - sqrt q)^2 for p=(1/2,1/2), q=(1/4,3/4), 40-digit mpmath evaluation
HELLINGER_HALF_QUARTER = 0.06814834742186342650


def brute_force_occupancy(pi, P, s0):
    H, S, A = pi.shape
    q = np.zeros((H, S, A))
    for path in itertools.product(range(S), range(A), repeat=H):
        states, actions = path[0::2], path[1::2]
        if states[0] != s0:
            continue
        p = 1.0
        for h in range(H):
            if h > 0:
                p *= P[states[h - 1], actions[h - 1], states[h]]
            p *= pi[h, states[h], actions[h]]
        for h in range(H):
            q[h, states[h], actions[h]] += p
    return q


def test_single_state_uniform():
    q = compute_occupancy(np.full((1, 1, 2), 0.5), np.ones((1, 2, 1)))
    np.testing.assert_array_equal(q, [[[0.5, 0.5]]])


def test_deterministic_indicator():
    P = np.zeros((2, 2, 2))
    P[:, 0, 1] = P[:, 1, 0] = 1.0
    pi = np.zeros((3, 2, 2))
    pi[..., 0] = 1.0
    q = compute_occupancy(pi, P)
    expected = np.zeros((3, 2, 2))
    expected[0, 0, 0] = expected[1, 1, 0] = expected[2, 1, 0] = 1.0
    np.testing.assert_array_equal(q, expected)


@given(seed=st.integers(0, 2**32 - 1), s0=st.integers(0, 1))
def test_matches_path_enumeration(seed, s0):
    g = np.random.default_rng(seed)
    P = g.dirichlet(np.ones(2), size=(2, 2))
    pi = g.dirichlet(np.ones(2), size=(2, 2))
    np.testing.assert_allclose(compute_occupancy(pi, P, s0), brute_force_occupancy(pi, P, s0), atol=1e-14)


@given(mdp_instances(max_s=5, max_a=4, max_h=6))
def test_polytope_requirements(inst):
    P, pi, _, H, s0 = inst
    q = compute_occupancy(pi, P, s0)
    assert max(occupancy_violations(q, P, s0).values()) <= 1e-9
    assert is_occupancy(q, P, s0)


def test_violation_keys():
    P = np.ones((1, 2, 1))
    bad = np.array([[[0.7, 0.7]]])
    v = occupancy_violations(bad, P, 0)
    assert v["i"] == pytest.approx(0.4) and v["ii"] == pytest.approx(0.4)
    assert not is_occupancy(bad, P, 0)


def test_zero_row_policy_uniform():
    q = np.zeros((1, 2, 2))
    q[0, 0] = (0.3, 0.7)
    pi = policy_from_occupancy(q)
    np.testing.assert_allclose(pi[0, 0], (0.3, 0.7))
    np.testing.assert_array_equal(pi[0, 1], (0.5, 0.5))


@given(mdp_instances())
def test_policy_round_trip(inst):
    P, pi, _, _, s0 = inst
    q = compute_occupancy(pi, P, s0)
    back = policy_from_occupancy(q)
    reach = q.sum(axis=2) > 0
    np.testing.assert_allclose(back[reach], pi[reach], atol=1e-9)
    np.testing.assert_allclose(back.sum(axis=2), 1.0, atol=1e-12)


@given(mdp_instances(max_s=5, max_a=4, max_h=6))
def test_value_identity(inst):
    P, pi, r, H, s0 = inst
    q = compute_occupancy(pi, P, s0)
    assert value_from_occupancy(q, r) == pytest.approx(value_backward_induction(P, r, H, s0, pi), abs=1e-10)


def test_value_of_zero_reward_is_zero(rng):
    P = rng.dirichlet(np.ones(3), size=(3, 2))
    pi = rng.dirichlet(np.ones(2), size=(4, 3))
    assert value_backward_induction(P, np.zeros((3, 2)), 4, 0, pi) == 0.0


def test_optimal_beats_random_policies(rng):
    P = rng.dirichlet(np.ones(3), size=(3, 2))
    r = rng.random((3, 2))
    mdp = TabularMDP(P, r, 4)
    pi_star, v_star = optimal_policy(mdp)
    assert value_backward_induction(P, r, 4, 0, pi_star) == pytest.approx(v_star, abs=1e-12)
    for _ in range(1000):
        pi = rng.dirichlet(np.ones(2), size=(4, 3))
        assert value_backward_induction(P, r, 4, 0, pi) <= v_star + 1e-12


def test_greedy_ties_lowest_index():
    pi = greedy_policy(np.zeros((2, 2, 3)))
    assert np.all(pi[..., 0] == 1.0)


def test_step_dependent_rewards():
    P = np.ones((1, 2, 1))
    g = np.array([[[1.0, 0.0]], [[0.0, 2.0]]])
    Q, V = q_values(P, g, 2)
    assert V[0, 0] == 3.0 and V[2, 0] == 0.0
    np.testing.assert_array_equal(greedy_policy(Q)[:, 0], [[1, 0], [0, 1]])


def test_hellinger_values():
    assert hellinger_sq([0.5, 0.5], [0.25, 0.75]) == pytest.approx(HELLINGER_HALF_QUARTER, rel=1e-14)
    assert hellinger_sq([1, 0], [1, 0]) == 0.0
    assert hellinger_sq([1, 0], [0, 1]) == 2.0
    with pytest.raises(ValueError):
        hellinger_sq([1.0], [0.5, 0.5])


@given(
    k=st.integers(1, 8),
    seed=st.integers(0, 2**32 - 1),
    log_alpha=st.floats(-2, 1),
)
def test_l1_hellinger_inequality(k, seed, log_alpha):
    g = np.random.default_rng(seed)
    p, q = g.dirichlet(np.full(k, 10**log_alpha), size=2)
    h = hellinger_sq(p, q)
    assert 0 <= h <= 2 + 1e-12
    assert np.abs(p - q).sum() ** 2 <= 4 * h + 1e-12
    assert h == pytest.approx(hellinger_sq(q, p), abs=1e-15)
    assert math.isfinite(h)
