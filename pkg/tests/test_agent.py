import math

import numpy as np
import pytest

from cmdplab.agent import Agent, AgentConfig, compute_gamma
from cmdplab.core import FunctionClass, Geometry, build_cmdp, simulate_episode
from cmdplab.harness.evaluation import evaluate_episode
from cmdplab.occupancy import policy_from_occupancy
from cmdplab.solver import SolverProblem, solve_newton

# 40-digit mpmath evaluations of the tuning formula
GAMMA_EXAMPLE_31 = 0.6908823767647119338
GAMMA_EXAMPLE_62 = 0.4885276136126070469
GAMMA_REFERENCE = 0.1268632355174783053  # |S|=3, |A|=2, H=4, T=4000, delta=0.05, |F|=|F_P|=8, constant 62


def test_gamma_example():
    args = (2, 2, 1, 100, 0.5, math.log(2), math.log(2))
    assert compute_gamma(*args, variant="exact-31") == pytest.approx(GAMMA_EXAMPLE_31, rel=1e-14)
    assert compute_gamma(*args, variant="approx-62") == pytest.approx(GAMMA_EXAMPLE_62, rel=1e-14)


def test_gamma_scaling():
    base = dict(num_states=3, num_actions=2, horizon=4, delta=0.05, r_sq_bound=1.0, r_log_bound=0.5)
    g1 = compute_gamma(T=100, **base)
    assert compute_gamma(T=400, **base) / g1 == pytest.approx(2.0, rel=1e-14)
    ratio = compute_gamma(T=100, variant="approx-62", **base) / compute_gamma(T=100, variant="exact-31", **base)
    assert ratio == pytest.approx(math.sqrt(31 / 62), rel=1e-14)


def test_gamma_rejects_bad_inputs():
    with pytest.raises(ValueError):
        compute_gamma(0, 2, 1, 10, 0.1, 1, 1)
    with pytest.raises(ValueError):
        compute_gamma(2, 2, 1, 10, 1.0, 1, 1)
    with pytest.raises(ValueError):
        compute_gamma(2, 2, 1, 10, 0.1, 1, 1, variant="other")
    with pytest.raises(ValueError):
        AgentConfig(horizon_T=0)


def random_classes(g, nF, nP, C=2, S=3, A=2, truth=(0, 0)):
    F = FunctionClass(g.random((nF, C, S, A)), "reward", truth[0])
    P = FunctionClass(g.dirichlet(np.ones(S), size=(nP, C, S, A)), "dynamics", truth[1])
    return F, P


def test_reference_gamma_and_epsilon(rng):
    F, P = random_classes(rng, 8, 8)
    agent = Agent.from_config(AgentConfig(horizon_T=4000), F, P, Geometry(3, 2, 4))
    assert agent.gamma == pytest.approx(GAMMA_REFERENCE, rel=1e-13)
    assert agent.epsilon * agent.gamma == pytest.approx(1 / (16 * 4000), rel=1e-14)


def test_override_wins(rng):
    F, P = random_classes(rng, 2, 2)
    agent = Agent.from_config(AgentConfig(horizon_T=10, gamma_override=3.0), F, P, Geometry(3, 2, 4))
    assert agent.gamma == 3.0
    assert agent.epsilon * agent.gamma <= 1 / 16


def test_single_episode_hand_check(rng):
    F, P = random_classes(rng, 2, 2, C=1)
    geom = Geometry(3, 2, 3)
    cmdp = build_cmdp(F, P, geom)
    agent = Agent.from_config(AgentConfig(horizon_T=1), F, P, geom)
    out = agent.run_episode(0, lambda pi: simulate_episode(cmdp(0), pi, np.random.default_rng(0)))
    np.testing.assert_allclose(out.f_hat, F.members[:, 0].mean(axis=0))
    np.testing.assert_allclose(out.P_hat, P.members[:, 0].mean(axis=0))
    assert agent.episode_index == 1
    trans = list(out.trajectory.transitions())
    sq_loss = np.array([sum((F.members[i, 0, s, a] - r) ** 2 for s, a, r, _ in trans) for i in range(2)])
    w = np.exp(-0.5 * sq_loss)
    np.testing.assert_allclose(agent.reward_oracle.weights, w / w.sum(), rtol=1e-12)
    lik = np.array([np.prod([P.members[i, 0, s, a, s2] for s, a, _, s2 in trans]) for i in range(2)])
    np.testing.assert_allclose(agent.dynamics_oracle.weights, lik / lik.sum(), rtol=1e-12)
    np.testing.assert_allclose(out.policy, policy_from_occupancy(out.solver.q_hat))


def test_singleton_classes_play_regularized_optimum(rng):
    F, P = random_classes(rng, 1, 1)
    geom = Geometry(3, 2, 4)
    cmdp = build_cmdp(F, P, geom)
    agent = Agent.from_config(AgentConfig(horizon_T=50), F, P, geom)
    for t in range(4):
        c = t % 2
        out = agent.run_episode(c, lambda pi: simulate_episode(cmdp(c), pi, rng, c))
        np.testing.assert_array_equal(out.f_hat, cmdp(c).mean_rewards)
        np.testing.assert_array_equal(out.P_hat, cmdp(c).dynamics)
        ref = solve_newton(SolverProblem(cmdp(c).dynamics, cmdp(c).mean_rewards, agent.gamma, 4), 1e-12)
        assert out.solver.objective_value >= ref.objective_value - agent.epsilon


@pytest.mark.parametrize("gamma", [0.5, 5.0, 50.0, 500.0])
def test_singleton_regret_within_barrier_bound(rng, gamma):
    F, P = random_classes(rng, 1, 1, C=3)
    geom = Geometry(3, 2, 4)
    cmdp = build_cmdp(F, P, geom)
    agent = Agent.from_config(AgentConfig(horizon_T=30, gamma_override=gamma), F, P, geom)
    bound = 4 * 3 * 2 / gamma + 2 * math.sqrt(agent.epsilon * gamma * 4)
    for t in range(30):
        c = t % 3
        out = agent.run_episode(c, lambda pi: simulate_episode(cmdp(c), pi, rng, c))
        ev = evaluate_episode(cmdp, c, out.policy, out.P_hat, out.f_hat)
        assert -1e-9 <= ev["inst_regret"] <= bound


@pytest.mark.parametrize("method", ["newton", "frank-wolfe"])
def test_deterministic_given_seed(method):
    def trace(seed):
        g = np.random.default_rng(1)
        F, P = random_classes(g, 3, 3)
        geom = Geometry(3, 2, 3)
        cmdp = build_cmdp(F, P, geom)
        agent = Agent.from_config(AgentConfig(horizon_T=20, solver_method=method), F, P, geom)
        ep = np.random.default_rng(seed)
        outs = [agent.run_episode(t % 2, lambda pi: simulate_episode(cmdp(t % 2), pi, ep, t % 2)) for t in range(20)]
        return [(o.trajectory, o.policy.tobytes(), o.solver.fw_gap) for o in outs]

    assert trace(5) == trace(5)
