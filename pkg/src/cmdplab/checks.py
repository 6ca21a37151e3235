"""Randomized invariant checks shared by ``cmdplab check`` and the acceptance tests.

Each check returns a ``CheckResult``; none of them raise on failure.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .core import FunctionClass, Geometry, build_cmdp
from .occupancy import (
    compute_occupancy,
    hellinger_sq,
    occupancy_violations,
    value_backward_induction,
    value_from_occupancy,
)
from .oracles import LogLossOracle, SquareLossOracle
from .solver import SolverProblem, iterate_difference_certificate, solve, solve_newton


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail} ({self.seconds:.2f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t0
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


def random_policy(rng, H, S, A):
    return rng.dirichlet(np.ones(A), size=(H, S))


def random_dynamics(rng, S, A, alpha=1.0):
    return rng.dirichlet(np.full(S, alpha), size=(S, A))


@_timed
def occupancy_identity(n_instances=100, seed=0, max_s=5, max_a=4, max_h=6) -> CheckResult:
    rng = np.random.default_rng(seed)
    worst_value, worst_poly = 0.0, 0.0
    for _ in range(n_instances):
        S, A, H = (int(rng.integers(1, m + 1)) for m in (max_s, max_a, max_h))
        s0 = int(rng.integers(S))
        P, pi, r = random_dynamics(rng, S, A), random_policy(rng, H, S, A), rng.random((S, A))
        q = compute_occupancy(pi, P, s0)
        worst_value = max(worst_value, abs(value_from_occupancy(q, r) - value_backward_induction(P, r, H, s0, pi)))
        worst_poly = max(worst_poly, max(occupancy_violations(q, P, s0).values()))
    ok = worst_value <= 1e-10 and worst_poly <= 1e-9
    return CheckResult("occupancy identity", ok, f"max |value diff| {worst_value:.2e}, max polytope violation {worst_poly:.2e}")


@_timed
def hellinger_l1(n_pairs=10_000, seed=0, max_support=8) -> CheckResult:
    rng = np.random.default_rng(seed)
    violations = 0
    for _ in range(n_pairs):
        k = int(rng.integers(1, max_support + 1))
        # mix smooth and sparse draws so that disjoint supports also occur
        alpha = 10.0 ** rng.uniform(-2, 1)
        p, q = rng.dirichlet(np.full(k, alpha)), rng.dirichlet(np.full(k, alpha))
        if np.abs(p - q).sum() ** 2 > 4 * hellinger_sq(p, q):
            violations += 1
    return CheckResult("hellinger/l1 bound", violations == 0, f"{violations} violations in {n_pairs} pairs")


def analytic_problem() -> SolverProblem:
    return SolverProblem(np.ones((1, 2, 1)), np.array([[1.0, 0.0]]), 2.0, 1)


@_timed
def solver_analytic(epsilon=1e-10) -> CheckResult:
    res = solve(analytic_problem(), epsilon)
    target = np.array([1 / math.sqrt(2), 1 - 1 / math.sqrt(2)])
    err = float(np.max(np.abs(res.q_hat[0, 0] - target)))
    hist = np.array(res.objective_history)
    monotone = bool(np.all(np.diff(hist) >= 0))
    ok = err <= 1e-6 and res.fw_gap <= epsilon and monotone
    return CheckResult("solver analytic case", ok,
                       f"|q - q*| {err:.2e}, gap {res.fw_gap:.2e} <= {epsilon:g}, monotone={monotone}")


def random_solver_problem(rng, max_s=4, max_a=3, max_h=4, gamma=None) -> SolverProblem:
    S, A, H = (int(rng.integers(1, m + 1)) for m in (max_s, max_a, max_h))
    if gamma is None:
        gamma = float(10 ** rng.uniform(-1, math.log10(5.0)))
    return SolverProblem(random_dynamics(rng, S, A), rng.random((S, A)), gamma, H, int(rng.integers(S)))


@_timed
def solver_certificate(n_instances=20, seed=0, eps_ref=1e-10, eps_fw=1e-6) -> CheckResult:
    """Iterate-difference inequality on every Frank-Wolfe iterate against a Newton reference.

    ``gamma`` is drawn log-uniformly in [0.1, 5]. The comparison allows
    ``4 gamma eps_ref`` of slack: the reference is only ``eps_ref``-optimal.
    """
    rng = np.random.default_rng(seed)
    violations, checked, worst_ratio = 0, 0, 0.0
    for _ in range(n_instances):
        prob = random_solver_problem(rng)
        ref = solve_newton(prob, eps_ref)
        if not ref.converged:
            return CheckResult("solver certificate", False, f"reference solve did not reach {eps_ref:g}")
        run = solve(prob, eps_fw, max_iterations=5000, record_iterates=True)
        for q in run.iterates:
            lhs, rhs = iterate_difference_certificate(prob, ref.q_hat, q)
            checked += 1
            if lhs > rhs + 4 * prob.gamma * eps_ref:
                violations += 1
            if rhs > 1e-9:
                worst_ratio = max(worst_ratio, lhs / rhs)
    return CheckResult("solver certificate", violations == 0,
                       f"{violations} violations over {checked} iterates, max lhs/rhs {worst_ratio:.3f} where rhs > 1e-9")


def adversarial_reward_stream(rng, F, length):
    """Outcomes pushed away from the current mixture prediction."""
    oracle = SquareLossOracle(FunctionClass(F, "reward"))
    _, C, S, A = F.shape
    for _ in range(length):
        c, s, a = int(rng.integers(C)), int(rng.integers(S)), int(rng.integers(A))
        y_hat = oracle.weights @ F[:, c, s, a]
        y = 0.0 if y_hat > 0.5 else 1.0
        oracle.update([((c, s, a), y)])
    return oracle


def adversarial_transition_stream(rng, Pm, length):
    """Next states chosen where the current mixture is least confident."""
    oracle = LogLossOracle(FunctionClass(Pm, "dynamics"))
    _, C, S, A, _ = Pm.shape
    for _ in range(length):
        c, s, a = int(rng.integers(C)), int(rng.integers(S)), int(rng.integers(A))
        mix = oracle.weights @ Pm[:, c, s, a]
        oracle.update([(c, s, a, int(np.argmin(mix)))])
    return oracle


@_timed
def oracle_bounds(n_streams=50, length=500, seed=0) -> CheckResult:
    rng = np.random.default_rng(seed)
    bad_sq = bad_log = 0
    worst_sq = worst_log = -math.inf
    for kind in ("adversarial", "random"):
        for _ in range(n_streams):
            n = int(rng.integers(2, 9))
            C, S, A = int(rng.integers(1, 4)), int(rng.integers(2, 5)), int(rng.integers(1, 4))
            F = rng.random((n, C, S, A))
            Pm = rng.dirichlet(np.full(S, 0.5), size=(n, C, S, A))
            if kind == "adversarial":
                sq = adversarial_reward_stream(rng, F, length)
                lg = adversarial_transition_stream(rng, Pm, length)
            else:
                sq = SquareLossOracle(FunctionClass(F, "reward"))
                sq.update(((int(rng.integers(C)), int(rng.integers(S)), int(rng.integers(A))), float(rng.random()))
                          for _ in range(length))
                lg = LogLossOracle(FunctionClass(Pm, "dynamics", int(rng.integers(n))))
                true = lg.function_class.truth
                for _ in range(length):
                    c, s, a = int(rng.integers(C)), int(rng.integers(S)), int(rng.integers(A))
                    lg.update([(c, s, a, int(rng.choice(S, p=true[c, s, a])))])
            margin_sq = sq.realized_regret() - 2 * math.log(n)
            margin_log = lg.realized_regret() - math.log(n)
            worst_sq, worst_log = max(worst_sq, margin_sq), max(worst_log, margin_log)
            bad_sq += margin_sq > 1e-9
            bad_log += margin_log > 1e-9
    ok = bad_sq == 0 and bad_log == 0
    return CheckResult("oracle regret bounds", ok,
                       f"square-loss violations {bad_sq}, log-loss violations {bad_log} over {2 * n_streams} streams each; "
                       f"max (regret - bound) sq {worst_sq:.3f}, log {worst_log:.3g}")


def reference_config_dict(T=500, seeds=(0,), **agent):
    return {
        "geometry": {"num_states": 3, "num_actions": 2, "horizon": 4, "num_contexts": 6},
        "classes": {"reward_size": 8, "dynamics_size": 8, "generation_seed": 2024},
        "schedule": {"kind": "cyclic"},
        "T": T,
        "seeds": list(seeds),
        "agent": dict(agent),
    }


def singleton_config_dict(T=200, seeds=(0,), **agent):
    doc = reference_config_dict(T, seeds, **agent)
    doc["classes"] = {"reward_size": 1, "dynamics_size": 1, "generation_seed": 7}
    return doc


@_timed
def decomposition_identity(T=500) -> CheckResult:
    from .harness import config_from_dict, run_experiment

    art = run_experiment(config_from_dict(reference_config_dict(T)), write=False)
    recs = art.runs[0].records
    worst = max(abs(r.term1 + r.term2 + r.term3 - r.inst_regret) for r in recs)
    return CheckResult("regret decomposition", worst <= 1e-9 and len(recs) == T,
                       f"max |term1+term2+term3 - inst_regret| {worst:.2e} over {len(recs)} episodes")


@_timed
def diagnostics_consistency(T=200) -> CheckResult:
    from .harness import config_from_dict, run_experiment

    ref = run_experiment(config_from_dict(reference_config_dict(T)), write=False).runs[0].records
    e_sq = np.cumsum([r.e_sq_inc for r in ref])
    hel = np.cumsum([r.hellinger_inc for r in ref])
    monotone = bool(np.all(np.diff(e_sq) >= 0) and np.all(np.diff(hel) >= 0))
    single = run_experiment(config_from_dict(singleton_config_dict(T)), write=False).runs[0].records
    zero = all(r.e_sq_inc == 0 and r.hellinger_inc == 0 and r.term1 == 0 and r.term3 == 0 for r in single)
    return CheckResult("diagnostics consistency", monotone and zero,
                       f"cumulative series nondecreasing={monotone}; singleton classes all-zero={zero}")


@_timed
def determinism(T=100) -> CheckResult:
    from .harness import config_from_dict, run_experiment

    doc = reference_config_dict(T, seeds=(3,))
    doc["schedule"] = {"kind": "iid-uniform"}
    a = run_experiment(config_from_dict(doc), write=False).runs[0].csv_text()
    b = run_experiment(config_from_dict(doc), write=False).runs[0].csv_text()
    return CheckResult("determinism", a == b, f"identical CSV={a == b} ({len(a)} bytes)")


def build_sanity() -> CheckResult:
    rng = np.random.default_rng(0)
    F = FunctionClass(rng.random((2, 2, 2, 2)), "reward", 1)
    P = FunctionClass(rng.dirichlet(np.ones(2), size=(2, 2, 2, 2)), "dynamics", 0)
    cmdp = build_cmdp(F, P, Geometry(2, 2, 3, 0))
    ok = np.array_equal(cmdp(1).mean_rewards, F.members[1, 1])
    return CheckResult("cmdp construction", ok, "truth slices match members")


def run_all(fast: bool = False) -> list[CheckResult]:
    n = 10 if fast else None
    checks = [
        build_sanity(),
        occupancy_identity(n or 100),
        hellinger_l1(1000 if fast else 10_000),
        solver_analytic(),
        solver_certificate(4 if fast else 20),
        oracle_bounds(n or 50, 200 if fast else 500),
        decomposition_identity(100 if fast else 500),
        diagnostics_consistency(50 if fast else 200),
        determinism(30 if fast else 100),
    ]
    return checks
