"""Log-barrier regularized maximization over an occupancy polytope.

Maximizes

    L(q) = sum_{h,s,a} q[h,s,a] f[s,a] + (1/gamma) sum_{h,s,a} log q[h,s,a]

over the occupancy measures of a fixed dynamics tensor. Triples that no
policy can reach are identically zero on the whole polytope; both sums are
restricted to the reachable (``active``) triples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import null_space

from .occupancy import compute_occupancy, greedy_policy, q_values

LINE_SEARCH_CAP = 1.0 - 1e-12
LINE_SEARCH_WIDTH = 1e-12


def reachable_triples(dynamics: np.ndarray, horizon: int, start_state: int) -> np.ndarray:
    """Boolean mask of (h, s, a) reachable under some policy."""
    S, A, _ = dynamics.shape
    active = np.zeros((horizon, S, A), dtype=bool)
    states = np.zeros(S, dtype=bool)
    states[start_state] = True
    support = dynamics > 0
    for h in range(horizon):
        active[h, states, :] = True
        states = support[states].reshape(-1, S).any(axis=0)
    return active


@dataclass(frozen=True)
class SolverProblem:
    dynamics: np.ndarray
    rewards: np.ndarray
    gamma: float
    horizon: int
    start_state: int = 0
    active: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        P = np.asarray(self.dynamics, dtype=float)
        f = np.asarray(self.rewards, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2] or f.shape != P.shape[:2]:
            raise ValueError(f"inconsistent shapes: dynamics {P.shape}, rewards {f.shape}")
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if np.any(P < 0) or np.max(np.abs(P.sum(axis=2) - 1.0)) > 1e-9:
            raise ValueError("dynamics rows must be probability distributions")
        if np.any(f < 0) or np.any(f > 1):
            raise ValueError("rewards must lie in [0, 1]")
        object.__setattr__(self, "dynamics", P)
        object.__setattr__(self, "rewards", f)
        object.__setattr__(self, "active", reachable_triples(P, self.horizon, self.start_state))

    @property
    def shape(self) -> tuple:
        return (self.horizon,) + self.rewards.shape

    @property
    def num_active(self) -> int:
        return int(self.active.sum())

    def initial_point(self) -> np.ndarray:
        H, S, A = self.shape
        return compute_occupancy(np.full((H, S, A), 1.0 / A), self.dynamics, self.start_state)


@dataclass
class SolverResult:
    q_hat: np.ndarray
    objective_value: float
    fw_gap: float
    iterations: int
    epsilon_requested: float
    converged: bool
    method: str = "frank-wolfe"
    objective_history: list = field(default_factory=list, repr=False)
    iterates: list = field(default_factory=list, repr=False)

    def summary(self) -> dict:
        return {
            "objective_value": self.objective_value,
            "fw_gap": self.fw_gap,
            "iterations": self.iterations,
            "epsilon_requested": self.epsilon_requested,
            "converged": self.converged,
            "method": self.method,
        }


def objective(problem: SolverProblem, q: np.ndarray) -> float:
    x = q[problem.active]
    if np.any(x <= 0):
        return -math.inf
    return float(np.sum(x * np.broadcast_to(problem.rewards, q.shape)[problem.active]) + np.sum(np.log(x)) / problem.gamma)


def gradient(problem: SolverProblem, q: np.ndarray) -> np.ndarray:
    """``f[s,a] + 1/(gamma q[h,s,a])`` on active triples, 0 elsewhere."""
    g = np.zeros(q.shape)
    act = problem.active
    g[act] = np.broadcast_to(problem.rewards, q.shape)[act] + 1.0 / (problem.gamma * q[act])
    return g


def linear_oracle(problem: SolverProblem, g: np.ndarray) -> np.ndarray:
    """Vertex of the polytope maximizing ``<g, q>``: occupancy of the greedy policy for step rewards ``g``."""
    Q, _ = q_values(problem.dynamics, g, problem.horizon)
    return compute_occupancy(greedy_policy(Q), problem.dynamics, problem.start_state)


def line_search(problem: SolverProblem, q: np.ndarray, v: np.ndarray) -> float:
    """Exact step maximizing ``objective((1 - eta) q + eta v)`` over ``[0, 1 - 1e-12]``.

    The objective is concave along the segment, so its derivative is
    decreasing in eta. The root is bracketed and refined by Newton steps on
    the derivative, falling back to bisection whenever a step leaves the
    bracket, until the bracket is narrower than 1e-12 or the derivative
    vanishes.
    """
    act = problem.active
    x = q[act]
    d = v[act] - x
    if not np.any(d):
        return 0.0
    lin = float(d @ np.broadcast_to(problem.rewards, q.shape)[act])
    inv_gamma = 1.0 / problem.gamma

    def slope(eta):
        z = d / (x + eta * d)
        return lin + inv_gamma * float(np.sum(z)), inv_gamma * float(z @ z)

    s0, c0 = slope(0.0)
    if s0 <= 0:
        return 0.0
    lo, hi = 0.0, LINE_SEARCH_CAP
    if slope(hi)[0] >= 0:
        return hi
    eta, s, curv = lo, s0, c0
    while hi - lo > LINE_SEARCH_WIDTH:
        cand = eta + s / curv if curv > 0 else -1.0
        eta = cand if lo < cand < hi else 0.5 * (lo + hi)
        s, curv = slope(eta)
        if s > 0:
            lo = eta
        elif s < 0:
            hi = eta
        else:
            return eta
        if abs(s) <= 1e-15 * (abs(lin) + inv_gamma * curv ** 0.5 + 1.0):
            return eta
    return lo


def default_max_iterations(problem: SolverProblem, epsilon: float) -> int:
    H, S, A = problem.shape
    return int(math.ceil(10 * H * S * A * max(1.0, math.log(1.0 / epsilon))))


def solve(problem: SolverProblem, epsilon: float, max_iterations: int | None = None, record_iterates: bool = False) -> SolverResult:
    """Frank-Wolfe with exact line search, stopped on the Frank-Wolfe gap.

    For a concave objective the gap ``<grad L(q), v - q>`` bounds
    ``L(q*) - L(q)``, so ``converged`` certifies an ``epsilon``-approximate
    maximizer.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if max_iterations is None:
        max_iterations = default_max_iterations(problem, epsilon)
    q = problem.initial_point()
    history, iterates = [], []
    gap = math.inf
    k = 0
    while True:
        g = gradient(problem, q)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at iteration {k}")
        v = linear_oracle(problem, g)
        gap = max(0.0, float(np.sum(g * (v - q))))
        history.append(objective(problem, q))
        if record_iterates:
            iterates.append(q.copy())
        if gap <= epsilon or k >= max_iterations:
            break
        eta = line_search(problem, q, v)
        q = (1.0 - eta) * q + eta * v
        k += 1
    return SolverResult(q, history[-1], gap, k, epsilon, gap <= epsilon, "frank-wolfe", history, iterates)


def flow_constraints(problem: SolverProblem) -> tuple[np.ndarray, np.ndarray]:
    """Equality system ``A x = b`` on the active coordinates ``x = q[active]``.

    One row per reachable (h, s): step-0 rows pin the start state, later rows
    equate the state marginal with the inflow from step h - 1. Each row owns
    the distinct block ``q[h, s, :]``, so the system has full row rank.
    """
    H, S, A = problem.shape
    act = problem.active
    col = -np.ones(act.shape, dtype=int)
    col[act] = np.arange(int(act.sum()))
    rows, rhs = [], []
    for h in range(H):
        for s in range(S):
            if not act[h, s].any():
                continue
            row = np.zeros(int(act.sum()))
            row[col[h, s]] = 1.0
            if h > 0:
                prev = act[h - 1]
                row[col[h - 1][prev]] -= problem.dynamics[:, :, s][prev]
            rows.append(row)
            rhs.append(1.0 if (h == 0 and s == problem.start_state) else 0.0)
    return np.array(rows), np.array(rhs)


def solve_newton(problem: SolverProblem, epsilon: float, max_iterations: int = 200, record_iterates: bool = False) -> SolverResult:
    """Feasible-start equality-constrained Newton method with backtracking.

    Steps stay inside the polytope (A dx = 0) and are shortened until the
    iterate is strictly positive and the objective does not decrease. The
    stopping rule is the same Frank-Wolfe gap certificate used by ``solve``.
    """
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    act = problem.active
    Aeq, _ = flow_constraints(problem)
    # feasible directions: orthonormal basis of the kernel of the flow system
    Z = null_space(Aeq) if Aeq.size else np.eye(problem.num_active)
    q = problem.initial_point()
    x = q[act]
    history, iterates = [], []
    gap = math.inf
    k = 0
    while True:
        q = np.zeros(problem.shape)
        q[act] = x
        g = gradient(problem, q)
        if not np.all(np.isfinite(g)):
            raise FloatingPointError(f"non-finite gradient at iteration {k}")
        gap = max(0.0, float(np.sum(g * (linear_oracle(problem, g) - q))))
        history.append(objective(problem, q))
        if record_iterates:
            iterates.append(q.copy())
        if gap <= epsilon or k >= max_iterations:
            break
        gx = g[act]
        reduced = Z.T @ gx
        H_red = (Z.T * (1.0 / (problem.gamma * x * x))) @ Z
        dz = np.linalg.solve(H_red, reduced)
        dx = Z @ dz
        decrement = float(reduced @ dz)
        if decrement <= 0:
            break
        # -gamma * L is standard self-concordant with Newton decrement lam
        lam = math.sqrt(problem.gamma * decrement)
        if lam < 0.25:
            # quadratic region: the full step stays in the Dikin ellipsoid and
            # improves L; objective values are too flat here to compare
            x = x + dx
        else:
            t = 1.0 / (1.0 + lam)
            while True:
                xn = x + t * dx
                if np.all(xn > 0):
                    qn = np.zeros(problem.shape)
                    qn[act] = xn
                    if objective(problem, qn) >= history[-1]:
                        break
                t *= 0.5
                if t < 1e-16:
                    raise FloatingPointError(f"Newton backtracking failed at iteration {k}")
            x = xn
        k += 1
    return SolverResult(q, history[-1], gap, k, epsilon, gap <= epsilon, "newton", history, iterates)


def iterate_difference_certificate(problem: SolverProblem, q_tilde: np.ndarray, q: np.ndarray) -> tuple[float, float]:
    """``(sum (q/q_tilde - 1)^2, 4 gamma (L(q_tilde) - L(q)))`` over active triples."""
    act = problem.active
    lhs = float(np.sum((q[act] / q_tilde[act] - 1.0) ** 2))
    rhs = 4.0 * problem.gamma * (objective(problem, q_tilde) - objective(problem, q))
    return lhs, rhs
