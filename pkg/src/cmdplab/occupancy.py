"""Occupancy measures over (step, state, action) and value computations.

An occupancy measure is an array ``q[h, s, a]``. For dynamics ``P`` the set of
valid measures is the polytope of nonnegative tables whose step-0 marginal is
the point mass at ``s0`` and whose step-(h+1) state marginal is the image of
``q[h]`` under ``P``.
"""

from __future__ import annotations

import numpy as np

POLYTOPE_TOL = 1e-9


def compute_occupancy(policy: np.ndarray, dynamics: np.ndarray, start_state: int = 0) -> np.ndarray:
    """Forward recursion ``q[h+1, s, a] = pi[h+1, s, a] * sum_{s', a'} P(s | s', a') q[h, s', a']``."""
    H, S, A = policy.shape
    if dynamics.shape != (S, A, S):
        raise ValueError(f"dynamics shape {dynamics.shape} incompatible with policy {policy.shape}")
    q = np.zeros((H, S, A))
    d = np.zeros(S)
    d[start_state] = 1.0
    for h in range(H):
        q[h] = d[:, None] * policy[h]
        d = np.einsum("ij,ijk->k", q[h], dynamics)
    return q


def state_marginals(q: np.ndarray) -> np.ndarray:
    return q.sum(axis=2)


def occupancy_violations(q: np.ndarray, dynamics: np.ndarray, start_state: int = 0) -> dict:
    """Largest absolute violation of each polytope requirement.

    Keys ``"i"`` (range and per-step normalization), ``"ii"`` (start state)
    and ``"iii"`` (flow conservation under ``dynamics``).
    """
    H, S, _ = q.shape
    below = max(0.0, -q.min())
    above = max(0.0, q.max() - 1.0)
    norm = np.max(np.abs(q.sum(axis=(1, 2)) - 1.0))
    start = np.zeros(S)
    start[start_state] = 1.0
    v_ii = np.max(np.abs(q[0].sum(axis=1) - start))
    if H > 1:
        inflow = np.einsum("hij,ijk->hk", q[:-1], dynamics)
        v_iii = np.max(np.abs(q[1:].sum(axis=2) - inflow))
    else:
        v_iii = 0.0
    return {"i": float(max(below, above, norm)), "ii": float(v_ii), "iii": float(v_iii)}


def is_occupancy(q: np.ndarray, dynamics: np.ndarray, start_state: int = 0, tol: float = POLYTOPE_TOL) -> bool:
    return all(v <= tol for v in occupancy_violations(q, dynamics, start_state).values())


def policy_from_occupancy(q: np.ndarray) -> np.ndarray:
    """Normalize each ``q[h, s, :]``; rows with zero mass become uniform."""
    A = q.shape[2]
    mass = q.sum(axis=2, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        pi = np.where(mass > 0, q / np.where(mass > 0, mass, 1.0), 1.0 / A)
    return pi


def value_from_occupancy(q: np.ndarray, rewards: np.ndarray) -> float:
    return float(np.einsum("hsa,sa->", q, rewards))


def q_values(dynamics: np.ndarray, rewards: np.ndarray, horizon: int, policy: np.ndarray | None = None):
    """Backward induction returning ``(Q, V)`` with ``Q[h, s, a]`` and ``V[h, s]``.

    ``rewards`` is either ``r[s, a]`` or a step-dependent ``r[h, s, a]``.
    With ``policy=None`` the recursion is greedy (optimal) and ``V`` has an
    extra terminal row of zeros, as it does in the policy-evaluation case.
    """
    S, A, _ = dynamics.shape
    if rewards.ndim == 2:
        rewards = np.broadcast_to(rewards, (horizon, S, A))
    Q = np.zeros((horizon, S, A))
    V = np.zeros((horizon + 1, S))
    for h in range(horizon - 1, -1, -1):
        Q[h] = rewards[h] + dynamics @ V[h + 1]
        V[h] = Q[h].max(axis=1) if policy is None else np.sum(policy[h] * Q[h], axis=1)
    return Q, V


def value_backward_induction(dynamics: np.ndarray, rewards: np.ndarray, horizon: int, start_state: int, policy: np.ndarray) -> float:
    _, V = q_values(dynamics, rewards, horizon, policy)
    return float(V[0, start_state])


def greedy_policy(Q: np.ndarray) -> np.ndarray:
    """Deterministic argmax policy; ``np.argmax`` breaks ties toward the lowest index."""
    H, S, A = Q.shape
    pi = np.zeros((H, S, A))
    best = np.argmax(Q, axis=2)
    pi[np.arange(H)[:, None], np.arange(S)[None, :], best] = 1.0
    return pi


def optimal_policy(mdp) -> tuple[np.ndarray, float]:
    """Optimal deterministic policy of a ``TabularMDP`` and its value at ``s0``."""
    Q, V = q_values(mdp.dynamics, mdp.mean_rewards, mdp.horizon)
    return greedy_policy(Q), float(V[0, mdp.start_state])


def hellinger_sq(p: np.ndarray, q: np.ndarray) -> float:
    """Squared Hellinger distance ``sum_x (sqrt p(x) - sqrt q(x))**2`` (no 1/2 factor)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError(f"support mismatch: {p.shape} vs {q.shape}")
    return float(np.sum((np.sqrt(p) - np.sqrt(q)) ** 2))


def hellinger_sq_rows(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Row-wise squared Hellinger distance over the last axis."""
    return np.sum((np.sqrt(P) - np.sqrt(Q)) ** 2, axis=-1)
