"""Exact per-episode evaluation: regret, its three-way decomposition, diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from ..occupancy import compute_occupancy, hellinger_sq_rows, optimal_policy, value_backward_induction

CSV_COLUMNS = (
    "t", "context", "value_opt", "value_played", "inst_regret", "cum_regret",
    "term1", "term2", "term3", "e_sq_inc", "hellinger_inc",
    "fw_iters", "fw_gap", "converged", "oracle_sq_regret", "oracle_log_regret",
)


@dataclass
class EpisodeRecord:
    t: int
    context: int
    value_opt: float
    value_played: float
    inst_regret: float
    cum_regret: float
    term1: float
    term2: float
    term3: float
    e_sq_inc: float
    hellinger_inc: float
    fw_iters: int
    fw_gap: float
    converged: bool
    oracle_sq_regret: float
    oracle_log_regret: float

    def row(self) -> list[str]:
        out = []
        for name in CSV_COLUMNS:
            v = getattr(self, name)
            if isinstance(v, bool):
                out.append(str(int(v)))
            elif isinstance(v, (int, np.integer)):
                out.append(str(int(v)))
            else:
                out.append(f"{float(v):.17g}")
        return out


assert tuple(f.name for f in fields(EpisodeRecord)) == CSV_COLUMNS


class OptimalValues:
    """Per-context optimal policy and value of the true CMDP, computed once."""

    def __init__(self, cmdp):
        self.cmdp = cmdp
        self._cache = {}

    def __getitem__(self, context: int):
        if context not in self._cache:
            self._cache[context] = optimal_policy(self.cmdp(context))
        return self._cache[context]


def evaluate_episode(cmdp, context: int, policy: np.ndarray, P_hat: np.ndarray, f_hat: np.ndarray,
                     optimal: OptimalValues | None = None) -> dict:
    """Exact values and diagnostics for one played policy.

    Returns ``value_opt``, ``value_played``, ``inst_regret``, the terms
    ``term1`` (pi* on true vs. estimated model), ``term2`` (pi* vs. pi_t on
    the estimated model) and ``term3`` (pi_t on estimated vs. true model),
    plus the expected squared reward error and expected squared Hellinger
    distance along the true occupancy of ``policy``.
    """
    mdp = cmdp(context)
    pi_star, value_opt = optimal[context] if optimal is not None else optimal_policy(mdp)
    P, r, H, s0 = mdp.dynamics, mdp.mean_rewards, mdp.horizon, mdp.start_state
    value_played = value_backward_induction(P, r, H, s0, policy)
    v_star_hat = value_backward_induction(P_hat, f_hat, H, s0, pi_star)
    v_play_hat = value_backward_induction(P_hat, f_hat, H, s0, policy)
    q_true = compute_occupancy(policy, P, s0)
    occ = q_true.sum(axis=0)
    return {
        "value_opt": value_opt,
        "value_played": value_played,
        "inst_regret": value_opt - value_played,
        "term1": value_opt - v_star_hat,
        "term2": v_star_hat - v_play_hat,
        "term3": v_play_hat - value_played,
        "e_sq_inc": float(np.sum(occ * (f_hat - r) ** 2)),
        "hellinger_inc": float(np.sum(occ * hellinger_sq_rows(P, P_hat))),
    }
