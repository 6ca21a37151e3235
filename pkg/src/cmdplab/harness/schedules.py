"""Context schedules, i.e. the adversary's side of the protocol."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

KINDS = ("cyclic", "iid-uniform", "fixed-sequence", "max-disagreement")


@dataclass(frozen=True)
class ContextSchedule:
    kind: str = "cyclic"
    payload: Optional[Sequence[int]] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown schedule kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "fixed-sequence" and not self.payload:
            raise ValueError("fixed-sequence schedule needs a payload")

    def validate(self, num_contexts: int, T: int) -> None:
        if self.kind == "fixed-sequence":
            if len(self.payload) < T:
                raise ValueError(f"fixed-sequence payload has {len(self.payload)} entries, need T={T}")
            bad = [c for c in self.payload if not 0 <= c < num_contexts]
            if bad:
                raise ValueError(f"fixed-sequence payload has out-of-range contexts {bad[:5]}")


def disagreement(P_hat_all: np.ndarray, P_true_all: np.ndarray) -> np.ndarray:
    """Per-context sum over (s, a) of the l1 distance between next-state rows."""
    return np.abs(P_hat_all - P_true_all).sum(axis=(1, 2, 3))


def next_context(schedule: ContextSchedule, t: int, num_contexts: int, rng: np.random.Generator | None = None,
                 agent=None, cmdp=None) -> int:
    """Context for episode ``t`` (0-based).

    ``max-disagreement`` peeks at the agent's current dynamics mixture and the
    true dynamics; ties go to the lowest context id.
    """
    kind = schedule.kind
    if kind == "cyclic":
        return t % num_contexts
    if kind == "iid-uniform":
        if rng is None:
            raise ValueError("iid-uniform schedule needs an adversary rng")
        return int(rng.integers(num_contexts))
    if kind == "fixed-sequence":
        if t >= len(schedule.payload):
            raise IndexError(f"fixed-sequence schedule exhausted at t={t}")
        return int(schedule.payload[t])
    if agent is None or cmdp is None:
        raise ValueError("max-disagreement schedule needs the agent and the true CMDP")
    oracle = agent.dynamics_oracle
    P_hat_all = np.tensordot(oracle.weights, oracle.function_class.members, axes=1)
    return int(np.argmax(disagreement(P_hat_all, cmdp.dynamics_class.truth)))
