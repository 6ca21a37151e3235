"""Domain types for tabular contextual MDPs and single-episode simulation.

Tables are plain numpy arrays with fixed axis conventions:

* dynamics ``P[s, a, s']`` and per-context ``P[c, s, a, s']``
* mean rewards ``r[s, a]`` and per-context ``f[c, s, a]``
* policies ``pi[h, s, a]``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

ROW_TOL = 1e-12


class DimensionError(ValueError):
    """A table does not match the declared geometry."""


def _check_rows(P: np.ndarray, what: str, tol: float = ROW_TOL) -> None:
    if np.any(P < 0):
        raise ValueError(f"{what}: negative transition probability")
    err = np.max(np.abs(P.sum(axis=-1) - 1.0))
    if err > tol:
        raise ValueError(f"{what}: rows do not sum to 1 (max error {err:.3g})")


def _check_unit(r: np.ndarray, what: str) -> None:
    if np.any(r < 0) or np.any(r > 1):
        raise ValueError(f"{what}: entries must lie in [0, 1]")


@dataclass(frozen=True)
class TabularMDP:
    """One realized MDP: states, actions, dynamics, mean rewards, H and s0."""

    dynamics: np.ndarray
    mean_rewards: np.ndarray
    horizon: int
    start_state: int = 0

    def __post_init__(self):
        P = np.asarray(self.dynamics, dtype=float)
        r = np.asarray(self.mean_rewards, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise DimensionError(f"dynamics must have shape (S, A, S), got {P.shape}")
        if r.shape != P.shape[:2]:
            raise DimensionError(f"mean_rewards shape {r.shape} != {P.shape[:2]}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")
        if not 0 <= self.start_state < P.shape[0]:
            raise ValueError(f"start_state {self.start_state} out of range")
        _check_rows(P, "dynamics")
        _check_unit(r, "mean_rewards")
        P.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "dynamics", P)
        object.__setattr__(self, "mean_rewards", r)

    @property
    def num_states(self) -> int:
        return self.dynamics.shape[0]

    @property
    def num_actions(self) -> int:
        return self.dynamics.shape[1]


@dataclass(frozen=True)
class Geometry:
    num_states: int
    num_actions: int
    horizon: int
    start_state: int = 0


@dataclass(frozen=True)
class FunctionClass:
    """A finite, indexed family of context-dependent tables.

    ``members`` is stacked along axis 0: shape ``(N, C, S, A)`` for a reward
    class and ``(N, C, S, A, S)`` for a dynamics class. ``truth_index`` names
    the realizable member and is only read by the simulator side.
    """

    members: np.ndarray
    kind: str
    truth_index: int = 0

    def __post_init__(self):
        m = np.asarray(self.members, dtype=float)
        if self.kind not in ("reward", "dynamics"):
            raise ValueError(f"unknown function class kind {self.kind!r}")
        want = 4 if self.kind == "reward" else 5
        if m.ndim != want:
            raise DimensionError(f"{self.kind} class members must be {want}-d, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("function class is empty")
        if not 0 <= self.truth_index < m.shape[0]:
            raise ValueError(f"truth_index {self.truth_index} out of range for class of size {m.shape[0]}")
        for i in range(m.shape[0]):
            if self.kind == "reward":
                _check_unit(m[i], f"reward member {i}")
            else:
                _check_rows(m[i], f"dynamics member {i}")
        m.setflags(write=False)
        object.__setattr__(self, "members", m)

    def __len__(self) -> int:
        return self.members.shape[0]

    @property
    def num_contexts(self) -> int:
        return self.members.shape[1]

    @property
    def truth(self) -> np.ndarray:
        return self.members[self.truth_index]


@dataclass(frozen=True)
class CMDP:
    """Context -> MDP mapping backed by the true members of two function classes."""

    reward_class: FunctionClass
    dynamics_class: FunctionClass
    geometry: Geometry
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def num_contexts(self) -> int:
        return self.reward_class.num_contexts

    def mdp(self, context: int) -> TabularMDP:
        if not 0 <= context < self.num_contexts:
            raise ValueError(f"context {context} out of range")
        if context not in self._cache:
            g = self.geometry
            self._cache[context] = TabularMDP(
                self.dynamics_class.truth[context],
                self.reward_class.truth[context],
                g.horizon,
                g.start_state,
            )
        return self._cache[context]

    __call__ = mdp


def build_cmdp(reward_class: FunctionClass, dynamics_class: FunctionClass, geometry: Geometry) -> CMDP:
    """Assemble a CMDP after checking every member against ``geometry``."""
    if reward_class.kind != "reward" or dynamics_class.kind != "dynamics":
        raise ValueError("expected a reward class and a dynamics class")
    S, A = geometry.num_states, geometry.num_actions
    if geometry.horizon < 1:
        raise ValueError("horizon must be >= 1")
    if not 0 <= geometry.start_state < S:
        raise ValueError(f"start_state {geometry.start_state} out of range")
    C = reward_class.num_contexts
    if C < 1:
        raise ValueError("context space must be nonempty")
    for i, m in enumerate(reward_class.members):
        if m.shape != (C, S, A):
            raise DimensionError(f"reward member {i} has shape {m.shape}, expected {(C, S, A)}")
    for i, m in enumerate(dynamics_class.members):
        if m.shape != (C, S, A, S):
            raise DimensionError(f"dynamics member {i} has shape {m.shape}, expected {(C, S, A, S)}")
    return CMDP(reward_class, dynamics_class, geometry)


def check_policy(pi: np.ndarray, horizon: int, num_states: int, num_actions: int, tol: float = ROW_TOL) -> None:
    if pi.shape != (horizon, num_states, num_actions):
        raise DimensionError(f"policy shape {pi.shape} != {(horizon, num_states, num_actions)}")
    _check_rows(pi, "policy", tol)


def uniform_policy(horizon: int, num_states: int, num_actions: int) -> np.ndarray:
    return np.full((horizon, num_states, num_actions), 1.0 / num_actions)


@dataclass(frozen=True)
class Trajectory:
    context: int
    states: tuple
    actions: tuple
    rewards: tuple

    def transitions(self):
        """Yield ``(s_h, a_h, r_h, s_{h+1})`` for h = 0..H-1."""
        for h, a in enumerate(self.actions):
            yield self.states[h], a, self.rewards[h], self.states[h + 1]


def simulate_episode(mdp: TabularMDP, policy: np.ndarray, rng: np.random.Generator, context: int = 0) -> Trajectory:
    """Roll out ``policy`` in ``mdp`` with Bernoulli rewards.

    Draw order per step is fixed (action, reward, next state) so a seeded
    generator reproduces the trajectory exactly.
    """
    H, S, A = mdp.horizon, mdp.num_states, mdp.num_actions
    check_policy(policy, H, S, A, tol=1e-9)
    s = mdp.start_state
    states, actions, rewards = [s], [], []
    for h in range(H):
        a = int(rng.choice(A, p=policy[h, s]))
        r = float(rng.random() < mdp.mean_rewards[s, a])
        s = int(rng.choice(S, p=mdp.dynamics[s, a]))
        actions.append(a)
        rewards.append(r)
        states.append(s)
    return Trajectory(context, tuple(states), tuple(actions), tuple(rewards))
