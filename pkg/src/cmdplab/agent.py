"""The episode loop: predict, solve the regularized problem, play, update."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import Trajectory
from .occupancy import policy_from_occupancy
from .oracles import LogLossOracle, SquareLossOracle
from .solver import SolverProblem, SolverResult, solve, solve_newton

GAMMA_CONSTANTS = {"exact-31": 31.0, "approx-62": 62.0}


def compute_gamma(num_states, num_actions, horizon, T, delta, r_sq_bound, r_log_bound, variant="approx-62") -> float:
    """Barrier weight ``sqrt(|S||A|T / (K H^3 (2 R_sq + R_log + 18 H log(2H/delta))))``.

    ``K`` is 31 for exact solutions and 62 when each round is only solved to
    ``epsilon = 1/(16 gamma T)``.
    """
    if variant not in GAMMA_CONSTANTS:
        raise ValueError(f"unknown variant {variant!r}")
    if min(num_states, num_actions, horizon, T) <= 0:
        raise ValueError("geometry and T must be positive")
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    if r_sq_bound < 0 or r_log_bound < 0:
        raise ValueError("oracle regret bounds must be nonnegative")
    k = GAMMA_CONSTANTS[variant]
    H = horizon
    denom = k * H**3 * (2 * r_sq_bound + r_log_bound + 18 * H * math.log(2 * H / delta))
    return math.sqrt(num_states * num_actions * T / denom)


@dataclass
class AgentConfig:
    horizon_T: int
    delta: float = 0.05
    variant: str = "approx-62"
    gamma_override: Optional[float] = None
    r_sq_bound: Optional[float] = None
    r_log_bound: Optional[float] = None
    square_loss_rate: float = 0.5
    solver_method: str = "newton"
    max_solver_iterations: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.horizon_T < 1:
            raise ValueError("horizon_T must be >= 1")
        if self.gamma_override is not None and not self.gamma_override > 0:
            raise ValueError("gamma_override must be positive")
        if self.solver_method not in ("frank-wolfe", "newton"):
            raise ValueError(f"unknown solver method {self.solver_method!r}")


@dataclass
class EpisodeOutput:
    """What one round of the agent produced, before any evaluation."""

    t: int
    context: int
    f_hat: np.ndarray
    P_hat: np.ndarray
    solver: SolverResult
    policy: np.ndarray
    trajectory: Trajectory


@dataclass
class Agent:
    reward_oracle: SquareLossOracle
    dynamics_oracle: LogLossOracle
    gamma: float
    epsilon: float
    horizon: int
    start_state: int = 0
    solver_method: str = "newton"
    max_solver_iterations: Optional[int] = None
    episode_index: int = field(default=0)

    @classmethod
    def from_config(cls, config: AgentConfig, reward_class, dynamics_class, geometry) -> "Agent":
        r_sq = config.r_sq_bound if config.r_sq_bound is not None else 2.0 * math.log(len(reward_class))
        r_log = config.r_log_bound if config.r_log_bound is not None else math.log(len(dynamics_class))
        if config.gamma_override is not None:
            gamma = float(config.gamma_override)
        else:
            gamma = compute_gamma(
                geometry.num_states, geometry.num_actions, geometry.horizon,
                config.horizon_T, config.delta, r_sq, r_log, config.variant,
            )
        return cls(
            SquareLossOracle(reward_class, config.square_loss_rate),
            LogLossOracle(dynamics_class),
            gamma,
            1.0 / (16.0 * gamma * config.horizon_T),
            geometry.horizon,
            geometry.start_state,
            config.solver_method,
            config.max_solver_iterations,
        )

    def predict(self, context: int) -> tuple[np.ndarray, np.ndarray]:
        return self.reward_oracle.predict(context), self.dynamics_oracle.predict(context)

    def plan(self, f_hat: np.ndarray, P_hat: np.ndarray) -> SolverResult:
        problem = SolverProblem(P_hat, f_hat, self.gamma, self.horizon, self.start_state)
        if self.solver_method == "newton":
            return solve_newton(problem, self.epsilon)
        return solve(problem, self.epsilon, self.max_solver_iterations)

    def run_episode(self, context: int, env: Callable[[np.ndarray], Trajectory]) -> EpisodeOutput:
        """One round: ``env`` plays the given policy in the true MDP and returns the trajectory."""
        f_hat, P_hat = self.predict(context)
        result = self.plan(f_hat, P_hat)
        policy = policy_from_occupancy(result.q_hat)
        traj = env(policy)
        self.reward_oracle.update(((context, s, a), r) for s, a, r, _ in traj.transitions())
        self.dynamics_oracle.update((context, s, a, s2) for s, a, _, s2 in traj.transitions())
        out = EpisodeOutput(self.episode_index, context, f_hat, P_hat, result, policy, traj)
        self.episode_index += 1
        return out
