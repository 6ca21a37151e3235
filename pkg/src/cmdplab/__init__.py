"""Regret-minimization lab for adversarial contextual MDPs with a log-barrier planner."""

from .agent import Agent, AgentConfig, compute_gamma
from .core import CMDP, FunctionClass, Geometry, TabularMDP, Trajectory, build_cmdp, simulate_episode
from .occupancy import (
    compute_occupancy,
    hellinger_sq,
    optimal_policy,
    policy_from_occupancy,
    value_backward_induction,
    value_from_occupancy,
)
from .oracles import LogLossOracle, RealizabilityError, SquareLossOracle
from .solver import SolverProblem, SolverResult, solve, solve_newton

__version__ = "0.1.0"
