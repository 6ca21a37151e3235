"""Run the agent against a simulated CMDP and record exact regret per episode."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..agent import Agent
from ..core import simulate_episode
from .config import ExperimentConfig
from .evaluation import CSV_COLUMNS, EpisodeRecord, OptimalValues, evaluate_episode
from .schedules import next_context

log = logging.getLogger(__name__)

ADVERSARY_STREAM = 0
EPISODE_STREAM = 1
TOL = 1e-9


class InvariantViolation(RuntimeError):
    def __init__(self, t: int, message: str):
        super().__init__(f"episode {t}: {message}")
        self.t = t


@dataclass
class SeedRun:
    seed: int
    gamma: float
    epsilon: float
    records: list = field(default_factory=list)

    @property
    def cum_regret(self) -> np.ndarray:
        return np.array([r.cum_regret for r in self.records])

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in self.records:
            w.writerow(rec.row())
        return buf.getvalue()


def _check(rec: EpisodeRecord, r_sq_bound: float, r_log_bound: float) -> None:
    t = rec.t
    if rec.inst_regret < -TOL:
        raise InvariantViolation(t, f"negative instantaneous regret {rec.inst_regret}")
    gap = abs(rec.term1 + rec.term2 + rec.term3 - rec.inst_regret)
    if gap > TOL:
        raise InvariantViolation(t, f"decomposition off by {gap}")
    if rec.e_sq_inc < 0 or rec.hellinger_inc < 0:
        raise InvariantViolation(t, "negative diagnostic increment")
    if rec.oracle_sq_regret > r_sq_bound + TOL:
        raise InvariantViolation(t, f"square-loss oracle regret {rec.oracle_sq_regret} > {r_sq_bound}")
    if rec.oracle_log_regret > r_log_bound + TOL:
        raise InvariantViolation(t, f"log-loss oracle regret {rec.oracle_log_regret} > {r_log_bound}")


def run_seed(config: ExperimentConfig, seed: int, cmdp=None) -> SeedRun:
    cmdp = cmdp if cmdp is not None else config.build()
    agent_cfg = config.agent_config()
    agent = Agent.from_config(agent_cfg, cmdp.reward_class, cmdp.dynamics_class, config.geometry)
    eta = agent.reward_oracle.learning_rate
    # exp-concavity of square loss on [0, 1] only covers eta <= 1/2
    r_sq_bound = math.log(len(cmdp.reward_class)) / eta if eta <= 0.5 else math.inf
    r_log_bound = math.log(len(cmdp.dynamics_class))
    adversary = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(ADVERSARY_STREAM,)))
    optimal = OptimalValues(cmdp)
    run = SeedRun(seed, agent.gamma, agent.epsilon)
    cum = 0.0
    for t in range(config.T):
        c = next_context(config.schedule, t, cmdp.num_contexts, adversary, agent, cmdp)
        mdp = cmdp(c)
        ep_rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(EPISODE_STREAM, t)))
        out = agent.run_episode(c, lambda pi: simulate_episode(mdp, pi, ep_rng, context=c))
        ev = evaluate_episode(cmdp, c, out.policy, out.P_hat, out.f_hat, optimal)
        cum += ev["inst_regret"]
        rec = EpisodeRecord(
            t=t, context=c, cum_regret=cum,
            fw_iters=out.solver.iterations, fw_gap=out.solver.fw_gap, converged=out.solver.converged,
            oracle_sq_regret=agent.reward_oracle.realized_regret(),
            oracle_log_regret=agent.dynamics_oracle.realized_regret(),
            **ev,
        )
        _check(rec, r_sq_bound, r_log_bound)
        run.records.append(rec)
    return run


def sqrt_fit(cum_regret: np.ndarray) -> tuple[float, float]:
    """Least-squares ``R_t ~ c sqrt(t)`` through the origin; returns ``(c, R^2)``."""
    t = np.arange(1, len(cum_regret) + 1, dtype=float)
    x = np.sqrt(t)
    c = float(x @ cum_regret / (x @ x))
    ss_res = float(np.sum((cum_regret - c * x) ** 2))
    ss_tot = float(np.sum((cum_regret - cum_regret.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    return c, r2


def summarize(runs: list[SeedRun], r_sq_bound: float, r_log_bound: float) -> dict:
    T = len(runs[0].records)
    final = np.array([r.cum_regret[-1] for r in runs])
    curves = np.array([r.cum_regret for r in runs])
    mean_curve = curves.mean(axis=0)
    c, r2 = sqrt_fit(mean_curve)
    t8 = max(1, T // 8)
    rate_T = float(np.mean(curves[:, -1] / T))
    rate_T8 = float(np.mean(curves[:, t8 - 1] / t8))
    sq = max(rec.oracle_sq_regret for r in runs for rec in r.records)
    lg = max(rec.oracle_log_regret for r in runs for rec in r.records)
    return {
        "final_regret_mean": float(final.mean()),
        "final_regret_std": float(final.std(ddof=1)) if len(final) > 1 else 0.0,
        "sqrt_fit_coefficient": c,
        "max_fw_gap": float(max(rec.fw_gap for r in runs for rec in r.records)),
        "oracle_bounds_respected": bool(sq <= r_sq_bound + TOL and lg <= r_log_bound + TOL),
        "sqrt_fit_r2": r2,
        "regret_rate_T": rate_T,
        "regret_rate_T_over_8": rate_T8,
        "regret_rate_ratio": rate_T / rate_T8 if rate_T8 > 0 else math.nan,
        "max_oracle_sq_regret": float(sq),
        "max_oracle_log_regret": float(lg),
        "unconverged_solves": int(sum(not rec.converged for r in runs for rec in r.records)),
        "gamma": runs[0].gamma,
        "epsilon": runs[0].epsilon,
        "T": T,
        "seeds": [r.seed for r in runs],
    }


@dataclass
class RunArtifact:
    runs: list
    summary: dict
    output_dir: Path | None = None


def run_experiment(config: ExperimentConfig, output_dir=None, write: bool = True) -> RunArtifact:
    """Run every seed, then write ``seed_<n>.csv`` files and ``summary.json``."""
    cmdp = config.build()
    runs = []
    for seed in config.seeds:
        log.info("seed %d: T=%d", seed, config.T)
        runs.append(run_seed(config, seed, cmdp))
    summary = summarize(runs, 2.0 * math.log(len(cmdp.reward_class)), math.log(len(cmdp.dynamics_class)))
    out = output_dir if output_dir is not None else config.output
    path = None
    if write and out is not None:
        path = Path(out)
        try:
            path.mkdir(parents=True, exist_ok=True)
            for run in runs:
                (path / f"seed_{run.seed}.csv").write_text(run.csv_text())
            (path / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")
        except OSError as e:
            raise OSError(f"cannot write run artifacts to {path}: {e}") from e
    return RunArtifact(runs, summary, path)
