"""Command-line entry point: ``cmdplab {run,check,sweep,solve}``.

Exit codes: 0 success, 1 invariant breach or failed check, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .harness import ConfigError, InvariantViolation, load_config, run_experiment
from .oracles import RealizabilityError
from .solver import SolverProblem, solve, solve_newton

SWEEP_FIELDS = ("final_regret_mean", "final_regret_std", "sqrt_fit_coefficient", "max_fw_gap", "oracle_bounds_respected")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep usage on stderr
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="cmdplab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--output", help="directory for CSV and summary (overrides the config)")
    run.add_argument("--seeds", type=int, nargs="+")
    run.add_argument("-T", type=int, dest="T")

    chk = sub.add_parser("check", help="randomized invariant suite")
    chk.add_argument("--fast", action="store_true", help="smaller instance counts")

    sw = sub.add_parser("sweep", help="grid over an agent override")
    sw.add_argument("config")
    sw.add_argument("--param", required=True, choices=["gamma"])
    sw.add_argument("--values", required=True, type=float, nargs="+")
    sw.add_argument("--relative", action="store_true", help="values are multiples of the tuned gamma")
    sw.add_argument("--output")
    sw.add_argument("--seeds", type=int, nargs="+")
    sw.add_argument("-T", type=int, dest="T")

    sv = sub.add_parser("solve", help="solve one regularized occupancy problem from JSON")
    sv.add_argument("problem")
    sv.add_argument("--epsilon", type=float)
    sv.add_argument("--method", choices=["frank-wolfe", "newton"])
    return p


def _load(path, seeds=None, T=None):
    cfg = load_config(path)
    changes = {}
    if seeds:
        changes["seeds"] = seeds
    if T:
        changes["T"] = T
    return cfg.with_overrides(**changes) if changes else cfg


def cmd_run(args) -> int:
    cfg = _load(args.config, args.seeds, args.T)
    art = run_experiment(cfg, output_dir=args.output)
    print(json.dumps(art.summary, indent=2))
    if art.output_dir is not None:
        print(f"wrote {art.output_dir}", file=sys.stderr)
    return 0


def cmd_check(args) -> int:
    from .checks import run_all

    results = run_all(fast=args.fast)
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def cmd_sweep(args) -> int:
    from .agent import Agent

    cfg = _load(args.config, args.seeds, args.T)
    gammas = list(args.values)
    if args.relative:
        cmdp = cfg.build()
        tuned = Agent.from_config(cfg.agent_config(), cmdp.reward_class, cmdp.dynamics_class, cfg.geometry).gamma
        gammas = [v * tuned for v in gammas]
    rows = []
    for value, gamma in zip(args.values, gammas):
        art = run_experiment(cfg.with_overrides(gamma_override=gamma), write=False)
        row = {"param": args.param, "value": value, "gamma": gamma}
        row.update({k: art.summary[k] for k in SWEEP_FIELDS})
        rows.append(row)
        print(" ".join(f"{k}={v:.6g}" if isinstance(v, float) else f"{k}={v}" for k, v in row.items()))
    out = args.output or cfg.output
    if out is not None:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / "sweep.json").write_text(json.dumps(rows, indent=2) + "\n")
    return 0


def load_problem(path) -> tuple[SolverProblem, dict]:
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as e:
        raise ConfigError(f"problem file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    try:
        prob = SolverProblem(
            np.asarray(doc["dynamics"], dtype=float),
            np.asarray(doc["rewards"], dtype=float),
            float(doc["gamma"]),
            int(doc["horizon"]),
            int(doc.get("start_state", 0)),
        )
    except KeyError as e:
        raise ConfigError(f"{path}: missing field {e}") from e
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    return prob, doc


def cmd_solve(args) -> int:
    prob, doc = load_problem(args.problem)
    eps = args.epsilon or float(doc.get("epsilon", 1e-8))
    method = args.method or doc.get("method", "frank-wolfe")
    res = solve(prob, eps) if method == "frank-wolfe" else solve_newton(prob, eps)
    out = res.summary()
    out["q_hat"] = res.q_hat.tolist()
    print(json.dumps(out, indent=2))
    return 0


COMMANDS = {"run": cmd_run, "check": cmd_check, "sweep": cmd_sweep, "solve": cmd_solve}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, FileNotFoundError) as e:
        print(f"cmdplab: {e}", file=sys.stderr)
        return 2
    except (InvariantViolation, RealizabilityError) as e:
        print(f"cmdplab: invariant breach: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
