#!/usr/bin/env python3
"""Run an experiment config (default: configs/reference.yaml) and print the regret-rate statistics."""

import argparse
import json
import logging
from pathlib import Path

from cmdplab.harness import load_config, run_experiment

ROOT = Path(__file__).resolve().parent.parent


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config", nargs="?", default=str(ROOT / "configs" / "reference.yaml"))
    ap.add_argument("--output")
    ap.add_argument("-T", type=int)
    ap.add_argument("--seeds", type=int, nargs="+")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")

    cfg = load_config(args.config)
    changes = {k: v for k, v in (("T", args.T), ("seeds", args.seeds)) if v}
    if changes:
        cfg = cfg.with_overrides(**changes)
    art = run_experiment(cfg, output_dir=args.output)
    s = art.summary
    print(json.dumps(s, indent=2))
    print(f"rate at T     : {s['regret_rate_T']:.4f}")
    print(f"rate at T/8   : {s['regret_rate_T_over_8']:.4f}")
    print(f"ratio         : {s['regret_rate_ratio']:.3f}  (sublinear target <= 0.5)")
    print(f"sqrt fit R^2  : {s['sqrt_fit_r2']:.3f}  (target >= 0.9)")


if __name__ == "__main__":
    main()
