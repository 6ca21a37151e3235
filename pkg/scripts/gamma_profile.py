#!/usr/bin/env python3
"""Per-episode regret against the barrier weight on the reference instance.

Two tables:

* fixed T, gamma = multiplier * tuned gamma: regret rate over the whole run
  and over its first T/8 episodes, plus the share of regret carried by the
  planning term (term2);
* tuned gamma at several horizons T, as the tuning rule prescribes.
"""

import argparse

import numpy as np

from cmdplab.agent import Agent
from cmdplab.harness import config_from_dict, run_experiment
from cmdplab.checks import reference_config_dict


def rates(art):
    curves = np.array([r.cum_regret for r in art.runs])
    T = curves.shape[1]
    t8 = max(1, T // 8)
    term2 = np.mean([sum(rec.term2 for rec in r.records) for r in art.runs])
    return curves[:, -1].mean() / T, curves[:, t8 - 1].mean() / t8, term2 / curves[:, -1].mean()


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("-T", type=int, default=2000)
    ap.add_argument("--seeds", type=int, default=2)
    ap.add_argument("--multipliers", type=float, nargs="+", default=[1, 10, 100, 1000, 10000])
    ap.add_argument("--horizons", type=int, nargs="+", default=[250, 1000, 4000])
    args = ap.parse_args()
    seeds = tuple(range(args.seeds))

    base = config_from_dict(reference_config_dict(args.T, seeds))
    cmdp = base.build()
    tuned = Agent.from_config(base.agent_config(), cmdp.reward_class, cmdp.dynamics_class, base.geometry).gamma
    print(f"T={args.T}, tuned gamma={tuned:.4f}")
    print(f"{'mult':>8} {'gamma':>10} {'rate(T)':>9} {'rate(T/8)':>10} {'ratio':>7} {'term2 share':>12}")
    for m in args.multipliers:
        r_T, r_8, share = rates(run_experiment(base.with_overrides(gamma_override=m * tuned), write=False))
        print(f"{m:8g} {m * tuned:10.4g} {r_T:9.4f} {r_8:10.4f} {r_T / r_8:7.3f} {share:12.3f}")

    print("\ntuned gamma per horizon")
    print(f"{'T':>6} {'gamma':>8} {'rate(T)':>9}")
    for T in args.horizons:
        art = run_experiment(config_from_dict(reference_config_dict(T, seeds)), write=False)
        print(f"{T:6d} {art.runs[0].gamma:8.4f} {rates(art)[0]:9.4f}")


if __name__ == "__main__":
    main()
