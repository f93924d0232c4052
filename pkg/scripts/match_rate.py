#!/usr/bin/env python3
"""How often does the beta sweep land on the exhaustive-search optimum?

Runs every solver configuration given on the command line over a block of
seeded instances and writes one CSV row per (config, seed).

    python scripts/match_rate.py --seeds 100 --configs pruned,unpruned,augmented
"""

import argparse
import csv
import time
from pathlib import Path

from infotrellis import SamplerConfig, SolverConfig, estimate_prior, exhaustive_search, generate_instance, sweep
from infotrellis.baselines import naive_constrained_dp, nlbb_solve
from infotrellis.problem import format_path

CONFIGS = {
    "pruned": SolverConfig(),
    "unpruned": SolverConfig(prune=False),
    "augmented": SolverConfig(augmented=True),
    "edge-ratio": SolverConfig(metric="edge_log_ratio"),
    "baa": SolverConfig(mode="baa"),
}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, default=100)
    ap.add_argument("--configs", default="pruned,unpruned")
    ap.add_argument("--n1", type=int, default=SamplerConfig.n1)
    ap.add_argument("--out", default="results/match_rate.csv")
    args = ap.parse_args()
    names = [c for c in args.configs.split(",") if c]

    rows, hits = [], dict.fromkeys(names + ["NLBB", "naive-DP"], 0)
    for seed in range(args.seeds):
        inst = generate_instance(seed, 8)
        es = exhaustive_search(inst)
        prior = estimate_prior(inst, SamplerConfig(n1=args.n1, seed=seed))
        for name in names:
            t0 = time.perf_counter()
            res = sweep(inst, prior, CONFIGS[name])
            sol = res.chosen.solution if res.chosen else None
            hit = sol == es.solution
            hits[name] += hit
            rows.append([name, seed, format_path(sol) if sol else "", int(hit), f"{time.perf_counter() - t0:.3f}"])
        for base in (nlbb_solve(inst), naive_constrained_dp(inst)):
            hit = base.solution == es.solution
            hits[base.algorithm] += hit
            rows.append([base.algorithm, seed, format_path(base.solution) if base.solution else "", int(hit), ""])
        print(f"\rseed {seed + 1}/{args.seeds}", end="", flush=True)
    print()

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["config", "seed", "solution", "matches_es", "seconds"])
        w.writerows(rows)
    for name, count in hits.items():
        print(f"{name:>12}: {count}/{args.seeds}")


if __name__ == "__main__":
    main()
