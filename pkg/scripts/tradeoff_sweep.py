#!/usr/bin/env python3
"""Sweep beta on one instance and print the same-solution intervals.

Writes the trade-off curve (reward against information-to-go) as CSV so it
can be plotted with any tool.

    python scripts/tradeoff_sweep.py --seed 0 --no-prune --out results/sweep_seed0.csv
"""

import argparse
import time
from pathlib import Path

from infotrellis import SamplerConfig, SolverConfig, estimate_prior, exhaustive_search, generate_instance, sweep
from infotrellis.beta import SweepConfig, write_tradeoff_csv
from infotrellis.problem import format_path, load_instance


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--instance", default=None, help="instance JSON; default is generate_instance(seed, 8)")
    ap.add_argument("--mode", choices=("specific", "baa"), default="specific")
    ap.add_argument("--no-prune", action="store_true")
    ap.add_argument("--n1", type=int, default=SamplerConfig.n1)
    ap.add_argument("--out", default="results/sweep.csv")
    args = ap.parse_args()

    inst = load_instance(args.instance) if args.instance else generate_instance(args.seed, 8)
    prior = estimate_prior(inst, SamplerConfig(n1=args.n1, seed=args.seed))
    t0 = time.perf_counter()
    res = sweep(inst, prior, SolverConfig(mode=args.mode, prune=not args.no_prune), SweepConfig())
    took = time.perf_counter() - t0

    es = exhaustive_search(inst)
    print(f"{len(res.points)} solves in {took:.2f}s; ES optimum {format_path(es.solution)} reward {es.reward:.4f}")
    print(f"{'beta range':>16}  {'solution':<16} {'reward':>9} {'power':>6}  feasible")
    for iv in res.intervals:
        span = f"[{iv.beta_lo:.2f}, {iv.beta_hi:.2f}]"
        mark = "  <- ES" if iv.solution == es.solution else ""
        print(f"{span:>16}  {format_path(iv.solution):<16} {iv.reward:9.4f} {inst.power(iv.solution):6g}  {int(iv.feasible)}{mark}")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        write_tradeoff_csv(res.points, fh)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
