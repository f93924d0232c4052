"""Command line front end.

    infotrellis generate --seed 7 --n 8 --out inst.json
    infotrellis solve --instance inst.json --sweep --out run.json
    infotrellis compare --seeds 0:100 --out table2.csv

Randomness fans out from ``--seed``: ``SeedSequence(seed).spawn(2)`` gives
the prior sampler stream and the sigmoid noise stream, in that order.
Failures exit nonzero and print a one-line JSON object with a ``reason``.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
import warnings
from pathlib import Path

import numpy as np

from .baselines import SearchSpaceTooLarge, exhaustive_search, nlbb_solve
from .beta import BsConfig, SweepConfig, binary_search_beta, sweep, tradeoff_csv
from .conditionals import SigmoidConditionalConfig
from .distributions import SamplerConfig, SamplingError, estimate_prior
from .problem import ConfigError, dump_instance, format_path, generate_instance, load_instance
from .trellis import METRICS, NoFeasiblePathError, SolverConfig, viterbi_solve

EXIT_OK = 0
EXIT_CONFIG = 3
EXIT_SAMPLING = 4
EXIT_NO_FEASIBLE = 5
EXIT_IO = 6

COMPARE_HEADER = ["seed", "algorithm", "solution", "reward", "power", "feasible"]


class CliFailure(Exception):
    def __init__(self, code: int, reason: str, detail: str):
        super().__init__(detail)
        self.code, self.reason, self.detail = code, reason, detail


def split_seed(seed: int) -> tuple[int, int]:
    """(sampler seed, noise seed) derived from one user seed."""
    sampler, noise = np.random.SeedSequence(seed).spawn(2)
    return int(sampler.generate_state(1)[0]), int(noise.generate_state(1)[0])


def write_atomic(path, text: str) -> None:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except OSError as err:
        raise CliFailure(EXIT_IO, "io-error", f"cannot write {path}: {err}") from err


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _load(path):
    try:
        return load_instance(path)
    except OSError as err:
        raise CliFailure(EXIT_IO, "io-error", f"cannot read {path}: {err}") from err
    except (ConfigError, ValueError, KeyError, TypeError) as err:
        raise CliFailure(EXIT_CONFIG, "invalid-instance", f"{path}: {err}") from err


def _prior(instance, k, n1, seed):
    try:
        return estimate_prior(instance, SamplerConfig(k=k, n1=n1, seed=seed))
    except SamplingError as err:
        raise CliFailure(EXIT_SAMPLING, "sampling-failure", str(err)) from err


def _solver(mode, metric, prune, noise_seed):
    return SolverConfig(mode=mode, metric=metric, prune=prune, sigmoid=SigmoidConditionalConfig(noise_seed=noise_seed))


def _point_dict(pt) -> dict:
    return {
        "beta": pt.beta,
        "solution": list(pt.solution),
        "reward": pt.reward,
        "information_to_go": pt.information_to_go,
        "feasible": pt.feasible,
    }


# ---------------------------------------------------------------------------


def cmd_generate(args) -> int:
    try:
        inst = generate_instance(args.seed, args.n)
    except ConfigError as err:
        raise CliFailure(EXIT_CONFIG, "invalid-config", str(err)) from err
    write_atomic(args.out, dump_instance(inst))
    return EXIT_OK


def cmd_solve(args) -> int:
    inst = _load(args.instance)
    sampler_seed, noise_seed = split_seed(args.seed)
    prior = _prior(inst, args.prior_k, args.prior_n1, sampler_seed)
    solver = _solver(args.mode, args.metric, not args.no_prune, noise_seed)
    header = {
        "instance": str(args.instance),
        "mode": args.mode,
        "seed": args.seed,
        "streams": {"sampler": sampler_seed, "noise": noise_seed},
        "prior": {"k": args.prior_k, "n1": args.prior_n1},
        "prune": solver.prune,
    }
    out = Path(args.out)
    try:
        if args.sweep:
            res = sweep(inst, prior, solver, SweepConfig(args.beta_min, args.beta_max, args.step))
            chosen = res.chosen
            body = {
                "driver": "sweep",
                "points": len(res.points),
                "intervals": [
                    {"beta_lo": iv.beta_lo, "beta_hi": iv.beta_hi, "solution": list(iv.solution),
                     "reward": iv.reward, "power": inst.power(iv.solution), "feasible": iv.feasible}
                    for iv in res.intervals
                ],
                "chosen": None if chosen is None else res.reports[res.points.index(chosen)].to_dict(),
            }
            write_atomic(out.with_suffix(".csv") if args.csv is None else args.csv, tradeoff_csv(res.points))
        elif args.bsearch:
            res = binary_search_beta(inst, prior, solver, BsConfig(args.beta_max, args.t_range))
            chosen = res.chosen
            body = {
                "driver": "bsearch",
                "status": res.status,
                "bracket": list(res.bracket),
                "visited": [_point_dict(p) for p in res.visited],
                "chosen": None if chosen is None else _point_dict(chosen),
            }
        else:
            rep = viterbi_solve(inst, prior, args.beta, solver)
            chosen = rep if rep.feasible else None
            body = {"driver": "single", "report": rep.to_dict()}
    except NoFeasiblePathError as err:
        raise CliFailure(EXIT_NO_FEASIBLE, "no-feasible-path", str(err)) from err
    write_atomic(out, _json({**header, **body}))
    if chosen is None:
        raise CliFailure(EXIT_NO_FEASIBLE, "no-feasible-beta", "no feasible solution at the requested beta values")
    return EXIT_OK


def parse_seeds(text: str) -> list[int]:
    if ":" in text:
        lo, hi = text.split(":")
        return list(range(int(lo), int(hi)))
    return [int(s) for s in text.split(",") if s.strip()]


def compare_rows(inst, seed: int, *, k: int, n1: int, baa: bool = True, grid: SweepConfig | None = None):
    """One Table-2 block: the two trellis variants, NLBB and ES on one instance."""
    sampler_seed, noise_seed = split_seed(seed)
    prior = estimate_prior(inst, SamplerConfig(k=k, n1=n1, seed=sampler_seed))
    rows = []
    modes = ("specific", "baa") if baa else ("specific",)
    for mode in modes:
        res = sweep(inst, prior, _solver(mode, "row_kl", True, noise_seed), grid)
        rows.append(("IADP-" + mode, res.chosen.solution if res.chosen else None))
    rows.append(("NLBB", nlbb_solve(inst).solution))
    try:
        rows.append(("ES", exhaustive_search(inst).solution))
    except SearchSpaceTooLarge as err:
        warnings.warn(f"seed {seed}: {err}; comparing without ES")
    out = []
    for name, sol in rows:
        if sol is None:
            out.append([seed, name, "", "", "", 0])
            continue
        table = inst.reward_table
        value = sum(table[i, inst.symbol_index[x]] for i, x in enumerate(sol))
        out.append([seed, name, format_path(sol), repr(float(value)), repr(inst.power(sol)), int(inst.feasible(sol))])
    return out


def match_rates(rows) -> dict:
    by_seed: dict = {}
    for seed, name, sol, *_ in rows:
        by_seed.setdefault(seed, {})[name] = sol
    names = sorted({r[1] for r in rows} - {"ES"})
    rates = {}
    for name in names:
        judged = [s for s in by_seed.values() if "ES" in s and name in s]
        rates[name] = sum(s[name] == s["ES"] and s[name] != "" for s in judged) / len(judged) if judged else None
    return rates


def cmd_compare(args) -> int:
    seeds = parse_seeds(args.seeds)
    if not seeds:
        raise CliFailure(EXIT_CONFIG, "invalid-config", "no seeds given")
    fixed = _load(args.instance) if args.instance else None
    rows = []
    for seed in seeds:
        inst = fixed if fixed is not None else generate_instance(seed, args.n)
        try:
            rows.extend(compare_rows(inst, seed, k=args.prior_k, n1=args.prior_n1, baa=not args.no_baa))
        except SamplingError as err:
            raise CliFailure(EXIT_SAMPLING, "sampling-failure", f"seed {seed}: {err}") from err
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COMPARE_HEADER)
    writer.writerows(rows)
    out = Path(args.out)
    write_atomic(out, buf.getvalue())
    summary = {"seeds": len(seeds), "match_rate": match_rates(rows)}
    write_atomic(out.with_suffix(".summary.json"), _json(summary))
    print(json.dumps(summary, sort_keys=True))
    if not all(r[5] for r in rows if r[1] == "ES"):
        raise CliFailure(EXIT_NO_FEASIBLE, "no-feasible-solution", "some instance has no feasible path")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="infotrellis", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded bit-allocation instance")
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--n", type=int, default=8)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    def prior_flags(p):
        p.add_argument("--prior-k", type=int, default=SamplerConfig.k)
        p.add_argument("--prior-n1", type=int, default=SamplerConfig.n1)

    s = sub.add_parser("solve", help="estimate the prior and run the trellis")
    s.add_argument("--instance", required=True)
    s.add_argument("--mode", choices=("specific", "baa"), default="specific")
    s.add_argument("--metric", choices=METRICS, default="row_kl")
    s.add_argument("--no-prune", action="store_true", help="let the trellis keep prefixes with no feasible completion")
    which = s.add_mutually_exclusive_group(required=True)
    which.add_argument("--beta", type=float)
    which.add_argument("--sweep", action="store_true")
    which.add_argument("--bsearch", action="store_true")
    s.add_argument("--beta-min", type=float, default=SweepConfig.beta_min)
    s.add_argument("--beta-max", type=float, default=SweepConfig.beta_max)
    s.add_argument("--step", type=float, default=SweepConfig.step)
    s.add_argument("--t-range", type=float, default=BsConfig.t_range)
    prior_flags(s)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.add_argument("--csv", default=None, help="trade-off CSV path for --sweep (default: OUT with .csv)")
    s.set_defaults(func=cmd_solve)

    c = sub.add_parser("compare", help="trellis variants against NLBB and ES")
    c.add_argument("--instance", default=None, help="fixed instance; default draws one per seed")
    c.add_argument("--seeds", default="0", help="comma list or lo:hi range")
    c.add_argument("--n", type=int, default=8)
    c.add_argument("--no-baa", action="store_true")
    prior_flags(c)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliFailure as err:
        print(json.dumps({"error": err.detail, "reason": err.reason, "exit": err.code}), file=sys.stderr)
        return err.code
    except (ConfigError, ValueError) as err:
        print(json.dumps({"error": str(err), "reason": "invalid-config", "exit": EXIT_CONFIG}), file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
