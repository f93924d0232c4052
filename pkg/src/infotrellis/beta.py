"""Drivers over the Lagrange multiplier: grid sweeps and bisection."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .distributions import ConditionalModel
from .problem import Path, format_path, parse_path
from .trellis import SolveReport, SolverConfig, viterbi_solve

CSV_HEADER = ["beta", "reward", "ig_bits", "feasible", "solution"]


@dataclass(frozen=True)
class SweepConfig:
    beta_min: float = 0.0
    beta_max: float = 10.0
    step: float = 0.01

    def __post_init__(self):
        if self.beta_min > self.beta_max:
            raise ValueError("beta_min must not exceed beta_max")
        if not self.step > 0:
            raise ValueError("step must be positive")

    def grid(self) -> np.ndarray:
        count = int(math.floor((self.beta_max - self.beta_min) / self.step + 1e-9))
        return np.round(self.beta_min + self.step * np.arange(count + 1), 12)


@dataclass(frozen=True)
class BsConfig:
    beta_max: float = 10.0
    t_range: float = 0.01

    def __post_init__(self):
        if not self.t_range > 0:
            raise ValueError("t_range must be positive")
        if not self.t_range < self.beta_max:
            raise ValueError("t_range must be below beta_max")

    @property
    def max_solves(self) -> int:
        return math.ceil(math.log2(self.beta_max / self.t_range)) + 2


@dataclass(frozen=True)
class TradeoffPoint:
    beta: float
    solution: Path
    reward: float
    information_to_go: float
    feasible: bool

    @classmethod
    def from_report(cls, report: SolveReport) -> "TradeoffPoint":
        return cls(report.beta, report.solution, report.reward, report.information_to_go, report.feasible)


@dataclass(frozen=True)
class Interval:
    beta_lo: float
    beta_hi: float
    solution: Path
    reward: float
    feasible: bool


@dataclass
class SweepResult:
    points: list[TradeoffPoint]
    reports: list[SolveReport] = field(repr=False)
    chosen: TradeoffPoint | None
    intervals: list[Interval]

    @property
    def feasible_found(self) -> bool:
        return self.chosen is not None


def choose(points) -> TradeoffPoint | None:
    """Feasible point of largest reward; the smallest beta wins ties."""
    best = None
    for pt in points:
        if pt.feasible and (best is None or pt.reward > best.reward):
            best = pt
    return best


def intervals_of(points) -> list[Interval]:
    runs: list[Interval] = []
    for pt in points:
        if runs and runs[-1].solution == pt.solution:
            last = runs[-1]
            runs[-1] = Interval(last.beta_lo, pt.beta, last.solution, last.reward, last.feasible)
        else:
            runs.append(Interval(pt.beta, pt.beta, pt.solution, pt.reward, pt.feasible))
    return runs


def sweep(
    instance,
    prior: ConditionalModel,
    solver: SolverConfig | None = None,
    config: SweepConfig | None = None,
    **solve_kwargs,
) -> SweepResult:
    solver = solver or SolverConfig()
    config = config or SweepConfig()
    cache: dict = {}
    reports = [viterbi_solve(instance, prior, float(b), solver, cache=cache, **solve_kwargs) for b in config.grid()]
    points = [TradeoffPoint.from_report(r) for r in reports]
    return SweepResult(points, reports, choose(points), intervals_of(points))


def reward_violations(points) -> int:
    """Number of grid steps where the reward drops as beta grows."""
    return sum(1 for a, b in zip(points, points[1:]) if b.reward < a.reward - 1e-12)


@dataclass
class BsResult:
    chosen: TradeoffPoint | None
    visited: list[TradeoffPoint]
    status: str  # "ok", "no-transition" or "no-feasible-anchor"
    bracket: tuple[float, float]


def binary_search_beta(
    instance,
    prior: ConditionalModel,
    solver: SolverConfig | None = None,
    config: BsConfig | None = None,
    **solve_kwargs,
) -> BsResult:
    """Bisect on feasibility of the beta-solution between 0 and ``beta_max``.

    Keeps the solve at the lower end feasible and the upper end infeasible.
    Returns the best feasible visited point, so a non-monotone feasibility
    pattern still yields a valid answer.
    """
    solver = solver or SolverConfig()
    config = config or BsConfig()
    cache: dict = {}
    visited: list[TradeoffPoint] = []

    def solve(b: float) -> TradeoffPoint:
        pt = TradeoffPoint.from_report(viterbi_solve(instance, prior, b, solver, cache=cache, **solve_kwargs))
        visited.append(pt)
        return pt

    lo, hi = 0.0, float(config.beta_max)
    if not solve(lo).feasible:
        return BsResult(None, visited, "no-feasible-anchor", (lo, hi))
    if solve(hi).feasible:
        return BsResult(choose(visited), visited, "no-transition", (hi, hi))
    while hi - lo >= config.t_range:
        mid = 0.5 * (lo + hi)
        if solve(mid).feasible:
            lo = mid
        else:
            hi = mid
    return BsResult(choose(visited), visited, "ok", (lo, hi))


def write_tradeoff_csv(points, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for pt in points:
        writer.writerow([repr(pt.beta), repr(pt.reward), repr(pt.information_to_go), int(pt.feasible), format_path(pt.solution)])


def tradeoff_csv(points) -> str:
    buf = io.StringIO()
    write_tradeoff_csv(points, buf)
    return buf.getvalue()


def read_tradeoff_csv(fh) -> list[TradeoffPoint]:
    reader = csv.reader(fh)
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected trade-off header {header}")
    return [
        TradeoffPoint(float(b), parse_path(s), float(r), float(ig), bool(int(f)))
        for b, r, ig, f, s in reader
    ]
