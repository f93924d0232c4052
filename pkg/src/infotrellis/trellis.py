"""Viterbi search with an information-assisted path metric.

Each edge out of a survivor at stage t costs

    D(p(.|prefix) || q_t(.|x_t)) - beta * reward_{t+1}(x_{t+1})

(``metric="row_kl"``), or the per-edge log ratio
``log2 p(x'|prefix) / q_t(x'|x_t)`` in place of the divergence
(``metric="edge_log_ratio"``).  Stage one is anchored by ``-log2 q(X_1)``.
All information terms are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .conditionals import BaaConfig, SigmoidConditionalConfig, baa_conditional, sigmoid_conditional
from .distributions import ConditionalModel, kl_divergence
from .problem import BitAllocInstance, Path, format_path

MODES = ("specific", "baa", "fixed")
METRICS = ("row_kl", "edge_log_ratio")


class NoFeasiblePathError(RuntimeError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    mode: str = "specific"
    metric: str = "row_kl"
    prune: bool = True
    augmented: bool = False
    sigmoid: SigmoidConditionalConfig = field(default_factory=SigmoidConditionalConfig)
    baa: BaaConfig = field(default_factory=BaaConfig)

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {self.metric!r}")


@dataclass(frozen=True)
class Survivor:
    stage: int
    symbol: int
    metric: float
    back_pointer: int | None
    prefix: Path
    anchor: float
    ig_accum: float
    reward_accum: float


@dataclass(frozen=True)
class SolveReport:
    beta: float
    solution: Path
    reward: float
    information_to_go: float
    anchor_bits: float
    metric: float
    feasible: bool
    counters: dict
    conditional_mode: str
    metric_kind: str = "row_kl"
    flags: dict = field(default_factory=dict)

    @property
    def n_iter(self) -> float:
        """Average BAA sweeps per stage (0 outside BAA mode)."""
        stages = len(self.solution) - 1
        return self.counters.get("baa_iters_total", 0) / stages if stages else 0.0

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "solution": list(self.solution),
            "reward": self.reward,
            "information_to_go": self.information_to_go,
            "anchor_bits": self.anchor_bits,
            "metric": self.metric,
            "feasible": self.feasible,
            "counters": dict(self.counters),
            "conditional_mode": self.conditional_mode,
            "metric_kind": self.metric_kind,
            "flags": dict(self.flags),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SolveReport":
        data = dict(data)
        data["solution"] = tuple(data["solution"])
        return cls(**data)

    def label(self) -> str:
        return format_path(self.solution)


def path_metric_increment(p_row, q_row, beta: float, candidate_reward: float, metric="row_kl", index=None) -> float:
    if metric == "row_kl":
        info = kl_divergence(p_row, q_row)
    else:
        info = _log_ratio(p_row[index], q_row[index])
    return info - beta * candidate_reward


def _log_ratio(p: float, q: float) -> float:
    if p <= 0:
        return math.inf  # the conditional rules this edge out
    if q <= 0:
        return math.inf
    return math.log2(p) - math.log2(q)


def information_to_go(report: SolveReport) -> float:
    return report.information_to_go


def _specific_row(instance, prefix, config: SolverConfig):
    if isinstance(instance, BitAllocInstance):
        return sigmoid_conditional(instance, prefix, config.sigmoid)
    if instance.conditional is None:
        raise ValueError("specific mode needs an instance-supplied conditional builder")
    row = np.asarray(instance.conditional(prefix), dtype=float)
    return row, False


def _info_terms(p_row, q_row, metric):
    if metric == "row_kl":
        return np.full(len(p_row), kl_divergence(p_row, q_row))
    return np.array([_log_ratio(p, q) for p, q in zip(p_row, q_row)])


def viterbi_solve(
    instance,
    prior: ConditionalModel,
    beta: float,
    config: SolverConfig | None = None,
    *,
    conditional_model: ConditionalModel | None = None,
    cache: dict | None = None,
) -> SolveReport:
    """Minimise information-to-go minus ``beta`` times reward over the trellis.

    One survivor is kept per node: the symbol in the plain trellis, or
    (symbol, power used so far) with ``augmented=True``.  Ties go to the
    smaller predecessor symbol.  The returned path is the metric optimum even
    when it violates the constraints; ``feasible`` says which.

    ``cache`` may be shared between solves with the same instance, prior and
    config (a beta sweep) to reuse conditional rows; counters are unaffected.
    """
    config = config or SolverConfig()
    if config.mode == "fixed" and conditional_model is None:
        raise ValueError("fixed mode needs conditional_model")
    n, m = instance.n, instance.m
    if prior.n != n or prior.m != m:
        raise ValueError(f"prior shape ({prior.n}, {prior.m}) does not match instance ({n}, {m})")
    alphabet = instance.alphabet
    index = instance.symbol_index
    R = instance.reward_table
    mask = instance.transition_mask
    cache = {} if cache is None else cache
    if config.augmented:
        def node_key(prefix):
            return instance.prefix_key(prefix)[1:]
    else:
        def node_key(prefix):
            return prefix[-1]

    counters = {"acs_ops": 0, "conditional_evals": 0, "baa_iters_total": 0}
    flags = {"exhausted_rows": 0, "baa_unconverged": 0, "pruned_edges": 0}

    def admissible(prefix):
        if not config.prune:
            return True
        # the last edge is never pruned: feasibility of a full path is reported, not enforced
        return len(prefix) == n or instance.partially_feasible(prefix)

    layer: dict = {}
    # The plain trellis is charged for its full structure: a node without a
    # survivor is a +inf state that still occupies its M slots.  The first
    # layer counts as one M x M sweep.
    counters["acs_ops"] += m * m
    for i, x in enumerate(alphabet):
        prefix = (x,)
        if not admissible(prefix):
            flags["pruned_edges"] += 1
            continue
        q0 = prior.initial[i]
        anchor = -math.log2(q0) if q0 > 0 else math.inf
        layer[node_key(prefix)] = Survivor(1, x, anchor - beta * R[0, i], None, prefix, anchor, 0.0, R[0, i])
    history = [layer]

    marginals = prior.stage_marginals() if config.mode == "baa" else None
    for t in range(1, n):
        ordered = sorted(layer.values(), key=lambda s: (s.symbol, s.metric, s.prefix))
        baa_rows = None
        if config.mode == "baa":
            best = np.full(m, np.nan)
            for s in ordered:
                j = index[s.symbol]
                if np.isnan(best[j]) and math.isfinite(s.metric):
                    best[j] = s.metric
            G = np.nan_to_num(best, nan=0.0)[:, None] - beta * R[t][None, :]
            res = baa_conditional(
                marginals[t], marginals[t - 1], G, replace(config.baa, beta=beta), mask=mask
            )
            baa_rows = res.rows
            counters["baa_iters_total"] += res.iterations
            counters["conditional_evals"] += res.iterations * m * m
            flags["baa_unconverged"] += int(not res.converged)

        slots = len(ordered) if config.augmented else m
        counters["acs_ops"] += slots * m
        if config.mode != "baa":
            counters["conditional_evals"] += slots * m
        new_layer: dict = {}
        for s in ordered:
            j = index[s.symbol]
            q_row = prior.tables[t - 1, j]
            if config.mode == "specific":
                key = ("specific", config.metric, instance.prefix_key(s.prefix))
                hit = cache.get(key)
                if hit is None:
                    p_row, exhausted = _specific_row(instance, s.prefix, config)
                    hit = cache[key] = (p_row, exhausted, _info_terms(p_row, q_row, config.metric))
                p_row, exhausted, info = hit
                flags["exhausted_rows"] += int(exhausted)
            elif config.mode == "fixed":
                key = ("fixed", config.metric, t, j)
                info = cache.get(key)
                if info is None:
                    info = cache[key] = _info_terms(conditional_model.tables[t - 1, j], q_row, config.metric)
            else:
                info = _info_terms(baa_rows[j], q_row, config.metric)

            for i, x in enumerate(alphabet):
                if not mask[j, i]:
                    continue
                inc = info[i]
                cand = s.metric + inc - beta * R[t, i]
                if not cand < math.inf:
                    continue
                prefix = s.prefix + (x,)
                if not admissible(prefix):
                    flags["pruned_edges"] += 1
                    continue
                k = node_key(prefix)
                cur = new_layer.get(k)
                if cur is None or cand < cur.metric:
                    new_layer[k] = Survivor(
                        t + 1, x, cand, s.symbol, prefix, s.anchor, s.ig_accum + inc, s.reward_accum + R[t, i]
                    )
        layer = new_layer
        history.append(layer)

    if not layer:
        raise NoFeasiblePathError(f"every terminal node was pruned (beta={beta})")
    winner = min(layer.values(), key=lambda s: (s.metric, s.symbol, s.prefix))
    solution = _backtrace(history, winner, node_key)
    return SolveReport(
        beta=float(beta),
        solution=solution,
        reward=float(winner.reward_accum),
        information_to_go=float(winner.ig_accum),
        anchor_bits=float(winner.anchor),
        metric=float(winner.metric),
        feasible=bool(instance.feasible(solution)),
        counters=counters,
        conditional_mode=config.mode,
        metric_kind=config.metric,
        flags=flags,
    )


def _backtrace(history, winner: Survivor, node_key) -> Path:
    path = [winner.symbol]
    node = winner
    for layer in reversed(history[:-1]):
        if node.back_pointer is None:
            break
        node = layer[node_key(node.prefix[:-1])]
        path.append(node.symbol)
    path = tuple(reversed(path))
    assert path == winner.prefix
    return path

