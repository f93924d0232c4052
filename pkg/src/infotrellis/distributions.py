"""Conditional transition models, KL divergence and the sampled prior."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .problem import Path, path_indices

ROW_ATOL = 1e-9


class ContractError(ValueError):
    pass


class SamplingError(RuntimeError):
    def __init__(self, attempts: int, message: str | None = None):
        self.attempts = attempts
        super().__init__(message or f"no feasible solution found in {attempts} attempts")


def kl_divergence(p_row, q_row) -> float:
    """KL(p || q) in bits, with 0 log 0 = 0 and +inf where q = 0 < p."""
    p = np.asarray(p_row, dtype=float)
    q = np.asarray(q_row, dtype=float)
    if p.shape != q.shape or p.ndim != 1:
        raise ContractError(f"rows must be 1-d and equal length, got {p.shape} and {q.shape}")
    for name, row in (("p", p), ("q", q)):
        if np.any(row < 0) or abs(row.sum() - 1.0) > ROW_ATOL:
            raise ContractError(f"{name} is not a normalised distribution (sum={row.sum()!r})")
    support = p > 0
    if np.any(q[support] == 0):
        return float("inf")
    ps, qs = p[support], q[support]
    return max(float(np.sum(ps * (np.log2(ps) - np.log2(qs)))), 0.0)


@dataclass(frozen=True, eq=False)
class ConditionalModel:
    """Stage-wise transition tables plus a distribution over the first state.

    ``tables[t, j, i]`` is Pr(X_{t+2} = alphabet[i] | X_{t+1} = alphabet[j])
    for zero-based t.  Rows whose conditioning state never occurred are
    marked in ``unsupported``.
    """

    initial: np.ndarray
    tables: np.ndarray
    unsupported: np.ndarray | None = None
    counts: np.ndarray | None = None
    initial_counts: np.ndarray | None = None

    def __post_init__(self):
        initial = np.asarray(self.initial, dtype=float)
        tables = np.asarray(self.tables, dtype=float)
        m = initial.shape[0]
        if tables.ndim != 3 or tables.shape[1:] != (m, m):
            raise ContractError(f"tables must be (N-1, {m}, {m}), got {tables.shape}")
        if np.any(initial < 0) or abs(initial.sum() - 1) > ROW_ATOL:
            raise ContractError("initial distribution not normalised")
        if np.any(tables < 0) or np.any(tables > 1) or np.any(np.abs(tables.sum(axis=2) - 1) > ROW_ATOL):
            raise ContractError("transition rows not normalised")
        unsupported = (
            np.zeros(tables.shape[:2], bool) if self.unsupported is None else np.asarray(self.unsupported, bool)
        )
        for arr in (initial, tables, unsupported):
            arr.setflags(write=False)
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "tables", tables)
        object.__setattr__(self, "unsupported", unsupported)

    @property
    def n(self) -> int:
        return self.tables.shape[0] + 1

    @property
    def m(self) -> int:
        return self.initial.shape[0]

    def row(self, t: int, j: int) -> np.ndarray:
        """Distribution of the state after stage ``t`` (1-based) given index ``j``."""
        return self.tables[t - 1, j]

    def stage_marginals(self) -> np.ndarray:
        """(N, M) marginals of each stage's state under this model."""
        out = np.empty((self.n, self.m))
        out[0] = self.initial
        for t in range(1, self.n):
            out[t] = out[t - 1] @ self.tables[t - 1]
        return out

    @classmethod
    def uniform(cls, n: int, m: int) -> "ConditionalModel":
        return cls(np.full(m, 1 / m), np.full((n - 1, m, m), 1 / m))

    def to_dict(self) -> dict:
        return {
            "initial": self.initial.tolist(),
            "tables": self.tables.tolist(),
            "unsupported": self.unsupported.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ConditionalModel":
        unknown = set(data) - {"initial", "tables", "unsupported"}
        if unknown:
            raise ContractError(f"unknown prior fields: {sorted(unknown)}")
        return cls(np.array(data["initial"]), np.array(data["tables"]), np.array(data.get("unsupported")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict()) + "\n"


@dataclass(frozen=True)
class SamplerConfig:
    k: int = 2000
    n1: int = 50
    seed: int = 0
    max_attempts: int = 1_000_000
    batch: int = 65536
    smoothing: float | None = None  # default 1 / (10 * n1)

    def __post_init__(self):
        if not (self.k >= self.n1 >= 1):
            raise ContractError(f"need k >= n1 >= 1, got k={self.k}, n1={self.n1}")
        if self.max_attempts < 1 or self.batch < 1:
            raise ContractError("max_attempts and batch must be positive")

    @property
    def epsilon(self) -> float:
        return 1.0 / (10 * self.n1) if self.smoothing is None else self.smoothing


@dataclass(frozen=True)
class SampleSet:
    solutions: list[Path]
    rewards: list[float]
    k: int
    n1: int
    attempts: int
    sampled: list[Path] = field(default_factory=list, repr=False)


def sample_feasible(instance, config: SamplerConfig) -> SampleSet:
    """Rejection-sample up to ``k`` distinct feasible solutions, keep the top ``n1``.

    Candidates are i.i.d. uniform over the alphabet at every stage.  Sampling
    stops early when ``k`` distinct feasible paths are found; running out of
    attempts with at least one hit is not an error.
    """
    rng = np.random.default_rng(config.seed)
    n, m = instance.n, instance.m
    alphabet = np.asarray(instance.alphabet)
    found: dict[Path, None] = {}
    attempts = 0
    while attempts < config.max_attempts and len(found) < config.k:
        size = min(config.batch, config.max_attempts - attempts)
        draws = rng.integers(0, m, size=(size, n))
        ok = instance.feasible_mask(draws)
        hits = np.flatnonzero(ok)
        used = size
        for pos in hits:
            found.setdefault(tuple(alphabet[draws[pos]].tolist()), None)
            if len(found) >= config.k:
                used = int(pos) + 1
                break
        attempts += used
    if not found:
        raise SamplingError(attempts)

    sampled = list(found)
    table = instance.reward_table
    rewards = {p: float(table[np.arange(n), path_indices(instance, p)].sum()) for p in sampled}
    ranked = sorted(sampled, key=lambda p: (-rewards[p], p))
    kept = ranked[: config.n1]
    return SampleSet(
        solutions=kept,
        rewards=[rewards[p] for p in kept],
        k=len(sampled),
        n1=len(kept),
        attempts=attempts,
        sampled=sampled,
    )


def prior_from_solutions(instance, solutions: list[Path], epsilon: float = 0.0) -> ConditionalModel:
    """Transition frequencies among ``solutions``, normalised per conditioning state."""
    n, m = instance.n, instance.m
    counts = np.zeros((n - 1, m, m))
    first = np.zeros(m)
    for path in solutions:
        idx = path_indices(instance, path)
        first[idx[0]] += 1
        for t in range(n - 1):
            counts[t, idx[t], idx[t + 1]] += 1
    unsupported = counts.sum(axis=2) == 0
    smoothed = counts + epsilon
    totals = smoothed.sum(axis=2, keepdims=True)
    tables = np.where(totals > 0, smoothed / np.where(totals > 0, totals, 1), 1.0 / m)
    init = first + epsilon
    return ConditionalModel(
        init / init.sum(), tables, unsupported, counts=counts, initial_counts=first
    )


def estimate_prior(instance, config: SamplerConfig | None = None) -> ConditionalModel:
    config = config or SamplerConfig()
    samples = sample_feasible(instance, config)
    return prior_from_solutions(instance, samples.solutions, config.epsilon)
