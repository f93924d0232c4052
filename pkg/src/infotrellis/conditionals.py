"""Forward conditionals p(X_{t+1} | prefix).

``sigmoid_conditional`` is the bit-allocation specific builder: it scores each
next symbol by how much power would be left after choosing it.
``baa_conditional`` obtains a stage's rows from Blahut-Arimoto style
alternating updates of a marginal and a conditional.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from .problem import BitAllocInstance, Path


@dataclass(frozen=True)
class SigmoidConditionalConfig:
    sigma: float = 1e-3
    noise_seed: int = 0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"sigma must be >= 0, got {self.sigma}")


@dataclass(frozen=True)
class BaaConfig:
    max_iters: int = 200
    tolerance: float = 1e-8
    beta: float = 0.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be > 0")


def _noise(config: SigmoidConditionalConfig, key, m: int) -> np.ndarray:
    if config.sigma == 0:
        return np.zeros(m)
    # keyed on what the row depends on, so an edge is priced the same every time it is seen
    stage, last, used = key
    rng = np.random.default_rng([config.noise_seed, stage, last, int(round(used))])
    return rng.normal(0.0, config.sigma, size=m)


def sigmoid_conditional(
    instance: BitAllocInstance, prefix: Path, config: SigmoidConditionalConfig | None = None
) -> tuple[np.ndarray, bool]:
    """Row over the next symbol given ``prefix``; second value flags an exhausted row.

    Symbols above ``prefix[-1]`` are masked out (the bits must not increase).
    When every allowed weight is zero the row collapses onto the largest
    allowed symbol.
    """
    if len(prefix) < 1:
        raise ValueError("prefix must hold at least one symbol")
    config = config or SigmoidConditionalConfig()
    symbols = np.asarray(instance.alphabet, dtype=float)
    used = instance.power(prefix)
    residual = instance.p_b - (used + np.power(2.0, symbols))
    weights = expit(residual) + _noise(config, (len(prefix), prefix[-1], used), len(symbols))
    allowed = symbols <= prefix[-1]
    weights = np.where(allowed, np.clip(weights, 0.0, None), 0.0)
    total = weights.sum()
    if total <= 0:
        row = np.zeros(len(symbols))
        row[np.flatnonzero(allowed)[-1]] = 1.0
        return row, True
    return weights / total, False


def _log_rows(log_marginal, G, beta, mask):
    with np.errstate(under="ignore"):
        return _log_rows_raw(log_marginal, G, beta, mask)


def _log_rows_raw(log_marginal, G, beta, mask):
    logits = log_marginal[None, :] - beta * G
    if mask is not None:
        logits = np.where(mask, logits, -np.inf)
    norm = logsumexp(logits, axis=1, keepdims=True)
    dead = ~np.isfinite(norm[:, 0])
    if np.any(dead):
        # no allowed symbol carries marginal mass: spread evenly over what is allowed
        allowed = np.ones_like(logits, bool) if mask is None else np.asarray(mask, bool)
        logits[dead] = np.where(allowed[dead], 0.0, -np.inf)
        norm[dead] = logsumexp(logits[dead], axis=1, keepdims=True)
    return logits - norm


def baa_update(p_conditional, p_marginal_prev, G, beta: float, mask=None):
    """One synchronous sweep of the self-consistent equations.

    ``p_marginal_prev`` holds the weights of the conditioning states.  The new
    marginal is their mixture of the current rows; each new row is that
    marginal tilted by ``exp(-beta * G)`` and renormalised.  ``G`` may be a
    vector (one value per next symbol) or an (M, M) table indexed
    ``[current, next]``.  Returns ``(rows, marginal)``.
    """
    cond = np.asarray(p_conditional, dtype=float)
    weights = np.asarray(p_marginal_prev, dtype=float)
    G = np.broadcast_to(np.asarray(G, dtype=float), cond.shape)
    marginal = weights @ cond
    with np.errstate(divide="ignore", under="ignore"):
        log_marginal = np.log(marginal)
        rows = np.exp(_log_rows(log_marginal, G, beta, mask))
    return rows, marginal


def free_energy(p_conditional, marginal, weights, G, beta: float) -> float:
    """sum_j w_j sum_i c(i|j) [ln c(i|j)/m(i) + beta G(j,i)], the functional BAA descends."""
    c = np.asarray(p_conditional, dtype=float)
    G = np.broadcast_to(np.asarray(G, dtype=float), c.shape)
    with np.errstate(divide="ignore", invalid="ignore", under="ignore"):
        term = np.where(c > 0, c * (np.log(c) - np.log(marginal)[None, :] + beta * G), 0.0)
    return float(np.asarray(weights) @ term.sum(axis=1))


@dataclass(frozen=True)
class BaaResult:
    rows: np.ndarray
    marginal: np.ndarray
    iterations: int
    converged: bool
    trace: list[float]


def baa_conditional(
    prior_marginal,
    source_weights,
    value_estimates,
    config: BaaConfig,
    mask=None,
    track: bool = False,
) -> BaaResult:
    """Iterate ``baa_update`` until the largest row L1 change drops below tolerance.

    Starts from rows equal to ``prior_marginal``.  ``value_estimates`` is the
    per-candidate value table fed to the exponent.  ``iterations`` counts
    sweeps, so a start at the fixed point reports 1.
    """
    m = len(prior_marginal)
    weights = np.asarray(source_weights, dtype=float)
    G = np.broadcast_to(np.asarray(value_estimates, dtype=float), (m, m))
    rows = np.tile(np.asarray(prior_marginal, dtype=float), (m, 1))
    if mask is not None:
        rows = np.exp(_log_rows(np.log(rows[0]), np.zeros((m, m)), 0.0, mask))
    trace = []
    converged = False
    k = 0
    for k in range(1, config.max_iters + 1):
        new_rows, marginal = baa_update(rows, weights, G, config.beta, mask)
        change = np.abs(new_rows - rows).sum(axis=1).max()
        rows = new_rows
        if track:
            trace.append(free_energy(rows, weights @ rows, weights, G, config.beta))
        if change < config.tolerance:
            converged = True
            break
    return BaaResult(rows, weights @ rows, k, converged, trace)
