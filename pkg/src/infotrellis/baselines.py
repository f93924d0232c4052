"""Reference solvers: exhaustive search, branch and bound, naive constrained DP."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .problem import Path

DEFAULT_CAP = 2**24


class SearchSpaceTooLarge(ValueError):
    def __init__(self, size: int, cap: int):
        self.size, self.cap = size, cap
        super().__init__(f"search space has {size} paths, above the cap of {cap}")


@dataclass(frozen=True)
class BaselineResult:
    algorithm: str
    solution: Path | None
    reward: float | None
    nodes: int = 0

    @property
    def found(self) -> bool:
        return self.solution is not None


def _index_block(m: int, width: int) -> np.ndarray:
    """All length-``width`` index tuples in lexicographic order."""
    if width == 0:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.indices((m,) * width).reshape(width, -1).T
    return grids.astype(np.int64)


def exhaustive_search(instance, cap: int = DEFAULT_CAP, block: int = 2**16) -> BaselineResult:
    """Enumerate every path; the lexicographically first reward maximum wins."""
    n, m = instance.n, instance.m
    size = m**n
    if size > cap:
        raise SearchSpaceTooLarge(size, cap)
    tail = min(n, max(1, int(math.log(block, m))))
    head = n - tail
    tails = _index_block(m, tail)
    heads = _index_block(m, head)
    table = instance.reward_table
    tail_reward = table[np.arange(head, n), tails].sum(axis=1)
    best_reward, best = -math.inf, None
    for h in heads:
        paths = np.hstack([np.broadcast_to(h, (len(tails), head)), tails])
        ok = instance.feasible_mask(paths)
        if not ok.any():
            continue
        rewards = table[np.arange(head), h].sum() + tail_reward
        rewards = np.where(ok, rewards, -np.inf)
        pos = int(np.argmax(rewards))
        if rewards[pos] > best_reward:
            best_reward, best = float(rewards[pos]), paths[pos]
    if best is None:
        return BaselineResult("ES", None, None, size)
    alphabet = instance.alphabet
    return BaselineResult("ES", tuple(alphabet[i] for i in best), best_reward, size)


def nlbb_solve(instance, prune: bool = True) -> BaselineResult:
    """Depth-first branch and bound over the symbol tree.

    A node is cut when its prefix has no feasible completion, or when its
    reward plus the best column value of every remaining stage cannot beat
    the incumbent.  Children are visited in alphabet order.
    """
    n = instance.n
    table = instance.reward_table
    alphabet = instance.alphabet
    col_max = table.max(axis=1)
    optimistic_tail = np.concatenate([np.cumsum(col_max[::-1])[::-1], [0.0]])
    best = {"reward": -math.inf, "path": None}
    visits = 0

    def dfs(prefix: Path, value: float):
        nonlocal visits
        k = len(prefix)
        for i, x in enumerate(alphabet):
            visits += 1
            child = prefix + (x,)
            child_value = value + table[k, i]
            if k + 1 == n:
                if child_value > best["reward"] and instance.feasible(child):
                    best["reward"], best["path"] = child_value, child
                continue
            if prune:
                if not instance.partially_feasible(child):
                    continue
                if child_value + optimistic_tail[k + 1] <= best["reward"]:
                    continue
            dfs(child, child_value)

    dfs((), 0.0)
    if best["path"] is None:
        return BaselineResult("NLBB", None, None, visits)
    return BaselineResult("NLBB", best["path"], float(best["reward"]), visits)


def naive_constrained_dp(instance) -> BaselineResult:
    """Viterbi on reward alone, one survivor per symbol, dropping dead prefixes.

    This chains per-stage subproblem optima, which is only sound when the
    constrained problem has optimal substructure.
    """
    n = instance.n
    table = instance.reward_table
    alphabet = instance.alphabet
    mask = instance.transition_mask
    layer = {}
    for i, x in enumerate(alphabet):
        if n == 1 or instance.partially_feasible((x,)):
            layer[i] = ((x,), table[0, i])
    for t in range(1, n):
        new = {}
        for j in sorted(layer):
            prefix, value = layer[j]
            for i, x in enumerate(alphabet):
                if not mask[j, i]:
                    continue
                child = prefix + (x,)
                ok = instance.feasible(child) if t + 1 == n else instance.partially_feasible(child)
                if not ok:
                    continue
                cand = value + table[t, i]
                if i not in new or cand > new[i][1]:
                    new[i] = (child, cand)
        layer = new
    if not layer:
        return BaselineResult("naive-DP", None, None)
    path, value = max(layer.values(), key=lambda pv: (pv[1], [-x for x in pv[0]]))
    return BaselineResult("naive-DP", path, float(value))
