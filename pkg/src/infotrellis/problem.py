"""Problem instances, paths, rewards and constraint-satisfaction checks.

Two instance flavours share one duck-typed surface used by every solver:

    n, alphabet, reward_table, transition_mask,
    feasible(path), partially_feasible(prefix), feasible_mask(paths)

``ProblemInstance`` wraps arbitrary tables and predicates.  ``BitAllocInstance``
is the ADC bit-allocation problem: per-path resolutions drawn from {1,2,3,4},
a total power budget on sum(2**x) and a non-increasing ordering on the bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

Path = tuple[int, ...]


class InvalidPathError(ValueError):
    pass


class ConfigError(ValueError):
    pass


def check_alphabet(values: Sequence[int]) -> tuple[int, ...]:
    values = tuple(int(v) for v in values)
    if len(values) < 2:
        raise ConfigError(f"alphabet needs at least 2 symbols, got {values}")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise ConfigError(f"alphabet must be strictly increasing, got {values}")
    return values


def check_path(instance, path: Sequence[int], *, full: bool = False) -> Path:
    path = tuple(int(x) for x in path)
    if len(path) > instance.n:
        raise InvalidPathError(f"path of length {len(path)} exceeds horizon {instance.n}")
    if full and len(path) != instance.n:
        raise InvalidPathError(f"expected a length-{instance.n} path, got length {len(path)}")
    bad = [x for x in path if x not in instance.symbol_index]
    if bad:
        raise InvalidPathError(f"symbols {bad} not in alphabet {instance.alphabet}")
    return path


def path_indices(instance, path: Sequence[int]) -> list[int]:
    return [instance.symbol_index[x] for x in path]


def format_path(path: Sequence[int]) -> str:
    return "-".join(str(x) for x in path)


def parse_path(text: str) -> Path:
    return tuple(int(tok) for tok in text.replace(",", "-").split("-") if tok.strip())


# ---------------------------------------------------------------------------
# generic instance


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """A stage-separable objective with arbitrary constraints.

    ``partial_feasibility`` may be conservative (say True when unsure) but must
    never reject a prefix that has a feasible completion.
    """

    alphabet: tuple[int, ...]
    reward_table: np.ndarray
    feasibility: Callable[[Path], bool]
    partial_feasibility: Callable[[Path], bool] = lambda prefix: True
    transition_mask: np.ndarray | None = None
    conditional: Callable | None = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "alphabet", check_alphabet(self.alphabet))
        table = np.asarray(self.reward_table, dtype=float)
        if table.ndim != 2 or table.shape[1] != len(self.alphabet) or table.shape[0] < 1:
            raise ConfigError(f"reward_table must be N x {len(self.alphabet)}, got {table.shape}")
        if not np.all(np.isfinite(table)):
            raise ConfigError("reward_table has non-finite entries")
        table.setflags(write=False)
        object.__setattr__(self, "reward_table", table)
        m = len(self.alphabet)
        mask = np.ones((m, m), bool) if self.transition_mask is None else np.asarray(self.transition_mask, bool)
        if mask.shape != (m, m):
            raise ConfigError(f"transition_mask must be {m}x{m}")
        mask.setflags(write=False)
        object.__setattr__(self, "transition_mask", mask)

    @property
    def n(self) -> int:
        return self.reward_table.shape[0]

    @property
    def m(self) -> int:
        return len(self.alphabet)

    @property
    def symbol_index(self) -> dict[int, int]:
        return {x: i for i, x in enumerate(self.alphabet)}

    def feasible(self, path: Path) -> bool:
        return bool(self.feasibility(tuple(path)))

    def partially_feasible(self, prefix: Path) -> bool:
        return bool(self.partial_feasibility(tuple(prefix)))

    def feasible_mask(self, paths: np.ndarray) -> np.ndarray:
        alphabet = np.asarray(self.alphabet)
        return np.array([self.feasible(tuple(alphabet[row])) for row in paths], dtype=bool)

    def prefix_key(self, prefix: Path):
        return prefix


# ---------------------------------------------------------------------------
# bit allocation


def _g_neg_pow2(x):
    return np.power(2.0, -np.asarray(x, dtype=float))


def _g_pow2(x):
    return np.power(2.0, np.asarray(x, dtype=float))


def _f_one(x):
    return np.ones_like(np.asarray(x, dtype=float))


# name -> (numerator f(x), quantisation-noise factor g(x), expected direction in x)
REWARD_PRESETS = {
    "paper-consistent": (_f_one, _g_neg_pow2, +1),
    "as-printed": (_f_one, _g_pow2, -1),
}

BITALLOC_ALPHABET = (1, 2, 3, 4)


@dataclass(frozen=True, eq=False)
class BitAllocInstance:
    """ADC bit allocation over ``len(a)`` RF paths.

    The per-stage reward is ``a_i**2 * f(x) / (b_i**2 + d_i * g(x))``.  The
    ``as-printed`` preset uses ``g(x) = 2**x`` (reward falls with more bits);
    ``paper-consistent`` uses ``g(x) = 2**-x`` so extra bits pay off and the
    power budget is what binds.
    """

    a: tuple[float, ...]
    b: tuple[float, ...]
    d: tuple[float, ...]
    p_b: float
    reward_preset: str = "paper-consistent"
    alphabet: tuple[int, ...] = BITALLOC_ALPHABET
    seed: int | None = None

    def __post_init__(self):
        a, b, d = (tuple(float(v) for v in vec) for vec in (self.a, self.b, self.d))
        if not (len(a) == len(b) == len(d)) or len(a) < 1:
            raise ConfigError("a, b, d must be non-empty and of equal length")
        for name, vec in (("a", a), ("b", b)):
            if not all(np.isfinite(v) and v > 0 for v in vec):
                raise ConfigError(f"coefficients {name} must be finite and strictly positive")
        if not all(np.isfinite(v) and v >= 0 for v in d):
            raise ConfigError("coefficients d must be finite and non-negative")
        if not (np.isfinite(self.p_b) and self.p_b > 0):
            raise ConfigError(f"p_b must be positive, got {self.p_b}")
        if self.reward_preset not in REWARD_PRESETS:
            raise ConfigError(f"unknown reward preset {self.reward_preset!r}; choose from {sorted(REWARD_PRESETS)}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "p_b", float(self.p_b))
        object.__setattr__(self, "alphabet", check_alphabet(self.alphabet))
        if self.alphabet[0] < 0:
            raise ConfigError("bit widths must be non-negative")

        f, g, direction = REWARD_PRESETS[self.reward_preset]
        x = np.asarray(self.alphabet, dtype=float)
        av, bv, dv = (np.asarray(v)[:, None] for v in (a, b, d))
        table = av**2 * f(x)[None, :] / (bv**2 + dv * g(x)[None, :])
        steps = np.diff(table, axis=1) * direction
        # d_i = 0 removes quantisation noise, leaving that stage flat in x
        if not (np.all(np.isfinite(table)) and np.all(steps[dv[:, 0] > 0] > 0)):
            raise ConfigError(f"reward table is not strictly monotone for preset {self.reward_preset!r}")
        table.setflags(write=False)
        object.__setattr__(self, "_table", table)
        mask = x[None, :] <= x[:, None]  # next symbol may not exceed the current one
        mask.setflags(write=False)
        object.__setattr__(self, "_mask", mask)
        object.__setattr__(self, "_costs", {s: 2.0**s for s in self.alphabet})

    def __eq__(self, other):
        if not isinstance(other, BitAllocInstance):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(json.dumps(self.to_dict(), sort_keys=True))

    @property
    def n(self) -> int:
        return len(self.a)

    @property
    def m(self) -> int:
        return len(self.alphabet)

    @property
    def reward_table(self) -> np.ndarray:
        return self._table

    @property
    def transition_mask(self) -> np.ndarray:
        return self._mask

    @property
    def symbol_index(self) -> dict[int, int]:
        return {x: i for i, x in enumerate(self.alphabet)}

    @property
    def conditional(self):
        return None

    def symbol_power(self, x: int) -> float:
        return self._costs[x]

    def power(self, path: Path) -> float:
        return float(sum(self._costs[x] for x in path))

    def ordered(self, path: Path) -> bool:
        return all(x >= y for x, y in zip(path, path[1:]))

    def feasible(self, path: Path) -> bool:
        return self.ordered(path) and self.power(path) <= self.p_b

    def partially_feasible(self, prefix: Path) -> bool:
        # cheapest ordered completion repeats the smallest symbol not above prefix[-1]
        if not self.ordered(prefix):
            return False
        cheapest = min(s for s in self.alphabet if s <= prefix[-1])
        return self.power(prefix) + (self.n - len(prefix)) * self._costs[cheapest] <= self.p_b

    def feasible_mask(self, paths: np.ndarray) -> np.ndarray:
        """Vectorised ``feasible`` over an (count, n) array of alphabet indices."""
        symbols = np.asarray(self.alphabet)[paths]
        power = np.power(2.0, symbols).sum(axis=1)
        ordered = np.all(symbols[:, :-1] >= symbols[:, 1:], axis=1)
        return ordered & (power <= self.p_b)

    def prefix_key(self, prefix: Path):
        # everything the sigmoid conditional reads from a prefix
        return (len(prefix), prefix[-1], self.power(prefix))

    def to_dict(self) -> dict:
        out = {
            "n": self.n,
            "alphabet": list(self.alphabet),
            "a": list(self.a),
            "b": list(self.b),
            "d": list(self.d),
            "p_b": self.p_b,
            "reward_preset": self.reward_preset,
        }
        if self.seed is not None:
            out["seed"] = self.seed
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "BitAllocInstance":
        allowed = {"n", "alphabet", "a", "b", "d", "p_b", "reward_preset", "seed"}
        unknown = set(data) - allowed
        if unknown:
            raise ConfigError(f"unknown instance fields: {sorted(unknown)}")
        missing = {"n", "a", "b", "d", "p_b"} - set(data)
        if missing:
            raise ConfigError(f"missing instance fields: {sorted(missing)}")
        inst = cls(
            a=data["a"],
            b=data["b"],
            d=data["d"],
            p_b=data["p_b"],
            reward_preset=data.get("reward_preset", "paper-consistent"),
            alphabet=tuple(data.get("alphabet", BITALLOC_ALPHABET)),
            seed=data.get("seed"),
        )
        if inst.n != data["n"]:
            raise ConfigError(f"n={data['n']} does not match coefficient length {inst.n}")
        return inst


def load_instance(path) -> BitAllocInstance:
    with open(path, encoding="utf-8") as fh:
        return BitAllocInstance.from_dict(json.load(fh))


def dump_instance(instance: BitAllocInstance) -> str:
    return json.dumps(instance.to_dict(), indent=2) + "\n"


@dataclass(frozen=True)
class CoeffRanges:
    # wide enough that neighbouring allocations differ in reward by more than
    # the information term can hide on a [0, 10] multiplier grid
    a: tuple[float, float] = (0.5, 3.5)
    b: tuple[float, float] = (0.5, 1.0)
    d: tuple[float, float] = (1.0, 4.0)

    def __post_init__(self):
        for name in ("a", "b", "d"):
            lo, hi = getattr(self, name)
            if not (lo > 0 and hi > 0):
                raise ConfigError(f"range {name}={lo, hi} must have positive bounds")
            if lo > hi:
                raise ConfigError(f"range {name}={lo, hi} is not ordered")


def generate_instance(
    seed: int,
    n: int = 8,
    ranges: CoeffRanges | None = None,
    p_b: float | None = None,
    reward_preset: str = "paper-consistent",
) -> BitAllocInstance:
    """Draw a seeded bit-allocation instance.

    Singular values ``a`` are sorted in decreasing order, as they come out of
    an SVD; ``b`` and ``d`` are i.i.d. uniform.  The default budget is ``4*n``,
    i.e. 2-bit converters on every path.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    ranges = ranges or CoeffRanges()
    rng = np.random.default_rng(seed)
    a = np.sort(rng.uniform(*ranges.a, size=n))[::-1]
    b = rng.uniform(*ranges.b, size=n)
    d = rng.uniform(*ranges.d, size=n)
    return BitAllocInstance(
        a=tuple(a.tolist()),
        b=tuple(b.tolist()),
        d=tuple(d.tolist()),
        p_b=float(4 * n if p_b is None else p_b),
        reward_preset=reward_preset,
        seed=int(seed),
    )


# ---------------------------------------------------------------------------
# operations


def reward(instance, path: Sequence[int]) -> float:
    path = check_path(instance, path)
    table = instance.reward_table
    idx = instance.symbol_index
    return float(sum(table[i, idx[x]] for i, x in enumerate(path)))


def power(instance: BitAllocInstance, path: Sequence[int]) -> float:
    return instance.power(check_path(instance, path))


def csf(instance, path: Sequence[int]) -> int:
    path = check_path(instance, path, full=True)
    return int(instance.feasible(path))


def csf_partial(instance, prefix: Sequence[int]) -> int:
    prefix = check_path(instance, prefix)
    if not 1 <= len(prefix) < instance.n:
        raise InvalidPathError(f"prefix length must be in [1, {instance.n - 1}], got {len(prefix)}")
    return int(instance.partially_feasible(prefix))
