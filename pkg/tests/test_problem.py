import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from infotrellis import BitAllocInstance, CoeffRanges, csf, csf_partial, generate_instance, power, reward
from infotrellis.problem import ConfigError, InvalidPathError, ProblemInstance, load_instance


def test_empty_prefix_reward_is_zero(canonical):
    assert reward(canonical, ()) == 0


def test_reward_is_symbol_free_without_quantisation_noise(flat8):
    for path in [(1,) * 8, (4, 2, 1, 1, 1, 1, 1, 1), (4,) * 8]:
        assert reward(flat8, path) == 8.0


def test_reward_matches_term_by_term_sum():
    inst = generate_instance(11, 8)
    path = (4, 2, 1, 1, 1, 1, 1, 1)
    expected = 0.0
    for a, b, d, x in zip(inst.a, inst.b, inst.d, path):
        expected += a * a / (b * b + d * 2.0 ** (-x))
    assert reward(inst, path) == pytest.approx(expected, rel=1e-14)

    printed = BitAllocInstance(inst.a, inst.b, inst.d, inst.p_b, reward_preset="as-printed")
    expected = sum(a * a / (b * b + d * 2.0**x) for a, b, d, x in zip(inst.a, inst.b, inst.d, path))
    assert reward(printed, path) == pytest.approx(expected, rel=1e-14)


def test_reward_rejects_foreign_symbols(canonical):
    with pytest.raises(InvalidPathError):
        reward(canonical, (5, 1))
    with pytest.raises(InvalidPathError):
        reward(canonical, (1,) * 9)


@pytest.mark.parametrize(
    "path, expected",
    [((1,) * 8, 16), ((4, 1, 1, 1, 1, 1, 1, 1), 30), ((4, 2, 1, 1, 1, 1, 1, 1), 32), ((4, 4, 4, 4, 4, 4, 1, 1), 100)],
)
def test_power(canonical, path, expected):
    assert power(canonical, path) == expected


@pytest.mark.parametrize(
    "path, expected",
    [((4, 2, 1, 1, 1, 1, 1, 1), 1), ((4, 4, 4, 4, 4, 4, 1, 1), 0), ((1, 2, 1, 1, 1, 1, 1, 1), 0)],
)
def test_csf(canonical, path, expected):
    assert csf(canonical, path) == expected


def test_csf_needs_full_path(canonical):
    with pytest.raises(InvalidPathError):
        csf(canonical, (4, 2))


def test_csf_partial_examples(canonical):
    assert csf_partial(canonical, (4, 2)) == 1
    assert csf_partial(canonical, (4,) * 6) == 0
    assert csf_partial(canonical, (2, 3)) == 0
    with pytest.raises(InvalidPathError):
        csf_partial(canonical, (1,) * 8)


def test_csf_partial_42_has_a_completion_by_enumeration(canonical):
    completions = [c for c in itertools.product(range(1, 5), repeat=6) if csf(canonical, (4, 2) + c)]
    assert completions == [(1,) * 6]


def test_monotone_and_exact_partial_feasibility():
    # small enough to enumerate every completion of every prefix
    inst = generate_instance(3, 5, p_b=18)
    n = inst.n
    for k in range(1, n):
        for prefix in itertools.product(inst.alphabet, repeat=k):
            has_completion = any(
                csf(inst, prefix + tail) for tail in itertools.product(inst.alphabet, repeat=n - k)
            )
            assert csf_partial(inst, prefix) == int(has_completion), prefix


@given(st.integers(0, 2**31 - 1), st.integers(1, 7))
def test_reward_is_additive(seed, split):
    inst = generate_instance(seed, 8)
    rng = np.random.default_rng(seed)
    path = tuple(int(x) for x in rng.integers(1, 5, size=8))
    head = reward(inst, path[:split])
    tail = sum(inst.reward_table[i, path[i] - 1] for i in range(split, 8))
    assert head + tail == pytest.approx(reward(inst, path), rel=1e-12)


@given(st.integers(0, 2**31 - 1))
def test_reward_direction_per_preset(seed):
    inst = generate_instance(seed, 8)
    assert np.all(np.diff(inst.reward_table, axis=1) > 0)
    printed = generate_instance(seed, 8, reward_preset="as-printed")
    assert np.all(np.diff(printed.reward_table, axis=1) < 0)


@given(st.integers(0, 2**31 - 1))
def test_feasible_paths_have_feasible_prefixes(seed):
    inst = generate_instance(seed, 8)
    rng = np.random.default_rng(seed)
    path = tuple(sorted((int(x) for x in rng.integers(1, 5, size=8)), reverse=True))
    if csf(inst, path):
        assert all(csf_partial(inst, path[:k]) for k in range(1, 8))


def test_generate_is_deterministic_and_valid():
    one, two = generate_instance(7, 8), generate_instance(7, 8)
    assert one == two
    assert one.to_dict() == two.to_dict()
    assert generate_instance(8, 8) != one
    assert one.n == 8 and one.alphabet == (1, 2, 3, 4) and one.p_b == 32
    assert all(v > 0 for v in one.a + one.b + one.d)


def test_different_seeds_differ():
    base = generate_instance(0, 8)
    assert all(generate_instance(s, 8) != base for s in range(1, 50))


def test_generate_rejects_bad_config():
    with pytest.raises(ConfigError):
        generate_instance(0, n=0)
    with pytest.raises(ConfigError):
        CoeffRanges(a=(0.0, 1.0))
    with pytest.raises(ConfigError):
        CoeffRanges(b=(2.0, 1.0))


def test_constructor_rejects_bad_coefficients():
    with pytest.raises(ConfigError):
        BitAllocInstance(a=(1.0, 1.0), b=(1.0,), d=(1.0, 1.0), p_b=8)
    with pytest.raises(ConfigError):
        BitAllocInstance(a=(1.0,), b=(0.0,), d=(1.0,), p_b=8)
    with pytest.raises(ConfigError):
        BitAllocInstance(a=(1.0,), b=(1.0,), d=(1.0,), p_b=0)
    with pytest.raises(ConfigError):
        BitAllocInstance(a=(1.0,), b=(1.0,), d=(1.0,), p_b=8, reward_preset="nope")


def test_instance_file_round_trip(tmp_path):
    inst = generate_instance(5, 8)
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(inst.to_dict()))
    assert load_instance(path) == inst


def test_instance_file_rejects_unknown_fields(tmp_path):
    data = generate_instance(5, 8).to_dict()
    data["colour"] = "blue"
    path = tmp_path / "inst.json"
    path.write_text(json.dumps(data))
    with pytest.raises(ConfigError, match="colour"):
        load_instance(path)


def test_generic_instance_delegates_predicates():
    table = np.arange(6, dtype=float).reshape(3, 2)
    inst = ProblemInstance(
        alphabet=(0, 1),
        reward_table=table,
        feasibility=lambda p: sum(p) <= 1,
        partial_feasibility=lambda p: sum(p) <= 1,
    )
    assert csf(inst, (1, 0, 0)) == 1
    assert csf(inst, (1, 1, 0)) == 0
    assert csf_partial(inst, (1, 1)) == 0
    assert reward(inst, (1, 0, 1)) == 1 + 2 + 5
