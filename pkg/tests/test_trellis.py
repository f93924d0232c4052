import itertools
import json
import math

import numpy as np
import pytest

from infotrellis import (
    ConditionalModel,
    SamplerConfig,
    SolverConfig,
    estimate_prior,
    generate_instance,
    kl_divergence,
    viterbi_solve,
)
from infotrellis.conditionals import SigmoidConditionalConfig, sigmoid_conditional
from infotrellis.problem import ProblemInstance
from infotrellis.trellis import NoFeasiblePathError, SolveReport, path_metric_increment


@pytest.fixture(scope="module")
def canonical_prior(canonical):
    return estimate_prior(canonical, SamplerConfig(seed=0))


def test_increment_examples():
    q = np.full(4, 0.25)
    assert path_metric_increment(q, q, 2.0, 3.0) == -6.0
    p = np.array([0.1, 0.2, 0.3, 0.4])
    assert path_metric_increment(p, q, 0.0, 100.0) == pytest.approx(kl_divergence(p, q))
    assert path_metric_increment([1, 0, 0, 0], q, 1.0, 3.0) == pytest.approx(-1.0, abs=1e-15)


def test_increment_propagates_infinity():
    assert path_metric_increment([0.5, 0.5], [1.0, 0.0], 1.0, 1.0) == math.inf


def test_edge_variant_uses_the_chosen_entry():
    p, q = np.array([0.5, 0.5]), np.array([0.25, 0.75])
    assert path_metric_increment(p, q, 0.0, 0.0, metric="edge_log_ratio", index=0) == pytest.approx(1.0)


def _two_by_two(rewards):
    return ProblemInstance(alphabet=(0, 1), reward_table=np.array(rewards, float), feasibility=lambda p: True)


def test_uniform_models_pick_the_best_reward_edge():
    inst = _two_by_two([[0.0, 1.0], [3.0, 0.5]])
    uniform = ConditionalModel.uniform(2, 2)
    for beta in (0.1, 1.0, 7.0):
        rep = viterbi_solve(inst, uniform, beta, SolverConfig(mode="fixed"), conditional_model=uniform)
        assert rep.solution == (1, 0)
        assert rep.information_to_go == 0
        assert rep.reward == 4.0


def test_counters_in_specific_mode(canonical, canonical_prior):
    for prune in (True, False):
        rep = viterbi_solve(canonical, canonical_prior, 1.0, SolverConfig(prune=prune))
        assert rep.counters["acs_ops"] == 8 * 4**2 == 128
        assert rep.counters["conditional_evals"] == 7 * 4**2 == 112
        assert rep.counters["baa_iters_total"] == 0


def test_counters_in_baa_mode(canonical, canonical_prior):
    rep = viterbi_solve(canonical, canonical_prior, 2.0, SolverConfig(mode="baa"))
    assert rep.counters["acs_ops"] == 128
    assert rep.n_iter >= 1
    assert rep.counters["conditional_evals"] == pytest.approx(rep.n_iter * 112, rel=1e-12)
    assert rep.counters["conditional_evals"] == rep.counters["baa_iters_total"] * 16


def test_mid_beta_solution_is_feasible(canonical, canonical_prior):
    rep = viterbi_solve(canonical, canonical_prior, 2.0)
    assert rep.feasible
    assert canonical.power(rep.solution) <= 32


def test_pruned_solutions_are_always_feasible(canonical, canonical_prior):
    for beta in (0.0, 0.5, 3.0, 10.0):
        assert viterbi_solve(canonical, canonical_prior, beta).feasible


def test_unpruned_high_beta_overspends(canonical, canonical_prior):
    rep = viterbi_solve(canonical, canonical_prior, 10.0, SolverConfig(prune=False))
    assert not rep.feasible
    assert canonical.power(rep.solution) > 32


def test_information_to_go_rewalk(canonical, canonical_prior):
    cfg = SolverConfig(sigmoid=SigmoidConditionalConfig(sigma=1e-3, noise_seed=0))
    for beta in (0.3, 4.0):
        rep = viterbi_solve(canonical, canonical_prior, beta, cfg)
        path = rep.solution
        idx = canonical.symbol_index
        total = 0.0
        for t in range(1, canonical.n):
            p, _ = sigmoid_conditional(canonical, path[:t], cfg.sigmoid)
            total += kl_divergence(p, canonical_prior.tables[t - 1, idx[path[t - 1]]])
        assert abs(total - rep.information_to_go) <= 1e-9
        anchor = -math.log2(canonical_prior.initial[idx[path[0]]])
        assert rep.anchor_bits == pytest.approx(anchor, abs=1e-12)
        assert rep.metric == pytest.approx(anchor + total - beta * rep.reward, abs=1e-9)


def test_solve_is_deterministic(canonical, canonical_prior):
    one = viterbi_solve(canonical, canonical_prior, 1.5)
    two = viterbi_solve(canonical, canonical_prior, 1.5)
    assert one == two


def test_report_json_round_trip(canonical, canonical_prior):
    rep = viterbi_solve(canonical, canonical_prior, 1.5, SolverConfig(mode="baa"))
    back = SolveReport.from_dict(json.loads(json.dumps(rep.to_dict())))
    assert back == rep


def test_all_terminals_pruned_is_an_error():
    inst = ProblemInstance(
        alphabet=(0, 1),
        reward_table=np.ones((3, 2)),
        feasibility=lambda p: False,
        partial_feasibility=lambda p: False,
    )
    uniform = ConditionalModel.uniform(3, 2)
    with pytest.raises(NoFeasiblePathError):
        viterbi_solve(inst, uniform, 1.0, SolverConfig(mode="fixed"), conditional_model=uniform)


def test_mode_validation(canonical, canonical_prior):
    with pytest.raises(ValueError):
        SolverConfig(mode="greedy")
    with pytest.raises(ValueError):
        viterbi_solve(canonical, canonical_prior, 1.0, SolverConfig(mode="fixed"))
    with pytest.raises(ValueError):
        viterbi_solve(canonical, ConditionalModel.uniform(4, 4), 1.0)


# brute-force oracle for path-independent models


def _dyadic_model(rng, n, m):
    # rows drawn from a small dyadic set keep every KL term and its sums exact
    choices = np.array([[1.0] + [0.0] * (m - 1), [1 / m] * m, [0.5, 0.5] + [0.0] * (m - 2)])
    initial = choices[rng.integers(0, 2)][rng.permutation(m)]
    initial = np.full(m, 1 / m) if rng.random() < 0.5 else initial
    tables = np.empty((n - 1, m, m))
    for t in range(n - 1):
        for j in range(m):
            tables[t, j] = choices[rng.integers(0, 3)][rng.permutation(m)]
    return ConditionalModel(initial, tables)


def _brute_force(inst, p_model, q_model, beta, admissible=None):
    n, m = inst.n, inst.m
    R = inst.reward_table
    best, best_paths = math.inf, []
    for idx in itertools.product(range(m), repeat=n):
        if q_model.initial[idx[0]] == 0:
            continue
        if admissible is not None and not all(admissible(idx[:k]) for k in range(1, n)):
            continue
        metric = -math.log2(q_model.initial[idx[0]]) - beta * R[0, idx[0]]
        for t in range(1, n):
            metric += kl_divergence(p_model.tables[t - 1, idx[t - 1]], q_model.tables[t - 1, idx[t - 1]])
            metric -= beta * R[t, idx[t]]
        if metric < best:
            best, best_paths = metric, [idx]
        elif metric == best:
            best_paths.append(idx)
    return best, best_paths


def _toy(rng, n, m):
    rewards = rng.integers(0, 4, size=(n, m)).astype(float)
    return ProblemInstance(alphabet=tuple(range(m)), reward_table=rewards, feasibility=lambda p: True)


def test_viterbi_matches_brute_force_on_markov_toys():
    rng = np.random.default_rng(314)
    ties = 0
    for _ in range(50):
        n, m = int(rng.integers(2, 6)), int(rng.integers(2, 5))
        inst = _toy(rng, n, m)
        p_model, q_model = _dyadic_model(rng, n, m), _dyadic_model(rng, n, m)
        beta = float(rng.choice([0.0, 0.5, 1.0, 2.0]))
        best, paths = _brute_force(inst, p_model, q_model, beta)
        if not math.isfinite(best):
            # every path crosses an infinite divergence, which prunes it
            with pytest.raises(NoFeasiblePathError):
                viterbi_solve(inst, q_model, beta, SolverConfig(mode="fixed"), conditional_model=p_model)
            continue
        rep = viterbi_solve(inst, q_model, beta, SolverConfig(mode="fixed"), conditional_model=p_model)
        assert rep.metric == best
        # ties: smallest final symbol, then smallest predecessor at each step back
        assert rep.solution == min(paths, key=lambda p: tuple(reversed(p)))
        ties += len(paths) > 1
    assert ties > 5  # the dyadic toys do exercise the tie rule


def test_viterbi_dominates_surviving_paths_under_pruning():
    rng = np.random.default_rng(7)
    checked = 0
    for _ in range(40):
        n, m = 4, 3
        budget = int(rng.integers(2, 7))
        inst = ProblemInstance(
            alphabet=tuple(range(m)),
            reward_table=rng.integers(0, 5, size=(n, m)).astype(float),
            feasibility=lambda p, b=budget: sum(p) <= b,
            partial_feasibility=lambda p, b=budget: sum(p) <= b,
        )
        p_model, q_model = _dyadic_model(rng, n, m), _dyadic_model(rng, n, m)
        best, _ = _brute_force(inst, p_model, q_model, 1.0, admissible=lambda pre, b=budget: sum(pre) <= b)
        if not math.isfinite(best):
            continue
        rep = viterbi_solve(inst, q_model, 1.0, SolverConfig(mode="fixed"), conditional_model=p_model)
        assert rep.metric == best
        checked += 1
    assert checked >= 10


def test_augmented_state_is_exact_for_bit_allocation():
    # with (symbol, power) nodes the sigmoid rows become Markov, so brute force must agree
    inst = generate_instance(3, 5, p_b=20)
    prior = estimate_prior(inst, SamplerConfig(k=200, n1=5, seed=1))
    cfg = SolverConfig(prune=False, augmented=True)
    idx = inst.symbol_index
    for beta in (0.0, 0.7, 3.0):
        rep = viterbi_solve(inst, prior, beta, cfg)
        best = math.inf
        for path in itertools.product(inst.alphabet, repeat=inst.n):
            if any(a < b for a, b in zip(path, path[1:])):
                continue
            metric = -math.log2(prior.initial[idx[path[0]]]) - beta * inst.reward_table[0, idx[path[0]]]
            for t in range(1, inst.n):
                p, _ = sigmoid_conditional(inst, path[:t], cfg.sigmoid)
                metric += kl_divergence(p, prior.tables[t - 1, idx[path[t - 1]]])
                metric -= beta * inst.reward_table[t, idx[path[t]]]
            best = min(best, metric)
        assert rep.metric == pytest.approx(best, abs=1e-9)
