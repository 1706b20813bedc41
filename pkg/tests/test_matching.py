import math

import numpy as np
import pytest

from app.analysis.bounds import and_regret_bound, or_asymptotic_regret
from app.matching.chain import expected_first_regular, is_absorbing, superepoch_chain
from app.matching.greedy_and import greedy_bayes_and
from app.matching.greedy_or import greedy_bayes_or
from app.matching.population import (
    STRATEGY_STREAM,
    TYPES_STREAM,
    IncrementalTrace,
    Matching,
    NodePopulation,
    incremental_violations,
    optimal_value,
    pair_value,
    random_matching_trace,
    seed_stream,
    symmetric_difference,
)
from app.matching.posterior import MatchingSetState, brute_force_posterior, posterior_pi


def _population(types, prior=0.5):
    return NodePopulation(np.array(types), prior)


def test_pair_value_truth_tables():
    """OR and AND over binary types, symmetric in their arguments"""
    assert pair_value(0, 0, "or") == 0 and pair_value(0, 1, "or") == 1
    assert pair_value(1, 1, "and") == 1 and pair_value(0, 1, "and") == 0
    for fn in ("and", "or"):
        for x in (0, 1):
            for y in (0, 1):
                assert pair_value(x, y, fn) == pair_value(y, x, fn)
    with pytest.raises(ValueError):
        pair_value(0, 1, "xor")


def test_optimal_value_examples():
    """Enumerated optima on four nodes and the all-low population"""
    assert optimal_value(_population([1, 1, 0, 0]), "or") == 2
    assert optimal_value(_population([1, 1, 1, 0]), "and") == 1
    low = NodePopulation.sample(10, 0.0, seed=0)
    assert optimal_value(low, "or") == optimal_value(low, "and") == 0


def test_population_validation():
    """Populations need an even number of binary types"""
    with pytest.raises(ValueError):
        _population([1, 0, 1])
    with pytest.raises(ValueError):
        _population([2, 0])
    with pytest.raises(ValueError):
        NodePopulation.sample(7, 0.5, seed=0)


def test_rematch_changes_two_pairs():
    """Rematching u with v touches at most two pairs"""
    matching = Matching.from_pairs([(0, 1), (2, 3), (4, 5)], 6)
    before = matching.copy()
    assert matching.rematch(0, 2) == ((0, 2), (1, 3))
    assert symmetric_difference(before, matching) == 4
    with pytest.raises(ValueError):
        matching.rematch(0, 2)
    with pytest.raises(ValueError):
        Matching([1, 0, 2, 2])


def test_posterior_pi_examples():
    """Endpoints, the a = 2 base case and monotonicity in a"""
    assert posterior_pi(3, 0.0) == 0.0
    assert posterior_pi(3, 1.0) == 1.0
    assert posterior_pi(2, 0.5) == pytest.approx(2 / 3)
    assert posterior_pi(1, 0.3) < posterior_pi(2, 0.3) < posterior_pi(4, 0.3)


def test_brute_force_posterior_examples():
    """A fresh zero AND pair gives pi(2); an all-low set gives 0; a merged four-set gives pi(4)"""
    fresh = MatchingSetState(prior=0.5, sets=[frozenset({0, 1})], observations={(0, 1): 0})
    assert brute_force_posterior(fresh, 0) == pytest.approx(2 / 3, abs=1e-12)

    unobserved = MatchingSetState(prior=0.5, sets=[frozenset({0, 1})])
    assert brute_force_posterior(unobserved, 0) == pytest.approx(0.75)

    merged = MatchingSetState(prior=0.3, sets=[frozenset(range(4))])
    for u in range(4):
        for v in range(u + 1, 4):
            merged.observe(u, v, 0)
    assert brute_force_posterior(merged, 0) == pytest.approx(posterior_pi(4, 0.3), abs=1e-12)


def test_brute_force_posterior_all_low():
    """Every node of the target identified low"""
    state = MatchingSetState(prior=0.4, sets=[frozenset({0, 1})])
    state.sets = [frozenset()]
    state.low = {0, 1}
    assert brute_force_posterior(state, 0) == 0.0


def test_brute_force_size_limit():
    """Enumeration refuses more than 24 nodes"""
    state = MatchingSetState(prior=0.5, sets=[frozenset(range(26))])
    with pytest.raises(ValueError):
        brute_force_posterior(state, 0)


def test_state_validation():
    """Sets are disjoint and identified nodes sit in none of them"""
    state = MatchingSetState(prior=0.5, sets=[frozenset({0, 1}), frozenset({1, 2})])
    with pytest.raises(ValueError):
        state.validate()
    state = MatchingSetState(prior=0.5, sets=[frozenset({0, 1})], low={1})
    with pytest.raises(ValueError):
        state.validate()


def test_or_hand_trace():
    """theta = (1,1,0,0) from {(0,1),(2,3)}: one swap finds both highs, regret 1"""
    population = _population([1, 1, 0, 0])
    initial = Matching.from_pairs([(0, 1), (2, 3)], 4)
    trace = greedy_bayes_or(population, seed=0, initial=initial, keep_matchings=True)
    assert trace.tau == 2
    assert trace.total_regret == 1
    assert trace.terminal_regret == 0
    assert trace.matchings[-1].value(population.types, "or") == 2
    assert trace.rows[-1]["event"] == "terminate"


def test_or_all_low_terminates_immediately():
    """No unknown value-1 pair: one observation round with zero regret"""
    trace = greedy_bayes_or(NodePopulation.sample(20, 0.0, seed=1), seed=1)
    assert trace.tau == 1
    assert trace.total_regret == 0


@pytest.mark.parametrize("seed", range(8))
def test_or_stopping_time_and_accounting(seed):
    """S_1 ^ U_1 + 1 <= tau <= U_1 + 1, rewards match matchings, no constraint violations"""
    population = NodePopulation.sample(60, 0.3 + 0.05 * seed, seed=seed)
    trace = greedy_bayes_or(population, seed=seed, keep_matchings=True)
    s1, u1 = trace.initial_probes, trace.initial_unknown
    assert min(s1, u1) + 1 <= trace.tau <= u1 + 1
    assert incremental_violations(trace.matchings) == 0
    for reward, matching in zip(trace.rewards, trace.matchings):
        assert reward == matching.value(population.types, "or")


def test_or_cumulative_regret_extends_terminal_round():
    """Past tau each round repeats the terminal regret"""
    trace = IncrementalTrace(value_fn="or", optimal=5)
    for reward in (3, 4, 4):
        trace.record(reward, 0)
    assert trace.cumulative_regret() == 4
    assert trace.cumulative_regret(10) == 4 + 7 * 1
    assert trace.cumulative_regret(2) == 3


def test_and_hand_trace():
    """theta = (1,0,1,0) from {(0,1),(2,3)}: one exploration swap identifies every node"""
    population = _population([1, 0, 1, 0])
    initial = Matching.from_pairs([(0, 1), (2, 3)], 4)
    trace = greedy_bayes_and(population, seed=0, initial=initial, keep_matchings=True)
    assert trace.exploration_rounds == 1
    assert trace.total_regret == 1
    assert trace.matchings[-1].pair_set() == {frozenset((0, 2)), frozenset((1, 3))}
    assert trace.metadata["removals"] == 1
    assert [row["event"] for row in trace.rows][-1] == "terminate"


def test_and_all_high_no_exploration():
    """p = 1: no value-0 pairs, no exploration, no regret"""
    trace = greedy_bayes_and(NodePopulation.sample(16, 1.0, seed=0), seed=0)
    assert trace.exploration_rounds == 0
    assert trace.total_regret == 0


@pytest.mark.parametrize("seed", range(10))
def test_and_merge_coverage_and_step_bounds(seed):
    """Merged calls co-match every cross pair in between ab/2 and ab swaps"""
    population = NodePopulation.sample(40, 0.1 + 0.08 * seed, seed=seed)
    trace = greedy_bayes_and(population, seed=seed, instrument=True, keep_matchings=True)
    assert incremental_violations(trace.matchings) == 0
    for reward, matching in zip(trace.rewards, trace.matchings):
        assert reward == matching.value(population.types, "and")
    for call in trace.calls:
        product = call.size_a * call.size_b
        assert call.steps <= product
        if call.merged:
            assert len(call.covered) == product
            assert 2 * call.steps >= product


def test_and_pops_two_least_sizes():
    """Each call merges the two smallest open sets"""
    population = NodePopulation.sample(64, 0.1, seed=3)
    trace = greedy_bayes_and(population, seed=3)
    for sizes, call in zip(trace.size_history, trace.calls):
        assert sorted((call.size_a, call.size_b)) == sorted(sizes)[:2]
        assert all(size % 2 == 0 for size in sizes)
    assert len(trace.size_history[-1]) <= 1


@pytest.mark.parametrize("seed", range(20))
def test_and_posterior_matches_enumeration(seed):
    """n = 12: every open set's posterior equals the enumerated one at every call"""
    population = NodePopulation.sample(12, 0.2 + 0.03 * (seed % 10), seed=seed)
    checked = []

    def on_epoch(state):
        state.validate()
        for i, members in enumerate(state.sets):
            assert brute_force_posterior(state, i) == pytest.approx(
                posterior_pi(len(members), state.prior), abs=1e-12
            )
        checked.append(len(state.sets))

    trace = greedy_bayes_and(population, seed=seed, on_epoch=on_epoch)
    assert len(checked) == len(trace.calls)


def test_random_matching_baseline():
    """The baseline keeps its initial matching"""
    population = NodePopulation.sample(30, 0.4, seed=2)
    trace = random_matching_trace(population, "and", seed=2)
    matching = Matching.random(30, seed_stream(2, STRATEGY_STREAM))
    assert trace.tau == 1
    assert trace.total_regret == optimal_value(population, "and") - matching.value(population.types, "and")
    assert trace.cumulative_regret(100) == 100 * trace.terminal_regret


def test_types_and_strategy_use_separate_streams():
    """One run seed feeds node types and the initial matching from independent child streams"""
    for seed in range(5):
        population = NodePopulation.sample(40, 0.5, seed=seed)
        expected = seed_stream(seed, TYPES_STREAM).random(40) < 0.5
        assert np.array_equal(population.types, expected.astype(np.int8))
        assert not np.array_equal(population.types, np.random.default_rng(seed).random(40) < 0.5)
        trace = greedy_bayes_or(population, seed=seed, keep_matchings=True)
        initial = Matching.random(40, seed_stream(seed, STRATEGY_STREAM))
        assert np.array_equal(trace.matchings[0].partner, initial.partner)
    assert not np.array_equal(seed_stream(0, TYPES_STREAM).random(8), seed_stream(0, STRATEGY_STREAM).random(8))


def test_chain_without_high_nodes():
    """p = 0: X halves deterministically and nothing is removed"""
    trace = superepoch_chain(16, 0.0, seed=0)
    assert trace.states == [(8, 0), (8, 0), (4, 0), (2, 0), (1, 0)]
    assert trace.absorbed


def test_chain_all_high_absorbs_in_one_step():
    """p = 1 empties the regular sets at once"""
    trace = superepoch_chain(64, 1.0, seed=0)
    assert trace.states == [(32, 0), (0, 0)]
    assert trace.superepochs == 1


def test_chain_absorbing_states():
    """(0, 0), (1, 0) and (0, z) absorb; everything else moves"""
    assert is_absorbing(0, 0) and is_absorbing(1, 0) and is_absorbing(0, 6)
    assert not is_absorbing(2, 0) and not is_absorbing(1, 4)
    for seed in range(20):
        assert superepoch_chain(128, 0.3, seed=seed).absorbed


def test_chain_first_step_mean():
    """n = 512, p = 0.5: E[X_1] = 192 within 3 standard errors over 10^4 chains"""
    assert expected_first_regular(512, 0.5) == pytest.approx(192.0)
    samples = np.array([superepoch_chain(512, 0.5, seed=s).states[1][0] for s in range(10_000)])
    se = samples.std(ddof=1) / math.sqrt(samples.size)
    assert abs(samples.mean() - 192.0) <= 3 * se


@pytest.mark.slow
def test_posterior_oracle_many_runs():
    """200 randomized runs at n = 12"""
    rng = np.random.default_rng(0)
    for seed in range(200):
        population = NodePopulation.sample(12, float(rng.uniform(0.05, 0.6)), seed=seed)

        def on_epoch(state):
            for i, members in enumerate(state.sets):
                assert brute_force_posterior(state, i) == pytest.approx(
                    posterior_pi(len(members), state.prior), abs=1e-12
                )

        greedy_bayes_and(population, seed=seed, on_epoch=on_epoch)


@pytest.mark.slow
@pytest.mark.parametrize("prior", [0.3, 0.5, 0.7])
def test_or_regret_constant(prior):
    """n = 1024, 50 seeds: mean total OR regret within 15% of the asymptotic formula"""
    n = 1024
    totals = [
        greedy_bayes_or(NodePopulation.sample(n, prior, seed=s), seed=s, stride=n).total_regret for s in range(50)
    ]
    expected = or_asymptotic_regret(n, prior)
    assert abs(np.mean(totals) - expected) <= 0.15 * expected


@pytest.mark.slow
@pytest.mark.parametrize("n", [1024, 2048])
def test_and_regret_below_bound(n):
    """Mean AND regret stays under the Least-Size-Merge bound; mean tau under 39 min{n/p, n^2}"""
    for prior in np.round(np.arange(0.1, 1.0, 0.1), 1):
        runs = [greedy_bayes_and(NodePopulation.sample(n, prior, seed=s), seed=s, stride=n) for s in range(20)]
        assert np.mean([r.total_regret for r in runs]) <= and_regret_bound(n, prior, 39)
        assert np.mean([r.tau for r in runs]) <= 39 * min(n / prior, n**2)


@pytest.mark.slow
def test_or_conditional_mean_of_high_pairs():
    """p = 0.3, n = 200, fixed start: E[U11_t] = (1 - (t-1)/u_1)^+ u11_1 within 3 SE"""
    population = NodePopulation.sample(200, 0.3, seed=0)
    initial = Matching.random(200, np.random.default_rng(0))
    traces = [greedy_bayes_or(population, seed=s, initial=initial) for s in range(500)]
    u1, u11 = traces[0].u_history[0], traces[0].u11_history[0]
    for t in (u1 // 4, u1 // 2, 3 * u1 // 4):
        values = np.array([tr.u11_history[min(t, tr.tau) - 1] for tr in traces], dtype=float)
        expected = max(0.0, 1 - (t - 1) / u1) * u11
        se = max(values.std(ddof=1), 1e-12) / math.sqrt(values.size)
        assert abs(values.mean() - expected) <= 3 * se
