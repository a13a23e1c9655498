import math

import numpy as np
import pytest
from scipy import stats

from app.core.enums import EvolutionMode, MatcherKind, Side
from app.core.exceptions import ConfigError, ContractViolationError, InvalidQueryError
from app.models import AgentId, Matching
from app.services.acceptance import check_static_degeneracy, first_proposal_target
from app.services.evolution import EvolvingInstance
from app.services.generators import adversarial_profile, random_profile
from app.services.matchers import (
    InterleavedMatcher,
    WindowConfig,
    best_of_window,
    build_matcher,
    gale_shapley_static,
    interleaved_matcher,
    one_sided_matcher,
    simple_dynamic_matcher,
    static_gs_matcher,
)
from app.services.matchers.base import MatcherState
from app.services.measurements import is_stable


def make_instance(n, alpha, mode=EvolutionMode.TWO_SIDED, seed=0):
    profile = random_profile(n, np.random.default_rng(seed))
    return EvolvingInstance(profile, alpha, mode, np.random.default_rng(seed + 1))


def run_until(matcher, predicate, cap):
    while not predicate(matcher.state):
        assert matcher.instance.t < cap, "matcher made no progress"
        matcher.step()


def test_static_gale_shapley_on_two_agents(two_by_two):
    matching, proposals = gale_shapley_static(two_by_two)
    assert matching == Matching([1, 0])
    assert proposals == 3


def test_static_gale_shapley_on_the_approximate_cyclic_profile():
    _, approx = adversarial_profile(7, 3)
    matching, proposals = gale_shapley_static(approx)
    assert matching == Matching.identity(7)
    assert proposals == 7


@pytest.mark.parametrize("c,n,expected", [(4.0, 16, 16), (4.0, 1024, 40), (0.1, 4, 1), (4.0, 1, 1), (1.0, 100, 7)])
def test_window_size(c, n, expected):
    assert WindowConfig(c).window(n) == expected


@pytest.mark.parametrize("c", [0, -1.0, float("inf"), float("nan"), "4"])
def test_window_config_rejects_bad_constants(c):
    with pytest.raises(ConfigError):
        WindowConfig(c)


def test_best_of_window_finds_the_live_favourite():
    instance = make_instance(10, alpha=0)
    x = AgentId(Side.A, 3)
    candidates = [7, 2, 9, 0]
    best = best_of_window(instance, x, candidates)
    truth = instance.initial_profile.a_lists[3]
    assert best == AgentId(Side.B, min(candidates, key=truth.rank))
    assert instance.t == len(candidates) - 1


def test_best_of_window_of_one_candidate_is_free():
    instance = make_instance(5, alpha=1)
    assert best_of_window(instance, AgentId(Side.A, 0), [4]) == AgentId(Side.B, 4)
    assert instance.t == 0


def test_best_of_window_rejects_bad_windows():
    instance = make_instance(5, alpha=0)
    with pytest.raises(InvalidQueryError):
        best_of_window(instance, AgentId(Side.A, 0), [])
    with pytest.raises(InvalidQueryError):
        best_of_window(instance, AgentId(Side.A, 0), [1, 1])
    with pytest.raises(InvalidQueryError):
        best_of_window(instance, AgentId(Side.B, 0), [1, 2])


def test_matchers_refuse_the_wrong_evolution_mode():
    with pytest.raises(ContractViolationError):
        simple_dynamic_matcher(make_instance(4, 1, EvolutionMode.ONE_SIDED_B), np.random.default_rng(0))
    with pytest.raises(ContractViolationError):
        interleaved_matcher(make_instance(4, 1, EvolutionMode.ONE_SIDED_B), np.random.default_rng(0))
    with pytest.raises(ContractViolationError):
        one_sided_matcher(make_instance(4, 1), np.random.default_rng(0))
    with pytest.raises(ConfigError):
        interleaved_matcher(make_instance(4, 1), np.random.default_rng(0), cfg=4.0)
    with pytest.raises(ConfigError):
        build_matcher("greedy", make_instance(4, 1), np.random.default_rng(0))


def test_duplicate_proposals_break_the_contract():
    state = MatcherState.initial(3)
    state.record_proposal(0, 2)
    with pytest.raises(ContractViolationError):
        state.record_proposal(0, 2)


def test_only_perfect_matchings_are_published():
    with pytest.raises(ContractViolationError):
        MatcherState.initial(3).publish(Matching.empty(3), t=0)


@pytest.mark.parametrize("n", [1, 2, 8])
@pytest.mark.parametrize(
    "kind,mode",
    [
        (MatcherKind.SIMPLE, EvolutionMode.TWO_SIDED),
        (MatcherKind.ONE_SIDED, EvolutionMode.ONE_SIDED_B),
        (MatcherKind.INTERLEAVED, EvolutionMode.TWO_SIDED),
    ],
)
def test_informed_runs_are_stable_without_evolution(kind, mode, n):
    instance = make_instance(n, 0, mode, seed=n)
    matcher = build_matcher(kind, instance, np.random.default_rng(n))
    cap = 100 * n * n * max(1, math.ceil(math.log2(n))) + 100
    informed = 0
    while informed < 3:
        assert instance.t < cap
        done = matcher.state.runs_completed
        matcher.step()
        if matcher.state.runs_completed == done:
            continue
        if kind is MatcherKind.INTERLEAVED and matcher.state.last_run.approx_generation < 1:
            continue
        informed += 1
        assert is_stable(instance.initial_profile, matcher.state.published)
    assert instance.query_count + instance.idle_steps == instance.t


def test_static_control_publishes_at_time_zero_and_idles():
    instance = make_instance(12, alpha=1)
    matcher = static_gs_matcher(instance, np.random.default_rng(0))
    assert matcher.state.runs_completed == 1
    assert is_stable(instance.initial_profile, matcher.state.published)
    published = matcher.state.published
    for _ in range(50):
        matcher.step()
    assert instance.query_count == 0
    assert instance.idle_steps == 50
    assert matcher.state.published == published


def test_one_sided_matcher_only_queries_b_lists():
    instance = make_instance(10, 1, EvolutionMode.ONE_SIDED_B)
    asked = []
    answer = instance.query

    def spy(q):
        asked.append(q.z.side)
        return answer(q)

    instance.query = spy
    matcher = one_sided_matcher(instance, np.random.default_rng(0))
    for _ in range(400):
        matcher.step()
    assert asked and set(asked) == {Side.B}
    assert matcher.state.runs_completed >= 1


def test_published_matching_changes_only_at_run_completion():
    instance = make_instance(6, alpha=1)
    matcher = interleaved_matcher(instance, np.random.default_rng(1))
    published, runs = matcher.state.published, 0
    for _ in range(3000):
        matcher.step()
        state = matcher.state
        assert state.published.is_perfect
        if state.runs_completed == runs:
            assert state.published is published
        published, runs = state.published, state.runs_completed
    assert runs > 1


def test_interleaved_schedule_alternates_processes():
    instance = make_instance(6, alpha=1)
    matcher = interleaved_matcher(instance, np.random.default_rng(2))
    generation = 0
    for _ in range(3000):
        queries = matcher.state.run_queries
        runs = matcher.state.runs_completed
        matcher.step()
        state = matcher.state
        if state.runs_completed == runs and state.run_queries != queries:
            # matching process only moves on odd steps
            assert instance.t % 2 == 1
        if state.approx_generation != generation:
            generation = state.approx_generation
            assert state.approx_completed_at % 2 == 0
    assert generation >= 2


def test_interleaved_runs_use_the_generation_current_at_their_start():
    instance = make_instance(5, alpha=0)
    matcher = interleaved_matcher(instance, np.random.default_rng(4))
    run_until(matcher, lambda s: s.last_run is not None and s.last_run.approx_generation >= 1, cap=20000)
    trace = matcher.state.last_run
    assert trace.started_at >= matcher.state.approx_completed_at or matcher.state.approx_generation > 1
    assert is_stable(instance.initial_profile, trace.matching)


def test_first_proposal_of_a_fresh_run_is_roughly_uniform():
    n, seeds = 4, 800
    counts = np.bincount([first_proposal_target(n, seed) for seed in range(seeds)], minlength=n)
    assert stats.chisquare(counts).pvalue > 0.001


@pytest.mark.slow
def test_first_proposal_uniformity_at_scale():
    n, seeds = 16, 10_000
    counts = np.bincount([first_proposal_target(n, seed) for seed in range(seeds)], minlength=n)
    assert stats.chisquare(counts).pvalue > 0.01


def test_interleaved_window_covers_small_instances():
    matcher = InterleavedMatcher(make_instance(16, 1), np.random.default_rng(0))
    assert matcher.window == 16


@pytest.mark.slow
def test_informed_runs_are_stable_without_evolution_at_scale():
    check_static_degeneracy(ns=(8, 64, 256), seeds=20)
