import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from app.core.enums import CriticalFlag, EvolutionMode, Side
from app.core.exceptions import (
    ContractViolationError,
    EmptyEvolutionDomainError,
    InvalidQueryError,
    ReplayMismatchError,
)
from app.models import AgentId, Permutation, PreferenceProfile
from app.services.evolution import (
    MATCH_SWAP_BIT,
    EventLog,
    EvolutionEvent,
    EvolvingInstance,
    QueryTriple,
    load_events_jsonl,
    replay_events,
)
from app.services.generators import random_profile
from app.services.measurements import kendall_tau

A, B = Side.A, Side.B


def make_instance(n=6, alpha=1, mode=EvolutionMode.TWO_SIDED, seed=1):
    profile = random_profile(n, np.random.default_rng(seed))
    return EvolvingInstance(profile, alpha, mode, np.random.default_rng(seed + 1000))


def q(z, u, v):
    return QueryTriple(z, u, v)


def test_queries_answer_against_current_lists_without_evolution():
    instance = make_instance(alpha=0)
    truth = instance.initial_profile
    z = AgentId(A, 2)
    for u in range(6):
        for v in range(6):
            if u != v:
                answer = instance.query(q(z, AgentId(B, u), AgentId(B, v)))
                assert answer == truth.a_lists[2].prefers(u, v)
    assert instance.t == instance.query_count == 30
    assert len(instance.event_log) == 0
    assert instance.snapshot() == truth


def test_every_step_applies_exactly_alpha_events():
    instance = make_instance(alpha=3)
    for step in range(1, 11):
        instance.query(q(AgentId(B, 0), AgentId(A, 0), AgentId(A, 1)))
        assert instance.t == step
        assert len(instance.event_log) == 3 * step
    instance.idle()
    assert instance.t == 11
    assert instance.idle_steps == 1
    assert len(instance.event_log) == 33
    assert [event.t for event in instance.event_log][:6] == [1, 1, 1, 2, 2, 2]


def test_event_is_a_single_adjacent_swap():
    instance = make_instance(n=8, alpha=0)
    before = instance.snapshot()
    instance.alpha = 1
    instance.idle()
    event = instance.event_log[0]
    after = instance.snapshot()
    old = before.list_of(event.z.side, event.z.index).order()
    new = after.list_of(event.z.side, event.z.index).order()
    pos0 = event.pos - 1
    assert (old[pos0], old[pos0 + 1]) == (event.u, event.v)
    assert (new[pos0], new[pos0 + 1]) == (event.v, event.u)
    assert [a for i, a in enumerate(old) if i not in (pos0, pos0 + 1)] == [
        a for i, a in enumerate(new) if i not in (pos0, pos0 + 1)
    ]
    changed = [
        (side, i)
        for side in (A, B)
        for i in range(8)
        if before.list_of(side, i) != after.list_of(side, i)
    ]
    assert changed == [(event.z.side, event.z.index)]


@pytest.mark.parametrize(
    "triple",
    [
        (AgentId(A, 0), AgentId(A, 1), AgentId(B, 2)),
        (AgentId(A, 0), AgentId(B, 1), AgentId(B, 1)),
        (AgentId(A, 6), AgentId(B, 1), AgentId(B, 2)),
        (AgentId(B, 0), AgentId(A, -1), AgentId(A, 2)),
        (AgentId(A, 0), (B, 1), AgentId(B, 2)),
    ],
)
def test_invalid_queries_are_rejected_without_consuming_time(triple):
    instance = make_instance()
    with pytest.raises(InvalidQueryError):
        instance.query(QueryTriple(*triple))
    assert instance.t == 0
    assert len(instance.event_log) == 0


def test_single_agent_instances_have_nothing_to_swap():
    instance = make_instance(n=1, alpha=2)
    instance.idle()
    assert instance.t == 1
    assert len(instance.event_log) == 0
    with pytest.raises(EmptyEvolutionDomainError):
        instance.apply_evolution_event()


def test_negative_alpha_is_rejected():
    with pytest.raises(ContractViolationError):
        make_instance(alpha=-1)


def test_one_sided_mode_only_moves_b_lists():
    instance = make_instance(n=5, alpha=4, mode=EvolutionMode.ONE_SIDED_B)
    a_lists = instance.read_a_lists()
    for _ in range(200):
        instance.idle()
    assert all(event.z.side is B for event in instance.event_log)
    assert instance.snapshot().a_lists == a_lists
    assert instance.snapshot().b_lists != instance.initial_profile.b_lists


def test_a_lists_are_not_free_under_two_sided_evolution():
    with pytest.raises(ContractViolationError):
        make_instance().read_a_lists()


def test_owner_choice_is_uniform():
    instance = make_instance(n=4, alpha=1, seed=9)
    for _ in range(8000):
        instance.idle()
    owners = [(0 if e.z.side is A else 4) + e.z.index for e in instance.event_log]
    positions = [e.pos for e in instance.event_log]
    assert stats.chisquare(np.bincount(owners, minlength=8)).pvalue > 0.001
    assert stats.chisquare(np.bincount(positions, minlength=4)[1:]).pvalue > 0.001


def test_same_seeds_give_the_same_event_log():
    first, second = make_instance(seed=4, alpha=2), make_instance(seed=4, alpha=2)
    for _ in range(100):
        first.idle()
        second.idle()
    assert first.event_log.to_jsonl() == second.event_log.to_jsonl()
    assert first.snapshot() == second.snapshot()


def test_replay_reproduces_the_live_profile():
    instance = make_instance(n=7, alpha=3, seed=2)
    for _ in range(300):
        instance.idle()
    events = load_events_jsonl(instance.event_log.to_jsonl())
    assert len(events) == 900
    assert replay_events(instance.initial_profile, events) == instance.snapshot()


def test_replay_detects_a_corrupted_log():
    instance = make_instance(n=7, alpha=1, seed=2)
    for _ in range(20):
        instance.idle()
    events = list(instance.event_log)
    bad = EvolutionEvent(t=events[0].t, z=events[0].z, pos=events[0].pos, u=events[0].v, v=events[0].u)
    with pytest.raises(ReplayMismatchError):
        replay_events(instance.initial_profile, [bad] + events[1:])


def test_swap_adjacent_bypasses_the_clock():
    profile = PreferenceProfile([Permutation.identity(3)] * 3, [Permutation.identity(3)] * 3)
    instance = EvolvingInstance(profile, 1, EvolutionMode.TWO_SIDED, np.random.default_rng(0))
    assert instance.swap_adjacent(AgentId(B, 1), 2) == (1, 2)
    assert instance.ranked_agents(AgentId(B, 1)).tolist() == [0, 2, 1]
    assert instance.t == 0
    with pytest.raises(EmptyEvolutionDomainError):
        instance.swap_adjacent(AgentId(B, 1), 3)


def test_live_views_are_read_only():
    instance = make_instance()
    with pytest.raises(ValueError):
        instance.rank_view(A)[0, 0] = 3
    with pytest.raises(ValueError):
        instance.ranked_agents(AgentId(A, 0))[0] = 3


def test_classifier_flags_are_logged():
    instance = make_instance(alpha=2)
    instance.classifier = lambda side, index, u, v: MATCH_SWAP_BIT if side is A else 0
    for _ in range(50):
        instance.idle()
    log = instance.event_log
    expected = sum(1 for event in log if event.z.side is A)
    assert log.critical_count == expected
    assert all(event.is_critical for event in log.critical_between(1, 50))
    assert len(list(log.critical_between(1, 50))) == expected
    assert [event.t for event in log.between(10, 11)] == [10, 10, 11, 11]
    assert load_events_jsonl(log.to_jsonl()) == list(log)


def test_event_json_uses_one_based_labels():
    event = EvolutionEvent(t=4, z=AgentId(B, 2), pos=1, u=0, v=5, critical_flags=frozenset({CriticalFlag.MATCH_SWAP}))
    assert event.to_json_dict() == {"t": 4, "side": "B", "list": 3, "pos": 1, "u": 1, "v": 6, "critical": ["match_swap"]}
    assert EvolutionEvent.from_json_dict(event.to_json_dict()) == event


def test_event_log_indexing():
    log = EventLog()
    log.append(EvolutionEvent(t=1, z=AgentId(A, 0), pos=1, u=0, v=1))
    assert log[-1].z == AgentId(A, 0)
    with pytest.raises(IndexError):
        log[1]


def test_empty_event_log_serializes_to_nothing():
    assert EventLog().to_jsonl() == ""
    assert load_events_jsonl("") == []


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=16), seeds)
def test_undoing_an_event_restores_the_lists(n, seed):
    instance = make_instance(n=n, seed=seed % 10_000)
    before = instance.snapshot()
    event = instance.apply_evolution_event()
    assert instance.snapshot() != before
    assert instance.swap_adjacent(event.z, event.pos) == (event.v, event.u)
    assert instance.snapshot() == before


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=16), st.integers(min_value=1, max_value=40), seeds)
def test_lists_drift_by_at_most_one_swap_per_query(n, k, seed):
    instance = make_instance(n=n, alpha=1, seed=seed % 10_000)
    start = instance.snapshot()
    triple = q(AgentId(A, 0), AgentId(B, 0), AgentId(B, 1))
    for _ in range(k):
        instance.query(triple)
    now = instance.snapshot()
    drift = sum(
        kendall_tau(start.list_of(side, index), now.list_of(side, index)) for side in (A, B) for index in range(n)
    )
    assert drift <= k
    assert drift % 2 == k % 2
