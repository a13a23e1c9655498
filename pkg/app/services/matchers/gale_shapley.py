"""Gale-Shapley deferred acceptance, static and over the live oracle.

All variants follow the same shape: agents of side A enter one at a time; the
entering agent (or whoever it displaces) keeps proposing until someone holds
on to it. Side B never un-matches once matched.
"""

from __future__ import annotations

from typing import Callable, Sequence

from app.core.enums import Side
from app.core.exceptions import ContractViolationError, InvalidQueryError
from app.models.matching import UNMATCHED, Matching
from app.models.permutation import AgentId, Permutation
from app.models.profile import PreferenceProfile
from app.services.evolution import EvolvingInstance, QueryTriple
from app.services.matchers.base import MatcherState, WindowConfig
from app.services.sorting import Clock, Process, drive


def gale_shapley_static(profile: PreferenceProfile) -> tuple[Matching, int]:
    """A-proposing deferred acceptance on a frozen profile.

    Returns the (A-optimal) stable matching and the number of proposals made.
    """
    n = profile.n
    a_order = profile.order_matrix(Side.A).tolist()
    b_rank = profile.rank_matrix(Side.B).tolist()
    a_to_b = [UNMATCHED] * n
    b_to_a = [UNMATCHED] * n
    next_choice = [0] * n
    proposals = 0
    for x in range(n):
        p = x
        while True:
            y = a_order[p][next_choice[p]]
            next_choice[p] += 1
            proposals += 1
            holder = b_to_a[y]
            if holder == UNMATCHED:
                a_to_b[p], b_to_a[y] = y, p
                break
            if b_rank[y][p] < b_rank[y][holder]:
                a_to_b[p], b_to_a[y] = y, p
                a_to_b[holder] = UNMATCHED
                p = holder
    return Matching(a_to_b, b_to_a), proposals


# A chooser is a sub-process: given the proposer, yield whatever queries are
# needed and return the B-agent it proposes to.
Chooser = Callable[[int], Process[int]]


def deferred_acceptance_process(state: MatcherState, n: int, choose: Chooser, clock: Clock) -> Process[Matching]:
    """One run of Gale-Shapley whose acceptance tests are live queries on pi_y."""
    state.begin_run(clock(), n)
    working = state.working
    for x in range(n):
        p = x
        while True:
            y = yield from choose(p)
            state.record_proposal(p, y)
            holder = working.b_to_a[y]
            if holder == UNMATCHED:
                working.match(p, y)
                break
            if (yield QueryTriple(AgentId(Side.B, y), AgentId(Side.A, p), AgentId(Side.A, holder))):
                working.match(p, y)
                p = holder
    return working.freeze()


def first_unproposed_chooser(state: MatcherState, a_lists: Sequence[Permutation]) -> Chooser:
    """Propose down a known list: no queries needed."""
    orders = [perm.order() for perm in a_lists]

    def choose(p: int) -> Process[int]:
        proposed = state.proposed[p]
        y = next((y for y in orders[p] if y not in proposed), None)
        if y is None:
            raise ContractViolationError(f"A{p + 1} ran out of candidates")
        return y
        yield  # query-free process

    return choose


def window_candidates(approx: Permutation, proposed: set[int], size: int) -> list[int]:
    """The ``size`` highest-ranked elements of ``approx`` not in ``proposed``."""
    picked: list[int] = []
    for y in approx.order():
        if y not in proposed:
            picked.append(y)
            if len(picked) == size:
                break
    return picked


def best_of_window_process(x: int, candidates: Sequence[int]) -> Process[int]:
    """Left-to-right tournament under the live pi_x, ``len(candidates) - 1`` queries."""
    if not candidates:
        raise InvalidQueryError(f"Empty candidate window for A{x + 1}")
    owner = AgentId(Side.A, x)
    best = candidates[0]
    for candidate in candidates[1:]:
        if (yield QueryTriple(owner, AgentId(Side.B, candidate), AgentId(Side.B, best))):
            best = candidate
    return best


def best_of_window(instance: EvolvingInstance, x: AgentId, candidates: Sequence[int]) -> AgentId:
    if x.side is not Side.A:
        raise InvalidQueryError("Only side-A agents propose")
    candidates = list(candidates)
    if not candidates:
        raise InvalidQueryError(f"Empty candidate window for {x.label()}")
    if len(set(candidates)) != len(candidates):
        raise InvalidQueryError("Candidate window contains duplicates")
    best = drive(instance, best_of_window_process(x.index, candidates))
    return AgentId(Side.B, best)


def windowed_best_chooser(state: MatcherState, approx_lists: Callable[[], Sequence[Permutation]], cfg: WindowConfig, n: int) -> Chooser:
    """Best live element among the first window entries of the approximate list."""
    size = cfg.window(n)

    def choose(p: int) -> Process[int]:
        approx = approx_lists()[p]
        candidates = window_candidates(approx, state.proposed[p], size)
        if not candidates:
            raise ContractViolationError(f"A{p + 1} ran out of candidates")
        return (yield from best_of_window_process(p, candidates))

    return choose
