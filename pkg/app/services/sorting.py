"""Sorting evolving lists through the comparison oracle.

Algorithms are written as *processes*: generators that yield the next
``QueryTriple`` they need answered (or ``None`` to sit out a time-step) and
receive the oracle's answer back. ``drive`` runs a process to completion on an
instance; the interleaved matcher schedules two processes against one clock.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Generator, Sequence, TypeVar

import numpy as np

from app.core.exceptions import InvalidQueryError
from app.models.permutation import AgentId, Permutation
from app.services.evolution import EvolvingInstance, QueryTriple

logger = logging.getLogger(__name__)

T = TypeVar("T")
Process = Generator["QueryTriple | None", "bool | None", T]
Clock = Callable[[], int]


@dataclass(frozen=True)
class SortOutcome:
    owner: AgentId
    approx: Permutation
    started_at: int
    finished_at: int
    comparisons: int

    def to_json_dict(self) -> dict:
        return {
            "owner": self.owner.label(),
            "comparisons": self.comparisons,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
        }


def drive(instance: EvolvingInstance, process: Process[T]) -> T:
    """Run ``process`` against ``instance`` until it returns."""
    try:
        request = next(process)
        while True:
            if request is None:
                instance.idle()
                request = process.send(None)
            else:
                request = process.send(instance.query(request))
    except StopIteration as stop:
        return stop.value


def quicksort_process(owner: AgentId, n: int, rng: np.random.Generator, clock: Clock) -> Process[SortOutcome]:
    """Randomized quicksort of ``owner``'s list, one oracle comparison per query.

    Pivots are uniform over the current sub-array; the remaining elements are
    compared against the pivot in sub-array order. Answers are taken as given,
    so the output is a permutation even when the list moves mid-sort.
    """
    other = owner.side.other
    started_at = clock()
    comparisons = 0
    result = [0] * n
    # (first output slot, elements still to be placed there)
    stack: list[tuple[int, list[int]]] = [(0, list(range(n)))]
    while stack:
        lo, part = stack.pop()
        if len(part) == 1:
            result[lo] = part[0]
            continue
        pivot = part[int(rng.integers(len(part)))]
        pivot_id = AgentId(other, pivot)
        above: list[int] = []
        below: list[int] = []
        for element in part:
            if element == pivot:
                continue
            comparisons += 1
            if (yield QueryTriple(owner, AgentId(other, element), pivot_id)):
                above.append(element)
            else:
                below.append(element)
        result[lo + len(above)] = pivot
        if below:
            stack.append((lo + len(above) + 1, below))
        if above:
            stack.append((lo, above))
    return SortOutcome(
        owner=owner,
        approx=Permutation.from_order(result),
        started_at=started_at,
        finished_at=clock(),
        comparisons=comparisons,
    )


def _check_owners(owners: Sequence[AgentId], n: int) -> None:
    if not owners:
        raise InvalidQueryError("sequential_sort needs at least one list owner")
    if len(set(owners)) != len(owners):
        raise InvalidQueryError("sequential_sort owners must be distinct")
    for owner in owners:
        if not 0 <= owner.index < n:
            raise InvalidQueryError(f"Owner {owner.label()} out of range for n={n}")


def sequential_sort_process(
    owners: Sequence[AgentId], n: int, rng: np.random.Generator, clock: Clock
) -> Process[dict[AgentId, SortOutcome]]:
    """Quicksort each owner's list in turn on a shared clock."""
    _check_owners(owners, n)
    outcomes: dict[AgentId, SortOutcome] = {}
    for owner in owners:
        outcomes[owner] = yield from quicksort_process(owner, n, rng, clock)
    return outcomes


def evolving_quicksort(instance: EvolvingInstance, owner: AgentId, alg_rng: np.random.Generator) -> SortOutcome:
    if not 0 <= owner.index < instance.n:
        raise InvalidQueryError(f"Owner {owner.label()} out of range for n={instance.n}")
    return drive(instance, quicksort_process(owner, instance.n, alg_rng, lambda: instance.t))


def sequential_sort(
    instance: EvolvingInstance, owners: Sequence[AgentId], alg_rng: np.random.Generator
) -> dict[AgentId, SortOutcome]:
    owners = list(owners)
    _check_owners(owners, instance.n)
    outcomes = drive(instance, sequential_sort_process(owners, instance.n, alg_rng, lambda: instance.t))
    logger.debug("Sorted %d lists by t=%d", len(outcomes), instance.t)
    return outcomes
