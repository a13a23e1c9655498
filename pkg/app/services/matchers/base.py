from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from app.core.config import settings
from app.core.enums import Side
from app.core.exceptions import ConfigError, ContractViolationError
from app.models.matching import UNMATCHED, Matching
from app.models.permutation import AgentId, Permutation
from app.services.evolution import EvolvingInstance
from app.services.sorting import Process, SortOutcome

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowConfig:
    c_window: float = settings.default_c_window

    def __post_init__(self) -> None:
        if not (isinstance(self.c_window, (int, float)) and math.isfinite(self.c_window) and self.c_window > 0):
            raise ConfigError(f"c_window must be a positive finite number, got {self.c_window!r}")

    def window(self, n: int) -> int:
        """``ceil(c_window * log2 n)`` clamped to ``[1, n]``."""
        size = math.ceil(self.c_window * math.log2(n)) if n > 1 else 1
        return max(1, min(size, n))


class WorkingMatching:
    """Partial matching mutated by a running Gale-Shapley variant."""

    def __init__(self, n: int):
        self.a_to_b = [UNMATCHED] * n
        self.b_to_a = [UNMATCHED] * n

    def match(self, x: int, y: int) -> int:
        """Match ``x`` with ``y``; returns the A-agent ``y`` dropped (or UNMATCHED)."""
        dropped = self.b_to_a[y]
        if dropped != UNMATCHED:
            self.a_to_b[dropped] = UNMATCHED
        self.a_to_b[x] = y
        self.b_to_a[y] = x
        return dropped

    def partner(self, z: AgentId) -> int:
        return self.a_to_b[z.index] if z.side is Side.A else self.b_to_a[z.index]

    def freeze(self) -> Matching:
        return Matching(self.a_to_b, self.b_to_a)


@dataclass(frozen=True)
class RunTrace:
    """One completed matching run."""

    started_at: int
    finished_at: int
    proposals: int
    queries: int
    matching: Matching
    approx_generation: int

    def to_json_dict(self) -> dict:
        return {
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "proposals": self.proposals,
            "queries": self.queries,
            "approx_generation": self.approx_generation,
        }


@dataclass
class MatcherState:
    published: Matching
    working: WorkingMatching
    proposed: list[set[int]]
    approx_a_lists: Optional[tuple[Permutation, ...]] = None
    approx_generation: int = 0
    approx_completed_at: Optional[int] = None
    runs_completed: int = 0
    proposals: int = 0
    run_started_at: int = 0
    run_proposals: int = 0
    run_queries: int = 0
    last_proposal: Optional[tuple[int, int]] = None
    last_run: Optional[RunTrace] = None
    # (approx generation, outcome) for every list sorted so far
    sort_history: list[tuple[int, SortOutcome]] = field(default_factory=list)

    @classmethod
    def initial(cls, n: int) -> "MatcherState":
        # Output before the first completed run is an arbitrary (identity) matching
        return cls(published=Matching.identity(n), working=WorkingMatching(n), proposed=[set() for _ in range(n)])

    def begin_run(self, t: int, n: int) -> None:
        self.working = WorkingMatching(n)
        self.proposed = [set() for _ in range(n)]
        self.run_started_at = t
        self.run_proposals = 0
        self.run_queries = 0

    def complete_sort(self, outcomes: dict[AgentId, SortOutcome], t: int) -> None:
        self.approx_generation += 1
        self.approx_completed_at = t
        self.sort_history.extend((self.approx_generation, outcome) for outcome in outcomes.values())

    def record_proposal(self, x: int, y: int) -> None:
        if y in self.proposed[x]:
            raise ContractViolationError(f"A{x + 1} proposed twice to B{y + 1} in one run")
        self.proposed[x].add(y)
        self.proposals += 1
        self.run_proposals += 1
        self.last_proposal = (x, y)

    def publish(self, matching: Matching, t: int, approx_generation: Optional[int] = None) -> RunTrace:
        if not matching.is_perfect:
            raise ContractViolationError("Only perfect matchings may be published")
        self.published = matching
        self.runs_completed += 1
        self.last_run = RunTrace(
            started_at=self.run_started_at,
            finished_at=t,
            proposals=self.run_proposals,
            queries=self.run_queries,
            matching=matching,
            approx_generation=self.approx_generation if approx_generation is None else approx_generation,
        )
        return self.last_run


class DynamicMatcher:
    """A perpetual matching procedure driven one time-step at a time.

    Subclasses ``_install`` the generator processes that share the
    oracle and ``_pick()``, which decides whose turn the next step is.
    """

    def __init__(self, instance: EvolvingInstance, rng: np.random.Generator):
        self.instance = instance
        self.n = instance.n
        self.rng = rng
        self.state = MatcherState.initial(self.n)
        self._procs: list[Process] = []
        self._pending: list = []
        self._started: list[bool] = []

    def clock(self) -> int:
        return self.instance.t

    def _install(self, *processes: Process) -> None:
        self._procs = list(processes)
        self._pending = [None] * len(processes)
        self._started = [False] * len(processes)

    def _pick(self) -> int:
        return 0

    def step(self) -> None:
        """Advance exactly one time-step."""
        which = self._pick()
        process = self._procs[which]
        if not self._started[which]:
            self._started[which] = True
            self._pending[which] = next(process)
        request = self._pending[which]
        if request is None:
            self.instance.idle()
            answer = None
        else:
            answer = self.instance.query(request)
            self._count_query(which)
        self._pending[which] = process.send(answer)

    def _count_query(self, which: int) -> None:
        self.state.run_queries += 1

    def partner(self, z: AgentId) -> int:
        """Partner of ``z`` in the matching under construction (published if none)."""
        return self.state.published.partner_of_a(z.index) if z.side is Side.A else self.state.published.partner_of_b(z.index)

    def proposed_by(self, x: int) -> Optional[set[int]]:
        return None
