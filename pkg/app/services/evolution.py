"""The evolving world: comparison oracle, clock and nature.

Each time-step the algorithm gets one comparison query, answered against the
current lists, after which nature applies exactly ``alpha`` evolution events
(a uniformly chosen list, a uniformly chosen adjacent pair, swapped).
"""

from __future__ import annotations

import json
import logging
from array import array
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from typing import Callable, Iterator, NamedTuple

import numpy as np
import pandas as pd

from app.core.enums import CriticalFlag, EvolutionMode, Side
from app.core.exceptions import (
    ContractViolationError,
    EmptyEvolutionDomainError,
    InvalidQueryError,
    ReplayMismatchError,
)
from app.core.rng import NatureStream
from app.models.permutation import AgentId, Permutation
from app.models.profile import PreferenceProfile
from app.utils.report_helpers import frame_to_jsonl

logger = logging.getLogger(__name__)

MATCH_SWAP_BIT = 1
BEST_UNPROPOSED_BIT = 2
_FLAG_BITS = {CriticalFlag.MATCH_SWAP: MATCH_SWAP_BIT, CriticalFlag.BEST_UNPROPOSED_SWAP: BEST_UNPROPOSED_BIT}
# bits -> flag set, for every combination
FLAG_SETS = tuple(frozenset(flag for flag, bit in _FLAG_BITS.items() if bits & bit) for bits in range(4))
_FLAG_LABELS = tuple(sorted(flag.value for flag in flags) for flags in FLAG_SETS)
_FLAG_LABEL_ARRAY = np.empty(len(_FLAG_LABELS), dtype=object)
for _bits, _labels in enumerate(_FLAG_LABELS):
    _FLAG_LABEL_ARRAY[_bits] = _labels
_SIDES = (Side.A, Side.B)


def flag_bits(flags) -> int:
    bits = 0
    for flag in flags:
        bits |= _FLAG_BITS[flag]
    return bits


class QueryTriple(NamedTuple):
    """Does ``z`` rank ``u`` above ``v``?"""

    z: AgentId
    u: AgentId
    v: AgentId


@dataclass(frozen=True, slots=True)
class EvolutionEvent:
    t: int
    z: AgentId
    pos: int  # 1-based: ranks pos and pos + 1 were swapped
    u: int  # pre-swap occupant of rank pos
    v: int  # pre-swap occupant of rank pos + 1
    critical_flags: frozenset[CriticalFlag] = field(default_factory=frozenset)

    @property
    def is_critical(self) -> bool:
        return bool(self.critical_flags)

    def to_json_dict(self) -> dict:
        return {
            "t": self.t,
            "side": self.z.side.value,
            "list": self.z.index + 1,
            "pos": self.pos,
            "u": self.u + 1,
            "v": self.v + 1,
            "critical": sorted(flag.value for flag in self.critical_flags),
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "EvolutionEvent":
        return cls(
            t=int(data["t"]),
            z=AgentId(Side(data["side"]), int(data["list"]) - 1),
            pos=int(data["pos"]),
            u=int(data["u"]) - 1,
            v=int(data["v"]) - 1,
            critical_flags=frozenset(CriticalFlag(flag) for flag in data.get("critical", [])),
        )


class EventLog:
    """Append-only, columnar event store.

    Long runs log millions of events, so fields live in typed arrays and
    ``EvolutionEvent`` objects are materialized on access.
    """

    def __init__(self) -> None:
        self._t = array("q")
        self._side = array("b")
        self._owner = array("l")
        self._pos = array("l")
        self._u = array("l")
        self._v = array("l")
        self._flags = array("b")
        self.critical_count = 0

    def append(self, event: EvolutionEvent) -> None:
        self.append_raw(
            event.t, 0 if event.z.side is Side.A else 1, event.z.index, event.pos, event.u, event.v, flag_bits(event.critical_flags)
        )

    def append_raw(self, t: int, side: int, owner: int, pos: int, u: int, v: int, bits: int) -> None:
        self._t.append(t)
        self._side.append(side)
        self._owner.append(owner)
        self._pos.append(pos)
        self._u.append(u)
        self._v.append(v)
        self._flags.append(bits)
        if bits:
            self.critical_count += 1

    def __len__(self) -> int:
        return len(self._t)

    def _event(self, i: int) -> EvolutionEvent:
        return EvolutionEvent(
            t=self._t[i],
            z=AgentId(_SIDES[self._side[i]], self._owner[i]),
            pos=self._pos[i],
            u=self._u[i],
            v=self._v[i],
            critical_flags=FLAG_SETS[self._flags[i]],
        )

    def __getitem__(self, i: int) -> EvolutionEvent:
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError("event index out of range")
        return self._event(i)

    def __iter__(self) -> Iterator[EvolutionEvent]:
        for i in range(len(self)):
            yield self._event(i)

    def between(self, t_start: int, t_end: int) -> Iterator[EvolutionEvent]:
        """Events with ``t_start <= t <= t_end``."""
        lo = bisect_left(self._t, t_start)
        hi = bisect_right(self._t, t_end)
        for i in range(lo, hi):
            yield self._event(i)

    def critical_between(self, t_start: int, t_end: int) -> Iterator[EvolutionEvent]:
        lo = bisect_left(self._t, t_start)
        hi = bisect_right(self._t, t_end)
        for i in range(lo, hi):
            if self._flags[i]:
                yield self._event(i)

    def to_frame(self) -> pd.DataFrame:
        """One row per event, labels 1-based as in the JSONL log."""
        side = np.asarray(self._side, dtype=np.int8)
        return pd.DataFrame(
            {
                "t": np.asarray(self._t, dtype=np.int64),
                "side": np.where(side == 0, Side.A.value, Side.B.value),
                "list": np.asarray(self._owner, dtype=np.int64) + 1,
                "pos": np.asarray(self._pos, dtype=np.int64),
                "u": np.asarray(self._u, dtype=np.int64) + 1,
                "v": np.asarray(self._v, dtype=np.int64) + 1,
                "critical": _FLAG_LABEL_ARRAY[np.asarray(self._flags, dtype=np.intp)],
            }
        )

    def to_jsonl(self) -> str:
        return frame_to_jsonl(self.to_frame())


def load_events_jsonl(text: str) -> list[EvolutionEvent]:
    return [EvolutionEvent.from_json_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


# (side, owner index, u, v) of a pending swap -> critical flag bits
Classifier = Callable[[Side, int, int, int], int]


class EvolvingInstance:
    """Single mutable world state of a run.

    ``t`` counts elapsed time-steps (answered queries plus idle steps) and the
    event log always holds ``alpha * t`` events for ``n >= 2``.
    """

    def __init__(
        self,
        profile: PreferenceProfile,
        alpha: int,
        mode: EvolutionMode,
        nature_rng: np.random.Generator,
    ):
        if alpha < 0:
            raise ContractViolationError(f"Evolution rate must be non-negative, got {alpha}")
        self.n = profile.n
        self.alpha = int(alpha)
        self.mode = mode
        self.initial_profile = profile
        self.t = 0
        self.query_count = 0
        self.idle_steps = 0
        self.event_log = EventLog()
        self.classifier: Classifier | None = None

        self._rank = {side: np.array(profile.rank_matrix(side)) for side in _SIDES}
        self._order = {side: profile.order_matrix(side).astype(np.int64) for side in _SIDES}
        num_owners = self.n if mode is EvolutionMode.ONE_SIDED_B else 2 * self.n
        self._nature = NatureStream(nature_rng, num_owners, max(self.n - 1, 1))
        self._a_lists = profile.a_lists if mode is EvolutionMode.ONE_SIDED_B else None

    # -- queries -------------------------------------------------------

    def _validate(self, q: QueryTriple) -> None:
        z, u, v = q
        if not (isinstance(z, AgentId) and isinstance(u, AgentId) and isinstance(v, AgentId)):
            raise InvalidQueryError(f"Query entries must be AgentIds: {q!r}")
        for agent in (z, u, v):
            if not 0 <= agent.index < self.n:
                raise InvalidQueryError(f"Agent {agent.label()} out of range for n={self.n}")
        if u.side is z.side or v.side is z.side:
            raise InvalidQueryError(f"{z.label()} can only compare agents of side {z.side.other.value}")
        if u.index == v.index:
            raise InvalidQueryError(f"Query compares {u.label()} with itself")

    def query(self, q: QueryTriple) -> bool:
        """Answer ``pi_z(u) < pi_z(v)`` on the current lists, then let nature move."""
        n = self.n
        try:
            z, u, v = q
            well_formed = (
                u.side is v.side
                and u.side is not z.side
                and u.index != v.index
                and 0 <= z.index < n
                and 0 <= u.index < n
                and 0 <= v.index < n
            )
        except (AttributeError, TypeError, ValueError):
            well_formed = False
        if not well_formed:
            self._validate(q)
            raise InvalidQueryError(f"Malformed query: {q!r}")
        ranks = self._rank[z.side]
        answer = bool(ranks[z.index, u.index] < ranks[z.index, v.index])
        self.query_count += 1
        self._advance()
        return answer

    def idle(self) -> None:
        """Consume one time-step without a query; nature still moves."""
        self.idle_steps += 1
        self._advance()

    def _advance(self) -> None:
        self.t += 1
        if self.n < 2:
            return
        for _ in range(self.alpha):
            self._evolve()

    # -- evolution -----------------------------------------------------

    def _evolve(self) -> tuple[Side, int, int, int, int, int]:
        """Draw, classify against the pre-swap world, swap and log one event."""
        owner, pos0 = self._nature.draw()
        if self.mode is EvolutionMode.ONE_SIDED_B:
            side, index = Side.B, owner
        elif owner < self.n:
            side, index = Side.A, owner
        else:
            side, index = Side.B, owner - self.n
        order = self._order[side]
        u = int(order[index, pos0])
        v = int(order[index, pos0 + 1])
        bits = self.classifier(side, index, u, v) if self.classifier is not None else 0
        order[index, pos0] = v
        order[index, pos0 + 1] = u
        ranks = self._rank[side]
        ranks[index, u] = pos0 + 1
        ranks[index, v] = pos0
        self.event_log.append_raw(self.t, 0 if side is Side.A else 1, index, pos0 + 1, u, v, bits)
        return side, index, pos0 + 1, u, v, bits

    def apply_evolution_event(self) -> EvolutionEvent:
        if self.n < 2:
            raise EmptyEvolutionDomainError("Lists of length 1 have no adjacent pair to swap")
        side, index, pos, u, v, bits = self._evolve()
        return EvolutionEvent(t=self.t, z=AgentId(side, index), pos=pos, u=u, v=v, critical_flags=FLAG_SETS[bits])

    def _swap(self, side: Side, owner: int, pos0: int) -> tuple[int, int]:
        order = self._order[side][owner]
        ranks = self._rank[side][owner]
        u = int(order[pos0])
        v = int(order[pos0 + 1])
        order[pos0], order[pos0 + 1] = v, u
        ranks[u], ranks[v] = pos0 + 1, pos0
        return u, v

    def swap_adjacent(self, z: AgentId, pos: int) -> tuple[int, int]:
        """Swap ranks ``pos`` and ``pos + 1`` (1-based) of ``z``'s list, outside nature.

        Does not touch the clock or the log.
        """
        if not 1 <= pos <= self.n - 1:
            raise EmptyEvolutionDomainError(f"Position {pos} outside 1..{self.n - 1}")
        return self._swap(z.side, z.index, pos - 1)

    # -- free reads ------------------------------------------------------

    def snapshot(self) -> PreferenceProfile:
        """Deep copy of the current lists; costs no time-step."""
        return PreferenceProfile.from_rank_matrices(self._rank[Side.A], self._rank[Side.B], validate=False)

    def rank_view(self, side: Side) -> np.ndarray:
        """Read-only view of the live rank matrix, for measurement only."""
        view = self._rank[side].view()
        view.setflags(write=False)
        return view

    def ranked_agents(self, z: AgentId) -> np.ndarray:
        """Read-only live preference order of ``z``, for measurement only."""
        view = self._order[z.side][z.index].view()
        view.setflags(write=False)
        return view

    def leading_agents(self, side: Side, index: int, k: int) -> list[int]:
        """First ``k`` entries of a live list, best first, for measurement only."""
        return self._order[side][index, :k].tolist()

    def read_a_lists(self) -> tuple[Permutation, ...]:
        """The A-side lists, readable for free under one-sided evolution only."""
        if self._a_lists is None:
            raise ContractViolationError("A-side lists are only readable without queries in one-sided mode")
        return self._a_lists


def replay_events(initial: PreferenceProfile, events) -> PreferenceProfile:
    """Reapply logged swaps to ``initial`` and return the resulting profile."""
    rank = {side: np.array(initial.rank_matrix(side)) for side in _SIDES}
    order = {side: initial.order_matrix(side).astype(np.int64) for side in _SIDES}
    for event in events:
        side, owner, pos0 = event.z.side, event.z.index, event.pos - 1
        row = order[side][owner]
        u, v = int(row[pos0]), int(row[pos0 + 1])
        if (u, v) != (event.u, event.v):
            raise ReplayMismatchError(
                f"Event at t={event.t} on {event.z.label()} expected ({event.u + 1}, {event.v + 1}) "
                f"at position {event.pos}, found ({u + 1}, {v + 1})"
            )
        row[pos0], row[pos0 + 1] = v, u
        rank[side][owner][u], rank[side][owner][v] = pos0 + 1, pos0
    return PreferenceProfile.from_rank_matrices(rank[Side.A], rank[Side.B], validate=False)
