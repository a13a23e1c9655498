"""Measurement and criticality instrumentation.

Nothing in here consumes a time-step: snapshots and blocking-pair counts are
taken outside the query model.
"""

from __future__ import annotations

import io
import logging
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Optional

import numpy as np
import pandas as pd

from app.core.enums import CriticalFlag, Side
from app.core.exceptions import ContractViolationError, StaleContextError
from app.models.matching import UNMATCHED, Matching
from app.models.permutation import AgentId
from app.services.evolution import (
    BEST_UNPROPOSED_BIT,
    FLAG_SETS,
    MATCH_SWAP_BIT,
    EventLog,
    EvolutionEvent,
    EvolvingInstance,
)
from app.services.matchers.base import DynamicMatcher, MatcherState, RunTrace
from app.services.measurements import blocking_pair_mask, profile_disagreement
from app.services.sorting import SortOutcome

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["t", "blocking_pairs", "queries", "proposals", "runs_completed", "critical_events"]


@dataclass(frozen=True)
class Sample:
    t: int
    blocking_pairs: int
    queries: int
    proposals: int
    runs_completed: int
    critical_events: int


@dataclass
class TimeSeriesRecord:
    samples: list[Sample] = field(default_factory=list)

    def append(self, sample: Sample) -> None:
        if self.samples:
            last = self.samples[-1]
            if sample.t <= last.t:
                raise ContractViolationError(f"Sample times must increase: {sample.t} after {last.t}")
            if (
                sample.queries < last.queries
                or sample.proposals < last.proposals
                or sample.runs_completed < last.runs_completed
                or sample.critical_events < last.critical_events
            ):
                raise ContractViolationError(f"Counters decreased at t={sample.t}")
        self.samples.append(sample)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def last(self) -> Optional[Sample]:
        return self.samples[-1] if self.samples else None

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(s) for s in self.samples], columns=CSV_COLUMNS).astype("int64")

    def to_csv(self) -> str:
        return self.to_frame().to_csv(index=False, lineterminator="\n")

    def post_warmup(self, warmup_t: int) -> pd.DataFrame:
        frame = self.to_frame()
        return frame[frame["t"] >= warmup_t]

    @classmethod
    def from_csv(cls, text: str) -> "TimeSeriesRecord":
        frame = pd.read_csv(io.StringIO(text))
        record = cls()
        for row in frame[CSV_COLUMNS].itertuples(index=False):
            record.append(Sample(*(int(v) for v in row)))
        return record


@dataclass(frozen=True)
class CriticalityContext:
    """What an event is judged against: the then matching and the live best candidates."""

    t: int
    partner: Callable[[AgentId], int]
    best_unproposed: Callable[[int], Optional[int]]


def _critical_bits(mate: int, best: Optional[int], u: int, v: int) -> int:
    bits = 0
    if mate != UNMATCHED and (mate == u or mate == v):
        bits |= MATCH_SWAP_BIT
    if best is not None and (best == u or best == v):
        bits |= BEST_UNPROPOSED_BIT
    return bits


def classify_event(event: EvolutionEvent, ctx: CriticalityContext) -> frozenset[CriticalFlag]:
    if ctx.t != event.t:
        raise StaleContextError(f"Context at t={ctx.t} cannot classify an event at t={event.t}")
    best = ctx.best_unproposed(event.z.index) if event.z.side is Side.A else None
    return FLAG_SETS[_critical_bits(ctx.partner(event.z), best, event.u, event.v)]


def _live_blocking_mask(instance: EvolvingInstance, m: Matching) -> np.ndarray:
    return blocking_pair_mask(instance.rank_view(Side.A), instance.rank_view(Side.B), m.a_to_b, m.b_to_a)


def sample_blocking(instance: EvolvingInstance, state: MatcherState, record: TimeSeriesRecord) -> Sample:
    """Count blocking pairs of the published matching against the current truth."""
    if record.last is not None and record.last.t == instance.t:
        return record.last
    sample = Sample(
        t=instance.t,
        blocking_pairs=int(_live_blocking_mask(instance, state.published).sum()),
        queries=instance.query_count,
        proposals=state.proposals,
        runs_completed=state.runs_completed,
        critical_events=instance.event_log.critical_count,
    )
    record.append(sample)
    return sample


@dataclass(frozen=True)
class RunAudit:
    trace: RunTrace
    blocking: frozenset[tuple[int, int]]


@dataclass
class AuditReport:
    runs_audited: int = 0
    blocking_pairs: int = 0
    violations: list[tuple[int, int, int]] = field(default_factory=list)

    @property
    def violation_rate(self) -> float:
        return len(self.violations) / self.blocking_pairs if self.blocking_pairs else 0.0

    def to_json_dict(self) -> dict:
        return {
            "runs_audited": self.runs_audited,
            "blocking_pairs": self.blocking_pairs,
            "violations": len(self.violations),
            "violation_rate": self.violation_rate,
        }


def claim1_audit(runs: Iterable[RunAudit], events: EventLog | Iterable[EvolutionEvent]) -> AuditReport:
    """Check every blocking pair of a completed run is explained by a critical event.

    A pair ``(x, y)`` is explained when some critical event hit the list of
    ``x`` or of ``y`` between the run's first step and its completion.
    Violations are ``(run index, x, y)``.
    """
    materialized = None if isinstance(events, EventLog) else list(events)
    report = AuditReport()
    for index, audit in enumerate(runs):
        lo, hi = audit.trace.started_at + 1, audit.trace.finished_at
        if materialized is None:
            critical = events.critical_between(lo, hi)
        else:
            critical = (e for e in materialized if lo <= e.t <= hi and e.is_critical)
        owners = {event.z for event in critical}
        report.runs_audited += 1
        for x, y in sorted(audit.blocking):
            report.blocking_pairs += 1
            if AgentId(Side.A, x) not in owners and AgentId(Side.B, y) not in owners:
                report.violations.append((index, x, y))
    return report


def approximation_disagreement(instance: EvolvingInstance, outcomes: Mapping[AgentId, SortOutcome]) -> int:
    """Max per-element disagreement between each sorted copy and its live list."""
    worst = 0
    for side in (Side.A, Side.B):
        owners = sorted(o.index for o in outcomes if o.side is side)
        if not owners:
            continue
        truth = instance.rank_view(side)[owners]
        approx = np.stack([outcomes[AgentId(side, i)].approx.rank_of for i in owners])
        worst = max(worst, profile_disagreement(truth, approx))
    return worst


class MetricsRecorder:
    """Owns the time series, the criticality classifier and per-run audits of one run."""

    def __init__(self, instance: EvolvingInstance, matcher: DynamicMatcher, sample_every: int):
        if sample_every < 1:
            raise ContractViolationError("sample_every must be at least 1")
        self.instance = instance
        self.matcher = matcher
        self.sample_every = sample_every
        self.record = TimeSeriesRecord()
        self.runs: list[RunAudit] = []
        self._runs_seen = 0
        instance.classifier = self.classify

    def context(self) -> CriticalityContext:
        return CriticalityContext(t=self.instance.t, partner=self.matcher.partner, best_unproposed=self._best_unproposed)

    def _best_unproposed(self, x: int) -> Optional[int]:
        proposed = self.matcher.proposed_by(x)
        if proposed is None:
            return None
        # Only the first len(proposed) + 1 entries can hold it
        for y in self.instance.leading_agents(Side.A, x, len(proposed) + 1):
            if y not in proposed:
                return y
        return None

    def classify(self, side: Side, index: int, u: int, v: int) -> int:
        """Flag bits of a pending swap of (u, v) on the list of (side, index), at the current step."""
        best = self._best_unproposed(index) if side is Side.A else None
        return _critical_bits(self.matcher.partner(AgentId(side, index)), best, u, v)

    def sample(self) -> Sample:
        return sample_blocking(self.instance, self.matcher.state, self.record)

    def observe(self) -> None:
        """Call after every step: audits completed runs and samples on cadence."""
        state = self.matcher.state
        if state.runs_completed != self._runs_seen:
            self._runs_seen = state.runs_completed
            self._audit(state.last_run)
            self.sample()
        elif self.instance.t % self.sample_every == 0:
            self.sample()

    def _audit(self, trace: RunTrace) -> None:
        mask = _live_blocking_mask(self.instance, trace.matching)
        xs, ys = mask.nonzero()
        self.runs.append(RunAudit(trace=trace, blocking=frozenset(zip(xs.tolist(), ys.tolist()))))
        logger.debug("Run %d finished at t=%d with %d blocking pairs", len(self.runs), trace.finished_at, len(xs))

    def audit(self) -> AuditReport:
        return claim1_audit(self.runs, self.instance.event_log)

    def critical_rate(self) -> float:
        """Critical events per elapsed time-step."""
        return self.instance.event_log.critical_count / self.instance.t if self.instance.t else 0.0
