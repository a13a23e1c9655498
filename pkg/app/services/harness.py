"""Experiment driver: single runs, seed sweeps, growth fits and replay.

A run directory holds everything needed to reproduce it::

    manifest.json        config, code version and headline numbers
    timeseries.csv       sampled blocking pairs and counters
    events.jsonl         every evolution event (when record_events is set)
    runs.jsonl           one line per completed matching run
    sorts.jsonl          one line per sorted list, tagged with its generation
    initial_profile.txt  the truth at t=0
    final_profile.txt    the truth at t=max_t
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from scipy import stats

from app import __version__
from app.core.exceptions import ContractViolationError, FitError, ReplayMismatchError
from app.core.rng import STREAM_KEYS, stream
from app.models.matching import Matching
from app.schemas.run import (
    GroupSummary,
    ReplicationResult,
    RunConfig,
    RunManifest,
    RunSummary,
    SlopeFit,
    SweepRequest,
    SweepSummary,
)
from app.services import profile_io
from app.services.evolution import EvolvingInstance, load_events_jsonl, replay_events
from app.services.generators import adversarial_profile, random_profile
from app.services.matchers import DynamicMatcher, WindowConfig, build_matcher, gale_shapley_static
from app.services.measurements import count_blocking_pairs, is_stable, kendall_tau
from app.services.metrics import MetricsRecorder, TimeSeriesRecord, claim1_audit
from app.utils.directory_utils import create_directory, ensure_directory
from app.utils.report_helpers import frame_to_jsonl, read_json, read_text, write_frame_csv, write_json, write_text

logger = logging.getLogger(__name__)

MANIFEST = "manifest.json"
TIMESERIES = "timeseries.csv"
EVENTS = "events.jsonl"
RUNS = "runs.jsonl"
SORTS = "sorts.jsonl"
INITIAL_PROFILE = "initial_profile.txt"
FINAL_PROFILE = "final_profile.txt"
SUMMARY = "summary.json"


@dataclass
class Simulation:
    config: RunConfig
    instance: EvolvingInstance
    matcher: DynamicMatcher
    recorder: MetricsRecorder

    @property
    def record(self) -> TimeSeriesRecord:
        return self.recorder.record


def simulate(config: RunConfig) -> Simulation:
    """Execute one run in memory; deterministic in ``config``."""
    profile = random_profile(config.n, stream(config.seed, "profile"))
    instance = EvolvingInstance(profile, config.alpha, config.mode, stream(config.seed, "nature"))
    matcher = build_matcher(config.matcher, instance, stream(config.seed, "algorithm"), WindowConfig(config.c_window))
    recorder = MetricsRecorder(instance, matcher, config.sample_every)
    recorder.observe()
    while instance.t < config.max_t:
        matcher.step()
        recorder.observe()
    recorder.sample()
    return Simulation(config=config, instance=instance, matcher=matcher, recorder=recorder)


def summarize(sim: Simulation) -> RunSummary:
    warmup_t = sim.config.warmup_t
    values = sim.record.post_warmup(warmup_t)["blocking_pairs"]
    steady_runs = [audit for audit in sim.recorder.runs if audit.trace.started_at >= warmup_t]
    audit = claim1_audit(steady_runs, sim.instance.event_log)
    summary = RunSummary(
        samples=len(values),
        critical_rate=sim.recorder.critical_rate(),
        audit_violation_rate=audit.violation_rate,
        audited_blocking_pairs=audit.blocking_pairs,
    )
    if len(values):
        summary.median = float(values.median())
        summary.mean = float(values.mean())
        summary.p95 = float(values.quantile(0.95))
    return summary


def build_manifest(sim: Simulation, summary: RunSummary, files: Optional[dict[str, str]] = None) -> RunManifest:
    instance, state = sim.instance, sim.matcher.state
    return RunManifest(
        config=sim.config,
        code_version=__version__,
        stream_keys=dict(STREAM_KEYS),
        t_final=instance.t,
        query_count=instance.query_count,
        idle_steps=instance.idle_steps,
        events=len(instance.event_log),
        critical_events=instance.event_log.critical_count,
        runs_completed=state.runs_completed,
        proposals=state.proposals,
        summary=summary,
        files=files or {},
    )


def _runs_jsonl(sim: Simulation) -> str:
    rows = [{**audit.trace.to_json_dict(), "blocking_pairs": len(audit.blocking)} for audit in sim.recorder.runs]
    return frame_to_jsonl(pd.DataFrame(rows))


def _sorts_jsonl(sim: Simulation) -> str:
    rows = [{"generation": generation, **outcome.to_json_dict()} for generation, outcome in sim.matcher.state.sort_history]
    return frame_to_jsonl(pd.DataFrame(rows))


def write_artifacts(sim: Simulation, summary: RunSummary, out_dir: Path) -> RunManifest:
    files = {
        "timeseries": TIMESERIES,
        "runs": RUNS,
        "sorts": SORTS,
        "initial_profile": INITIAL_PROFILE,
        "final_profile": FINAL_PROFILE,
    }
    write_frame_csv(out_dir / TIMESERIES, sim.record.to_frame())
    write_text(out_dir / RUNS, _runs_jsonl(sim))
    write_text(out_dir / SORTS, _sorts_jsonl(sim))
    write_text(out_dir / INITIAL_PROFILE, profile_io.dumps(sim.instance.initial_profile))
    write_text(out_dir / FINAL_PROFILE, profile_io.dumps(sim.instance.snapshot()))
    if sim.config.record_events:
        write_text(out_dir / EVENTS, sim.instance.event_log.to_jsonl())
        files["events"] = EVENTS
    manifest = build_manifest(sim, summary, files)
    write_json(out_dir / MANIFEST, manifest.model_dump(mode="json"))
    return manifest


def run(config: RunConfig, out_dir: str | Path | None = None, *, write: bool = True) -> tuple[TimeSeriesRecord, RunManifest]:
    """Execute ``config`` and (by default) write its artifacts to ``out_dir``."""
    target = None
    if write:
        target = ensure_directory(out_dir) if out_dir is not None else create_directory(config.run_name())
    start = time.time()
    logger.info("Run %s started (max_t=%d)", config.run_name(), config.max_t)
    sim = simulate(config)
    summary = summarize(sim)
    if target is not None:
        manifest = write_artifacts(sim, summary, target)
    else:
        manifest = build_manifest(sim, summary)
    logger.info(
        "Run %s finished: %d runs completed, median blocking pairs %s, in %.2f seconds",
        config.run_name(),
        manifest.runs_completed,
        summary.median,
        time.time() - start,
    )
    return sim.record, manifest


# ---------- sweeps ----------------------------------------------------------


def _replicate(config: RunConfig) -> ReplicationResult:
    sim = simulate(config)
    return ReplicationResult(n=config.n, matcher=config.matcher, seed=config.seed, summary=summarize(sim))


def fit_growth(ns: Sequence[float], values: Sequence[float], confidence: float = 0.95) -> SlopeFit:
    """Least-squares slope of log(value) against log(n), with a t-based interval.

    Values are floored at 0.5 so that zero medians stay finite.
    """
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    if ns.shape != values.shape:
        raise FitError("ns and values must have the same length")
    if len(np.unique(ns)) < 3:
        raise FitError(f"Growth fit needs at least 3 distinct n values, got {sorted(set(ns.tolist()))}")
    if np.any(ns <= 0) or np.any(values < 0):
        raise FitError("n must be positive and values non-negative")
    x = np.log(ns)
    y = np.log(np.maximum(values, 0.5))
    result = stats.linregress(x, y)
    stderr = float(result.stderr) if math.isfinite(result.stderr) else 0.0
    half = float(stats.t.ppf((1 + confidence) / 2, df=len(x) - 2)) * stderr
    return SlopeFit(
        slope=float(result.slope),
        intercept=float(result.intercept),
        stderr=stderr,
        ci_low=float(result.slope) - half,
        ci_high=float(result.slope) + half,
        confidence=confidence,
        points=len(x),
    )


def aggregate(replications: Sequence[ReplicationResult], alpha: int, fit: bool = True) -> SweepSummary:
    """Reduce per-replication medians to per-(matcher, n) groups and slope fits."""
    if not replications:
        raise ContractViolationError("Nothing to aggregate")
    missing = [r for r in replications if r.summary.median is None]
    if missing:
        raise ContractViolationError(f"{len(missing)} replications have no post-warmup samples")
    frame = pd.DataFrame(
        [{"matcher": r.matcher.value, "n": r.n, "seed": r.seed, "median": r.summary.median} for r in replications]
    ).sort_values(["matcher", "n", "seed"], kind="mergesort")
    grouped = frame.groupby(["matcher", "n"], sort=True)["median"]
    table = pd.DataFrame(
        {
            "replications": grouped.size(),
            "median": grouped.median(),
            "mean": grouped.mean(),
            "p95": grouped.quantile(0.95),
        }
    ).reset_index()
    groups = [
        GroupSummary(
            matcher=row.matcher,
            n=int(row.n),
            replications=int(row.replications),
            median=float(row.median),
            mean=float(row.mean),
            p95=float(row.p95),
        )
        for row in table.itertuples(index=False)
    ]
    fits = {}
    if fit:
        for matcher, rows in table.groupby("matcher", sort=True):
            fits[matcher] = fit_growth(rows["n"].tolist(), rows["median"].tolist())
    ordered = sorted(replications, key=lambda r: (r.matcher.value, r.n, r.seed))
    return SweepSummary(alpha=alpha, groups=groups, fits=fits, replications=ordered)


def sweep(request: SweepRequest, out_dir: str | Path | None = None) -> SweepSummary:
    """Independent replications over every (matcher, n, seed), then aggregation."""
    if request.fit and len(set(request.ns)) < 3:
        raise FitError(f"Growth fit needs at least 3 distinct n values, got {sorted(set(request.ns))}")
    target = ensure_directory(out_dir) if out_dir is not None else None
    configs = request.configs()
    start = time.time()
    logger.info("Sweep of %d runs with parallelism %d", len(configs), request.parallelism)
    if request.parallelism == 1:
        results = [_replicate(config) for config in configs]
    else:
        results = Parallel(n_jobs=request.parallelism)(delayed(_replicate)(config) for config in configs)
    summary = aggregate(results, request.alpha, fit=request.fit)
    logger.info("Sweep finished in %.2f seconds", time.time() - start)
    if target is not None:
        write_json(target / SUMMARY, summary.model_dump(mode="json"))
    return summary


# ---------- replay ----------------------------------------------------------


@dataclass(frozen=True)
class ReplayReport:
    run_dir: str
    csv_identical: bool
    events_identical: Optional[bool]
    final_profile_identical: bool
    event_replay_matches: Optional[bool]

    @property
    def ok(self) -> bool:
        return (
            self.csv_identical
            and self.final_profile_identical
            and self.events_identical is not False
            and self.event_replay_matches is not False
        )

    def to_json_dict(self) -> dict:
        return {
            "run_dir": self.run_dir,
            "csv_identical": self.csv_identical,
            "events_identical": self.events_identical,
            "final_profile_identical": self.final_profile_identical,
            "event_replay_matches": self.event_replay_matches,
            "ok": self.ok,
        }


def load_manifest(run_dir: str | Path) -> RunManifest:
    return RunManifest.model_validate(read_json(Path(run_dir) / MANIFEST))


def replay(run_dir: str | Path, *, strict: bool = True) -> ReplayReport:
    """Re-execute a run from its manifest and compare against what it wrote.

    When the event log was recorded, the logged swaps are also reapplied to the
    written initial profile and must land on the written final profile.
    """
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    sim = simulate(manifest.config)
    written_final = read_text(run_dir / FINAL_PROFILE)
    csv_identical = sim.record.to_frame().to_csv(index=False, lineterminator="\n") == read_text(run_dir / TIMESERIES)
    final_identical = profile_io.dumps(sim.instance.snapshot()) == written_final

    events_identical = event_replay = None
    if "events" in manifest.files:
        written_events = read_text(run_dir / EVENTS)
        events_identical = sim.instance.event_log.to_jsonl() == written_events
        initial = profile_io.loads(read_text(run_dir / INITIAL_PROFILE))
        try:
            replayed = replay_events(initial, load_events_jsonl(written_events))
            event_replay = profile_io.dumps(replayed) == written_final
        except ReplayMismatchError:
            logger.exception("Logged events do not apply to the written initial profile")
            event_replay = False

    report = ReplayReport(
        run_dir=str(run_dir),
        csv_identical=csv_identical,
        events_identical=events_identical,
        final_profile_identical=final_identical,
        event_replay_matches=event_replay,
    )
    if strict and not report.ok:
        raise ReplayMismatchError(f"Replay of {run_dir} diverged: {report.to_json_dict()}")
    return report


# ---------- tightness ---------------------------------------------------------


@dataclass(frozen=True)
class TightnessReport:
    n: int
    k: int
    blocking_pairs: int
    lower_bound: int
    kendall_max: int
    approx_stable: bool
    gs_is_identity: bool

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "k": self.k,
            "blocking_pairs": self.blocking_pairs,
            "lower_bound": self.lower_bound,
            "kendall_max": self.kendall_max,
            "approx_stable": self.approx_stable,
            "gs_is_identity": self.gs_is_identity,
        }


def tightness_report(n: int, k: int) -> TightnessReport:
    """How badly a matching stable for slightly wrong lists does on the true ones."""
    true, approx = adversarial_profile(n, k)
    identity = Matching.identity(n)
    gs_matching, _ = gale_shapley_static(approx)
    kendall_max = max(
        kendall_tau(t, a) for t, a in zip(true.a_lists + true.b_lists, approx.a_lists + approx.b_lists)
    )
    return TightnessReport(
        n=n,
        k=k,
        blocking_pairs=count_blocking_pairs(true, identity),
        lower_bound=(k - 1) * n - k * (k - 1),
        kendall_max=kendall_max,
        approx_stable=is_stable(approx, identity),
        gs_is_identity=gs_matching == identity,
    )
