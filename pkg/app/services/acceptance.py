"""Fast acceptance checks run by ``esm verify``.

Each check is small enough to finish in seconds; the full-scale growth
experiments live in the sweep command.
"""

from __future__ import annotations

import logging
import math
import tempfile
import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from app.core.enums import EvolutionMode, MatcherKind, Side
from app.core.exceptions import SimulationError
from app.core.rng import stream
from app.models.matching import Matching
from app.models.permutation import AgentId
from app.models.profile import PreferenceProfile
from app.schemas.run import RunConfig, SweepRequest
from app.services import harness
from app.services.evolution import EvolvingInstance
from app.services.generators import random_profile
from app.services.matchers import WindowConfig, build_matcher, gale_shapley_static
from app.services.measurements import is_stable
from app.services.sorting import evolving_quicksort

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def to_json_dict(self) -> dict:
        return {"name": self.name, "passed": self.passed, "detail": self.detail, "seconds": round(self.seconds, 3)}


@dataclass
class VerifyReport:
    checks: list[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    def to_json_dict(self) -> dict:
        return {"passed": self.passed, "checks": [check.to_json_dict() for check in self.checks]}


def brute_force_blocking_count(profile: PreferenceProfile, m: Matching) -> int:
    """Independent double loop over all pairs; the reference for the vectorized counter."""
    count = 0
    for x in range(profile.n):
        a_list = profile.a_lists[x]
        mx = m.partner_of_a(x)
        for y in range(profile.n):
            if y == mx:
                continue
            b_list = profile.b_lists[y]
            if a_list.prefers(y, mx) and b_list.prefers(x, m.partner_of_b(y)):
                count += 1
    return count


def check_static_degeneracy(ns=(8, 32), seeds=3) -> str:
    """alpha=0: every matcher's informed runs publish stable matchings, quicksort is exact."""
    for n in ns:
        cap = 50 * n * n * max(1, math.ceil(math.log2(n)))
        for seed in range(seeds):
            for kind in (MatcherKind.SIMPLE, MatcherKind.ONE_SIDED, MatcherKind.INTERLEAVED):
                mode = EvolutionMode.ONE_SIDED_B if kind is MatcherKind.ONE_SIDED else EvolutionMode.TWO_SIDED
                profile = random_profile(n, stream(seed, "profile"))
                instance = EvolvingInstance(profile, 0, mode, stream(seed, "nature"))
                matcher = build_matcher(kind, instance, stream(seed, "algorithm"), WindowConfig())
                informed_runs = 0
                seen = 0
                while informed_runs < 2:
                    if instance.t > cap:
                        raise AssertionError(f"{kind.value} n={n} seed={seed}: no informed run within {cap} steps")
                    matcher.step()
                    state = matcher.state
                    if state.runs_completed == seen:
                        continue
                    seen = state.runs_completed
                    if kind is MatcherKind.INTERLEAVED and state.last_run.approx_generation < 1:
                        continue
                    informed_runs += 1
                    if not is_stable(profile, state.published):
                        raise AssertionError(f"{kind.value} n={n} seed={seed}: unstable at t={instance.t}")
            instance = EvolvingInstance(random_profile(n, stream(seed, "profile")), 0, EvolutionMode.TWO_SIDED, stream(seed, "nature"))
            outcome = evolving_quicksort(instance, AgentId(Side.A, 0), stream(seed, "algorithm"))
            if outcome.approx != instance.initial_profile.a_lists[0]:
                raise AssertionError(f"quicksort n={n} seed={seed}: output differs from the static list")
    return f"n in {list(ns)}, {seeds} seeds per n"


def check_stability_oracle(profiles=100, max_n=32, seed=7) -> str:
    rng = np.random.default_rng(seed)
    for _ in range(profiles):
        n = int(rng.integers(1, max_n + 1))
        profile = random_profile(n, rng)
        matching, _ = gale_shapley_static(profile)
        count = brute_force_blocking_count(profile, matching)
        if count:
            raise AssertionError(f"static Gale-Shapley left {count} blocking pairs at n={n}")
    return f"{profiles} random profiles, n <= {max_n}"


def check_tightness(ns=(64, 256)) -> str:
    details = []
    for n in ns:
        k = math.ceil(math.log2(n))
        report = harness.tightness_report(n, k)
        if report.blocking_pairs < report.lower_bound or not report.approx_stable:
            raise AssertionError(f"n={n}, k={k}: {report.to_json_dict()}")
        details.append(f"n={n}: {report.blocking_pairs} >= {report.lower_bound}")
    return "; ".join(details)


def check_replay_determinism() -> str:
    config = RunConfig(n=8, alpha=1, matcher=MatcherKind.INTERLEAVED, seed=3, max_t=3000, warmup_t=1000)
    with tempfile.TemporaryDirectory() as tmp:
        harness.run(config, tmp)
        harness.replay(tmp, strict=True)
    request = SweepRequest(
        ns=[4, 6, 8], matchers=[MatcherKind.INTERLEAVED], replications=2, warmup_scale=0.25, horizon_scale=0.25
    )
    serial = harness.sweep(request.model_copy(update={"parallelism": 1}))
    parallel = harness.sweep(request.model_copy(update={"parallelism": 2}))
    if serial != parallel:
        raise AssertionError("serial and parallel sweeps disagree")
    return "run replayed byte-identically; serial == parallel sweep"


def check_proposal_scale(n=256, seeds=20) -> str:
    proposals = [gale_shapley_static(random_profile(n, stream(seed, "profile")))[1] for seed in range(seeds)]
    ratio = float(np.mean(proposals)) / (n * math.log(n))
    if not 0.5 <= ratio <= 2.0:
        raise AssertionError(f"mean proposals / (n ln n) = {ratio:.3f}")
    return f"mean proposals / (n ln n) = {ratio:.3f}"


def first_proposal_target(n: int, seed: int) -> int:
    """B-agent receiving the first proposal of a fresh interleaved matcher."""
    instance = EvolvingInstance(random_profile(n, stream(seed, "profile")), 1, EvolutionMode.TWO_SIDED, stream(seed, "nature"))
    matcher = build_matcher(MatcherKind.INTERLEAVED, instance, stream(seed, "algorithm"), WindowConfig())
    while matcher.state.proposals == 0:
        matcher.step()
    return matcher.state.last_proposal[1]


def check_first_proposal_uniformity(n=8, seeds=2000) -> str:
    counts = np.bincount([first_proposal_target(n, seed) for seed in range(seeds)], minlength=n)
    p_value = float(stats.chisquare(counts).pvalue)
    if p_value <= 0.001:
        raise AssertionError(f"chi-square p={p_value:.4g}, counts={counts.tolist()}")
    return f"chi-square p={p_value:.3f} over {seeds} seeds"


CHECKS: dict[str, Callable[[], str]] = {
    "static_degeneracy": check_static_degeneracy,
    "stability_oracle": check_stability_oracle,
    "tightness": check_tightness,
    "replay_determinism": check_replay_determinism,
    "proposal_scale": check_proposal_scale,
    "first_proposal_uniformity": check_first_proposal_uniformity,
}


def verify(names: list[str] | None = None) -> VerifyReport:
    report = VerifyReport()
    for name, check in CHECKS.items():
        if names and name not in names:
            continue
        start = time.time()
        try:
            detail = check()
            passed = True
        except (AssertionError, SimulationError) as e:
            detail = str(e)
            passed = False
        elapsed = time.time() - start
        logger.info("Check %s %s in %.2f seconds: %s", name, "passed" if passed else "FAILED", elapsed, detail)
        report.checks.append(CheckResult(name=name, passed=passed, detail=detail, seconds=elapsed))
    return report
