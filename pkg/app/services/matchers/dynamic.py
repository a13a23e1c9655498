"""The perpetual matchers.

Each matcher owns one or two processes and advances the shared clock one
time-step per ``step()``. ``state.published`` is the answer at any moment: the
output of the last completed run (identity before the first one).
"""

from __future__ import annotations

import logging
from typing import Optional

import numpy as np

from app.core.enums import EvolutionMode, MatcherKind, Side
from app.core.exceptions import ConfigError, ContractViolationError
from app.models.permutation import AgentId
from app.models.profile import PreferenceProfile
from app.services.evolution import EvolvingInstance
from app.services.generators import random_permutations
from app.services.matchers.base import DynamicMatcher, WindowConfig
from app.services.matchers.gale_shapley import (
    deferred_acceptance_process,
    first_unproposed_chooser,
    gale_shapley_static,
    windowed_best_chooser,
)
from app.services.sorting import Process, sequential_sort_process

logger = logging.getLogger(__name__)


def _require_mode(instance: EvolvingInstance, mode: EvolutionMode, name: str) -> None:
    if instance.mode is not mode:
        raise ContractViolationError(f"{name} requires {mode.value} evolution, instance is {instance.mode.value}")


class LiveRunMatcher(DynamicMatcher):
    """Matchers whose runs build the matching through live queries."""

    def partner(self, z: AgentId) -> int:
        return self.state.working.partner(z)

    def proposed_by(self, x: int) -> Optional[set[int]]:
        return self.state.proposed[x]


class SimpleDynamicMatcher(DynamicMatcher):
    """Sort all 2n lists, run Gale-Shapley on the sorted copies, repeat."""

    kind = MatcherKind.SIMPLE

    def __init__(self, instance: EvolvingInstance, rng: np.random.Generator):
        _require_mode(instance, EvolutionMode.TWO_SIDED, "Simple matcher")
        super().__init__(instance, rng)
        self._install(self._loop())

    def _loop(self) -> Process[None]:
        n, state = self.n, self.state
        a_side = [AgentId(Side.A, i) for i in range(n)]
        b_side = [AgentId(Side.B, i) for i in range(n)]
        while True:
            state.begin_run(self.clock(), n)
            outcomes = yield from sequential_sort_process(a_side + b_side, n, self.rng, self.clock)
            approx = PreferenceProfile([outcomes[o].approx for o in a_side], [outcomes[o].approx for o in b_side])
            state.approx_a_lists = approx.a_lists
            state.complete_sort(outcomes, self.clock())
            matching, proposals = gale_shapley_static(approx)
            state.proposals += proposals
            state.run_proposals = proposals
            trace = state.publish(matching, self.clock())
            logger.debug("Simple run %d done at t=%d", state.runs_completed, trace.finished_at)
            if trace.queries == 0:
                yield None


class OneSidedMatcher(LiveRunMatcher):
    """Gale-Shapley from scratch, forever; A-lists are known, B-side tests are queries."""

    kind = MatcherKind.ONE_SIDED

    def __init__(self, instance: EvolvingInstance, rng: np.random.Generator):
        _require_mode(instance, EvolutionMode.ONE_SIDED_B, "One-sided matcher")
        super().__init__(instance, rng)
        self.state.approx_a_lists = instance.read_a_lists()
        self._install(self._loop())

    def _loop(self) -> Process[None]:
        state = self.state
        choose = first_unproposed_chooser(state, state.approx_a_lists)
        while True:
            matching = yield from deferred_acceptance_process(state, self.n, choose, self.clock)
            trace = state.publish(matching, self.clock())
            if trace.queries == 0:
                yield None


class InterleavedMatcher(LiveRunMatcher):
    """Sorting process on even steps, windowed Gale-Shapley on odd steps."""

    kind = MatcherKind.INTERLEAVED
    MATCHING, SORTING = 0, 1

    def __init__(self, instance: EvolvingInstance, rng: np.random.Generator, cfg: Optional[WindowConfig] = None):
        _require_mode(instance, EvolutionMode.TWO_SIDED, "Interleaved matcher")
        if cfg is not None and not isinstance(cfg, WindowConfig):
            raise ConfigError(f"Expected a WindowConfig, got {type(cfg).__name__}")
        super().__init__(instance, rng)
        self.cfg = cfg or WindowConfig()
        self.window = self.cfg.window(self.n)
        # Until the first sort completes, the approximations are random permutations
        self.state.approx_a_lists = tuple(random_permutations(self.n, self.n, rng))
        self._approx_in_use = self.state.approx_a_lists
        self._install(self._matching_loop(), self._sorting_loop())

    def _pick(self) -> int:
        return self.SORTING if (self.instance.t + 1) % 2 == 0 else self.MATCHING

    def _count_query(self, which: int) -> None:
        if which == self.MATCHING:
            self.state.run_queries += 1

    def _sorting_loop(self) -> Process[None]:
        state = self.state
        owners = [AgentId(Side.A, i) for i in range(self.n)]
        while True:
            outcomes = yield from sequential_sort_process(owners, self.n, self.rng, self.clock)
            state.approx_a_lists = tuple(outcomes[o].approx for o in owners)
            state.complete_sort(outcomes, self.clock())
            logger.debug("Sort generation %d done at t=%d", state.approx_generation, self.clock())
            if all(o.comparisons == 0 for o in outcomes.values()):
                yield None

    def _matching_loop(self) -> Process[None]:
        state = self.state
        choose = windowed_best_chooser(state, lambda: self._approx_in_use, self.cfg, self.n)
        while True:
            self._approx_in_use = state.approx_a_lists
            generation = state.approx_generation
            matching = yield from deferred_acceptance_process(state, self.n, choose, self.clock)
            trace = state.publish(matching, self.clock(), approx_generation=generation)
            if trace.queries == 0:
                yield None


class StaticGSMatcher(DynamicMatcher):
    """Control: stable matching of the true lists at t=0, never updated."""

    kind = MatcherKind.STATIC_GS

    def __init__(self, instance: EvolvingInstance, rng: np.random.Generator):
        super().__init__(instance, rng)
        state = self.state
        state.begin_run(self.clock(), self.n)
        matching, proposals = gale_shapley_static(instance.snapshot())
        state.proposals += proposals
        state.run_proposals = proposals
        state.publish(matching, self.clock())
        self._install(self._idle())

    def _idle(self) -> Process[None]:
        while True:
            yield None


def simple_dynamic_matcher(instance: EvolvingInstance, rng: np.random.Generator) -> SimpleDynamicMatcher:
    return SimpleDynamicMatcher(instance, rng)


def one_sided_matcher(instance: EvolvingInstance, rng: np.random.Generator) -> OneSidedMatcher:
    return OneSidedMatcher(instance, rng)


def interleaved_matcher(
    instance: EvolvingInstance, rng: np.random.Generator, cfg: Optional[WindowConfig] = None
) -> InterleavedMatcher:
    return InterleavedMatcher(instance, rng, cfg)


def static_gs_matcher(instance: EvolvingInstance, rng: np.random.Generator) -> StaticGSMatcher:
    return StaticGSMatcher(instance, rng)


def build_matcher(
    kind: MatcherKind, instance: EvolvingInstance, rng: np.random.Generator, cfg: Optional[WindowConfig] = None
) -> DynamicMatcher:
    if kind is MatcherKind.SIMPLE:
        return SimpleDynamicMatcher(instance, rng)
    if kind is MatcherKind.ONE_SIDED:
        return OneSidedMatcher(instance, rng)
    if kind is MatcherKind.INTERLEAVED:
        return InterleavedMatcher(instance, rng, cfg)
    if kind is MatcherKind.STATIC_GS:
        return StaticGSMatcher(instance, rng)
    raise ConfigError(f"Unknown matcher: {kind!r}")
