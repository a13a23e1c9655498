from app.services.matchers.base import DynamicMatcher, MatcherState, RunTrace, WindowConfig
from app.services.matchers.dynamic import (
    InterleavedMatcher,
    OneSidedMatcher,
    SimpleDynamicMatcher,
    StaticGSMatcher,
    build_matcher,
    interleaved_matcher,
    one_sided_matcher,
    simple_dynamic_matcher,
    static_gs_matcher,
)
from app.services.matchers.gale_shapley import best_of_window, gale_shapley_static

__all__ = [
    "DynamicMatcher",
    "InterleavedMatcher",
    "MatcherState",
    "OneSidedMatcher",
    "RunTrace",
    "SimpleDynamicMatcher",
    "StaticGSMatcher",
    "WindowConfig",
    "best_of_window",
    "build_matcher",
    "gale_shapley_static",
    "interleaved_matcher",
    "one_sided_matcher",
    "simple_dynamic_matcher",
    "static_gs_matcher",
]
