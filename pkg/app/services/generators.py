from __future__ import annotations

import logging

import numpy as np

from app.core.exceptions import InvalidProfileError
from app.models.permutation import Permutation
from app.models.profile import PreferenceProfile

logger = logging.getLogger(__name__)


def random_profile(n: int, rng: np.random.Generator) -> PreferenceProfile:
    """2n independent uniform permutations, A-side lists drawn first."""
    if n < 1:
        raise InvalidProfileError(f"Instance size must be at least 1, got {n}")
    a_lists = random_permutations(n, n, rng)
    b_lists = random_permutations(n, n, rng)
    return PreferenceProfile(a_lists, b_lists)


def random_permutations(n: int, count: int, rng: np.random.Generator) -> list[Permutation]:
    return [Permutation.from_order(rng.permutation(n)) for _ in range(count)]


def adversarial_profile(n: int, k: int) -> tuple[PreferenceProfile, PreferenceProfile]:
    """Cyclic instance on which M(i) = i is stable for the approximation only.

    The approximate A-side list of ``x`` is ``x, x+1, ..., n, 1, ..., x-1`` and the
    approximate B-side list of ``y`` is ``y, y-1, ..., 1, n, ..., y+1``; every true
    list is its approximation with the occupants of ranks 1 and ``k`` exchanged.

    Returns ``(true_profile, approx_profile)``.
    """
    if not 2 <= k <= n:
        raise InvalidProfileError(f"Swap rank k must satisfy 2 <= k <= n, got k={k}, n={n}")
    offsets = np.arange(n)
    approx_a = [Permutation.from_order((x + offsets) % n) for x in range(n)]
    approx_b = [Permutation.from_order((y - offsets) % n) for y in range(n)]
    true_a = [p.swap_ranks(0, k - 1) for p in approx_a]
    true_b = [p.swap_ranks(0, k - 1) for p in approx_b]
    return PreferenceProfile(true_a, true_b), PreferenceProfile(approx_a, approx_b)
