"""Exact, oracle-grade measurements on static profiles.

Everything here is free in the query model: it reads frozen snapshots and is
never charged a time-step.
"""

from __future__ import annotations

import numpy as np

from app.core.enums import Side
from app.core.exceptions import InvalidMatchingError, InvalidProfileError
from app.models.matching import Matching
from app.models.permutation import Permutation
from app.models.profile import PreferenceProfile


def blocking_pair_mask(a_rank: np.ndarray, b_rank: np.ndarray, a_to_b: np.ndarray, b_to_a: np.ndarray) -> np.ndarray:
    """Boolean ``(n, n)`` mask, ``[x, y]`` set iff ``(x, y)`` blocks the matching."""
    rows = np.arange(len(a_to_b))
    a_prefers = a_rank < a_rank[rows, a_to_b][:, None]
    b_prefers = b_rank < b_rank[rows, b_to_a][:, None]
    return a_prefers & b_prefers.T


def _check_perfect(profile: PreferenceProfile, m: Matching) -> None:
    if m.n != profile.n:
        raise InvalidMatchingError(f"Matching has size {m.n}, profile has size {profile.n}")
    if not m.is_perfect:
        raise InvalidMatchingError("Blocking pairs are only defined for perfect matchings")


def blocking_pairs(profile: PreferenceProfile, m: Matching) -> set[tuple[int, int]]:
    """Every ``(x, y)`` where x prefers y to M(x) and y prefers x to M^-1(y)."""
    _check_perfect(profile, m)
    mask = blocking_pair_mask(profile.rank_matrix(Side.A), profile.rank_matrix(Side.B), m.a_to_b, m.b_to_a)
    xs, ys = np.nonzero(mask)
    return set(zip(xs.tolist(), ys.tolist()))


def count_blocking_pairs(profile: PreferenceProfile, m: Matching) -> int:
    _check_perfect(profile, m)
    mask = blocking_pair_mask(profile.rank_matrix(Side.A), profile.rank_matrix(Side.B), m.a_to_b, m.b_to_a)
    return int(mask.sum())


def is_stable(profile: PreferenceProfile, m: Matching) -> bool:
    return count_blocking_pairs(profile, m) == 0


def _check_lengths(p: Permutation, q: Permutation) -> None:
    if len(p) != len(q):
        raise InvalidProfileError(f"Permutations differ in length: {len(p)} vs {len(q)}")


def kendall_tau(p: Permutation, q: Permutation) -> int:
    """Number of unordered pairs that ``p`` and ``q`` order differently."""
    _check_lengths(p, q)
    # q-ranks of the elements, listed in p-order: inversions of this sequence
    seq = q.rank_of[p.inverse]
    return int(np.triu(seq[:, None] > seq[None, :], k=1).sum())


def disagreement_counts(p_rank: np.ndarray, q_rank: np.ndarray) -> np.ndarray:
    """Per-element count of partners ordered differently by the two rank vectors."""
    dp = np.sign(p_rank[:, None] - p_rank[None, :])
    dq = np.sign(q_rank[:, None] - q_rank[None, :])
    return (dp != dq).sum(axis=1)


def element_disagreements(p: Permutation, q: Permutation, u: int) -> int:
    _check_lengths(p, q)
    if not 0 <= u < len(p):
        raise InvalidProfileError(f"Element {u} out of range for length {len(p)}")
    dp = np.sign(p.rank_of[u] - p.rank_of)
    dq = np.sign(q.rank_of[u] - q.rank_of)
    return int((dp != dq).sum())


def max_element_disagreement(p: Permutation, q: Permutation) -> int:
    _check_lengths(p, q)
    return int(disagreement_counts(p.rank_of, q.rank_of).max())


def profile_disagreement(true_rank: np.ndarray, approx_rank: np.ndarray) -> int:
    """Largest per-element disagreement over all rows of two rank matrices."""
    if true_rank.shape != approx_rank.shape:
        raise InvalidProfileError(f"Rank matrices differ in shape: {true_rank.shape} vs {approx_rank.shape}")
    return max(int(disagreement_counts(t, a).max()) for t, a in zip(true_rank, approx_rank))
