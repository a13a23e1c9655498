from __future__ import annotations

from functools import cached_property
from typing import Sequence

import numpy as np

from app.core.enums import Side
from app.core.exceptions import InvalidProfileError
from app.models.permutation import Permutation


class PreferenceProfile:
    """The 2n preference lists of an instance.

    Stored as two read-only ``(n, n)`` rank matrices, ``[owner, agent] -> rank``:
    row ``x`` of the A matrix ranks side B for agent ``x`` of side A, row ``y``
    of the B matrix ranks side A for agent ``y`` of side B. Per-list
    ``Permutation`` views are built on demand.
    """

    def __init__(self, a_lists: Sequence[Permutation], b_lists: Sequence[Permutation]):
        n = len(a_lists)
        if n == 0:
            raise InvalidProfileError("Profile needs at least one agent per side")
        if len(b_lists) != n:
            raise InvalidProfileError(f"Expected {n} B-side lists, got {len(b_lists)}")
        for lists, side in ((a_lists, Side.A), (b_lists, Side.B)):
            for index, perm in enumerate(lists):
                if len(perm) != n:
                    raise InvalidProfileError(
                        f"List of {side.value}{index + 1} has length {len(perm)}, expected {n}"
                    )
        self.n = n
        self._a_rank = _freeze(np.stack([p.rank_of for p in a_lists]))
        self._b_rank = _freeze(np.stack([p.rank_of for p in b_lists]))
        self.__dict__["a_lists"] = tuple(a_lists)
        self.__dict__["b_lists"] = tuple(b_lists)

    @classmethod
    def from_rank_matrices(cls, a_rank: np.ndarray, b_rank: np.ndarray, validate: bool = True) -> "PreferenceProfile":
        a_rank = np.array(a_rank, dtype=np.int64)
        b_rank = np.array(b_rank, dtype=np.int64)
        if a_rank.ndim != 2 or a_rank.shape[0] != a_rank.shape[1] or a_rank.shape[0] == 0:
            raise InvalidProfileError(f"A-side rank matrix must be square and non-empty, got {a_rank.shape}")
        if b_rank.shape != a_rank.shape:
            raise InvalidProfileError(f"Rank matrices differ in shape: {a_rank.shape} vs {b_rank.shape}")
        if validate:
            expected = np.arange(a_rank.shape[0])
            for side, matrix in ((Side.A, a_rank), (Side.B, b_rank)):
                bad = np.nonzero(~np.all(np.sort(matrix, axis=1) == expected, axis=1))[0]
                if len(bad):
                    raise InvalidProfileError(f"List of {side.value}{bad[0] + 1} is not a permutation")
        profile = cls.__new__(cls)
        profile.n = a_rank.shape[0]
        profile._a_rank = _freeze(a_rank)
        profile._b_rank = _freeze(b_rank)
        return profile

    @cached_property
    def a_lists(self) -> tuple[Permutation, ...]:
        return _permutations(self._a_rank)

    @cached_property
    def b_lists(self) -> tuple[Permutation, ...]:
        return _permutations(self._b_rank)

    def lists(self, side: Side) -> tuple[Permutation, ...]:
        return self.a_lists if side is Side.A else self.b_lists

    def list_of(self, side: Side, index: int) -> Permutation:
        return self.lists(side)[index]

    def rank_matrix(self, side: Side) -> np.ndarray:
        """``(n, n)`` matrix with ``[owner, agent] -> rank``."""
        return self._a_rank if side is Side.A else self._b_rank

    def order_matrix(self, side: Side) -> np.ndarray:
        """``(n, n)`` matrix with ``[owner, rank] -> agent``."""
        return np.argsort(self.rank_matrix(side), axis=1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PreferenceProfile):
            return NotImplemented
        return np.array_equal(self._a_rank, other._a_rank) and np.array_equal(self._b_rank, other._b_rank)

    def __hash__(self) -> int:
        return hash((self._a_rank.tobytes(), self._b_rank.tobytes()))

    def __repr__(self) -> str:
        return f"PreferenceProfile(n={self.n})"


def _freeze(matrix: np.ndarray) -> np.ndarray:
    matrix = np.ascontiguousarray(matrix, dtype=np.int64)
    matrix.setflags(write=False)
    return matrix


def _permutations(rank: np.ndarray) -> tuple[Permutation, ...]:
    perms = []
    for row in rank:
        inverse = np.empty_like(row)
        inverse[row] = np.arange(len(row))
        inverse.setflags(write=False)
        perms.append(Permutation(row, inverse))
    return tuple(perms)
