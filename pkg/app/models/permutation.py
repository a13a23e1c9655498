from __future__ import annotations

from typing import Iterable, NamedTuple, Sequence

import numpy as np

from app.core.enums import Side
from app.core.exceptions import InvalidProfileError


class AgentId(NamedTuple):
    side: Side
    index: int

    def label(self) -> str:
        """1-based label used in reports, e.g. ``A3``."""
        return f"{self.side.value}{self.index + 1}"


def _frozen(values: Iterable[int] | np.ndarray) -> np.ndarray:
    arr = np.array(values, dtype=np.int64)
    arr.setflags(write=False)
    return arr


class Permutation:
    """Strict total order over ``n`` agents of one side.

    ``rank_of[agent]`` is the 0-based rank of ``agent`` (0 = most preferred)
    and ``inverse[rank]`` is the agent holding ``rank``. Both views are
    read-only numpy arrays.
    """

    __slots__ = ("rank_of", "inverse")

    def __init__(self, rank_of: np.ndarray, inverse: np.ndarray):
        self.rank_of = rank_of
        self.inverse = inverse

    @classmethod
    def from_order(cls, order: Sequence[int] | np.ndarray) -> "Permutation":
        """Build from agents listed in preference order (0-based indices)."""
        inverse = np.asarray(order, dtype=np.int64)
        n = len(inverse)
        if inverse.ndim != 1 or n == 0:
            raise InvalidProfileError("A permutation needs at least one element")
        if not np.array_equal(np.sort(inverse), np.arange(n)):
            raise InvalidProfileError(f"Not a permutation of 0..{n - 1}: {inverse.tolist()}")
        rank_of = np.empty(n, dtype=np.int64)
        rank_of[inverse] = np.arange(n)
        return cls(_frozen(rank_of), _frozen(inverse))

    @classmethod
    def from_ranks(cls, rank_of: Sequence[int] | np.ndarray) -> "Permutation":
        ranks = np.asarray(rank_of, dtype=np.int64)
        n = len(ranks)
        if ranks.ndim != 1 or n == 0:
            raise InvalidProfileError("A permutation needs at least one element")
        if not np.array_equal(np.sort(ranks), np.arange(n)):
            raise InvalidProfileError(f"Ranks are not a bijection on 0..{n - 1}")
        inverse = np.empty(n, dtype=np.int64)
        inverse[ranks] = np.arange(n)
        return cls(_frozen(ranks), _frozen(inverse))

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls.from_order(np.arange(n))

    def __len__(self) -> int:
        return len(self.inverse)

    def rank(self, agent: int) -> int:
        return int(self.rank_of[agent])

    def at(self, rank: int) -> int:
        return int(self.inverse[rank])

    def prefers(self, u: int, v: int) -> bool:
        """True when ``u`` is ranked above ``v``."""
        return bool(self.rank_of[u] < self.rank_of[v])

    def order(self) -> tuple[int, ...]:
        return tuple(self.inverse.tolist())

    def swap_ranks(self, r1: int, r2: int) -> "Permutation":
        """Copy with the occupants of ranks ``r1`` and ``r2`` exchanged."""
        order = self.inverse.copy()
        order[r1], order[r2] = order[r2], order[r1]
        return Permutation.from_order(order)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Permutation):
            return NotImplemented
        return np.array_equal(self.inverse, other.inverse)

    def __hash__(self) -> int:
        return hash(self.order())

    def __repr__(self) -> str:
        return f"Permutation({[a + 1 for a in self.inverse.tolist()]})"
