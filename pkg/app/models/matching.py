from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from app.core.exceptions import InvalidMatchingError

UNMATCHED = -1


class Matching:
    """Bijection (or partial injection) between sides A and B.

    ``a_to_b[x]`` is the partner of ``x`` or ``UNMATCHED``; ``b_to_a`` is the
    inverse view. Instances are immutable.
    """

    __slots__ = ("a_to_b", "b_to_a")

    def __init__(self, a_to_b: Sequence[int] | np.ndarray, b_to_a: Sequence[int] | np.ndarray | None = None):
        forward = np.array(a_to_b, dtype=np.int64)
        n = len(forward)
        if b_to_a is None:
            backward = np.full(n, UNMATCHED, dtype=np.int64)
            for x, y in enumerate(forward.tolist()):
                if y == UNMATCHED:
                    continue
                if not 0 <= y < n:
                    raise InvalidMatchingError(f"Partner {y} of A{x + 1} out of range")
                if backward[y] != UNMATCHED:
                    raise InvalidMatchingError(f"B{y + 1} matched twice")
                backward[y] = x
        else:
            backward = np.array(b_to_a, dtype=np.int64)
            if len(backward) != n:
                raise InvalidMatchingError("Both views of a matching must have the same length")
            for x, y in enumerate(forward.tolist()):
                if y != UNMATCHED and (not 0 <= y < n or backward[y] != x):
                    raise InvalidMatchingError(f"Inconsistent partner for A{x + 1}")
            for y, x in enumerate(backward.tolist()):
                if x != UNMATCHED and (not 0 <= x < n or forward[x] != y):
                    raise InvalidMatchingError(f"Inconsistent partner for B{y + 1}")
        forward.setflags(write=False)
        backward.setflags(write=False)
        self.a_to_b = forward
        self.b_to_a = backward

    @classmethod
    def identity(cls, n: int) -> "Matching":
        return cls(np.arange(n))

    @classmethod
    def empty(cls, n: int) -> "Matching":
        return cls(np.full(n, UNMATCHED))

    @classmethod
    def from_pairs(cls, n: int, pairs: Iterable[tuple[int, int]]) -> "Matching":
        forward = np.full(n, UNMATCHED, dtype=np.int64)
        for x, y in pairs:
            if forward[x] != UNMATCHED:
                raise InvalidMatchingError(f"A{x + 1} matched twice")
            forward[x] = y
        return cls(forward)

    @property
    def n(self) -> int:
        return len(self.a_to_b)

    @property
    def is_perfect(self) -> bool:
        return bool(np.all(self.a_to_b != UNMATCHED))

    def partner_of_a(self, x: int) -> int:
        return int(self.a_to_b[x])

    def partner_of_b(self, y: int) -> int:
        return int(self.b_to_a[y])

    def pairs(self) -> list[tuple[int, int]]:
        return [(x, y) for x, y in enumerate(self.a_to_b.tolist()) if y != UNMATCHED]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Matching):
            return NotImplemented
        return np.array_equal(self.a_to_b, other.a_to_b)

    def __hash__(self) -> int:
        return hash(tuple(self.a_to_b.tolist()))

    def __repr__(self) -> str:
        return f"Matching({self.pairs()})"
