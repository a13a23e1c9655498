"""Seeded random streams.

One master seed fans out into independent named streams so that nature's
evolution events never perturb the algorithm's coin flips (and vice versa).
Streams are derived through ``SeedSequence`` spawn keys, which are stable
across processes and platforms.
"""

from __future__ import annotations

import numpy as np

STREAM_KEYS = {
    "profile": 0,
    "nature": 1,
    "algorithm": 2,
}

BLOCK_SIZE = 4096


def stream(master_seed: int, name: str) -> np.random.Generator:
    """Independent generator for the named stream of ``master_seed``."""
    try:
        key = STREAM_KEYS[name]
    except KeyError:
        raise ValueError(f"Unknown random stream: {name!r}") from None
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(key,))
    return np.random.Generator(np.random.PCG64(seq))


class NatureStream:
    """Buffered uniform draws of (list owner, adjacent position).

    Draws are pulled from the generator in fixed-size blocks; the sequence of
    pairs only depends on the seed and the two domain sizes.
    """

    def __init__(self, rng: np.random.Generator, num_owners: int, num_positions: int, block_size: int = BLOCK_SIZE):
        self._rng = rng
        self._num_owners = num_owners
        self._num_positions = num_positions
        self._block_size = block_size
        self._owners: list[int] = []
        self._positions: list[int] = []
        self._cursor = 0

    def _refill(self) -> None:
        self._owners = self._rng.integers(0, self._num_owners, size=self._block_size).tolist()
        self._positions = self._rng.integers(0, self._num_positions, size=self._block_size).tolist()
        self._cursor = 0

    def draw(self) -> tuple[int, int]:
        if self._cursor >= len(self._owners):
            self._refill()
        pair = (self._owners[self._cursor], self._positions[self._cursor])
        self._cursor += 1
        return pair
