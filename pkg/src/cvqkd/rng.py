"""Seeded, replayable random streams.

Every stochastic stage of the simulator draws from its own RngStream derived
from the master seed with a fixed purpose key, so results are reproducible
bit-for-bit regardless of which stages run and in what interleaving.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Purpose keys for substreams derived from the master experiment seed.
ALICE_SIGNS = 1
BOB_BASIS = 2
BOB_NOISE = 3
EVE_NOISE = 4
CASCADE_SHUFFLE = 5
COMPRESS_SEED = 6
DETECTOR_SIGNS = 7
DETECTOR_NOISE = 8


def derive_seed(seed: int, key: int) -> int:
    """Deterministically derive a child seed for the given purpose key."""
    ss = np.random.SeedSequence([int(seed), int(key)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass
class RngStream:
    """A seeded stream of draws; identical seed gives the identical sequence.

    ``counter`` tallies scalar draws made so far. Replay is by construction:
    rebuild from the same seed and repeat the same call sequence.
    """

    seed: int
    counter: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self._gen = np.random.default_rng(np.random.SeedSequence(int(self.seed)))

    def _tally(self, size) -> None:
        self.counter += int(np.prod(size)) if size is not None else 1

    def normal(self, loc: float = 0.0, scale: float = 1.0, size=None):
        self._tally(size)
        return self._gen.normal(loc, scale, size)

    def integers(self, low: int, high: int | None = None, size=None, dtype=np.int64):
        self._tally(size)
        return self._gen.integers(low, high, size, dtype=dtype)

    def uniform(self, low: float = 0.0, high: float = 1.0, size=None):
        self._tally(size)
        return self._gen.uniform(low, high, size)

    def bits(self, n: int) -> np.ndarray:
        """n independent fair bits as a uint8 array."""
        self._tally(n)
        return self._gen.integers(0, 2, n, dtype=np.uint8)

    def permutation(self, n: int) -> np.ndarray:
        self._tally(n)
        return self._gen.permutation(n)

    def spawn(self, key: int) -> "RngStream":
        """Independent child stream for the given purpose key."""
        return RngStream(derive_seed(self.seed, key))
