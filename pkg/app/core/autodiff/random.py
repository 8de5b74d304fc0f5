"""
Seedable, splittable pseudorandom generator.

Every stochastic step (initialization, shuffling, dropout, synthesis) draws from a
SeededRng. The bit generator is numpy's Philox4x64 counter-based generator keyed
by a SeedSequence; `split` spawns independent child streams, so the same seed and
the same sequence of calls always reproduce the same draws on any platform.
"""

from typing import Any

import numpy as np
from numpy.random import Generator, Philox, SeedSequence
from numpy.typing import NDArray

ALGORITHM = "philox4x64"


class SeededRng:
    """Thin wrapper over `numpy.random.Generator(Philox(...))`."""

    def __init__(self, seed: int | SeedSequence):
        self._sequence = seed if isinstance(seed, SeedSequence) else SeedSequence(seed)
        self._generator = Generator(Philox(self._sequence))

    def split(self, n: int) -> list["SeededRng"]:
        """Spawn `n` independent child streams. Successive calls yield fresh children."""
        return [SeededRng(child) for child in self._sequence.spawn(n)]

    def random(self, size: int | tuple[int, ...] | None = None) -> Any:
        return self._generator.random(size)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: int | tuple[int, ...] | None = None) -> Any:
        return self._generator.uniform(low, high, size)

    def normal(self, loc: float = 0.0, scale: float = 1.0, size: int | tuple[int, ...] | None = None) -> Any:
        return self._generator.normal(loc, scale, size)

    def exponential(self, scale: float = 1.0, size: int | tuple[int, ...] | None = None) -> Any:
        return self._generator.exponential(scale, size)

    def integers(self, low: int, high: int | None = None, size: int | tuple[int, ...] | None = None) -> Any:
        return self._generator.integers(low, high, size)

    def choice(self, n: int, p: NDArray[np.float64] | None = None) -> int:
        """Index drawn from range(n), optionally with probabilities `p`."""
        return int(self._generator.choice(n, p=p))

    def permutation(self, n: int) -> NDArray[np.int64]:
        return self._generator.permutation(n)
