"""SplitMix64 pseudorandom stream.

Every place the pipeline needs randomness (corpus generation, fold shuffling,
network weight init) draws from this generator so that a seed reproduces the
exact same bytes in any conforming implementation, on any platform.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_TWO53 = float(1 << 53)


class SplitMix64:
    """64-bit generator: state += gamma, output = mix(state), all mod 2^64."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1): top 53 bits of the next output."""
        return (self.next_u64() >> 11) / _TWO53

    def uniforms(self, count: int) -> np.ndarray:
        """Vectorized block of `count` uniforms, identical to `count` calls
        of uniform(); SplitMix64 is counter-based so the block is a closed
        form over the index range."""
        if count < 0:
            raise ValueError("count must be nonnegative")
        idx = np.arange(1, count + 1, dtype=np.uint64)
        z = np.uint64(self.state) + idx * np.uint64(_GAMMA)
        self.state = (self.state + count * _GAMMA) & _MASK64
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        return (z >> np.uint64(11)).astype(np.float64) / _TWO53


def shuffled_indices(n: int, rng: SplitMix64) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by `rng`.

    Swap index j = floor(u * (i + 1)); the clamp guards the (theoretical)
    case of the product rounding up to i + 1.
    """
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = int(rng.uniform() * (i + 1))
        if j > i:
            j = i
        idx[i], idx[j] = idx[j], idx[i]
    return idx
