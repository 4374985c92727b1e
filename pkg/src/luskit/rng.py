"""Deterministic seeded randomness.

The stdlib ``random`` module does not promise identical streams across
interpreter versions, and the phantom generator needs to fill millions of
pixels per second, so both a scalar stream and a vectorized counter-mode
variant of the same mixer live here.

The mixer is splitmix64 (Steele/Lea/Vigna), a member of the xorshift
family of generators: state advances by the 64-bit golden-ratio constant
and the output is a finalizing xor-shift/multiply hash of the state. Its
counter form (hash of seed-derived counters) is embarrassingly parallel,
which is what makes the numpy path cheap.
"""

from __future__ import annotations

import numpy as np

_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_MASK = 0xFFFFFFFFFFFFFFFF


def _mix(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK
    z = (z ^ (z >> 27)) * _MIX2 & _MASK
    return z ^ (z >> 31)


def mix64(seed: int, counter: int = 0) -> int:
    """Stateless 64-bit hash of (seed, counter); the basis of everything below."""
    return _mix((seed + (counter + 1) * _GOLDEN) & _MASK)


def hash_u64(*parts) -> int:
    """Stable 64-bit hash of a mixed tuple of ints and strings."""
    h = 0x5851F42D4C957F2D
    for p in parts:
        if isinstance(p, str):
            for b in p.encode("utf-8"):
                h = mix64(h, b + 1)
        else:
            h = mix64(h, int(p) & _MASK)
    return h


def uniform_field(seed: int, counter0: int, n: int) -> np.ndarray:
    """n uniforms in [0, 1) from counters counter0 .. counter0 + n - 1."""
    c = np.arange(counter0 + 1, counter0 + n + 1, dtype=np.uint64)
    z = (np.uint64(seed & _MASK) + c * np.uint64(_GOLDEN))
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    z = z ^ (z >> np.uint64(31))
    # 53 high bits -> double in [0, 1)
    return (z >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


class SeededRng:
    """Scalar splitmix64 stream with the few draws the pipeline needs."""

    def __init__(self, seed: int):
        self._seed = seed & _MASK
        self._counter = 0

    def next_u64(self) -> int:
        v = mix64(self._seed, self._counter)
        self._counter += 1
        return v

    def below(self, n: int) -> int:
        """Unbiased integer in [0, n) by rejection on the top multiple of n."""
        if n <= 0:
            raise ValueError("n must be positive")
        limit = (1 << 64) - ((1 << 64) % n)
        while True:
            v = self.next_u64()
            if v < limit:
                return v % n

    def sample_without_replacement(self, pool: list, k: int) -> list:
        """k distinct items from pool via a partial Fisher-Yates shuffle."""
        items = list(pool)
        k = min(k, len(items))
        for i in range(k):
            j = i + self.below(len(items) - i)
            items[i], items[j] = items[j], items[i]
        return items[:k]
