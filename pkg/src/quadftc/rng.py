"""SplitMix64 random stream, specified bit-exactly so runs can be replayed.

Output ``k`` (k = 1, 2, ...) of a stream seeded with ``s`` is
``mix(s + k * 0x9E3779B97F4A7C15 mod 2**64)`` where::

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z =  z ^ (z >> 31)

all arithmetic modulo 2**64. Derived quantities:

* uniform double in [0, 1): ``(x >> 11) * 2**-53``
* integer in [0, n): ``floor(uniform * n)``
* standard normal: Box-Muller on consecutive uniforms ``u1, u2`` as
  ``sqrt(-2 ln(1 - u1)) * cos(2 pi u2)``; one normal per pair.
* child stream: seeded with the next raw 64-bit output.

Because each output depends only on its index, blocks are generated with
vectorized uint64 arithmetic and match the scalar definition exactly.
"""

from __future__ import annotations

import numpy as np

GOLDEN = 0x9E3779B97F4A7C15
MIX1 = 0xBF58476D1CE4E5B9
MIX2 = 0x94D049BB133111EB
MASK = (1 << 64) - 1


def mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX1) & MASK
    z = ((z ^ (z >> 27)) * MIX2) & MASK
    return z ^ (z >> 31)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        return mix64(self.state)

    def u64_block(self, n: int) -> np.ndarray:
        ks = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = np.uint64(self.state) + ks * np.uint64(GOLDEN)
            z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX1)
            z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX2)
            z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * GOLDEN) & MASK
        return z

    def random(self, size: int | tuple[int, ...] | None = None):
        shape = () if size is None else np.atleast_1d(size)
        n = int(np.prod(shape)) if size is not None else 1
        u = (self.u64_block(n) >> np.uint64(11)).astype(np.float64) * 2.0 ** -53
        if size is None:
            return float(u[0])
        return u.reshape(tuple(int(x) for x in shape))

    def uniform(self, low: float, high: float, size=None):
        return low + (high - low) * self.random(size)

    def integers(self, n: int, size=None):
        u = self.random(size)
        out = np.floor(np.asarray(u) * n).astype(np.int64)
        return int(out) if size is None else out

    def normal(self, size=None):
        shape = () if size is None else tuple(int(x) for x in np.atleast_1d(size))
        n = int(np.prod(shape)) if shape else 1
        u = self.random(2 * n).reshape(n, 2)
        z = np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])
        if size is None:
            return float(z[0])
        return z.reshape(shape)

    def spawn(self) -> "SplitMix64":
        return SplitMix64(self.next_u64())
