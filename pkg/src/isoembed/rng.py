"""Deterministic random stream shared by every stochastic operation.

The generator is a counter-based SplitMix64: draw ``i`` of a stream seeded
with ``s`` mixes the state ``s + i * golden`` through two xor-multiply
rounds. Because each output depends only on (seed, draw index), blocks of
draws vectorize over numpy uint64 with wraparound arithmetic and the stream
is reproducible across implementations and platforms.

Derived draws are pinned as follows:

* uniforms: ``(u64 >> 11) * 2**-53`` giving doubles in [0, 1)
* gaussians: Box-Muller over consecutive uniform pairs; a pair is never
  split across calls, so each call consumes an even number of uniforms and
  depends only on the stream position at entry
"""

from __future__ import annotations

import numpy as np

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX_1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX_2 = np.uint64(0x94D049BB133111EB)
_MASK_64 = 0xFFFFFFFFFFFFFFFF
_U53 = 2.0**-53


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _MIX_1
    z = (z ^ (z >> np.uint64(27))) * _MIX_2
    return z ^ (z >> np.uint64(31))


class PinnedRng:
    """SplitMix64 stream addressed by draw counter.

    Instances are cheap; create one per independent purpose instead of
    sharing a stream between unrelated consumers.
    """

    def __init__(self, seed: int):
        self._seed = np.uint64(int(seed) & _MASK_64)
        self._drawn = 0

    @property
    def draws(self) -> int:
        """Number of raw 64-bit outputs consumed so far."""
        return self._drawn

    def u64(self, n: int) -> np.ndarray:
        """Next ``n`` raw 64-bit outputs."""
        if n < 0:
            raise ValueError("n must be >= 0")
        idx = np.arange(self._drawn + 1, self._drawn + n + 1, dtype=np.uint64)
        self._drawn += n
        return _mix(self._seed + idx * _GOLDEN)

    def uniforms(self, n: int) -> np.ndarray:
        """Next ``n`` doubles uniform on [0, 1)."""
        return (self.u64(n) >> np.uint64(11)).astype(np.float64) * _U53

    def gaussians(self, n: int) -> np.ndarray:
        """Next ``n`` standard-normal doubles via Box-Muller.

        Consumes ceil(n/2) uniform pairs; for odd ``n`` the sine half of the
        final pair is discarded rather than carried into the next call.
        """
        n_pairs = (n + 1) // 2
        u = self.uniforms(2 * n_pairs)
        u_radius = u[0::2]
        u_angle = u[1::2]
        # u == 0 occurs with probability 2^-53; substitute the smallest
        # positive draw so the radius stays finite.
        u_radius = np.where(u_radius == 0.0, _U53, u_radius)
        radius = np.sqrt(-2.0 * np.log(u_radius))
        theta = (2.0 * np.pi) * u_angle
        out = np.empty(2 * n_pairs, dtype=np.float64)
        out[0::2] = radius * np.cos(theta)
        out[1::2] = radius * np.sin(theta)
        return out[:n]

    def permutation(self, n: int) -> np.ndarray:
        """Deterministic permutation of range(n): argsort of n uniform keys."""
        keys = self.uniforms(n)
        return np.argsort(keys, kind="stable")

    def indices(self, n: int, bound: int) -> np.ndarray:
        """Next ``n`` integers uniform on [0, bound)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        raw = np.floor(self.uniforms(n) * bound).astype(np.int64)
        return np.minimum(raw, bound - 1)

    def index_pairs(self, count: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        """``count`` pairs (i, j) with i != j, both in [0, n).

        Consumes 2*count uniforms: a block of i draws on [0, n) followed by
        a block of j draws on [0, n-1), each j shifted past its i.
        """
        if n < 2:
            raise ValueError("need n >= 2 to form distinct pairs")
        i = self.indices(count, n)
        j = self.indices(count, n - 1)
        j = j + (j >= i)
        return i, j
