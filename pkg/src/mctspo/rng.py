"""Portable counter-based random number generation.

Genomes are replayed by seed, so every random draw must reproduce bit-for-bit
on any machine. We therefore avoid platform generators entirely and use
SplitMix64 (Steele, Lea & Flood; constants as published by Vigna) evaluated in
counter mode: output i of stream `seed` is mix64(seed + (i+1) * GAMMA), which
vectorizes over i with wrapping uint64 arithmetic. Gaussians come from
Box-Muller on 53-bit uniforms.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def mix64(z: int) -> int:
    """SplitMix64 finalizer on a single 64-bit integer."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & MASK64
    return z ^ (z >> 31)


def random_uint64(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """Outputs offset..offset+count-1 of the SplitMix64 stream for `seed`."""
    if count < 0:
        raise ValueError("count must be non-negative")
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed & MASK64) + idx * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        return z ^ (z >> np.uint64(31))


def standard_normals(seed: int, count: int) -> np.ndarray:
    """Deterministic standard-normal draws for `seed`, Box-Muller pairs.

    Uniforms are ((u >> 11) + 0.5) * 2**-53, strictly inside (0, 1), so the
    log never sees zero.
    """
    n_pairs = (count + 1) // 2
    bits = random_uint64(seed, 2 * n_pairs)
    u1 = ((bits[0::2] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    u2 = ((bits[1::2] >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    r = np.sqrt(-2.0 * np.log(u1))
    theta = (2.0 * np.pi) * u2
    out = np.empty(2 * n_pairs, dtype=np.float64)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:count]


class MasterRng:
    """Stateful SplitMix64 stream used to draw fresh action seeds.

    A search or GA run owns exactly one MasterRng; all of the run's
    randomness (candidate seeds, initialization seeds, parent picks) flows
    through it, so a master seed fixes the whole run.
    """

    def __init__(self, seed: int):
        self._state = seed & MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & MASK64
        return mix64(self._state)

    def next_index(self, n: int) -> int:
        """Uniform-ish integer in [0, n); modulo bias is irrelevant at n << 2**64."""
        if n <= 0:
            raise ValueError("n must be positive")
        return self.next_uint64() % n
