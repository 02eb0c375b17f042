"""SplitMix64 stream with a fully specified mapping to (-1, 1).

state <- state + 0x9E3779B97F4A7C15 (mod 2^64), then the output is the usual
SplitMix64 finaliser of the new state.  The top 53 bits ``m`` of an output
map to u = (m + 0.5) / 2^53 in (0, 1), and the draw is 2u - 1.

The draw is evaluated exactly as (2m + 1 - 2^53) / 2^53: the numerator is
an odd integer of magnitude below 2^53, so the result is representable and
never rounds onto the end points.  Evaluating 2u - 1 in floating point
would round for m >= 2^52 and map the top value to 1.0.
"""
from __future__ import annotations

import math

import numpy as np

MASK = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


class SplitMix64:
    def __init__(self, seed: int = 0):
        self.state = seed & MASK

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def unit(self) -> float:
        """Uniform in the open interval (0, 1), rounded down below 1."""
        u = ((self.next_u64() >> 11) + 0.5) * 2.0**-53
        return u if u < 1.0 else math.nextafter(1.0, 0.0)

    def uniform(self) -> float:
        """Uniform in the open interval (-1, 1)."""
        m = self.next_u64() >> 11
        return float(2 * m + 1 - (1 << 53)) * 2.0**-53

    def uniform_array(self, n: int) -> np.ndarray:
        return np.array([self.uniform() for _ in range(n)])


def rng_uniform(stream: SplitMix64) -> float:
    return stream.uniform()
