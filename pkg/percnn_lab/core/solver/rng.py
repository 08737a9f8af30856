"""
Portable pseudo-random numbers

xoshiro256** seeded through splitmix64. Datasets written by the generator are
byte-reproducible across platforms and numpy versions because the bit stream
and the float/normal transforms are fixed here.
"""

from typing import Sequence, Tuple, Union
import math

import numpy as np


_MASK = (1 << 64) - 1
_TWO_POW_53 = float(1 << 53)


def _rotl(x: int, k: int) -> int:
    return ((x << k) | (x >> (64 - k))) & _MASK


def splitmix64(state: int) -> Tuple[int, int]:
    """One splitmix64 step: returns (output, next_state)"""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31), state


Size = Union[int, Sequence[int]]


class Xoshiro256:
    """xoshiro256** generator"""

    def __init__(self, seed: int):
        state = int(seed) & _MASK
        words = []
        for _ in range(4):
            word, state = splitmix64(state)
            words.append(word)
        self._s = words
        self._spare_normal = None

    def next_u64(self) -> int:
        s = self._s
        result = (_rotl((s[1] * 5) & _MASK, 7) * 9) & _MASK
        t = (s[1] << 17) & _MASK
        s[2] ^= s[0]
        s[3] ^= s[1]
        s[1] ^= s[2]
        s[0] ^= s[3]
        s[2] ^= t
        s[3] = _rotl(s[3], 45)
        return result

    def random(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits"""
        return (self.next_u64() >> 11) / _TWO_POW_53

    def _normal(self) -> float:
        # Box-Muller, pairs cached so the stream is consumed two uniforms at a time
        if self._spare_normal is not None:
            value, self._spare_normal = self._spare_normal, None
            return value
        u1 = self.random()
        u2 = self.random()
        radius = math.sqrt(-2.0 * math.log(1.0 - u1))
        angle = 2.0 * math.pi * u2
        self._spare_normal = radius * math.sin(angle)
        return radius * math.cos(angle)

    def uniform(self, low: float = 0.0, high: float = 1.0, size: Size = 1) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        span = high - low
        values = [low + span * self.random() for _ in range(count)]
        return np.array(values, dtype=np.float64).reshape(shape)

    def normal(self, size: Size = 1) -> np.ndarray:
        shape = (size,) if isinstance(size, int) else tuple(size)
        count = int(np.prod(shape)) if shape else 1
        return np.array([self._normal() for _ in range(count)], dtype=np.float64).reshape(shape)
