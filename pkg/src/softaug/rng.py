"""Deterministic counter-based random number generation.

Every stochastic component in this package draws from a SplitMix64
stream.  Child streams are derived from a base seed and integer keys
through the SplitMix64 finalizer, so sentence i (or sweep cell j)
always sees the same stream no matter how work is split across
processes.
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_SALT = 0x5851F42D4C957F2D


def _finalize(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def derive(seed: int, *keys: int) -> int:
    """Fold integer keys into *seed*, returning a decorrelated child seed."""
    x = _finalize((seed & _MASK) ^ _SALT)
    for k in keys:
        x = _finalize((x + _GOLDEN * ((k & _MASK) + 1)) & _MASK)
    return x


class SplitMix64:
    """Tiny seedable generator; identical output on every platform."""

    __slots__ = ("_state",)

    def __init__(self, seed: int) -> None:
        self._state = seed & _MASK

    def next_u64(self) -> int:
        self._state = (self._state + _GOLDEN) & _MASK
        return _finalize(self._state)

    def random(self) -> float:
        """Uniform float64 in [0, 1) with 53 significand bits."""
        return (self.next_u64() >> 11) * 2.0**-53

    def randint(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randint needs n >= 1")
        return int(self.random() * n)
