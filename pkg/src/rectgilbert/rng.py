"""Deterministic, counter-derived random number streams.

Every simulation episode gets its own stream, derived purely from
``(master_seed, stream_index)``: the index is mixed into a splitmix64
state whose first four outputs seed a xoshiro256++ generator.  Because a
stream depends only on its index, work can be sharded across any number
of threads and reassembled bit-identically.

The Cython kernels re-implement exactly this arithmetic on ``uint64``;
``test_backends`` locks the two implementations together.
"""

from __future__ import annotations

__all__ = ["Xoshiro256PP", "splitmix64", "derive_state"]

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
# 2**-53; (x >> 11) + 1 scaled by this gives a uniform on (0, 1], so
# log() of a draw is always finite.
_INV53 = 1.0 / 9007199254740992.0


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return ``(new_state, output)``."""
    state = (state + _GOLDEN) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def derive_state(master_seed: int, stream_index: int) -> tuple[int, int, int, int]:
    """Four xoshiro256++ state words for stream ``stream_index``."""
    s = (master_seed ^ ((stream_index * _GOLDEN) & _MASK)) & _MASK
    out = []
    for _ in range(4):
        s, z = splitmix64(s)
        out.append(z)
    if not any(out):  # the all-zero state is a fixed point of xoshiro
        out[0] = _GOLDEN
    return tuple(out)


class Xoshiro256PP:
    """xoshiro256++ with uniforms on the half-open interval (0, 1].

    The (0, 1] convention (rather than the more common [0, 1)) means
    ``-log(u)`` is a valid Exp(1) draw without any rejection step.
    """

    __slots__ = ("s0", "s1", "s2", "s3")

    def __init__(self, s0: int, s1: int, s2: int, s3: int):
        if not (s0 | s1 | s2 | s3):
            s0 = _GOLDEN
        self.s0 = s0 & _MASK
        self.s1 = s1 & _MASK
        self.s2 = s2 & _MASK
        self.s3 = s3 & _MASK

    @classmethod
    def from_stream(cls, master_seed: int, stream_index: int) -> "Xoshiro256PP":
        return cls(*derive_state(master_seed, stream_index))

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self.s0, self.s1, self.s2, self.s3
        x = (s0 + s3) & _MASK
        result = ((((x << 23) | (x >> 41)) & _MASK) + s0) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        self.s0, self.s1, self.s2, self.s3 = s0, s1, s2, s3
        return result

    def random(self) -> float:
        """Uniform double in (0, 1]."""
        return ((self.next_u64() >> 11) + 1) * _INV53

    def exponential(self) -> float:
        """Standard exponential draw via inversion."""
        import math

        return -math.log(self.random())
