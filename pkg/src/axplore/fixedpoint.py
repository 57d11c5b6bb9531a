"""Bit-exact signed Q16.16 fixed-point scalars and fractional truncation.

A value is stored as a signed 32-bit raw integer; the represented number
is ``raw * 2**-16``. Truncation clears the lowest `bits` fractional bits
of the raw word, i.e. it rounds toward minus infinity on the raw lattice,
so the truncation error is nonnegative for either sign.

Removing `bits` fractional bits discards the bit weights
2**-16 .. 2**-(17-bits); the worst-case error is therefore
``(2**bits - 1) * 2**-16``. An alternate closed form scaled by 2**-15 is
kept behind the ``legacy`` switch of :func:`error_bounds` for
compatibility with tooling that uses that convention.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational
from typing import Union

import numpy as np

from .interval import GRID, Interval

RAW_MIN = -(1 << 31)
RAW_MAX = (1 << 31) - 1

#: Deepest explored cut: 15 of the 16 fractional bits removed.
MAX_CUT = 15


class OutOfRangeError(ValueError):
    """Value does not fit the Q16.16 format."""


def check_cut(bits: int) -> int:
    if not isinstance(bits, (int, np.integer)) or not 0 <= bits <= MAX_CUT:
        raise ValueError(f"cut depth must be an integer in [0, {MAX_CUT}], got {bits!r}")
    return int(bits)


@dataclass(frozen=True)
class FixQ16x16:
    """Signed Q16.16 scalar; `raw` is the two's-complement 32-bit word."""

    raw: int

    def __post_init__(self):
        if not isinstance(self.raw, (int, np.integer)):
            raise TypeError(f"raw must be an integer, got {type(self.raw).__name__}")
        object.__setattr__(self, "raw", int(self.raw))
        if not RAW_MIN <= self.raw <= RAW_MAX:
            raise OutOfRangeError(f"raw {self.raw} outside signed 32-bit range")

    @property
    def value(self) -> Fraction:
        return Fraction(self.raw, 1 << 16)

    def __float__(self) -> float:
        return self.raw / 65536.0

    def __repr__(self) -> str:
        return f"FixQ16x16({self.raw:#010x} = {float(self)})"


def quantize(x: Union[float, int, Rational]) -> FixQ16x16:
    """Nearest representable Q16.16 value; ties round to the even raw word."""
    scaled = Fraction(x) * (1 << 16)
    raw = round(scaled)  # Fraction.__round__ is exact round-half-to-even
    if not RAW_MIN <= raw <= RAW_MAX:
        raise OutOfRangeError(f"{x!r} exceeds the Q16.16 range")
    return FixQ16x16(raw)


def truncate_raw(raw, bits: int):
    """Clear the lowest `bits` fractional bits of a raw word or array of words."""
    bits = check_cut(bits)
    return raw & ~((1 << bits) - 1)


def truncation_error_raw(raw, bits: int):
    """Raw-lattice error introduced by :func:`truncate_raw`; always >= 0."""
    bits = check_cut(bits)
    return raw & ((1 << bits) - 1)


def truncate(x: FixQ16x16, bits: int) -> FixQ16x16:
    return FixQ16x16(truncate_raw(x.raw, bits))


def truncation_error(x: FixQ16x16, bits: int) -> Fraction:
    """Exact error x - truncate(x, bits), a nonnegative multiple of 2**-16."""
    return truncation_error_raw(x.raw, bits) * GRID


def max_truncation_error(bits: int, *, legacy: bool = False) -> Fraction:
    bits = check_cut(bits)
    scale = 15 if legacy else 16
    return Fraction((1 << bits) - 1, 1 << scale)


def error_bounds(bits: int, *, legacy: bool = False) -> Interval:
    """Interval of every truncation error achievable at this cut depth.

    The minimum is 0 (all removed bits clear); the maximum has all
    removed bits set. With ``legacy=True`` the maximum uses the
    2**-15-scaled closed form instead of the bit-weight sum.
    """
    return Interval(Fraction(0), max_truncation_error(bits, legacy=legacy))
