"""Closed-interval arithmetic over exact dyadic rationals.

Bounds are `Fraction` values, so every operation is exact: no outward
rounding is needed for add/sub/mul. The only deliberately rounded
operation is `shr`, which lands back on the 2**-16 grid and rounds
outward so that containment is never violated.

Bounds are capped at the headroom of a 64-bit accumulator holding
16 fractional bits (|x| < 2**47); exceeding it raises instead of
silently widening or wrapping.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

Exact = Union[int, Fraction]

#: Resolution of the Q16.16 lattice.
GRID = Fraction(1, 1 << 16)

_HEADROOM = 1 << 47


class IntervalOverflowError(OverflowError):
    """A bound left the 64-bit accumulator budget."""


def _exact(x: Exact) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"interval bounds must be exact (int or Fraction), got {type(x).__name__}")


def _checked(lo: Fraction, hi: Fraction) -> "Interval":
    if max(abs(lo), abs(hi)) >= _HEADROOM:
        raise IntervalOverflowError(f"bound magnitude exceeds accumulator headroom: [{lo}, {hi}]")
    return Interval(lo, hi)


def floor_to_grid(x: Fraction) -> Fraction:
    """Largest multiple of 2**-16 that is <= x."""
    return Fraction((x.numerator << 16) // x.denominator, 1 << 16)


def ceil_to_grid(x: Fraction) -> Fraction:
    """Smallest multiple of 2**-16 that is >= x."""
    return -floor_to_grid(-x)


@dataclass(frozen=True)
class Interval:
    """Closed interval [lo, hi]; degenerate (lo == hi) means a single exact value."""

    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        object.__setattr__(self, "lo", _exact(self.lo))
        object.__setattr__(self, "hi", _exact(self.hi))
        if self.lo > self.hi:
            raise ValueError(f"inverted interval: lo={self.lo} > hi={self.hi}")

    @classmethod
    def point(cls, x: Exact) -> "Interval":
        return cls(x, x)

    def is_degenerate(self) -> bool:
        return self.lo == self.hi

    def add(self, other: "Interval") -> "Interval":
        return _checked(self.lo + other.lo, self.hi + other.hi)

    def sub(self, other: "Interval") -> "Interval":
        return _checked(self.lo - other.hi, self.hi - other.lo)

    def neg(self) -> "Interval":
        return Interval(-self.hi, -self.lo)

    def mul(self, other: "Interval") -> "Interval":
        products = (
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        )
        return _checked(min(products), max(products))

    def shr(self, shift: int) -> "Interval":
        """Divide by 2**shift, rounding outward to the 2**-16 grid.

        The outward rounding over-approximates a hardware arithmetic
        right shift applied to any value inside the interval.
        """
        if not 0 <= shift <= 31:
            raise ValueError(f"shift must be in [0, 31], got {shift}")
        d = 1 << shift
        return Interval(floor_to_grid(self.lo / d), ceil_to_grid(self.hi / d))

    def contains(self, x: Exact) -> bool:
        return self.lo <= x <= self.hi

    def encloses(self, other: "Interval") -> bool:
        """True when `other` lies entirely inside this interval (closed bounds)."""
        return self.lo <= other.lo and other.hi <= self.hi

    def width(self) -> Fraction:
        return self.hi - self.lo

    def hull(self, other: "Interval") -> "Interval":
        return Interval(min(self.lo, other.lo), max(self.hi, other.hi))

    def __add__(self, other: "Interval") -> "Interval":
        return self.add(other)

    def __sub__(self, other: "Interval") -> "Interval":
        return self.sub(other)

    def __mul__(self, other: "Interval") -> "Interval":
        return self.mul(other)

    def __neg__(self) -> "Interval":
        return self.neg()

    def __rshift__(self, shift: int) -> "Interval":
        return self.shr(shift)

    def __repr__(self) -> str:
        return f"[{self.lo}, {self.hi}]"


ZERO = Interval(Fraction(0), Fraction(0))
