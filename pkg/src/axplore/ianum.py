"""Error-tracking interval numbers.

An :class:`IaNum` pairs a value interval with an error interval and
models an approximated quantity as ``value - error``. Keeping the two
components separate is what lets the exploration attribute output
violations back to individual parameters.

The algebra guarantees soundness only: :func:`realize` always contains
every concrete fixed-point outcome of the modeled computation, with no
tightness guarantee.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .fixedpoint import FixQ16x16, error_bounds
from .interval import Interval, ceil_to_grid, floor_to_grid

Exactish = Union[FixQ16x16, int, Fraction]


class TriBool(enum.Enum):
    """Three-valued comparison outcome."""

    TRUE = "definitely-true"
    FALSE = "definitely-false"
    UNCERTAIN = "uncertain"

    def is_definite(self) -> bool:
        return self is not TriBool.UNCERTAIN


def _to_fraction(x: Exactish) -> Fraction:
    if isinstance(x, FixQ16x16):
        return x.value
    return Fraction(x)


@dataclass(frozen=True)
class IaNum:
    """Pair {value interval, error interval} modeling ``value - error``."""

    value: Interval
    error: Interval

    def realize(self) -> Interval:
        """Range of concrete outcomes: value minus error, endpoint rule."""
        return self.value.sub(self.error)

    def add(self, other: "IaNum") -> "IaNum":
        return IaNum(self.value.add(other.value), self.error.add(other.error))

    def sub(self, other: "IaNum") -> "IaNum":
        return IaNum(self.value.sub(other.value), self.error.sub(other.error))

    def mul(self, other: "IaNum") -> "IaNum":
        # (v1 - e1)(v2 - e2) = v1*v2 - (v1*e2 + v2*e1 - e1*e2)
        v1, e1 = self.value, self.error
        v2, e2 = other.value, other.error
        cross = v1.mul(e2).add(v2.mul(e1))
        return IaNum(v1.mul(v2), cross.add(e1.mul(e2).neg()))

    def shr(self, shift: int) -> "IaNum":
        """Arithmetic right shift by `shift` on the 2**-16 raw lattice.

        The value component applies the hardware shift to each endpoint;
        the shift is monotone, so this is containment-safe and exact for
        degenerate inputs. The shifted error lies in
        [error.lo >> shift, ceil(error.hi / 2**shift)]: the concrete
        error after shifting value raw X carrying error raw E is
        ceil((E - (X mod 2**shift)) / 2**shift), which those bounds
        cover for every residue of X.
        """
        if not 0 <= shift <= 31:
            raise ValueError(f"shift must be in [0, 31], got {shift}")
        d = 1 << shift
        v = Interval(floor_to_grid(self.value.lo / d), floor_to_grid(self.value.hi / d))
        e = Interval(floor_to_grid(self.error.lo / d), ceil_to_grid(self.error.hi / d))
        return IaNum(v, e)

    def __add__(self, other: "IaNum") -> "IaNum":
        return self.add(other)

    def __sub__(self, other: "IaNum") -> "IaNum":
        return self.sub(other)

    def __mul__(self, other: "IaNum") -> "IaNum":
        return self.mul(other)

    def __rshift__(self, shift: int) -> "IaNum":
        return self.shr(shift)

    def __repr__(self) -> str:
        return f"IaNum(value={self.value}, error={self.error})"


def from_exact(x: Exactish) -> IaNum:
    """Lift an exact scalar: degenerate value, zero error."""
    return IaNum(Interval.point(_to_fraction(x)), Interval.point(Fraction(0)))


def from_param(x: Exactish, bits: int) -> IaNum:
    """Lift a stored parameter that may lose up to `bits` fractional bits."""
    return IaNum(Interval.point(_to_fraction(x)), error_bounds(bits))


def cmp_gt(a: IaNum, b: IaNum) -> TriBool:
    """Is every concrete outcome of `a` strictly greater than every one of `b`?

    Ties at the boundary are FALSE, matching the strict comparison of the
    concrete flow.
    """
    ra, rb = a.realize(), b.realize()
    if ra.lo > rb.hi:
        return TriBool.TRUE
    if ra.hi <= rb.lo:
        return TriBool.FALSE
    return TriBool.UNCERTAIN
