"""Exact dyadic rationals num * 2**-scale.

Shrunk walk values live on the lattice 2**-m * Z and their times on
4**-m * Z, so every quantity the refinement and embedding identities
compare is a dyadic rational.  Keeping them as (numerator, scale) pairs
makes those comparisons exact integer comparisons; floats only appear
when a caller asks for them.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


@dataclass(frozen=True)
class DyadicValue:
    """num * 2**-scale with integer num and nonnegative integer scale."""

    num: int
    scale: int

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be nonnegative")

    @staticmethod
    def from_int(n: int) -> "DyadicValue":
        return DyadicValue(int(n), 0)

    def _align(self, other: "DyadicValue") -> tuple[int, int, int]:
        s = max(self.scale, other.scale)
        return self.num << (s - self.scale), other.num << (s - other.scale), s

    def __add__(self, other: "DyadicValue") -> "DyadicValue":
        a, b, s = self._align(other)
        return DyadicValue(a + b, s)

    def __sub__(self, other: "DyadicValue") -> "DyadicValue":
        a, b, s = self._align(other)
        return DyadicValue(a - b, s)

    def __neg__(self) -> "DyadicValue":
        return DyadicValue(-self.num, self.scale)

    def __mul__(self, other: "DyadicValue") -> "DyadicValue":
        return DyadicValue(self.num * other.num, self.scale + other.scale)

    def __abs__(self) -> "DyadicValue":
        return DyadicValue(abs(self.num), self.scale)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, DyadicValue):
            a, b, _ = self._align(other)
            return a == b
        if isinstance(other, (int, Fraction)):
            return self.as_fraction() == other
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.as_fraction())

    def __lt__(self, other: "DyadicValue") -> bool:
        a, b, _ = self._align(other)
        return a < b

    def __le__(self, other: "DyadicValue") -> bool:
        a, b, _ = self._align(other)
        return a <= b

    def as_fraction(self) -> Fraction:
        return Fraction(self.num, 1 << self.scale)

    def __float__(self) -> float:
        # num * 2**-scale can overflow naive float division for huge scales;
        # math.ldexp semantics via Fraction keeps it correct
        if self.scale < 1024:
            return self.num / (1 << self.scale)
        return float(self.as_fraction())

    def __repr__(self) -> str:
        return f"DyadicValue({self.num}, 2**-{self.scale})"
