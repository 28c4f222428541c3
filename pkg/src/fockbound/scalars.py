"""Exact Gaussian rationals and unit-circle helpers.

Coefficients in the symbolic engine are either Python ``complex`` or
:class:`GaussianRational`.  Arithmetic between the two falls back to
``complex``, so an element stays exact only while every scalar that touches
it is exact.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational

ZERO_TOL = 1e-14


class GaussianRational:
    """A number ``re + i*im`` with ``re, im`` in Q."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @classmethod
    def _new(cls, re: Fraction, im: Fraction):
        # skips re-validation; both parts must already be Fractions
        obj = object.__new__(cls)
        obj.re = re
        obj.im = im
        return obj

    @staticmethod
    def _lift(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Rational)):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) + other
        return GaussianRational._new(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._new(-self.re, -self.im)

    def __sub__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) - other
        return GaussianRational._new(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) * other
        if not o.im:
            return GaussianRational._new(self.re * o.re, self.im * o.re)
        if not self.im:
            return GaussianRational._new(self.re * o.re, self.re * o.im)
        return GaussianRational._new(self.re * o.re - self.im * o.im,
                                     self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._lift(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by zero")
        num = self * o.conjugate()
        return GaussianRational(num.re / den, num.im / den)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is None:
            return other / complex(self)
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int):
            return complex(self) ** k
        base = self if k >= 0 else 1 / self
        out = GaussianRational(1)
        for _ in range(abs(k)):
            out = out * base
        return out

    def conjugate(self):
        return GaussianRational._new(self.re, -self.im)

    def __abs__(self):
        return math.hypot(self.re, self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._lift(other)
        if o is None:
            try:
                return complex(self) == complex(other)
            except TypeError:
                return NotImplemented
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        return f"GaussianRational({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        return f"({self.re}{'+' if self.im >= 0 else '-'}{abs(self.im)}i)"


def to_scalar(c):
    """Coerce ints/Fractions to :class:`GaussianRational`, anything else to complex."""
    if isinstance(c, GaussianRational):
        return c
    if isinstance(c, (int, Fraction)) and not isinstance(c, bool):
        return GaussianRational(c)
    return complex(c)


def is_zero(c, tol: float = ZERO_TOL) -> bool:
    if isinstance(c, GaussianRational):
        return not c
    return abs(c) < tol


_QUARTER_TURNS = (GaussianRational(1), GaussianRational(0, 1),
                  GaussianRational(-1), GaussianRational(0, -1))


@lru_cache(maxsize=4096)
def turns_mod(t) -> Fraction:
    t = Fraction(t)
    return t - math.floor(t)


@lru_cache(maxsize=4096)
def unit(turns):
    """``exp(2*pi*i*turns)``; exact when ``turns`` is a multiple of 1/4."""
    t = turns_mod(turns)
    if (4 * t).denominator == 1:
        return _QUARTER_TURNS[int(4 * t)]
    return cmath.exp(2j * math.pi * float(t))


def turns_of(value: complex, max_denominator: int = 10**6, tol: float = 1e-12) -> Fraction:
    """Recover a rational angle (in turns) from a root of unity."""
    value = complex(value)
    if abs(abs(value) - 1) > tol:
        raise ValueError(f"{value} is not on the unit circle")
    t = turns_mod(Fraction(cmath.phase(value) / (2 * math.pi)).limit_denominator(max_denominator))
    if abs(complex(unit(t)) - value) > tol:
        raise ValueError(f"{value} is not a root of unity of order <= {max_denominator}")
    return t


@dataclass(frozen=True)
class UnitEigenvalue:
    """A point of the unit circle, optionally remembered as a rational angle."""

    value: complex
    turns: Fraction | None = None

    def __post_init__(self):
        object.__setattr__(self, "value", complex(self.value))
        if abs(abs(self.value) - 1) > 1e-12:
            raise ValueError(f"|{self.value}| != 1")

    @classmethod
    def root(cls, q: int, p: int = 1) -> "UnitEigenvalue":
        """``exp(2*pi*i*p/q)``."""
        t = turns_mod(Fraction(p, q))
        return cls(complex(unit(t)), t)

    @classmethod
    def from_turns(cls, t) -> "UnitEigenvalue":
        t = turns_mod(t)
        return cls(complex(unit(t)), t)

    @classmethod
    def coerce(cls, lam) -> "UnitEigenvalue":
        if isinstance(lam, UnitEigenvalue):
            return lam
        if isinstance(lam, GaussianRational):
            lam = complex(lam)
        try:
            return cls(lam, turns_of(lam))
        except ValueError:
            return cls(lam)

    @property
    def scalar(self):
        """Exact value when available, else complex."""
        if self.turns is not None:
            return unit(self.turns)
        return self.value

    def __mul__(self, other: "UnitEigenvalue") -> "UnitEigenvalue":
        other = UnitEigenvalue.coerce(other)
        if self.turns is not None and other.turns is not None:
            return UnitEigenvalue.from_turns(self.turns + other.turns)
        return UnitEigenvalue(self.value * other.value)

    def conjugate(self) -> "UnitEigenvalue":
        if self.turns is not None:
            return UnitEigenvalue.from_turns(-self.turns)
        return UnitEigenvalue(self.value.conjugate())

    def __pow__(self, k: int):
        if self.turns is not None:
            return unit(self.turns * k)
        return self.value ** k

    def __complex__(self):
        return self.value

    def __str__(self):
        if self.turns is not None:
            return f"exp(2πi·{self.turns})"
        return f"{self.value:.12g}"
