import cmath
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fockbound.scalars import GaussianRational, UnitEigenvalue, turns_of, unit

rats = st.builds(Fraction, st.integers(-60, 60), st.integers(1, 12))
gauss = st.builds(GaussianRational, rats, rats)


def test_quarter_turns_exact():
    assert unit(Fraction(1, 4)) == GaussianRational(0, 1)
    assert unit(Fraction(1, 2)) == GaussianRational(-1)
    assert isinstance(unit(Fraction(1, 8)), complex)


def test_turns_roundtrip():
    assert turns_of(1j) == Fraction(1, 4)
    assert turns_of(cmath.exp(2j * cmath.pi * 3 / 8)) == Fraction(3, 8)
    with pytest.raises(ValueError):
        turns_of(2.0)


def test_unit_eigenvalue():
    i = UnitEigenvalue.root(4, 1)
    assert (i * i).turns == Fraction(1, 2)
    assert i.conjugate().turns == Fraction(3, 4)
    assert i ** 3 == GaussianRational(0, -1)
    assert UnitEigenvalue.coerce(-1).turns == Fraction(1, 2)
    assert UnitEigenvalue.coerce(complex(0.6, 0.8)).turns is None
    with pytest.raises(ValueError):
        UnitEigenvalue(0.5)


@given(gauss, gauss, gauss)
def test_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert (a * b) * c == a * (b * c)
    assert (a * b).conjugate() == a.conjugate() * b.conjugate()
    assert a - a == 0
    if a != 0:
        assert (b / a) * a == b


@given(gauss, gauss)
def test_matches_complex(a, b):
    assert abs(complex(a * b) - complex(a) * complex(b)) < 1e-9 * (1 + abs(complex(a * b)))
    assert abs(complex(a + b) - (complex(a) + complex(b))) < 1e-9 * (1 + abs(complex(a + b)))
