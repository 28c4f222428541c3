import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fockbound import algebra as alg
from fockbound.algebra import multiply
from fockbound.errors import ValidationError
from fockbound.operators import make_peripheral_unitary, trust_distance
from fockbound.scalars import GaussianRational, UnitEigenvalue
from fockbound.words import TruncationParams
from fockbound.xspec import format_lambda, parse, single_word

N = 2


def test_generators():
    assert parse("r_12").to_symbolic(N) == alg.r_word(N, (1, 2))
    assert parse("r_{1,2}").to_symbolic(N) == alg.r_word(N, (1, 2))
    assert parse("r*_2").to_symbolic(N) == alg.rs_word(N, (2,))
    assert parse("r_2*").to_symbolic(N) == alg.rs_word(N, (2,))
    assert parse("l*_1 l_1").to_symbolic(N) == alg.one(N)
    assert parse("p0").to_symbolic(N) == alg.vacuum_projection(N)
    assert parse("1").to_symbolic(N) == alg.one(N)


def test_phases():
    for text, turns in [("x_i", Fraction(1, 4)), ("x_{-1}", Fraction(1, 2)), ("x_-i", Fraction(3, 4)),
                        ("x_1", 0), ("x_root{8,3}", Fraction(3, 8)), ("x_{0,1}", Fraction(1, 4))]:
        f = parse(text).terms[0].factors[0]
        assert f.kind == "x" and f.lam.turns == turns


def test_non_root_phase_is_numeric_only():
    spec = parse("x_{0.6,0.8}")
    assert not spec.symbolic_ok
    with pytest.raises(ValidationError):
        spec.to_symbolic(N)
    p = TruncationParams(N, 3)
    lam = UnitEigenvalue(complex(0.6, 0.8))
    assert trust_distance(spec.to_numeric(p), make_peripheral_unitary(p, lam)) < 1e-15


def test_sums_and_scalars():
    r1, r2s = alg.r_word(N, (1,)), alg.rs_word(N, (2,))
    x = parse("x_i + r_1").to_symbolic(N)
    assert x == alg.phase_unitary(N, UnitEigenvalue.root(4, 1)) + r1
    assert parse("2 r_1 - 1/2 * r_2*").to_symbolic(N) == r1.scale(2) - r2s.scale(Fraction(1, 2))
    assert parse("i r_1").to_symbolic(N) == r1.scale(GaussianRational(0, 1))
    assert parse("-2i r_1").to_symbolic(N) == r1.scale(GaussianRational(0, -2))
    assert parse("(1+2i) r_1").to_symbolic(N) == r1.scale(GaussianRational(1, 2))
    assert parse("0.5 r_1").to_symbolic(N) == r1.scale(Fraction(1, 2))
    assert parse("r_1 r_2*").to_symbolic(N) == multiply(r1, r2s)


@pytest.mark.parametrize("text", ["", "r_", "q_1", "r_1 +", "r*_1*", "r_1 2", "x_{2,0}", "* r_1",
                                  "x_root{0,1}"])
def test_parse_errors(text):
    with pytest.raises(ValidationError):
        parse(text)


def test_alphabet_check():
    with pytest.raises(ValidationError):
        parse("r_3").to_symbolic(N)
    parse("r_3").check_alphabet(3)


def test_single_word():
    assert single_word(parse("r_12"), "r") == (1, 2)
    assert single_word(parse("r_1 r_2"), "r") == (1, 2)
    # r*_1 r*_2 = (r_2 r_1)^*
    assert single_word(parse("r*_1 r*_2"), "rs") == (2, 1)
    assert single_word(parse("2 r_1"), "r") is None
    assert single_word(parse("r_1 + r_2"), "r") is None
    assert single_word(parse("r_1 x_i"), "r") is None


def test_single_word_rs_matches_symbolic():
    spec = parse("r*_1 r*_2")
    assert spec.to_symbolic(N) == alg.rs_word(N, single_word(spec, "rs"))


def test_format_lambda():
    d = format_lambda(UnitEigenvalue.root(4, 1))
    assert d["turns"] == "1/4" and d["angle"] == pytest.approx(math.pi / 2)
    assert d["re"] == pytest.approx(0) and d["im"] == pytest.approx(1)
    d = format_lambda(UnitEigenvalue(complex(0.6, 0.8)))
    assert d["turns"] is None and d["angle"] == pytest.approx(math.atan2(0.8, 0.6))


@given(st.lists(st.tuples(st.sampled_from("rl"), st.booleans(),
                          st.lists(st.integers(1, 2), min_size=1, max_size=3)), min_size=1, max_size=3))
def test_parse_matches_builders(factors):
    text = []
    expected = alg.one(N)
    for kind, star, word in factors:
        text.append(f"{kind}{'*' if star else ''}_{''.join(map(str, word))}")
        build = {("r", False): alg.r_word, ("r", True): alg.rs_word,
                 ("l", False): alg.l_word, ("l", True): alg.ls_word}[kind, star]
        expected = multiply(expected, build(N, tuple(word)))
    assert parse(" ".join(text)).to_symbolic(N) == expected
