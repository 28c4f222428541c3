"""Small expression language for operators on the command line.

Terms
    x_i, x_{-1}, x_{-i}, x_1      phase unitary x_lam for lam in {1, i, -1, -i}
    x_{re,im}                     x_lam with lam = re + i im (|lam| = 1)
    x_root{q,p}                   x_lam with lam = exp(2 pi i p / q)
    r_I, r*_I, r_I*               right creation r_I and its adjoint
    l_I, l*_I, l_I*               left creation l_I and its adjoint
    p0                            vacuum projection
    1                             identity (any bare number is a scalar)

Words are written as digits (``r_12``) or braced lists (``r_{1,2}``).
Juxtaposition multiplies, ``+`` and ``-`` add.  A term may start with a
scalar: ``2``, ``0.5``, ``1/3``, ``i``, ``-2i`` or a parenthesised complex
literal such as ``(0.5+1j)``; an optional ``*`` may follow it.
"""

from __future__ import annotations

import cmath
import math
import re
from dataclasses import dataclass
from fractions import Fraction

from . import algebra as alg
from .algebra import AlgebraElement
from .errors import ValidationError
from .operators import (TruncatedOperator, add, compose, make_identity,
                        make_peripheral_unitary, realize, scale)
from .scalars import GaussianRational, UnitEigenvalue, turns_of
from .words import TruncationParams

_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<op>[+-])
  | (?P<star>\*)
  | (?P<paren>\([^()]*\))
  | (?P<xroot>x_root\{\s*(?P<rq>\d+)\s*,\s*(?P<rp>-?\d+)\s*\})
  | (?P<xpair>x_\{\s*(?P<xre>[-+0-9.eE]+)\s*,\s*(?P<xim>[-+0-9.eE]+)\s*\})
  | (?P<xnamed>x_(?:\{\s*(?P<xb>-?[1i])\s*\}|(?P<xa>-?[1i])))
  | (?P<gen>(?P<gk>[rl])(?P<gs1>\*)?_(?:\{(?P<gbr>[0-9,\s]+)\}|(?P<gdig>\d+))(?P<gs2>\*)?)
  | (?P<vac>p0)
  | (?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?(?:/\d+)?i?|\.\d+i?|i)
""", re.VERBOSE)


@dataclass(frozen=True)
class Factor:
    """One multiplicative factor: a generator word or a phase unitary."""

    kind: str  # "l", "ls", "r", "rs", "p", "x"
    word: tuple = ()
    lam: UnitEigenvalue | None = None


@dataclass
class Term:
    coeff: complex | GaussianRational
    factors: list

    @property
    def exact(self) -> bool:
        return isinstance(self.coeff, GaussianRational) and all(
            f.kind != "x" or f.lam.turns is not None for f in self.factors)


@dataclass
class XSpec:
    """Parsed expression: a sum of terms."""

    text: str
    terms: list

    def letters(self):
        return {a for t in self.terms for f in t.factors for a in f.word}

    def check_alphabet(self, n: int):
        bad = sorted(a for a in self.letters() if not 1 <= a <= n)
        if bad:
            raise ValidationError(f"{self.text!r}: letters {bad} outside 1..{n}")

    @property
    def symbolic_ok(self) -> bool:
        """True when every phase is a root of unity (needed for symbolic x_lam)."""
        return all(f.kind != "x" or f.lam.turns is not None for t in self.terms for f in t.factors)

    def term_symbolic(self, n: int, term: Term) -> AlgebraElement:
        out = AlgebraElement.one(n, term.coeff)
        for f in term.factors:
            out = alg.multiply(out, _factor_symbolic(n, f))
        return out

    def to_symbolic(self, n: int) -> AlgebraElement:
        self.check_alphabet(n)
        if not self.symbolic_ok:
            raise ValidationError(f"{self.text!r}: phase is not a root of unity; use numeric mode")
        out = AlgebraElement.zero(n)
        for t in self.terms:
            out = out + self.term_symbolic(n, t)
        return out

    def term_numeric(self, p: TruncationParams, term: Term) -> TruncatedOperator:
        out = scale(complex(term.coeff), make_identity(p))
        for f in term.factors:
            if f.kind == "x":
                op = make_peripheral_unitary(p, f.lam)
            else:
                op = realize(p, _factor_symbolic(p.n, f))
            out = compose(out, op)
        return out

    def to_numeric(self, p: TruncationParams) -> TruncatedOperator:
        self.check_alphabet(p.n)
        if self.symbolic_ok:
            return realize(p, self.to_symbolic(p.n))
        out = None
        for t in self.terms:
            op = self.term_numeric(p, t)
            out = op if out is None else add(out, op)
        return out


def _factor_symbolic(n: int, f: Factor) -> AlgebraElement:
    if f.kind == "x":
        return alg.phase_unitary(n, f.lam)
    if f.kind == "p":
        return alg.vacuum_projection(n)
    return {"l": alg.l_word, "ls": alg.ls_word, "r": alg.r_word, "rs": alg.rs_word}[f.kind](n, f.word)


def _parse_number(txt: str):
    """Exact GaussianRational for integer, decimal or fraction literals."""
    imag = txt.endswith("i")
    body = txt[:-1] if imag else txt
    val = Fraction(1) if body == "" else Fraction(body)
    return GaussianRational(0, val) if imag else GaussianRational(val, 0)


def _parse_paren(txt: str):
    inner = txt[1:-1].replace(" ", "")
    try:
        z = complex(inner.replace("i", "j"))
    except ValueError as exc:
        raise ValidationError(f"bad complex scalar {txt!r}") from exc
    if z.real == int(z.real) and z.imag == int(z.imag):
        return GaussianRational(int(z.real), int(z.imag))
    return z


def _phase(value: complex) -> UnitEigenvalue:
    if abs(abs(value) - 1) > 1e-12:
        raise ValidationError(f"x_lam needs |lam| = 1, got |{value}| = {abs(value)}")
    try:
        return UnitEigenvalue.from_turns(turns_of(value))
    except ValueError:
        return UnitEigenvalue(complex(value))


_NAMED = {"1": Fraction(0), "i": Fraction(1, 4), "-1": Fraction(1, 2), "-i": Fraction(3, 4)}


def _word(m) -> tuple:
    if m.group("gbr") is not None:
        parts = [s.strip() for s in m.group("gbr").split(",") if s.strip()]
        return tuple(int(s) for s in parts)
    return tuple(int(c) for c in m.group("gdig"))


def parse(text: str) -> XSpec:
    """Parse an expression; raises :class:`ValidationError` on bad input."""
    pos, toks = 0, []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ValidationError(f"cannot parse {text!r} at position {pos}: {text[pos:pos + 10]!r}")
        pos = m.end()
        if m.lastgroup != "ws":
            toks.append(m)
    if not toks:
        raise ValidationError("empty expression")
    terms = []
    sign = 1
    coeff = None
    factors: list = []
    expect_term = True

    def flush():
        nonlocal coeff, factors
        c = GaussianRational(1) if coeff is None else coeff
        terms.append(Term(c * sign, factors))
        coeff, factors = None, []

    for m in toks:
        kind = m.lastgroup
        # the last named group that matched is the outermost alternative only
        for name in ("op", "star", "paren", "xroot", "xpair", "xnamed", "gen", "vac", "num"):
            if m.group(name) is not None:
                kind = name
                break
        if kind == "op":
            if not expect_term:
                flush()
                expect_term = True
                sign = 1
            sign = -sign if m.group("op") == "-" else sign
            continue
        if kind == "star":
            if coeff is None or factors:
                raise ValidationError(f"misplaced '*' in {text!r}")
            continue
        expect_term = False
        if kind in ("num", "paren"):
            c = _parse_number(m.group("num")) if kind == "num" else _parse_paren(m.group("paren"))
            if factors:
                raise ValidationError(f"scalar after an operator factor in {text!r}")
            coeff = c if coeff is None else coeff * c
        elif kind == "xroot":
            q, p = int(m.group("rq")), int(m.group("rp"))
            if q < 1:
                raise ValidationError(f"x_root needs q >= 1, got {q}")
            factors.append(Factor("x", lam=UnitEigenvalue.root(q, p % q)))
        elif kind == "xpair":
            z = complex(float(m.group("xre")), float(m.group("xim")))
            factors.append(Factor("x", lam=_phase(z)))
        elif kind == "xnamed":
            key = m.group("xb") or m.group("xa")
            factors.append(Factor("x", lam=UnitEigenvalue.from_turns(_NAMED[key])))
        elif kind == "gen":
            word = _word(m)
            if not word:
                raise ValidationError(f"empty word in {m.group(0)!r}")
            if m.group("gs1") and m.group("gs2"):
                raise ValidationError(f"double adjoint in {m.group(0)!r}")
            star = bool(m.group("gs1") or m.group("gs2"))
            factors.append(Factor(m.group("gk") + ("s" if star else ""), word))
        elif kind == "vac":
            factors.append(Factor("p"))
    if expect_term:
        raise ValidationError(f"expression {text!r} ends with an operator")
    flush()
    return XSpec(text, terms)


def single_word(spec: XSpec, kind: str):
    """The word I when ``spec`` is exactly one bare r_I (kind "r") or r_I^* (kind "rs")."""
    if len(spec.terms) != 1:
        return None
    t = spec.terms[0]
    if t.coeff != 1 or not t.factors or any(f.kind != kind for f in t.factors):
        return None
    word = ()
    for f in t.factors:
        word = word + f.word
    if kind == "rs":
        # r*_I r*_J = (r_J r_I)^*
        word = ()
        for f in reversed(t.factors):
            word = word + f.word
    return word


def format_lambda(lam: UnitEigenvalue) -> dict:
    z = complex(lam.value)
    out = {"re": z.real, "im": z.imag, "turns": None if lam.turns is None else str(lam.turns)}
    out["angle"] = cmath.phase(z) if lam.turns is None else float(2 * math.pi * lam.turns)
    return out
