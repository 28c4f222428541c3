"""Symbolic *-algebra generated by l_i, r_i, p_Omega and the phase unitaries x_lam.

Every element is kept as a finite sum of normal-form monomials

    coeff * l_I r_J p^eps (r_K)^* (l_M)^* x_t

where ``x_t`` is the diagonal unitary e_I -> exp(2 pi i t |I|) e_I.  The phase
tag sits at the far right; in monomials that contain p_Omega it is absorbed,
since p r_K^* l_M^* x_t = exp(2 pi i t (|K|+|M|)) p r_K^* l_M^*.

Rewrite rules (pairs of adjacent generators, left to right):

    l_i^* l_j -> delta_ij            r_i^* r_j -> delta_ij
    r_i^* l_j -> l_j r_i^* + delta_ij p
    l_i^* r_j -> r_j l_i^* + delta_ij p
    p l_i, p r_i, l_i^* p, r_i^* p -> 0        p p -> p
    r_j l_i -> l_i r_j               l_i^* r_j^* -> r_j^* l_i^*
    x_t g -> e^{+2 pi i t} g x_t  (g a creation)
    x_t g -> e^{-2 pi i t} g x_t  (g an annihilation)
    x_t p -> p,  p x_t -> p,  x_s x_t -> x_{s+t}
"""

from __future__ import annotations

import random
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

from .errors import ConvergenceError, ValidationError
from .scalars import (GaussianRational, UnitEigenvalue, is_zero, to_scalar,
                      turns_mod, unit)
from .words import Weights, check_word

# generator kinds, in normal-form order
LC, RC, P, RA, LA, X = range(6)
_KIND_NAMES = {LC: "l", RC: "r", P: "p", RA: "r*", LA: "l*", X: "x"}
_ADJ_KIND = {LC: LA, LA: LC, RC: RA, RA: RC, P: P}

ZERO_TURNS = Fraction(0)


@dataclass(frozen=True)
class Generator:
    """One letter of an operator word.

    ``arg`` is the alphabet letter for creations/annihilations, 0 for the
    vacuum projection, and the angle in turns for a phase unitary.
    """

    kind: int
    arg: object = 0

    def __repr__(self):
        if self.kind == P:
            return "p"
        return f"{_KIND_NAMES[self.kind]}{self.arg}"

    def adjoint(self) -> "Generator":
        if self.kind == X:
            return Generator(X, turns_mod(-self.arg))
        return Generator(_ADJ_KIND[self.kind], self.arg)


def left_create(i):
    return Generator(LC, int(i))


def left_annihilate(i):
    return Generator(LA, int(i))


def right_create(i):
    return Generator(RC, int(i))


def right_annihilate(i):
    return Generator(RA, int(i))


VACUUM = Generator(P, 0)


def phase(turns):
    return Generator(X, turns_mod(turns))


# --------------------------------------------------------------------------
# rewriting on raw generator tuples  (kind, arg)
# --------------------------------------------------------------------------

def _rule(a, b):
    """Rewrite for the adjacent pair ``a b``; None when the pair is normal.

    Returns a list of ``(turns, replacement)``; an empty list means zero.
    """
    ka, kb = a[0], b[0]
    if ka == X:
        if kb == X:
            t = turns_mod(a[1] + b[1])
            return [(ZERO_TURNS, ((X, t),) if t else ())]
        if kb == P:
            return [(ZERO_TURNS, (b,))]
        if kb in (LC, RC):
            return [(a[1], (b, a))]
        return [(-a[1], (b, a))]
    if ka == P:
        if kb in (LC, RC):
            return []
        if kb == P or kb == X:
            return [(ZERO_TURNS, (a,))]
        return None
    if kb == P:
        if ka in (RA, LA):
            return []
        return None
    if ka == RC and kb == LC:
        return [(ZERO_TURNS, (b, a))]
    if ka == LA and kb == RA:
        return [(ZERO_TURNS, (b, a))]
    if (ka, kb) in ((LA, LC), (RA, RC)):
        return [(ZERO_TURNS, ())] if a[1] == b[1] else []
    if (ka, kb) in ((RA, LC), (LA, RC)):
        out = [(ZERO_TURNS, (b, a))]
        if a[1] == b[1]:
            out.append((ZERO_TURNS, ((P, 0),)))
        return out
    return None


def _redexes(word):
    return [k for k in range(len(word) - 1) if _rule(word[k], word[k + 1]) is not None]


def _finish(turns, word):
    """Absorb a trailing phase into p when the monomial contains p."""
    if word and word[-1][0] == X and any(g[0] == P for g in word):
        nann = sum(1 for g in word if g[0] in (RA, LA))
        turns = turns + word[-1][1] * nann
        word = word[:-1]
    return turns_mod(turns), word


def _rewrite(word, rng=None):
    out = []
    stack = [(ZERO_TURNS, tuple(word))]
    steps = 0
    while stack:
        turns, w = stack.pop()
        if rng is None:
            pos = next((k for k in range(len(w) - 1) if _rule(w[k], w[k + 1]) is not None), None)
        else:
            cands = _redexes(w)
            pos = rng.choice(cands) if cands else None
        if pos is None:
            out.append(_finish(turns, w))
            continue
        steps += 1
        if steps > 10**6:
            raise ConvergenceError("rewriting did not terminate")
        for dt, rep in _rule(w[pos], w[pos + 1]):
            stack.append((turns + dt, w[:pos] + rep + w[pos + 2:]))
    return out


@lru_cache(maxsize=None)
def _rewrite_cached(word):
    return tuple(_rewrite(word))


def _shape_of(word):
    """Map a normal-form generator tuple to its monomial shape."""
    lc, rc, ra, la = [], [], [], []
    eps = False
    tag = ZERO_TURNS
    for k, a in word:
        if k == LC:
            lc.append(a)
        elif k == RC:
            rc.append(a)
        elif k == P:
            eps = True
        elif k == RA:
            ra.append(a)
        elif k == LA:
            la.append(a)
        else:
            tag = a
    return (tuple(lc), tuple(rc), eps, tuple(reversed(ra)), tuple(reversed(la)), tag)


def _word_of(shape):
    lc, rc, eps, ra, la, tag = shape
    w = [(LC, a) for a in lc] + [(RC, a) for a in rc]
    if eps:
        w.append((P, 0))
    w += [(RA, a) for a in reversed(ra)] + [(LA, a) for a in reversed(la)]
    if tag:
        w.append((X, tag))
    return tuple(w)


@lru_cache(maxsize=None)
def _product_shapes(s1, s2):
    return tuple((t, _shape_of(w)) for t, w in _rewrite_cached(_word_of(s1) + _word_of(s2)))


@lru_cache(maxsize=None)
def _sandwich_shapes(i, s):
    word = ((LA, i),) + _word_of(s) + ((LC, i),)
    return tuple((t, _shape_of(w)) for t, w in _rewrite_cached(word))


@lru_cache(maxsize=None)
def _adjoint_shapes(s):
    word = tuple((g[0], turns_mod(-g[1])) if g[0] == X else (_ADJ_KIND[g[0]], g[1])
                 for g in reversed(_word_of(s)))
    return tuple((t, _shape_of(w)) for t, w in _rewrite_cached(word))


def _shape_sort_key(s):
    lc, rc, eps, ra, la, tag = s
    return (len(lc) + len(rc) + len(ra) + len(la), lc, rc, eps, ra, la, tag)


def _raw(g):
    if isinstance(g, Generator):
        return (g.kind, g.arg)
    return tuple(g)


# --------------------------------------------------------------------------
# elements
# --------------------------------------------------------------------------

class AlgebraElement:
    """Finite linear combination of normal-form monomials over an alphabet of size ``n``.

    Instances are immutable.  ``terms`` maps a shape
    ``(lc, rc, eps, ra, la, tag)`` to its coefficient.
    """

    __slots__ = ("n", "_terms", "_sorted")

    def __init__(self, n: int, terms=None):
        self.n = int(n)
        clean = {}
        for shape, c in (terms or {}).items():
            c = to_scalar(c)
            if not is_zero(c):
                clean[shape] = c
        self._terms = clean
        self._sorted = None

    # construction ---------------------------------------------------------
    @classmethod
    def zero(cls, n):
        return cls(n)

    @classmethod
    def one(cls, n, coeff=1):
        return cls(n, {((), (), False, (), (), ZERO_TURNS): coeff})

    @classmethod
    def monomial(cls, n, lc=(), rc=(), eps=False, ra=(), la=(), tag=0, coeff=1):
        """``coeff * l_lc r_rc p^eps (r_ra)^* (l_la)^* x_tag`` (normalised)."""
        word = ([(LC, a) for a in check_word(lc, n)] + [(RC, a) for a in check_word(rc, n)]
                + ([(P, 0)] if eps else [])
                + [(RA, a) for a in reversed(check_word(ra, n))]
                + [(LA, a) for a in reversed(check_word(la, n))])
        if turns_mod(tag):
            word.append((X, turns_mod(tag)))
        return normal_form(n, word, coeff)

    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def items(self):
        """Terms in canonical order."""
        if self._sorted is None:
            self._sorted = sorted(self._terms.items(), key=lambda kv: _shape_sort_key(kv[0]))
        return self._sorted

    def __len__(self):
        return len(self._terms)

    def __iter__(self):
        return iter(k for k, _ in self.items())

    @property
    def exact(self) -> bool:
        return all(isinstance(c, GaussianRational) for c in self._terms.values())

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, shape):
        return self._terms.get(shape, 0)

    # arithmetic -----------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, AlgebraElement):
            raise TypeError(f"expected AlgebraElement, got {type(other).__name__}")
        if other.n != self.n:
            raise ValidationError(f"alphabet mismatch: {self.n} vs {other.n}")

    def __add__(self, other):
        if not isinstance(other, AlgebraElement):
            return self + AlgebraElement.one(self.n, other)
        self._check(other)
        out = dict(self._terms)
        for s, c in other._terms.items():
            out[s] = out[s] + c if s in out else c
        return AlgebraElement(self.n, out)

    __radd__ = __add__

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, c):
        c = to_scalar(c)
        return AlgebraElement(self.n, {s: c * v for s, v in self._terms.items()})

    def __mul__(self, other):
        if isinstance(other, AlgebraElement):
            return multiply(self, other)
        return self.scale(other)

    def __rmul__(self, c):
        return self.scale(c)

    def __truediv__(self, c):
        c = to_scalar(c)
        return AlgebraElement(self.n, {s: v / c for s, v in self._terms.items()})

    def adjoint(self):
        return adjoint(self)

    @property
    def H(self):
        return adjoint(self)

    # comparison -----------------------------------------------------------
    def max_abs_diff(self, other) -> float:
        self._check(other)
        keys = set(self._terms) | set(other._terms)
        return max((abs(complex(self.coefficient(k) - other.coefficient(k))) for k in keys),
                   default=0.0)

    def equals(self, other, tol: float = 1e-12) -> bool:
        if self.exact and other.exact:
            return self._terms == other._terms
        return self.max_abs_diff(other) < tol

    def __eq__(self, other):
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.n == other.n and self.equals(other)

    __hash__ = None

    def to_float(self):
        return AlgebraElement(self.n, {s: complex(c) for s, c in self._terms.items()})

    def max_shift(self) -> int:
        """Largest net degree change over the terms (0 for the zero element)."""
        return max((len(s[0]) + len(s[1]) - len(s[3]) - len(s[4]) for s in self._terms), default=0)

    def min_shift(self) -> int:
        return min((len(s[0]) + len(s[1]) - len(s[3]) - len(s[4]) for s in self._terms), default=0)

    def __repr__(self):
        if not self._terms:
            return "0"
        return " + ".join(f"{c}·{format_shape(s)}" for s, c in self.items())

    # serialisation --------------------------------------------------------
    def to_json(self) -> list:
        out = []
        for (lc, rc, eps, ra, la, tag), c in self.items():
            z = complex(c)
            rec = {"coeff_re": z.real, "coeff_im": z.imag, "lc": list(lc), "rc": list(rc),
                   "eps": bool(eps), "ra": list(ra), "la": list(la), "tag": str(tag)}
            if isinstance(c, GaussianRational):
                rec["exact"] = [str(c.re), str(c.im)]
            out.append(rec)
        return out

    @classmethod
    def from_json(cls, n: int, records: Iterable[dict]):
        terms = {}
        for rec in records:
            if "exact" in rec:
                c = GaussianRational(Fraction(rec["exact"][0]), Fraction(rec["exact"][1]))
            else:
                c = complex(rec["coeff_re"], rec["coeff_im"])
            shape = (tuple(rec["lc"]), tuple(rec["rc"]), bool(rec["eps"]), tuple(rec["ra"]),
                     tuple(rec["la"]), Fraction(rec.get("tag", "0")))
            terms[shape] = c
        return cls(n, terms)


def format_shape(s) -> str:
    lc, rc, eps, ra, la, tag = s
    parts = []
    if lc:
        parts.append("l" + "".join(map(str, lc)))
    if rc:
        parts.append("r" + "".join(map(str, rc)))
    if eps:
        parts.append("p")
    if ra:
        parts.append("r" + "".join(map(str, ra)) + "*")
    if la:
        parts.append("l" + "".join(map(str, la)) + "*")
    if tag:
        parts.append(f"x[{tag}]")
    return " ".join(parts) or "1"


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------

def _collect(n, weighted: Iterable) -> AlgebraElement:
    acc = defaultdict(int)
    for coeff, turns, shape in weighted:
        acc[shape] = acc[shape] + (coeff * unit(turns) if turns else coeff)
    return AlgebraElement(n, acc)


def normal_form(n: int, word: Sequence, coeff=1, rng: random.Random | None = None) -> AlgebraElement:
    """Expand a product of generators into normal form.

    ``rng`` picks the redex at random at every step instead of the leftmost
    one; the result does not depend on it.
    """
    raw = tuple(_raw(g) for g in word)
    for k, a in raw:
        if k in (LC, RC, RA, LA) and not 1 <= a <= n:
            raise ValidationError(f"letter {a} outside 1..{n}")
    res = _rewrite(raw, rng) if rng is not None else _rewrite_cached(raw)
    c = to_scalar(coeff)
    return _collect(n, ((c, t, _shape_of(w)) for t, w in res))


def multiply(x: AlgebraElement, y: AlgebraElement) -> AlgebraElement:
    x._check(y)
    out = []
    for s1, c1 in x._terms.items():
        for s2, c2 in y._terms.items():
            c = c1 * c2
            out.extend((c, t, s) for t, s in _product_shapes(s1, s2))
    return _collect(x.n, out)


def adjoint(x: AlgebraElement) -> AlgebraElement:
    out = []
    for s, c in x._terms.items():
        cc = c.conjugate()
        out.extend((cc, t, s2) for t, s2 in _adjoint_shapes(s))
    return _collect(x.n, out)


def apply_ucp_symbolic(w: Weights, x: AlgebraElement) -> AlgebraElement:
    """``sum_i w_i l_i^* x l_i``."""
    if len(w) != x.n:
        raise ValidationError(f"{len(w)} weights for alphabet of size {x.n}")
    out = []
    for i in range(1, x.n + 1):
        wi = w.scalar(i)
        for s, c in x._terms.items():
            c2 = c * wi
            out.extend((c2, t, s2) for t, s2 in _sandwich_shapes(i, s))
    return _collect(x.n, out)


def iterate_ucp_symbolic(w: Weights, x: AlgebraElement, k: int) -> AlgebraElement:
    for _ in range(k):
        x = apply_ucp_symbolic(w, x)
    return x


def eigen_check_symbolic(w: Weights, x: AlgebraElement, tol: float = 1e-12):
    """Return lam with P(x) = lam x term by term, |lam| = 1; None otherwise."""
    if x.is_zero():
        raise ValidationError("zero element has no eigenvalue")
    px = apply_ucp_symbolic(w, x)
    shape, c = next(((s, c) for s, c in x.items() if abs(complex(c)) > tol), (None, None))
    if shape is None:
        return None
    lam = px.coefficient(shape) / c
    if px.exact and x.exact and isinstance(lam, GaussianRational):
        if lam.re * lam.re + lam.im * lam.im != 1 or not px.equals(x.scale(lam)):
            return None
        return UnitEigenvalue.coerce(complex(lam))
    lam = complex(lam)
    if abs(abs(lam) - 1) > tol or px.max_abs_diff(x.scale(lam)) > tol:
        return None
    return UnitEigenvalue.coerce(lam)


@dataclass(frozen=True)
class EigenTaggedElement:
    """An element together with its peripheral eigenvalue, checked on construction."""

    element: AlgebraElement
    lam: UnitEigenvalue
    weights: Weights
    tol: float = 1e-12

    def __post_init__(self):
        lam = UnitEigenvalue.coerce(self.lam)
        object.__setattr__(self, "lam", lam)
        px = apply_ucp_symbolic(self.weights, self.element)
        if not px.equals(self.element.scale(lam.scalar), self.tol):
            raise ValidationError(f"element is not in the {lam} eigenspace")


def choi_effros_symbolic(x: EigenTaggedElement, y: EigenTaggedElement, max_iter: int = 64,
                         tol: float = 1e-12, with_steps: bool = False):
    """Limit of (lam mu)^{-k} P^k(x y), detected by exact stabilization.

    Returns the first iterate z_k with z_{k+1} = z_k (and ``k`` when
    ``with_steps``).
    """
    w = x.weights
    inv = 1 / (x.lam * y.lam).scalar
    z = multiply(x.element, y.element)
    for k in range(max_iter):
        nxt = apply_ucp_symbolic(w, z).scale(inv)
        if nxt.equals(z, tol):
            return (z, k) if with_steps else z
        z = nxt
    raise ConvergenceError(f"symbolic Choi-Effros iteration did not stabilize in {max_iter} steps")


# --------------------------------------------------------------------------
# convenience constructors
# --------------------------------------------------------------------------

def one(n):
    return AlgebraElement.one(n)


def l_word(n, I):
    return AlgebraElement.monomial(n, lc=I)


def r_word(n, I):
    """``r_I = r_{i1} ... r_{ik}``."""
    return AlgebraElement.monomial(n, rc=I)


def ls_word(n, I):
    """``(l_I)^*``."""
    return AlgebraElement.monomial(n, la=I)


def rs_word(n, I):
    """``(r_I)^*``."""
    return AlgebraElement.monomial(n, ra=I)


def vacuum_projection(n):
    return AlgebraElement.monomial(n, eps=True)


def phase_unitary(n, lam):
    """Symbolic x_lam; ``lam`` must be a root of unity."""
    lam = UnitEigenvalue.coerce(lam)
    if lam.turns is None:
        raise ValidationError(f"{lam.value} is not a root of unity; no symbolic x_lam")
    return AlgebraElement.monomial(n, tag=lam.turns)
