"""Peripheral boundary experiments for P_w.

Test family
-----------
Fixed points are taken from the algebra generated by right creations.  Since
r_I r_J^* is itself a fixed point only when the last letters of I and J
differ, the family uses

    a_IJ = r_I o r_J^* = r_I r_J^* + sum_t w_{(J^op)_t} (l_{(J^op)_t})^* r_I p (r_{J_{|J|-t}})^*

and the peripheral elements x_lam a_IJ, which lie in E_lam.  Each a_IJ has
homogeneous degree shift |I| - |J|.

Closed forms
------------
For x in E_lam the SOT products with right creations are finite sums:

    (i)   x o r_I        = x r_I
    (ii)  r_I^* o x      = r_I^* x
    (iii) r_J^* o x o r_I = r_J^* x r_I
    (iv)  r_I o x        = r_I x + sum_t lam^{-t} w_{(I^op)_t} r_{I_{|I|-t}} p x l_{(I^op)_t}
    (v)   x o r_I^*      = x r_I^* + sum_t lam^{-t} w_{(I^op)_t} (l_{(I^op)_t})^* x p (r_{I_{|I|-t}})^*

The lam^{-t} factors come from the (lam mu)^{-k} normalisation of the
iteration; they disappear for fixed points.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import algebra as alg
from .algebra import AlgebraElement, EigenTaggedElement, choi_effros_symbolic, multiply
from .dynamics import (UcpMap, choi_effros_numeric, eigen_residual, fourier_component)
from .errors import BasisError, FactorizationError, ValidationError
from .operators import (TruncatedOperator, add, adjoint_op, coefficient, compose,
                        make_identity, make_peripheral_unitary, make_second_quantization,
                        make_vacuum_projection, realize, scale, trust_distance, vacuum_state)
from .scalars import UnitEigenvalue
from .words import TruncationParams, Weights, format_word, reverse, weight_of_word, words_up_to

KINDS = ("right_mul", "star_left_mul", "sandwich", "left_mul", "star_right_mul")


# --------------------------------------------------------------------------
# closed-form products
# --------------------------------------------------------------------------

class _Symbolic:
    def __init__(self, n):
        self.n = n

    def r(self, I):
        return alg.r_word(self.n, I)

    def rs(self, I):
        return alg.rs_word(self.n, I)

    def l(self, I):
        return alg.l_word(self.n, I)

    def ls(self, I):
        return alg.ls_word(self.n, I)

    def p(self):
        return alg.vacuum_projection(self.n)

    @staticmethod
    def mul(*xs):
        out = xs[0]
        for y in xs[1:]:
            out = multiply(out, y)
        return out

    @staticmethod
    def add(x, y):
        return x + y

    @staticmethod
    def scale(c, x):
        return x.scale(c)


@lru_cache(maxsize=4096)
def _generator_op(p: TruncationParams, kind: str, I: tuple) -> TruncatedOperator:
    sym = _Symbolic(p.n)
    if kind == "p":
        return make_vacuum_projection(p)
    return realize(p, getattr(sym, kind)(I))


class _Numeric:
    def __init__(self, p: TruncationParams):
        self.params = p

    def r(self, I):
        return _generator_op(self.params, "r", tuple(I))

    def rs(self, I):
        return _generator_op(self.params, "rs", tuple(I))

    def l(self, I):
        return _generator_op(self.params, "l", tuple(I))

    def ls(self, I):
        return _generator_op(self.params, "ls", tuple(I))

    def p(self):
        return _generator_op(self.params, "p", ())

    @staticmethod
    def mul(*xs):
        out = xs[0]
        for y in xs[1:]:
            out = compose(out, y)
        return out

    @staticmethod
    def add(x, y):
        return add(x, y)

    @staticmethod
    def scale(c, x):
        return scale(complex(c), x)


def _backend(x):
    if isinstance(x, AlgebraElement):
        return _Symbolic(x.n)
    if isinstance(x, TruncatedOperator):
        return _Numeric(x.params)
    raise TypeError(f"unsupported operand {type(x).__name__}")


def closed_form_product(kind: str, x, I, w: Weights, lam=1, J=None):
    """Right-hand side of the closed-form product identity ``kind``.

    ``x`` is an :class:`AlgebraElement` or a :class:`TruncatedOperator` lying
    in E_lam; the result has the same representation.  ``J`` is the left word
    of the sandwich r_J^* o x o r_I.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown product kind {kind!r}; expected one of {KINDS}")
    I = tuple(I)
    if not I:
        raise ValidationError(f"{kind} needs a nonempty word")
    if kind == "sandwich":
        if J is None or not tuple(J):
            raise ValidationError("sandwich needs a nonempty left word J")
        J = tuple(J)
    lam = UnitEigenvalue.coerce(lam)
    be = _backend(x)
    if kind == "right_mul":
        return be.mul(x, be.r(I))
    if kind == "star_left_mul":
        return be.mul(be.rs(I), x)
    if kind == "sandwich":
        return be.mul(be.rs(J), x, be.r(I))
    rev = reverse(I)
    if kind == "left_mul":
        out = be.mul(be.r(I), x)
    else:
        out = be.mul(x, be.rs(I))
    for t in range(1, len(I) + 1):
        W, head = rev[:t], I[:len(I) - t]
        c = (lam ** (-t)) * weight_of_word(w, W)
        if kind == "left_mul":
            term = be.mul(be.r(head), be.p(), x, be.l(W))
        else:
            term = be.mul(be.ls(W), x, be.p(), be.rs(head))
        out = be.add(out, be.scale(c, term))
    return out


def circ_operands(kind: str, x, I, J=None):
    """The two (or three) factors whose SOT product ``kind`` evaluates."""
    be = _backend(x)
    I = tuple(I)
    if kind == "right_mul":
        return [x, be.r(I)]
    if kind == "star_left_mul":
        return [be.rs(I), x]
    if kind == "sandwich":
        return [be.rs(tuple(J)), x, be.r(I)]
    if kind == "left_mul":
        return [be.r(I), x]
    if kind == "star_right_mul":
        return [x, be.rs(I)]
    raise ValidationError(f"unknown product kind {kind!r}")


def iterated_product(kind: str, x, I, w: Weights, lam=1, J=None, m: UcpMap | None = None,
                     tol: float = 1e-10, with_steps: bool = False, check: bool = True):
    """The same product computed by stabilizing (lam mu)^{-k} P^k of the plain product.

    Symbolic when ``x`` is symbolic, numeric otherwise (``m`` required).
    The sandwich is evaluated as (r_J^* o x) o r_I.  ``check=False`` trusts
    the caller that ``x`` lies in E_lam.  Returns the result and,
    with ``with_steps``, the largest number of steps any stage needed.
    """
    lam = UnitEigenvalue.coerce(lam)
    ops = circ_operands(kind, x, I, J)
    one = UnitEigenvalue.from_turns(0)
    tags = [lam if o is x else one for o in ops]
    steps = 0
    acc, acc_lam = ops[0], tags[0]
    for op, tag in zip(ops[1:], tags[1:]):
        if isinstance(x, AlgebraElement):
            acc, k = choi_effros_symbolic(EigenTaggedElement(acc, acc_lam, w),
                                          EigenTaggedElement(op, tag, w), with_steps=True)
        else:
            if m is None:
                raise ValidationError("numeric iteration needs a UcpMap")
            acc, k = choi_effros_numeric(m, (acc, acc_lam), (op, tag), tol=tol, with_steps=True,
                                         check=check)
        acc_lam = acc_lam * tag
        steps = max(steps, k)
    return (acc, steps) if with_steps else acc


# --------------------------------------------------------------------------
# test family
# --------------------------------------------------------------------------

@lru_cache(maxsize=None)
def fixed_point(n: int, w: Weights, I: tuple, J: tuple) -> AlgebraElement:
    """a_IJ = r_I o r_J^*, a fixed point of P_w."""
    rI = alg.r_word(n, I)
    if not J:
        return rI
    return closed_form_product("star_right_mul", rI, J, w)


def family_element(n: int, w: Weights, lam, I, J) -> AlgebraElement:
    """x_lam a_IJ (symbolic); ``lam`` must be a root of unity."""
    lam = UnitEigenvalue.coerce(lam)
    return multiply(alg.phase_unitary(n, lam), fixed_point(n, w, tuple(I), tuple(J)))


def lambda_grid(q: int):
    return [UnitEigenvalue.root(q, k) for k in range(q)]


@lru_cache(maxsize=None)
def _fixed_circ(n: int, w: Weights, a: tuple, b: tuple) -> AlgebraElement:
    """a_IJ o a_KL for two family fixed points (symbolic, exact stabilization)."""
    x = EigenTaggedElement(fixed_point(n, w, *a), 1, w)
    y = EigenTaggedElement(fixed_point(n, w, *b), 1, w)
    return choi_effros_symbolic(x, y)


def family_circ(n: int, w: Weights, lam, a: tuple, mu, b: tuple) -> AlgebraElement:
    """(x_lam a) o (x_mu b) = mu^{-s(a)} x_{lam mu} (a o b), s(a) = |I| - |J|."""
    lam, mu = UnitEigenvalue.coerce(lam), UnitEigenvalue.coerce(mu)
    s = len(a[0]) - len(a[1])
    core = _fixed_circ(n, w, tuple(map(tuple, a)), tuple(map(tuple, b)))
    return multiply(alg.phase_unitary(n, lam * mu), core).scale(mu ** (-s))


# --------------------------------------------------------------------------
# identity checks
# --------------------------------------------------------------------------

def phi_identity_check(m: UcpMap, x: TruncatedOperator, lam, J, w: Weights | None = None,
                       tol: float = 1e-10, check: bool = True) -> dict:
    """Vacuum-state identities for x in E_lam and a word J.

        phi(x o r_J^*) = lam^{-|J|} w_J <x Omega, r_J Omega> = lam^{-|J|} w_J phi(r_J^* o x)
        phi(r_J o x)   = lam^{-|J|} w_J <x r_J Omega, Omega>

    Products go through the SOT iteration; the middle terms are read off
    the matrix of ``x``.
    """
    w = m.weights if w is None else w
    lam = UnitEigenvalue.coerce(lam)
    J = tuple(J)
    if len(J) > x.trust:
        raise ValidationError(f"|J| = {len(J)} exceeds trust {x.trust}")
    num = _Numeric(x.params)
    one = UnitEigenvalue.from_turns(0)
    factor = complex(lam ** (-len(J))) * float(weight_of_word(w, J))
    rJ, rJs = num.r(J), num.rs(J)
    lhs1 = vacuum_state(choi_effros_numeric(m, (x, lam), (rJs, one), tol=tol, check=check))
    mid1 = factor * complex(coefficient(x, (), reverse(J)))
    rhs1 = factor * vacuum_state(choi_effros_numeric(m, (rJs, one), (x, lam), tol=tol, check=check))
    lhs2 = vacuum_state(choi_effros_numeric(m, (rJ, one), (x, lam), tol=tol, check=check))
    rhs2 = factor * complex(coefficient(x, reverse(J), ()))
    err = max(abs(lhs1 - mid1), abs(mid1 - rhs1), abs(lhs2 - rhs2))
    return {"J": list(J), "lhs_star": lhs1, "middle_star": mid1, "rhs_star": rhs1,
            "lhs": lhs2, "rhs": rhs2, "error": err}


def delta_compression_check(x: TruncatedOperator, I, J) -> dict:
    """Compare r_I^* x r_J with delta_IJ x and report <x r_J Omega, Omega>."""
    I, J = tuple(I), tuple(J)
    if len(I) != len(J):
        raise ValidationError(f"words of different lengths {len(I)} and {len(J)}")
    num = _Numeric(x.params)
    lhs = compose(compose(num.rs(I), x), num.r(J))
    target = x if I == J else scale(0, x)
    vac = complex(coefficient(x, reverse(J), ())) if J else 0j
    res = trust_distance(lhs, target)
    return {"I": list(I), "J": list(J), "delta_residual": res, "vacuum_value": vac,
            "trust": min(lhs.trust, target.trust)}


@dataclass(frozen=True)
class Factorization:
    a: TruncatedOperator
    eigen_residual: float
    fixed_point_residual: float


def eigenspace_factorize(x: TruncatedOperator, lam, m: UcpMap, tol: float = 1e-10) -> Factorization:
    """Split x in E_lam as x_lam a with a a fixed point."""
    lam = UnitEigenvalue.coerce(lam)
    ev = eigen_residual(m, x, lam)
    if ev > tol:
        raise ValidationError(f"operand is not in the {lam} eigenspace (residual {ev:.3g})")
    xl = make_peripheral_unitary(x.params, lam)
    a = compose(adjoint_op(xl), x)
    fp = trust_distance(m.apply(a), a)
    if fp > tol:
        raise FactorizationError(f"x_lam^* x is not a fixed point (residual {fp:.3g})")
    return Factorization(a, ev, fp)


def eigen_product_check(m: UcpMap, a: TruncatedOperator, b: TruncatedOperator, lam, mu,
                        tol: float = 1e-10) -> dict:
    """(x_lam a) o (b x_mu) against x_lam (a o b) x_mu, via independent iterations."""
    lam, mu = UnitEigenvalue.coerce(lam), UnitEigenvalue.coerce(mu)
    one = UnitEigenvalue.from_turns(0)
    for name, op in (("a", a), ("b", b)):
        r = eigen_residual(m, op, one)
        if r > tol:
            raise ValidationError(f"{name} is not a fixed point (residual {r:.3g})")
    xl = make_peripheral_unitary(a.params, lam)
    xm = make_peripheral_unitary(a.params, mu)
    lhs, k1 = choi_effros_numeric(m, (compose(xl, a), lam), (compose(b, xm), mu), tol=tol,
                                  with_steps=True)
    ab, k2 = choi_effros_numeric(m, (a, one), (b, one), tol=tol, with_steps=True)
    rhs = compose(compose(xl, ab), xm)
    return {"residual": trust_distance(lhs, rhs), "trust": min(lhs.trust, rhs.trust),
            "steps": [k1, k2]}


def intertwine_check(U, w: Weights, x: TruncatedOperator, tol: float = 1e-12,
                     m: UcpMap | None = None, m_rot: UcpMap | None = None) -> dict:
    """Gamma_U P(x) Gamma_U^* against P'(Gamma_U x Gamma_U^*).

    P' is built from the rotated creation operators l_{U e_i}.  Prebuilt maps
    can be passed to avoid rebuilding them for every operand.
    """
    p = x.params
    G = make_second_quantization(p, U)
    Gs = adjoint_op(G)
    m = UcpMap(w, p) if m is None else m
    m_rot = UcpMap(w, p, basis=U) if m_rot is None else m_rot
    lhs = compose(compose(G, m.apply(x)), Gs)
    rhs = m_rot.apply(compose(compose(G, x), Gs))
    res = trust_distance(lhs, rhs)
    return {"residual": res, "trust": min(lhs.trust, rhs.trust), "ok": res < tol}


def conjugate_by(U, x: TruncatedOperator) -> TruncatedOperator:
    G = make_second_quantization(x.params, U)
    return compose(compose(G, x), adjoint_op(G))


# --------------------------------------------------------------------------
# peripheral span and the commutant probe
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpanEntry:
    """One basis element x_lam a; ``words`` is (I, J) for family elements."""

    lam: UnitEigenvalue
    element: AlgebraElement
    words: tuple | None = None
    label: str = ""


class PeripheralSpanBasis:
    """Ordered family of peripheral elements used as unknowns of the probe."""

    def __init__(self, n: int, weights: Weights, entries, lambda_order: int | None = None,
                 word_bound: int | None = None):
        self.n = n
        self.weights = weights
        self.entries = list(entries)
        self.lambda_order = lambda_order
        self.word_bound = word_bound
        self.dropped = []
        if not self.entries:
            raise BasisError("empty basis")

    @classmethod
    def grid(cls, n: int, weights: Weights, q: int, k: int) -> "PeripheralSpanBasis":
        """x_lam a_IJ for lam a q-th root of unity and |I|, |J| <= k.

        Ordered by lam (angle ascending), then I, then J; the identity
        (lam = 1, I = J = ()) comes first.
        """
        words = words_up_to(n, k)
        entries = []
        for lam in lambda_grid(q):
            for I in words:
                for J in words:
                    entries.append(SpanEntry(lam, family_element(n, weights, lam, I, J), (I, J),
                                             f"x[{lam.turns}] a{format_word(I)}{format_word(J)}"))
        return cls(n, weights, entries, q, k)

    @classmethod
    def from_elements(cls, n: int, weights: Weights, elements, labels=None) -> "PeripheralSpanBasis":
        """Wrap symbolic eigen-elements; the eigenvalue is detected exactly."""
        entries = []
        for k, x in enumerate(elements):
            lam = alg.eigen_check_symbolic(weights, x)
            if lam is None:
                raise BasisError(f"basis element {k} is not a peripheral eigen-element")
            entries.append(SpanEntry(lam, x, None, labels[k] if labels else f"b{k}"))
        return cls(n, weights, entries)

    def __len__(self):
        return len(self.entries)

    def identity_index(self):
        for k, e in enumerate(self.entries):
            if e.element.equals(alg.one(self.n)):
                return k
        return None

    def realized(self, p: TruncationParams):
        return [realize(p, e.element) for e in self.entries]

    def gram_min_singular(self, p: TruncationParams) -> float:
        """Smallest singular value of the matrix whose columns are the realized elements."""
        cols = _columns([op.matrix for op in self.realized(p)], p.dim)
        g = (cols.conj().T @ cols).toarray()
        ev = np.linalg.eigvalsh(g)
        return float(math.sqrt(max(ev[0], 0.0)))

    def independent(self, p: TruncationParams, tol: float = 1e-8) -> "PeripheralSpanBasis":
        """Greedy subset, in basis order, of linearly independent elements.

        An element is kept when its squared distance to the span of the kept
        ones, relative to its squared norm, exceeds ``tol`` (incremental
        Cholesky on the Gram matrix of the realized elements).
        """
        cols = _columns([op.matrix for op in self.realized(p)], p.dim)
        G = (cols.conj().T @ cols).toarray()
        keep = []
        L = np.zeros((0, 0), dtype=np.complex128)
        for j in range(len(self)):
            gjj = G[j, j].real
            if gjj <= 0:
                continue
            if keep:
                y = sla.solve_triangular(L, G[keep, j], lower=True)
                r = gjj - float(np.vdot(y, y).real)
            else:
                y = np.zeros(0, dtype=np.complex128)
                r = gjj
            if r <= tol * gjj:
                continue
            k = len(keep)
            L2 = np.zeros((k + 1, k + 1), dtype=np.complex128)
            L2[:k, :k] = L
            L2[k, :k] = y.conj()
            L2[k, k] = math.sqrt(r)
            L = L2
            keep.append(j)
        out = PeripheralSpanBasis(self.n, self.weights, [self.entries[j] for j in keep],
                                  self.lambda_order, self.word_bound)
        out.dropped = [self.entries[j].label for j in range(len(self)) if j not in set(keep)]
        return out

    def circ(self, b: SpanEntry, g: SpanEntry) -> AlgebraElement:
        """b o g, using cached fixed-point products when both are family elements."""
        if b.words is not None and g.words is not None:
            return family_circ(self.n, self.weights, b.lam, b.words, g.lam, g.words)
        return choi_effros_symbolic(EigenTaggedElement(b.element, b.lam, self.weights),
                                    EigenTaggedElement(g.element, g.lam, self.weights))


def _columns(mats, dim):
    """Sparse matrix whose k-th column is the row-major flattening of ``mats[k]``."""
    rows, cols, vals = [], [], []
    for k, mtx in enumerate(mats):
        c = mtx.tocoo()
        rows.append(c.row.astype(np.int64) * dim + c.col)
        cols.append(np.full(c.nnz, k, dtype=np.int64))
        vals.append(c.data)
    if not rows:
        return sp.csc_array((dim * dim, 0), dtype=np.complex128)
    return sp.csc_array((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                        shape=(dim * dim, len(mats)), dtype=np.complex128)


def _tsqr_r(blocks, ncols: int, chunk: int = 4096) -> np.ndarray:
    """R factor of the vertical stack of sparse ``blocks`` (nonzero rows only)."""
    R = np.zeros((0, ncols), dtype=np.complex128)
    for blk in blocks:
        blk = sp.csr_array(blk)
        nz = np.flatnonzero(np.diff(blk.indptr))
        for s in range(0, len(nz), chunk):
            dense = blk[nz[s:s + chunk]].toarray()
            R = sla.qr(np.vstack([R, dense]), mode="r")[0][:ncols]
    return R


@dataclass
class CommutantReport:
    nullspace_dimension: int
    singular_values: list
    witness: list
    residuals: dict
    gap_ratio: float | None
    identity_distance: float | None
    threshold: float
    basis_size: int
    gram_min_singular: float
    mode: str = "circ"
    against: str = "generators"
    degenerate_threshold: bool = False
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "against": self.against,
            "basis_size": self.basis_size,
            "config": self.config,
            "degenerate_threshold": self.degenerate_threshold,
            "gap_ratio": self.gap_ratio,
            "gram_min_singular": self.gram_min_singular,
            "identity_distance": self.identity_distance,
            "mode": self.mode,
            "nullspace_dimension": self.nullspace_dimension,
            "residuals": self.residuals,
            "singular_values": self.singular_values,
            "threshold": self.threshold,
            "witness": [[z.real, z.imag] for z in self.witness],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def write_csv(self, directory) -> list:
        """singular_values.csv and residuals.csv; returns the written paths."""
        import csv
        from pathlib import Path
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        out = []
        with open(d / "singular_values.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["index", "sigma"])
            for k, s in enumerate(self.singular_values):
                wr.writerow([k, repr(s)])
        out.append(d / "singular_values.csv")
        with open(d / "residuals.csv", "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["constraint", "max_error"])
            for k in sorted(self.residuals):
                wr.writerow([k, repr(self.residuals[k])])
        out.append(d / "residuals.csv")
        return out


def _constraint_ops(basis: PeripheralSpanBasis, p: TruncationParams, g_sym: AlgebraElement,
                    mode: str):
    """Realized [b o g - g o b] (or plain commutators) for every basis element b."""
    w = basis.weights
    out = []
    for e in basis.entries:
        if mode == "plain":
            d = multiply(e.element, g_sym) - multiply(g_sym, e.element)
        else:
            d = _circ_with_generator(e, g_sym, w)
        out.append(realize(p, d).matrix)
    return out


def _circ_with_generator(e: SpanEntry, g: AlgebraElement, w: Weights) -> AlgebraElement:
    """b o g - g o b for g = r_i or r_i^*, through the closed forms."""
    (shape, _), = g.items()
    lc, rc, eps, ra, la, tag = shape
    x, lam = e.element, e.lam
    if rc:
        return (closed_form_product("right_mul", x, rc, w, lam)
                - closed_form_product("left_mul", x, rc, w, lam))
    return (closed_form_product("star_right_mul", x, tuple(reversed(ra)), w, lam)
            - closed_form_product("star_left_mul", x, tuple(reversed(ra)), w, lam))


def _nullspace_report(sv, V, threshold_rel, svd_tol, basis, residual_fn, against, mode,
                      gram_min, config):
    sv = np.asarray(sv, dtype=float)
    nb = len(basis)
    smax = float(sv[0]) if len(sv) else 0.0
    degenerate = svd_tol >= 1
    if smax == 0.0:
        null = nb
    elif degenerate:
        null = 0
    else:
        null = int(np.sum(sv < threshold_rel * smax))
    witness, ident, residuals = [], None, {}
    if null >= 1 and V is not None:
        v = V[:, -1]
        v = v / v[np.argmax(np.abs(v))]
        witness = [complex(z) for z in v]
        k = basis.identity_index()
        if k is not None:
            e = np.zeros(nb, dtype=complex)
            e[k] = 1
            ident = float(np.max(np.abs(v - e)))
        residuals = residual_fn(v)
    gap = None
    if 1 <= null < nb and sv[nb - null - 1] > 0:
        gap = float(sv[nb - null] / sv[nb - null - 1])
    return CommutantReport(null, [float(s) for s in sv], witness, residuals, gap, ident,
                           threshold_rel * smax, nb, gram_min, mode, against, degenerate, config)


def commutant_probe(basis: PeripheralSpanBasis, m: UcpMap, tol: float = 1e-8,
                    mode: str = "circ", gram_tol: float = 1e-10) -> CommutantReport:
    """Numerical relative commutant of the fixed points inside the span of ``basis``.

    Unknowns are coefficient vectors c; for every generator g in
    {r_1..r_n, r_1^*..r_n^*} the constraint is sum_b c_b (b o g - g o b) = 0,
    evaluated exactly through the closed forms and realized at depth d.  The
    stacked system is reduced by a tall-skinny QR and its singular values are
    those of the small R factor.  ``tol`` is relative to the largest
    singular value.
    """
    if mode not in ("circ", "plain"):
        raise ValidationError(f"mode must be 'circ' or 'plain', got {mode!r}")
    p = m.params
    gram = basis.gram_min_singular(p)
    if gram < gram_tol:
        raise BasisError(f"basis is numerically dependent (min singular value {gram:.3g})")
    gens = {}
    for i in range(1, basis.n + 1):
        gens[f"r{i}"] = alg.r_word(basis.n, (i,))
        gens[f"r{i}*"] = alg.rs_word(basis.n, (i,))
    blocks = {name: _columns(_constraint_ops(basis, p, g, mode), p.dim) for name, g in gens.items()}
    nb = len(basis)
    R = _tsqr_r(blocks.values(), nb)
    if R.shape[0] < nb:
        R = np.vstack([R, np.zeros((nb - R.shape[0], nb))])
    _, sv, Vh = np.linalg.svd(R)
    V = Vh.conj().T

    def residual_fn(v):
        return {name: float(np.max(np.abs(A @ v), initial=0.0)) for name, A in blocks.items()}

    return _nullspace_report(sv, V, tol, tol, basis, residual_fn, "generators", mode, gram,
                             {"n": p.n, "depth": p.depth, "lambda_order": basis.lambda_order,
                              "word_bound": basis.word_bound})


def center_probe(basis: PeripheralSpanBasis, m: UcpMap, tol: float = 1e-8, refine: int = 4,
                 gram_tol: float = 1e-10) -> CommutantReport:
    """The probe with constraints against every basis element instead of the generators.

    The constraint count grows quadratically, so singular values come from
    the accumulated normal matrix; the smallest ``refine`` of them are
    recomputed as ||A v|| from the full system to keep their accuracy.
    """
    p = m.params
    gram = basis.gram_min_singular(p)
    if gram < gram_tol:
        raise BasisError(f"basis is numerically dependent (min singular value {gram:.3g})")
    nb = len(basis)
    ents = basis.entries
    cache = {}

    def circ_op(bi, gi):
        key = (bi, gi)
        if key not in cache:
            cache[key] = realize(p, basis.circ(ents[bi], ents[gi])).matrix
        return cache[key]

    G = np.zeros((nb, nb), dtype=np.complex128)
    blocks = []
    for gi in range(nb):
        mats = [circ_op(bi, gi) - circ_op(gi, bi) for bi in range(nb)]
        A = _columns(mats, p.dim)
        blocks.append(A)
        G += (A.conj().T @ A).toarray()
    ev, V = np.linalg.eigh(G)
    order = np.argsort(ev)[::-1]
    ev, V = ev[order], V[:, order]
    sv = np.sqrt(np.clip(ev, 0, None))
    for k in range(max(nb - refine, 0), nb):
        v = V[:, k]
        sv[k] = math.sqrt(sum(float(np.linalg.norm(A @ v)) ** 2 for A in blocks))
    # refinement keeps the order unless two tiny values swap; re-sort to be safe
    order = np.argsort(sv)[::-1]
    sv, V = sv[order], V[:, order]

    def residual_fn(v):
        return {ents[gi].label: float(np.max(np.abs(A @ v), initial=0.0))
                for gi, A in enumerate(blocks)}

    return _nullspace_report(sv, V, tol, tol, basis, residual_fn, "basis", "circ", gram,
                             {"n": p.n, "depth": p.depth, "lambda_order": basis.lambda_order,
                              "word_bound": basis.word_bound})


def matrix_coefficient_check(x: TruncatedOperator) -> float:
    """max |<x e_I, e_J> - delta_IJ <x Omega, Omega>| over the trust block."""
    blk = x.block()
    return float(np.max(np.abs(blk - blk[0, 0] * np.eye(blk.shape[0]))))


def witness_operator(basis: PeripheralSpanBasis, report: CommutantReport,
                     p: TruncationParams) -> TruncatedOperator:
    ops = basis.realized(p)
    out = scale(0, make_identity(p))
    for c, op in zip(report.witness, ops):
        if c != 0:
            out = add(out, scale(c, op))
    return out


# --------------------------------------------------------------------------
# conditional expectation and the bimodule
# --------------------------------------------------------------------------

class PeripheralElement:
    """A finite sum of eigen-components, keyed by eigenvalue angle (turns)."""

    def __init__(self, params: TruncationParams, components: dict):
        self.params = params
        self.components = {}
        for t, op in components.items():
            t = Fraction(t) % 1
            if t in self.components:
                op = add(self.components[t], op)
            self.components[t] = op

    @classmethod
    def from_symbolic(cls, p: TruncationParams, pieces) -> "PeripheralElement":
        """``pieces``: iterable of (coeff, lam, AlgebraElement in E_lam)."""
        comps = {}
        for c, lam, x in pieces:
            lam = UnitEigenvalue.coerce(lam)
            op = scale(c, realize(p, x))
            comps[lam.turns] = add(comps[lam.turns], op) if lam.turns in comps else op
        return cls(p, comps)

    def total(self) -> TruncatedOperator:
        out = None
        for t in sorted(self.components):
            op = self.components[t]
            out = op if out is None else add(out, op)
        return out

    def adjoint(self) -> "PeripheralElement":
        return PeripheralElement(self.params, {-t: adjoint_op(op) for t, op in self.components.items()})

    def circ(self, other: "PeripheralElement", m: UcpMap, tol: float = 1e-10) -> "PeripheralElement":
        comps = {}
        for s in sorted(self.components):
            for t in sorted(other.components):
                z = choi_effros_numeric(m, (self.components[s], UnitEigenvalue.from_turns(s)),
                                        (other.components[t], UnitEigenvalue.from_turns(t)), tol=tol)
                key = (s + t) % 1
                comps[key] = add(comps[key], z) if key in comps else z
        return PeripheralElement(self.params, comps)


def conditional_expectation(m: UcpMap, x, q: int, N: int | None = None) -> TruncatedOperator:
    """Projection onto the fixed points: the lam = 1 Fourier component over N steps.

    ``x`` is a sum of eigen-elements with eigenvalues among the q-th roots of
    unity (a :class:`PeripheralElement` or its total operator).
    """
    N = q if N is None else N
    if N % q:
        raise ValidationError(f"averaging length {N} is not a multiple of {q}")
    if isinstance(x, PeripheralElement):
        x = x.total()
    return fourier_component(m, x, UnitEigenvalue.from_turns(0), N)


def bimodule_inner_product(m: UcpMap, x: PeripheralElement, y: PeripheralElement, q: int,
                           N: int | None = None, tol: float = 1e-10) -> TruncatedOperator:
    """<x, y> = E(x o y^*)."""
    return conditional_expectation(m, x.circ(y.adjoint(), m, tol), q, N)
