"""Operators on the depth-truncated full Fock space.

A :class:`TruncatedOperator` stores the finite section of an operator on the
span of ``e_I`` with ``|I| <= d`` together with

* ``trust``: every entry ``<x e_I, e_J>`` with ``|I|, |J| <= trust`` equals
  the entry of the untruncated operator;
* ``raise_`` / ``lower``: bounds on ``|J| - |I|`` over nonzero entries.

Composition loses trust only when the intermediate index can leave the
certified block:

    trust(x y) = min(t_x, t_y) - max(0, min(raise(y), -lower(x)))

Matrices are held as scipy CSR arrays; everything the operators here build is
very sparse.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .algebra import AlgebraElement
from .errors import TrustError, ValidationError
from .scalars import UnitEigenvalue, unit
from .words import TruncationParams, Word, check_word, format_word

__all__ = [
    "TruncatedOperator", "UnitEigenvalue", "Coefficient",
    "make_identity", "make_zero", "make_left_creation", "make_right_creation",
    "make_creation", "make_vacuum_projection", "make_peripheral_unitary",
    "make_second_quantization", "realize", "realize_triplets", "compose", "add", "scale", "adjoint_op",
    "coefficient", "vacuum_state", "trust_distance", "embedded_distance", "dump_csv",
    "trusted_entries", "max_abs", "restrict",
]


def _csr(m, dim):
    if isinstance(m, sp.csr_array) and m.dtype == np.complex128 and m.shape == (dim, dim):
        return m
    return sp.csr_array(m, shape=(dim, dim), dtype=np.complex128)


def _block_max(mtx: sp.csr_array, size: int) -> float:
    """Max |entry| of the leading ``size`` x ``size`` block of a CSR matrix."""
    end = mtx.indptr[size]
    data = mtx.data[:end]
    if size < mtx.shape[1]:
        data = data[mtx.indices[:end] < size]
    return float(np.max(np.abs(data))) if data.size else 0.0


@dataclass(frozen=True, eq=False)
class TruncatedOperator:
    params: TruncationParams
    matrix: sp.csr_array
    trust: int
    raise_: int = 0
    lower: int = 0

    def __post_init__(self):
        d = self.params.depth
        if self.trust > d:
            raise ValidationError(f"trust {self.trust} exceeds depth {d}")
        object.__setattr__(self, "trust", max(int(self.trust), -1))

    @property
    def dim(self) -> int:
        return self.params.dim

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def block(self, t: int | None = None) -> np.ndarray:
        """Dense leading block of depth ``t`` (the trust block by default)."""
        t = self.trust if t is None else t
        m = self.params.dim_at(t)
        return self.matrix[:m, :m].toarray()

    def with_trust(self, t: int) -> "TruncatedOperator":
        return TruncatedOperator(self.params, self.matrix, min(t, self.trust), self.raise_, self.lower)

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(-1, other))

    def __neg__(self):
        return scale(-1, self)

    def __mul__(self, c):
        return scale(c, self)

    __rmul__ = __mul__

    @property
    def H(self):
        return adjoint_op(self)

    def __repr__(self):
        return (f"TruncatedOperator(n={self.params.n}, d={self.params.depth}, trust={self.trust}, "
                f"band=[{self.lower},{self.raise_}], nnz={self.matrix.nnz})")


class Coefficient(complex):
    """A matrix coefficient that remembers whether it lies in the trust block."""

    trusted: bool

    def __new__(cls, value, trusted=True):
        obj = super().__new__(cls, value)
        obj.trusted = trusted
        return obj


# --------------------------------------------------------------------------
# constructors
# --------------------------------------------------------------------------

def make_identity(p: TruncationParams) -> TruncatedOperator:
    return TruncatedOperator(p, _csr(sp.identity(p.dim, dtype=np.complex128), p.dim), p.depth, 0, 0)


def make_zero(p: TruncationParams) -> TruncatedOperator:
    return TruncatedOperator(p, _csr((p.dim, p.dim), p.dim), p.depth, 0, 0)


def _shift_map(p: TruncationParams, i: int, side: str):
    """Column -> row index pairs for e_I -> e_{iI} (left) or e_{Ii} (right)."""
    cols, rows = [], []
    n = p.n
    for m in range(p.depth):
        ranks = np.arange(n ** m)
        cols.append(p.offset(m) + ranks)
        if side == "left":
            rows.append(p.offset(m + 1) + (i - 1) * n ** m + ranks)
        else:
            rows.append(p.offset(m + 1) + ranks * n + (i - 1))
    return np.concatenate(rows), np.concatenate(cols)


def make_left_creation(p: TruncationParams, i: int) -> TruncatedOperator:
    """l_i : e_I -> e_{iI}."""
    check_word((i,), p.n)
    rows, cols = _shift_map(p, i, "left")
    m = sp.coo_array((np.ones(len(rows), dtype=np.complex128), (rows, cols)), shape=(p.dim, p.dim))
    return TruncatedOperator(p, _csr(m, p.dim), p.depth, 1, 1)


def make_right_creation(p: TruncationParams, i: int) -> TruncatedOperator:
    """r_i : e_I -> e_{Ii}."""
    check_word((i,), p.n)
    rows, cols = _shift_map(p, i, "right")
    m = sp.coo_array((np.ones(len(rows), dtype=np.complex128), (rows, cols)), shape=(p.dim, p.dim))
    return TruncatedOperator(p, _csr(m, p.dim), p.depth, 1, 1)


def make_creation(p: TruncationParams, xi, side: str = "left") -> TruncatedOperator:
    """Creation operator of an arbitrary vector ``xi`` in C^n."""
    xi = np.asarray(xi, dtype=np.complex128)
    if xi.shape != (p.n,):
        raise ValidationError(f"vector of length {p.n} expected")
    maker = make_left_creation if side == "left" else make_right_creation
    out = None
    for i in range(1, p.n + 1):
        if xi[i - 1] != 0:
            term = scale(xi[i - 1], maker(p, i))
            out = term if out is None else add(out, term)
    if out is None:
        return TruncatedOperator(p, _csr((p.dim, p.dim), p.dim), p.depth, 1, 1)
    return out


def make_vacuum_projection(p: TruncationParams) -> TruncatedOperator:
    m = sp.coo_array(([1.0 + 0j], ([0], [0])), shape=(p.dim, p.dim))
    return TruncatedOperator(p, _csr(m, p.dim), p.depth, 0, 0)


def make_peripheral_unitary(p: TruncationParams, lam) -> TruncatedOperator:
    """x_lam : e_I -> lam^{|I|} e_I."""
    lam = UnitEigenvalue.coerce(lam)
    powers = np.array([complex(lam ** k) for k in range(p.depth + 1)])
    return TruncatedOperator(p, _csr(sp.diags_array(powers[p.lengths]), p.dim), p.depth, 0, 0)


def make_second_quantization(p: TruncationParams, U, tol: float = 1e-12) -> TruncatedOperator:
    """Gamma_U: identity on the vacuum, U^{(x)k} on words of length k."""
    U = np.asarray(U, dtype=np.complex128)
    if U.shape != (p.n, p.n):
        raise ValidationError(f"expected a {p.n}x{p.n} matrix")
    if np.max(np.abs(U.conj().T @ U - np.eye(p.n))) > tol:
        raise ValidationError("matrix is not unitary")
    blocks = [np.ones((1, 1), dtype=np.complex128)]
    for _ in range(p.depth):
        blocks.append(np.kron(blocks[-1], U))
    return TruncatedOperator(p, _csr(sp.block_diag(blocks), p.dim), p.depth, 0, 0)


def _word_rank(word, n):
    r = 0
    for a in word:
        r = r * n + (a - 1)
    return r


def realize_triplets(p: TruncationParams, x: AlgebraElement):
    """COO triplets ``(rows, cols, vals)`` of the finite section of ``x``."""
    if x.n != p.n:
        raise ValidationError(f"alphabet mismatch: element has n={x.n}, params n={p.n}")
    n, d = p.n, p.depth
    rows, cols, vals = [], [], []
    for (lc, rc, eps, ra, la, tag), c in x.items():
        c = complex(c)
        kop = tuple(reversed(ra))
        jop = tuple(reversed(rc))
        lens = [0] if eps else range(d + 1)
        for ell in lens:
            lin = len(la) + ell + len(kop)
            lout = len(lc) + ell + len(jop)
            if lin > d or lout > d:
                break
            ys = np.arange(n ** ell)
            cin = p.offset(lin) + (_word_rank(la, n) * n ** ell + ys) * n ** len(kop) + _word_rank(kop, n)
            rout = p.offset(lout) + (_word_rank(lc, n) * n ** ell + ys) * n ** len(jop) + _word_rank(jop, n)
            v = c * complex(unit(tag * lin)) if tag else c
            rows.append(rout)
            cols.append(cin)
            vals.append(np.full(len(ys), v, dtype=np.complex128))
    if not rows:
        e = np.zeros(0, dtype=np.int64)
        return e, e, np.zeros(0, dtype=np.complex128)
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(vals)


def realize(p: TruncationParams, x: AlgebraElement) -> TruncatedOperator:
    """Exact finite section of a symbolic element.

    The monomial l_I r_J (r_K)^* (l_M)^* x_t sends e_{M Y K^op} to
    exp(2 pi i t |M Y K^op|) e_{I Y J^op}; with p_Omega in the middle only
    Y = () survives.  Every entry of the block is therefore exact.
    """
    rows, cols, vals = realize_triplets(p, x)
    m = sp.csr_array((vals, (rows, cols)), shape=(p.dim, p.dim), dtype=np.complex128)
    return TruncatedOperator(p, m, p.depth, x.max_shift(), x.min_shift())


# --------------------------------------------------------------------------
# arithmetic
# --------------------------------------------------------------------------

def _same(x: TruncatedOperator, y: TruncatedOperator):
    if x.params != y.params:
        raise ValidationError(f"parameter mismatch: {x.params} vs {y.params}")


def compose_band(x_trust, x_band, y_trust, y_band):
    """(trust, raise, lower) of a product from the factors' trust and (raise, lower)."""
    trust = min(x_trust, y_trust) - max(0, min(y_band[0], -x_band[1]))
    return trust, x_band[0] + y_band[0], x_band[1] + y_band[1]


def compose(x: TruncatedOperator, y: TruncatedOperator) -> TruncatedOperator:
    _same(x, y)
    trust, hi, lo = compose_band(x.trust, (x.raise_, x.lower), y.trust, (y.raise_, y.lower))
    return TruncatedOperator(x.params, _csr(x.matrix @ y.matrix, x.dim), trust, hi, lo)


def add(x: TruncatedOperator, y: TruncatedOperator) -> TruncatedOperator:
    _same(x, y)
    return TruncatedOperator(x.params, _csr(x.matrix + y.matrix, x.dim), min(x.trust, y.trust),
                             max(x.raise_, y.raise_), min(x.lower, y.lower))


def scale(c, x: TruncatedOperator) -> TruncatedOperator:
    return TruncatedOperator(x.params, _csr(x.matrix * complex(c), x.dim), x.trust, x.raise_, x.lower)


def adjoint_op(x: TruncatedOperator) -> TruncatedOperator:
    return TruncatedOperator(x.params, _csr(x.matrix.conj().T, x.dim), x.trust, -x.lower, -x.raise_)


def linear_combination(terms) -> TruncatedOperator:
    """``sum c_k x_k`` for an iterable of ``(c, x)``."""
    out = None
    for c, x in terms:
        t = scale(c, x)
        out = t if out is None else add(out, t)
    if out is None:
        raise ValueError("empty combination")
    return out


# --------------------------------------------------------------------------
# probes
# --------------------------------------------------------------------------

def coefficient(x: TruncatedOperator, I: Word, J: Word) -> Coefficient:
    """<x e_I, e_J>, flagged untrusted outside the trust block."""
    p = x.params
    col, row = p.index_of(I), p.index_of(J)
    trusted = len(I) <= x.trust and len(J) <= x.trust
    return Coefficient(complex(x.matrix[row, col]), trusted)


def vacuum_state(x: TruncatedOperator) -> complex:
    if x.trust < 0:
        raise TrustError("operator carries no trusted entries")
    return complex(x.matrix[0, 0])


def trust_distance(x: TruncatedOperator, y: TruncatedOperator) -> float:
    """Max entry difference over the common trust block."""
    _same(x, y)
    t = min(x.trust, y.trust)
    if t < 0:
        raise TrustError("no common trusted block")
    return _block_max(sp.csr_array(x.matrix - y.matrix), x.params.dim_at(t))


def max_abs(x: TruncatedOperator) -> float:
    """Max entry over the trust block."""
    if x.trust < 0:
        raise TrustError("operator carries no trusted entries")
    return _block_max(x.matrix, x.params.dim_at(x.trust))


def embedded_distance(small: TruncatedOperator, big: TruncatedOperator) -> float:
    """Compare trusted entries of a shallow computation with a deeper one."""
    if small.params.n != big.params.n or small.params.depth > big.params.depth:
        raise ValidationError("second operator must be a deeper truncation on the same alphabet")
    t = min(small.trust, big.trust)
    if t < 0:
        raise TrustError("no common trusted block")
    m = small.params.dim_at(t)
    diff = small.matrix[:m, :m] - big.matrix[:m, :m]
    return float(np.max(np.abs(diff.data))) if diff.nnz else 0.0


def restrict(x: TruncatedOperator, p: TruncationParams) -> TruncatedOperator:
    """The leading block of a deeper operator as an operator at the shallower depth ``p``."""
    if x.params.n != p.n or p.depth > x.params.depth:
        raise ValidationError("target must be a shallower truncation on the same alphabet")
    m = sp.csr_array(x.matrix[:p.dim, :p.dim])
    return TruncatedOperator(p, m, min(x.trust, p.depth), x.raise_, x.lower)


def trusted_entries(x: TruncatedOperator, tol: float = 0.0) -> list:
    """Nonzero trusted entries as ``(row_word, col_word, value)`` in row-major order."""
    p = x.params
    if x.trust < 0:
        return []
    m = p.dim_at(x.trust)
    blk = sp.csr_array(x.matrix[:m, :m]).tocoo()
    order = np.lexsort((blk.col, blk.row))
    out = []
    for k in order:
        v = complex(blk.data[k])
        if abs(v) > tol:
            out.append((p.word_at(int(blk.row[k])), p.word_at(int(blk.col[k])), v))
    return out


def dump_csv(x: TruncatedOperator, path, tol: float = 0.0) -> int:
    """Write nonzero trusted entries as (row_word, col_word, re, im); returns row count."""
    rows = trusted_entries(x, tol)
    with open(Path(path), "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["row_word", "col_word", "re", "im"])
        for J, I, v in rows:
            wr.writerow([format_word(J), format_word(I), repr(v.real), repr(v.imag)])
    return len(rows)
