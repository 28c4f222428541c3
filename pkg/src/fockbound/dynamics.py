"""The ucp map P(x) = sum_i w_i l_i^* x l_i on truncated operators.

Entry-wise, P(x)_{J,I} = sum_i w_i x_{iJ, iI}, so one application needs the
entries of ``x`` one level deeper and the trust depth drops by exactly one.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .errors import ConvergenceError, TrustError, ValidationError
from .operators import (TruncatedOperator, adjoint_op, compose, make_creation,
                        make_identity, scale, trust_distance, add)
from .scalars import UnitEigenvalue
from .words import TruncationParams, Weights


class UcpMap:
    """P_w on the depth-``d`` truncation.

    With ``basis`` (an n x n unitary) the map is built from the creation
    operators of the rotated vectors ``basis[:, i]`` instead of ``e_i``.
    """

    def __init__(self, weights: Weights, params: TruncationParams, basis=None):
        if len(weights) != params.n:
            raise ValidationError(f"{len(weights)} weights for alphabet of size {params.n}")
        self.weights = weights
        self.params = params
        self._omega = np.asarray(weights.omega, dtype=np.float64)
        self.basis = None if basis is None else np.asarray(basis, dtype=np.complex128)
        if self.basis is not None:
            self._gens = [make_creation(params, self.basis[:, i]) for i in range(params.n)]
            self._gens_adj = [adjoint_op(g) for g in self._gens]

    @property
    def n(self):
        return self.params.n

    def generators(self):
        """Cached creation operators l_i (rotated when a basis is set)."""
        if self.basis is None:
            from .operators import make_left_creation
            return [make_left_creation(self.params, i) for i in range(1, self.n + 1)]
        return list(self._gens)

    def _apply_matrix(self, m):
        p = self.params
        coo = m.tocoo()
        fr, fc = p.first_letter[coo.row], p.first_letter[coo.col]
        keep = (fr == fc) & (fr > 0)
        rows = p.tail_index[coo.row[keep]]
        cols = p.tail_index[coo.col[keep]]
        vals = coo.data[keep] * self._omega[fr[keep] - 1]
        return sp.csr_array((vals, (rows, cols)), shape=m.shape, dtype=np.complex128)

    def apply(self, x: TruncatedOperator) -> TruncatedOperator:
        if x.params != self.params:
            raise ValidationError("operator and map use different truncations")
        if x.trust < 1:
            raise TrustError(f"P needs trust >= 1, operand has {x.trust}")
        if self.basis is None:
            m = self._apply_matrix(x.matrix)
        else:
            m = sum(w * (la.matrix @ x.matrix @ l.matrix)
                    for w, l, la in zip(self._omega, self._gens, self._gens_adj))
            m = sp.csr_array(m, dtype=np.complex128)
        return TruncatedOperator(self.params, m, x.trust - 1, x.raise_, x.lower)

    __call__ = apply


def apply_ucp(m: UcpMap, x: TruncatedOperator) -> TruncatedOperator:
    return m.apply(x)


def iterate_ucp(m: UcpMap, x: TruncatedOperator, k: int) -> TruncatedOperator:
    if x.trust < k:
        raise TrustError(f"{k} iterations need trust >= {k}, operand has {x.trust}")
    for _ in range(k):
        x = m.apply(x)
    return x


def _orbit_average(m: UcpMap, x: TruncatedOperator, N: int, lam) -> TruncatedOperator:
    if N < 1:
        raise ValueError("N must be positive")
    if x.trust < N:
        raise TrustError(f"averaging over {N} steps needs trust >= {N}, operand has {x.trust}")
    inv = 1 / complex(lam)
    acc = x
    z = x
    for k in range(1, N):
        z = scale(inv, m.apply(z))
        acc = add(acc, z)
    return scale(1 / N, acc)


def cesaro_average(m: UcpMap, x: TruncatedOperator, N: int) -> TruncatedOperator:
    """(1/N) sum_{k<N} P^k(x)."""
    return _orbit_average(m, x, N, 1.0)


def fourier_component(m: UcpMap, x: TruncatedOperator, lam, N: int) -> TruncatedOperator:
    """(1/N) sum_{k<N} lam^{-k} P^k(x).

    Exact projection onto the lam-component when ``x`` is a sum of
    eigenvectors whose eigenvalues are N-th roots of unity.
    """
    return _orbit_average(m, x, N, UnitEigenvalue.coerce(lam).value)


def detect_peripheral_eigenvalue(m: UcpMap, x: TruncatedOperator, tol: float = 1e-10):
    """Estimate lam from the first sizeable trusted entry, then verify globally."""
    px = m.apply(x)
    size = x.params.dim_at(px.trust)
    blk = x.matrix[:size, :size].tocoo()
    big = np.abs(blk.data) > tol
    if not big.any():
        raise ValidationError("operator vanishes on the trusted block")
    order = np.lexsort((blk.col[big], blk.row[big]))
    k = order[0]
    r, c = int(blk.row[big][k]), int(blk.col[big][k])
    lam = complex(px.matrix[r, c]) / complex(x.matrix[r, c])
    if abs(abs(lam) - 1) >= tol:
        return None
    if trust_distance(px, scale(lam, x)) >= tol:
        return None
    return UnitEigenvalue.coerce(lam)


def eigen_residual(m: UcpMap, x: TruncatedOperator, lam) -> float:
    return trust_distance(m.apply(x), scale(complex(UnitEigenvalue.coerce(lam).value), x))


def choi_effros_numeric(m: UcpMap, xs, ys, tol: float = 1e-10, max_iter: int | None = None,
                        eigen_tol: float = 1e-9, with_steps: bool = False, check: bool = True):
    """x o y as the stabilized value of (lam mu)^{-k} P^k(x y).

    ``xs`` and ``ys`` are ``(operator, eigenvalue)`` pairs.  Returns the first
    iterate that agrees with its successor on the trust block; its trust is
    lowered to that of the successor.  ``check=False`` skips the eigenspace
    test for operands the caller has already validated.
    """
    (x, lam), (y, mu) = xs, ys
    lam, mu = UnitEigenvalue.coerce(lam), UnitEigenvalue.coerce(mu)
    if check:
        for op, ev, name in ((x, lam, "left"), (y, mu, "right")):
            if eigen_residual(m, op, ev) > eigen_tol:
                raise ValidationError(f"{name} factor is not in the {ev} eigenspace")
    z = compose(x, y)
    if z.trust < 2:
        raise TrustError(f"product carries trust {z.trust}; need >= 2")
    limit = min(z.trust - 1, 32) if max_iter is None else max_iter
    inv = 1 / (lam * mu).value
    for k in range(limit):
        if z.trust < 1:
            break
        nxt = m.apply(z)
        if inv != 1:
            nxt = scale(inv, nxt)
        if trust_distance(nxt, z) < tol:
            out = z.with_trust(nxt.trust)
            return (out, k) if with_steps else out
        z = nxt
    raise ConvergenceError(f"no stabilization within {limit} steps (trust left {z.trust})")


def unital_residual(m: UcpMap) -> float:
    one = make_identity(m.params)
    return trust_distance(m.apply(one), one)
