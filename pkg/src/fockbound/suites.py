"""Verification suites, one per acceptance criterion.

Every suite returns a :class:`SuiteResult`.  The CLI ``verify`` command and
the acceptance tests call the same functions.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.sparse as sp
from scipy.stats import unitary_group

from . import algebra as alg
from .algebra import EigenTaggedElement, choi_effros_symbolic, normal_form
from .boundary import (KINDS, PeripheralElement, PeripheralSpanBasis, bimodule_inner_product,
                       center_probe, closed_form_product, commutant_probe, conditional_expectation,
                       conjugate_by, delta_compression_check, eigen_product_check,
                       eigenspace_factorize, family_element, fixed_point, intertwine_check,
                       iterated_product, lambda_grid, matrix_coefficient_check,
                       phi_identity_check, witness_operator)
from .dynamics import (UcpMap, choi_effros_numeric, detect_peripheral_eigenvalue,
                       eigen_residual)
from .errors import ConvergenceError, FockboundError, TrustError
from .operators import (add, adjoint_op, compose, compose_band,
                        embedded_distance, make_identity, make_left_creation,
                        make_peripheral_unitary, make_right_creation, make_vacuum_projection,
                        make_zero, realize, realize_triplets, scale, trust_distance, vacuum_state)
from .scalars import UnitEigenvalue
from .words import TruncationParams, Weights, words_up_to


@dataclass
class SuiteResult:
    name: str
    passed: bool
    metrics: dict
    limits: dict
    elapsed: float = 0.0
    notes: list = field(default_factory=list)
    time_limit: float | None = None

    def line(self) -> str:
        parts = [f"runtime={self.elapsed:.1f}s" + (f" (limit {self.time_limit}s)" if self.time_limit else "")]
        for key in sorted(self.metrics):
            v = self.metrics[key]
            lim = self.limits.get(key)
            txt = f"{v:.3g}" if isinstance(v, float) else str(v)
            if lim is not None:
                txt += f" (limit {lim})"
            parts.append(f"{key}={txt}")
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: " + ", ".join(parts)

    def to_dict(self, timings: bool = False) -> dict:
        out = {"name": self.name, "passed": self.passed,
               "metrics": {k: _jsonable(v) for k, v in sorted(self.metrics.items())},
               "limits": dict(sorted(self.limits.items())), "notes": list(self.notes)}
        if timings:
            out["elapsed"] = self.elapsed
        return out


def _jsonable(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def _finish(name, metrics, checks, limits, t0, notes=None, time_limit=None) -> SuiteResult:
    """Bundle a suite outcome; ``time_limit`` (seconds) adds a wall-clock check."""
    elapsed = time.perf_counter() - t0
    ok = all(checks) and (time_limit is None or elapsed < time_limit)
    return SuiteResult(name, ok, metrics, limits, elapsed, notes or [], time_limit)


def _random_unitary(n: int, rng) -> np.ndarray:
    """Haar unitary; scipy needs n >= 2, so n = 1 gets a random phase."""
    if n == 1:
        return np.exp(2j * np.pi * rng.random()) * np.ones((1, 1))
    return unitary_group.rvs(n, random_state=rng)


def _family_keys(n: int, q: int, k: int):
    words = words_up_to(n, k)
    return [(lam, I, J) for lam in lambda_grid(q) for I in words for J in words]


# --------------------------------------------------------------------------
# 1. relations
# --------------------------------------------------------------------------

def relations_suite(n: int = 2, depth: int = 6, tol: float = 1e-12,
                    time_limit: float | None = 5.0) -> SuiteResult:
    """Cuntz-Toeplitz relations between l_i, r_i and p on the trust blocks."""
    t0 = time.perf_counter()
    p = TruncationParams(n, depth)
    l = [make_left_creation(p, i) for i in range(1, n + 1)]
    r = [make_right_creation(p, i) for i in range(1, n + 1)]
    ls = [adjoint_op(g) for g in l]
    rs = [adjoint_op(g) for g in r]
    pv, one, zero = make_vacuum_projection(p), make_identity(p), make_zero(p)
    res = {}

    def rec(name, a, b):
        res[name] = max(res.get(name, 0.0), trust_distance(a, b))

    for i in range(n):
        for j in range(n):
            d = one if i == j else zero
            dp = pv if i == j else zero
            rec("r*r=delta", rs[i] @ r[j], d)
            rec("l*l=delta", ls[i] @ l[j], d)
            rec("r*l=lr*+delta p", rs[i] @ l[j], l[j] @ rs[i] + dp)
            rec("l*r=rl*+delta p", ls[i] @ r[j], r[j] @ ls[i] + dp)
            rec("rl=lr", r[j] @ l[i], l[i] @ r[j])
    for i in range(n):
        rec("p l=0", pv @ l[i], zero)
        rec("p r=0", pv @ r[i], zero)
        rec("l* p=0", ls[i] @ pv, zero)
        rec("r* p=0", rs[i] @ pv, zero)
    total = None
    for g, gs in zip(l, ls):
        total = g @ gs if total is None else total + g @ gs
    rec("sum l l*=1-p", total, one - pv)
    rec("p p=p", pv @ pv, pv)
    # rewriting agrees with matrix products on every two-letter generator word
    gens = ([alg.left_create(i) for i in range(1, n + 1)] + [alg.left_annihilate(i) for i in range(1, n + 1)]
            + [alg.right_create(i) for i in range(1, n + 1)] + [alg.right_annihilate(i) for i in range(1, n + 1)]
            + [alg.VACUUM])
    mats = l + ls + r + rs + [pv]
    for a, ma in zip(gens, mats):
        for b, mb in zip(gens, mats):
            rec("normal form", realize(p, normal_form(n, [a, b])), ma @ mb)
    worst = max(res.values())
    metrics = {"max_residual": worst, "relations": len(res)}
    return _finish(f"relations n={n} d={depth}", metrics, [worst < tol],
                   {"max_residual": tol}, t0, time_limit=time_limit)


# --------------------------------------------------------------------------
# 2. eigen structure of x_lam
# --------------------------------------------------------------------------

def eigen_suite(n: int = 2, depth: int = 8, q: int = 8, w: Weights | None = None,
                tol: float = 1e-12, detect_tol: float = 1e-10) -> SuiteResult:
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    worst = worst_det = 0.0
    strict = True
    for lam in lambda_grid(q):
        x = make_peripheral_unitary(p, lam)
        worst = max(worst, eigen_residual(m, x, lam))
        got = detect_peripheral_eigenvalue(m, x, detect_tol)
        worst_det = max(worst_det, abs(got.value - lam.value) if got is not None else np.inf)
        if lam.turns != 0:
            # in E_lam but not a fixed point
            strict &= eigen_residual(m, x, UnitEigenvalue.from_turns(0)) > 1e-6
    metrics = {"max_eigen_residual": worst, "max_detect_error": worst_det,
               "strict_inclusion": strict}
    return _finish(f"eigen n={n} d={depth} q={q}", metrics,
                   [worst < tol, worst_det < detect_tol, strict],
                   {"max_eigen_residual": tol, "max_detect_error": detect_tol}, t0)


# --------------------------------------------------------------------------
# 3. closed-form products
# --------------------------------------------------------------------------

class _Stack:
    """Block-diagonal stack of operators that share params, trust and band.

    Lets one sparse product or ucp application stand in for many small ones.
    """

    def __init__(self, params, matrix, count, trust, band):
        self.params, self.matrix, self.count = params, matrix, count
        self.trust, self.band = trust, band

    @classmethod
    def of(cls, ops, trust=None, band=None):
        if trust is None:
            keys = {(o.trust, o.raise_, o.lower) for o in ops}
            if len(keys) != 1:
                raise ValueError("stacked operators must share trust and band")
            trust, hi, lo = keys.pop()
            band = (hi, lo)
        mat = sp.csr_array(sp.block_diag([o.matrix for o in ops], format="csr"), dtype=np.complex128)
        return cls(ops[0].params, mat, len(ops), trust, band)

    def _tile(self, op):
        return sp.csr_array(sp.kron(sp.identity(self.count, format="csr"), op.matrix, format="csr"))

    def rmul(self, op):
        t, hi, lo = compose_band(self.trust, self.band, op.trust, (op.raise_, op.lower))
        return _Stack(self.params, sp.csr_array(self.matrix @ self._tile(op)), self.count, t, (hi, lo))

    def lmul(self, op):
        t, hi, lo = compose_band(op.trust, (op.raise_, op.lower), self.trust, self.band)
        return _Stack(self.params, sp.csr_array(self._tile(op) @ self.matrix), self.count, t, (hi, lo))

    def apply(self, m: UcpMap):
        if self.trust < 1:
            raise TrustError("stack has no trust left")
        p, dim = self.params, self.params.dim
        c = self.matrix.tocoo()
        br, lr = np.divmod(c.row, dim)
        bc, lc = np.divmod(c.col, dim)
        fr, fc = p.first_letter[lr], p.first_letter[lc]
        keep = (fr == fc) & (fr > 0)
        rows = br[keep] * dim + p.tail_index[lr[keep]]
        cols = bc[keep] * dim + p.tail_index[lc[keep]]
        vals = c.data[keep] * np.asarray(m.weights.omega)[fr[keep] - 1]
        mat = sp.csr_array((vals, (rows, cols)), shape=self.matrix.shape, dtype=np.complex128)
        return _Stack(p, mat, self.count, self.trust - 1, self.band)

    def scale_blocks(self, factors):
        mtx = self.matrix
        rows = np.repeat(np.arange(mtx.shape[0]), np.diff(mtx.indptr))
        f = np.asarray(factors, dtype=np.complex128)[rows // self.params.dim]
        out = sp.csr_array((mtx.data * f, mtx.indices, mtx.indptr), shape=mtx.shape)
        return _Stack(self.params, out, self.count, self.trust, self.band)

    def select(self, mask):
        return self.scale_blocks(np.asarray(mask, dtype=float))

    def block_max(self, other_matrix, trust: int) -> np.ndarray:
        """Per-block max |difference| over the leading depth-``trust`` block."""
        dim = self.params.dim
        c = sp.csr_array(self.matrix - other_matrix).tocoo()
        size = self.params.dim_at(trust)
        mask = (c.row % dim < size) & (c.col % dim < size)
        out = np.zeros(self.count)
        np.maximum.at(out, c.row[mask] // dim, np.abs(c.data[mask]))
        return out


def _stacked_matrix(p: TruncationParams, triplets) -> sp.csr_array:
    """Block-diagonal CSR matrix from per-block COO triplets."""
    dim = p.dim
    rows = np.concatenate([r + k * dim for k, (r, _, _) in enumerate(triplets)])
    cols = np.concatenate([c + k * dim for k, (_, c, _) in enumerate(triplets)])
    vals = np.concatenate([v for _, _, v in triplets])
    size = dim * len(triplets)
    return sp.csr_array((vals, (rows, cols)), shape=(size, size), dtype=np.complex128)


def _stack_sot(m: UcpMap, z: _Stack, inv, tol: float):
    """Per-block SOT stabilization; returns (steps per block, stacked result)."""
    steps = np.full(z.count, -1)
    parts = []
    limit = min(z.trust - 1, 32)
    for k in range(max(limit, 0)):
        if z.trust < 1:
            break
        nxt = z.apply(m).scale_blocks(inv)
        dist = nxt.block_max(z.matrix, nxt.trust)
        new = (steps < 0) & (dist < tol)
        if new.any():
            steps[new] = k
            parts.append((new, z.select(new).matrix, nxt.trust))
        if (steps >= 0).all():
            break
        z = nxt
    if (steps < 0).any() or not parts:
        raise ConvergenceError(f"{int((steps < 0).sum())} blocks did not stabilize")
    mat = parts[0][1]
    for _, mtx, _ in parts[1:]:
        mat = mat + mtx
    trust = min(t for _, _, t in parts)
    return steps, _Stack(z.params, sp.csr_array(mat), z.count, trust, z.band)


def products_suite(n: int = 2, depth: int = 8, q: int = 8, k: int = 2, word_bound: int = 2,
                   w: Weights | None = None, tol: float = 1e-9, conv_tol: float = 1e-10,
                   max_steps: int = 3, time_limit: float | None = 30.0) -> SuiteResult:
    """Closed-form products against SOT iteration, symbolically and numerically.

    Family x = x_lam a_IJ with lam over the q-th roots and |I|, |J| <= k; the
    product words range over nonempty words of length <= ``word_bound``
    (pairs of them for the sandwich).
    """
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    pw = words_up_to(n, word_bound, nonempty=True)
    cases = [(kind, A, None) for kind in KINDS if kind != "sandwich" for A in pw]
    cases += [("sandwich", A, B) for A in pw for B in pw]
    one = UnitEigenvalue.from_turns(0)
    gen_tags = {}

    def gtag(kind, word):
        key = (kind, word)
        if key not in gen_tags:
            el = alg.r_word(n, word) if kind == "r" else alg.rs_word(n, word)
            gen_tags[key] = EigenTaggedElement(el, one, w)
        return gen_tags[key]

    def gop(kind, word):
        return realize(p, gtag(kind, word).element)

    groups = {}
    for key in _family_keys(n, q, k):
        groups.setdefault(len(key[1]) - len(key[2]), []).append(key)
    sym_err = num_err = 0.0
    sym_steps = num_steps = 0
    count = 0
    failures = []
    for s in sorted(groups):
        keys = groups[s]
        elems = [family_element(n, w, lam, I, J) for lam, I, J in keys]
        tagged = [EigenTaggedElement(e, lam, w) for e, (lam, _, _) in zip(elems, keys)]
        X = _Stack.of([realize(p, e) for e in elems])
        inv = np.array([1 / lam.value for lam, _, _ in keys])
        for kind, A, B in cases:
            expected = []
            for tag, (lam, _, _) in zip(tagged, keys):
                cf = closed_form_product(kind, tag.element, A, w, lam, B)
                if kind == "right_mul":
                    sot, st = choi_effros_symbolic(tag, gtag("r", A), with_steps=True)
                elif kind == "star_left_mul":
                    sot, st = choi_effros_symbolic(gtag("rs", A), tag, with_steps=True)
                elif kind == "left_mul":
                    sot, st = choi_effros_symbolic(gtag("r", A), tag, with_steps=True)
                elif kind == "star_right_mul":
                    sot, st = choi_effros_symbolic(tag, gtag("rs", A), with_steps=True)
                else:
                    mid, st1 = choi_effros_symbolic(gtag("rs", B), tag, with_steps=True)
                    sot, st = choi_effros_symbolic(EigenTaggedElement(mid, lam, w), gtag("r", A),
                                                   with_steps=True)
                    st = max(st, st1)
                sym_err = max(sym_err, cf.max_abs_diff(sot))
                sym_steps = max(sym_steps, st)
                expected.append(realize_triplets(p, cf))
                count += 1
            exp_mat = _stacked_matrix(p, expected)
            try:
                if kind == "right_mul":
                    steps, z = _stack_sot(m, X.rmul(gop("r", A)), inv, conv_tol)
                elif kind == "star_left_mul":
                    steps, z = _stack_sot(m, X.lmul(gop("rs", A)), inv, conv_tol)
                elif kind == "left_mul":
                    steps, z = _stack_sot(m, X.lmul(gop("r", A)), inv, conv_tol)
                elif kind == "star_right_mul":
                    steps, z = _stack_sot(m, X.rmul(gop("rs", A)), inv, conv_tol)
                else:
                    st1, mid = _stack_sot(m, X.lmul(gop("rs", B)), inv, conv_tol)
                    steps, z = _stack_sot(m, mid.rmul(gop("r", A)), inv, conv_tol)
                    steps = np.maximum(steps, st1)
            except FockboundError as exc:
                failures.append(f"{kind} {A} {B} shift {s}: {exc}")
                num_err = np.inf
                continue
            num_err = max(num_err, float(z.block_max(exp_mat, z.trust).max()))
            num_steps = max(num_steps, int(steps.max()))
    metrics = {"cases": count, "symbolic_max_diff": sym_err, "numeric_max_diff": num_err,
               "max_steps_symbolic": sym_steps, "max_steps_numeric": num_steps}
    checks = [sym_err < tol, num_err < tol, sym_steps <= max_steps, num_steps <= max_steps,
              not failures]
    limits = {"symbolic_max_diff": tol, "numeric_max_diff": tol,
              "max_steps_symbolic": max_steps, "max_steps_numeric": max_steps}
    return _finish(f"products n={n} d={depth} q={q} k={k}", metrics, checks, limits, t0, failures,
                   time_limit)


# --------------------------------------------------------------------------
# 4. vacuum-state identities
# --------------------------------------------------------------------------

def phi_suite(n: int = 2, depth: int = 8, q: int = 8, k: int = 2, w: Weights | None = None,
              tol: float = 1e-12) -> SuiteResult:
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    words = words_up_to(n, k)
    worst, count, nonzero = 0.0, 0, 0
    for lam, I, J in _family_keys(n, q, k):
        x = realize(p, family_element(n, w, lam, I, J))
        if eigen_residual(m, x, lam) > 1e-12:
            worst = np.inf
            continue
        for W in words:
            rep = phi_identity_check(m, x, lam, W, w, check=False)
            worst = max(worst, rep["error"])
            nonzero += abs(rep["lhs_star"]) > 1e-12 or abs(rep["lhs"]) > 1e-12
            count += 1
    metrics = {"checks": count, "nonzero_sides": nonzero, "max_error": worst}
    return _finish(f"phi identities n={n} d={depth} q={q} k={k}", metrics, [worst < tol],
                   {"max_error": tol}, t0)


# --------------------------------------------------------------------------
# 5. relative commutant and center
# --------------------------------------------------------------------------

def commutant_suite(n: int = 2, depth: int = 8, q: int = 4, k: int = 2, w: Weights | None = None,
                    svd_tol: float = 1e-8, gap_limit: float = 1e-6, witness_tol: float = 1e-8,
                    time_limit: float | None = 60.0, with_center: bool = True):
    """Returns the suite result together with the two probe reports."""
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    full = PeripheralSpanBasis.grid(n, w, q, k)
    basis = full.independent(p)
    rep = commutant_probe(basis, m, svd_tol)
    reports = {"commutant": rep}
    metrics = {"basis_size": len(basis), "dropped_dependent": len(basis.dropped),
               "dimension": rep.nullspace_dimension,
               "gap_ratio": rep.gap_ratio if rep.gap_ratio is not None else np.inf,
               "witness_distance": rep.identity_distance if rep.identity_distance is not None else np.inf,
               "gram_min_singular": rep.gram_min_singular}
    checks = [rep.nullspace_dimension == 1, metrics["gap_ratio"] < gap_limit,
              metrics["witness_distance"] < witness_tol]
    if rep.nullspace_dimension >= 1:
        W = witness_operator(basis, rep, p)
        vac, delta = 0.0, 0.0
        for L in range(0, k + 1):
            for I in words_up_to(n, L)[-n ** L:]:
                for J in words_up_to(n, L)[-n ** L:]:
                    chk = delta_compression_check(W, I, J)
                    delta = max(delta, chk["delta_residual"])
                    vac = max(vac, abs(chk["vacuum_value"]))
        metrics["witness_delta_residual"] = delta
        metrics["witness_vacuum_value"] = vac
        metrics["witness_offdiagonal"] = matrix_coefficient_check(W)
        checks += [delta < 1e-8, vac < 1e-8, metrics["witness_offdiagonal"] < 1e-8]
    if with_center:
        cen = center_probe(basis, m, svd_tol)
        reports["center"] = cen
        metrics["center_dimension"] = cen.nullspace_dimension
        metrics["center_gap_ratio"] = cen.gap_ratio if cen.gap_ratio is not None else np.inf
        metrics["center_witness_distance"] = (cen.identity_distance
                                              if cen.identity_distance is not None else np.inf)
        checks += [cen.nullspace_dimension == 1, metrics["center_gap_ratio"] < gap_limit,
                   metrics["center_witness_distance"] < witness_tol]
    limits = {"gap_ratio": gap_limit, "witness_distance": witness_tol,
              "center_gap_ratio": gap_limit, "center_witness_distance": witness_tol}
    res = _finish(f"commutant probe n={n} d={depth} q={q} k={k}", metrics, checks, limits, t0,
                  time_limit=time_limit)
    return res, reports


# --------------------------------------------------------------------------
# 6. eigenspace factorization
# --------------------------------------------------------------------------

def _random_fixed_point(rng, n, w, k, p, terms=4, cache=None):
    words = words_up_to(n, k)
    pairs = [(I, J) for I in words for J in words]
    pick = rng.choice(len(pairs), size=min(terms, len(pairs)), replace=False)
    coeffs = rng.normal(size=len(pick)) + 1j * rng.normal(size=len(pick))
    out = None
    for c, idx in zip(coeffs, pick):
        I, J = pairs[idx]
        key = (I, J)
        if cache is not None and key in cache:
            op = cache[key]
        else:
            op = realize(p, fixed_point(n, w, I, J))
            if cache is not None:
                cache[key] = op
        t = scale(c, op)
        out = t if out is None else add(out, t)
    return out


def factorization_suite(n: int = 2, depth: int = 8, w: Weights | None = None, seed: int = 0,
                        count: int = 20, k: int = 2, q: int = 4, pair_bound: int = 1,
                        tol: float = 1e-10, product_tol: float = 1e-9) -> SuiteResult:
    """x = x_lam a for random a and lam, then products over the lam/mu grid.

    The product check runs over lam, mu in the q-th roots and a, b among the
    family fixed points a_IJ with |I|, |J| <= ``pair_bound``.
    """
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    rng = np.random.default_rng(seed)
    cache = {}
    fp_worst = rec_worst = 0.0
    for _ in range(count):
        lam = UnitEigenvalue(np.exp(2j * np.pi * rng.random()))
        a = _random_fixed_point(rng, n, w, k, p, cache=cache)
        x = compose(make_peripheral_unitary(p, lam), a)
        f = eigenspace_factorize(x, lam, m, tol)
        fp_worst = max(fp_worst, f.fixed_point_residual)
        rec_worst = max(rec_worst, trust_distance(f.a, a))
    words = words_up_to(n, pair_bound)
    fixed = [realize(p, fixed_point(n, w, I, J)) for I in words for J in words]
    prod_worst, checks_run = 0.0, 0
    grid = lambda_grid(q)
    for lam in grid:
        for mu in grid:
            for a in fixed:
                for b in fixed:
                    rep = eigen_product_check(m, a, b, lam, mu, product_tol)
                    prod_worst = max(prod_worst, rep["residual"])
                    checks_run += 1
    metrics = {"factorized": count, "fixed_point_residual": fp_worst, "recovery_error": rec_worst,
               "product_checks": checks_run, "product_residual": prod_worst}
    return _finish(f"eigenspace factorization n={n} d={depth}", metrics,
                   [fp_worst < tol, rec_worst < tol, prod_worst < product_tol],
                   {"fixed_point_residual": tol, "recovery_error": tol,
                    "product_residual": product_tol}, t0)


# --------------------------------------------------------------------------
# 7. conditional expectation and the bimodule
# --------------------------------------------------------------------------

def expectation_suite(n: int = 2, depth: int = 10, q: int = 4, w: Weights | None = None,
                      seed: int = 0, count: int = 50, k: int = 1, module_bound: int = 2,
                      module_samples: int = 3, tol: float = 1e-9) -> SuiteResult:
    """Axioms of the Fourier projection E on random peripheral elements.

    Random elements are combinations of x_lam a_IJ (lam in q-th roots,
    |I|, |J| <= k).  The module property is checked one side at a time for
    every a_IJ with |I|, |J| <= ``module_bound`` on the first
    ``module_samples`` elements.  The Gram matrix [phi(E(x_j o x_k^*))]
    is assembled by bilinearity from the basis values phi(E(b o b'^*)).
    """
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    rng = np.random.default_rng(seed)
    keys = _family_keys(n, q, k)
    ops = [realize(p, family_element(n, w, lam, I, J)) for lam, I, J in keys]
    C = rng.normal(size=(count, len(keys))) + 1j * rng.normal(size=(count, len(keys)))

    def element(row):
        comps = {}
        for c, (lam, _, _), op in zip(row, keys, ops):
            t = scale(c, op)
            comps[lam.turns] = add(comps[lam.turns], t) if lam.turns in comps else t
        return PeripheralElement(p, comps)

    one = make_identity(p)
    unital = trust_distance(conditional_expectation(m, one, q), one)
    idem = fixed = proj = 0.0
    elems = [element(C[j]) for j in range(count)]
    for X in elems:
        E = conditional_expectation(m, X, q)
        idem = max(idem, trust_distance(conditional_expectation(m, E, q), E))
        fixed = max(fixed, trust_distance(m.apply(E), E))
        proj = max(proj, trust_distance(E, X.components.get(Fraction(0), scale(0, one))))
    words = words_up_to(n, module_bound)
    fixed_ops = [realize(p, fixed_point(n, w, I, J)) for I in words for J in words]
    zero_t = Fraction(0)
    module = 0.0
    for X in elems[:module_samples]:
        EX = conditional_expectation(m, X, q)
        for A in fixed_ops:
            Ael = PeripheralElement(p, {zero_t: A})
            left = conditional_expectation(m, Ael.circ(X, m), q)
            right = conditional_expectation(m, X.circ(Ael, m), q)
            one_t = UnitEigenvalue.from_turns(0)
            left2 = choi_effros_numeric(m, (A, one_t), (EX, one_t), eigen_tol=tol)
            right2 = choi_effros_numeric(m, (EX, one_t), (A, one_t), eigen_tol=tol)
            module = max(module, trust_distance(left, left2), trust_distance(right, right2))
    # phi(E(b o b'^*)) over basis pairs
    nb = len(keys)
    M = np.zeros((nb, nb), dtype=complex)
    for i, ((li, _, _), bi) in enumerate(zip(keys, ops)):
        for j, ((lj, _, _), bj) in enumerate(zip(keys, ops)):
            z = choi_effros_numeric(m, (bi, li), (adjoint_op(bj), lj.conjugate()), check=False)
            M[i, j] = vacuum_state(conditional_expectation(m, z, q))
    G = C @ M @ C.conj().T
    herm = float(np.max(np.abs(G - G.conj().T)))
    min_eig = float(np.linalg.eigvalsh((G + G.conj().T) / 2)[0]) / max(1.0, float(np.abs(G).max()))
    # the bilinear assembly agrees with direct evaluation
    direct = 0.0
    for j, kk in ((0, 0), (0, 1), (1, 2)):
        val = vacuum_state(bimodule_inner_product(m, elems[j], elems[kk], q))
        direct = max(direct, abs(val - G[j, kk]))
    metrics = {"unitality": unital, "idempotence": idem, "fixed_point_range": fixed,
               "lambda1_projection": proj, "module_property": module,
               "gram_min_eigenvalue": min_eig, "gram_hermiticity": herm,
               "gram_direct_vs_bilinear": direct, "elements": count}
    checks = [unital < tol, idem < tol, fixed < tol, proj < tol, module < tol,
              min_eig >= -tol, herm < tol, direct < tol]
    limits = {"unitality": tol, "idempotence": tol, "fixed_point_range": tol,
              "lambda1_projection": tol, "module_property": tol, "gram_min_eigenvalue": -tol,
              "gram_hermiticity": tol, "gram_direct_vs_bilinear": tol}
    return _finish(f"conditional expectation n={n} d={depth} q={q}", metrics, checks, limits, t0)


# --------------------------------------------------------------------------
# 8. basis independence
# --------------------------------------------------------------------------

def intertwine_suite(n: int = 2, depth: int = 6, q: int = 8, k: int = 2, w: Weights | None = None,
                     seed: int = 0, count: int = 10, pairs: int = 30, tol: float = 1e-12,
                     product_tol: float = 1e-9) -> SuiteResult:
    t0 = time.perf_counter()
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    rng = np.random.default_rng(seed)
    keys = _family_keys(n, q, k)
    fam = [realize(p, family_element(n, w, lam, I, J)) for lam, I, J in keys]
    Us = [_random_unitary(n, rng) for _ in range(count)]
    worst = iso = 0.0
    for U in Us:
        m_rot = UcpMap(w, p, basis=U)
        for x in fam:
            worst = max(worst, intertwine_check(U, w, x, tol, m, m_rot)["residual"])
        for _ in range(pairs):
            i, j = rng.integers(len(keys), size=2)
            (li, _, _), (lj, _, _) = keys[i], keys[j]
            z = choi_effros_numeric(m, (fam[i], li), (fam[j], lj))
            lhs = conjugate_by(U, z)
            rhs = choi_effros_numeric(m_rot, (conjugate_by(U, fam[i]), li), (conjugate_by(U, fam[j]), lj))
            iso = max(iso, trust_distance(lhs, rhs))
    metrics = {"unitaries": count, "intertwine_residual": worst, "isomorphism_residual": iso}
    return _finish(f"basis independence n={n} d={depth}", metrics,
                   [worst < tol, iso < product_tol],
                   {"intertwine_residual": tol, "isomorphism_residual": product_tol}, t0)


# --------------------------------------------------------------------------
# 9. depth escalation
# --------------------------------------------------------------------------

def oracle_operators(p: TruncationParams, w: Weights | None = None, seed: int = 0) -> dict:
    """Named numeric results from every suite, built the same way at any depth."""
    n = p.n
    w = Weights.uniform(n) if w is None else w
    m = UcpMap(w, p)
    out = {}
    l = [make_left_creation(p, i) for i in range(1, n + 1)]
    r = [make_right_creation(p, i) for i in range(1, n + 1)]
    pv = make_vacuum_projection(p)
    for i in range(n):
        for j in range(n):
            out[f"rel r{i+1}* l{j+1}"] = adjoint_op(r[i]) @ l[j]
            out[f"rel l{i+1}* r{j+1}"] = adjoint_op(l[i]) @ r[j]
            out[f"rel l{i+1}* l{j+1}"] = adjoint_op(l[i]) @ l[j]
    tot = None
    for g in l:
        tot = g @ adjoint_op(g) if tot is None else tot + g @ adjoint_op(g)
    out["rel sum l l* + p"] = tot + pv
    for lam in lambda_grid(8):
        out[f"eigen P(x)[{lam.turns}]"] = m.apply(make_peripheral_unitary(p, lam))
    sample = [(UnitEigenvalue.root(8, 1), (1,), (2,)), (UnitEigenvalue.root(4, 1), (1, 2), (1,)),
              (UnitEigenvalue.root(8, 0), (2,), (2, 1)), (UnitEigenvalue.root(8, 3), (), (1, 1))]
    for lam, I, J in sample:
        x = realize(p, family_element(n, w, lam, I, J))
        tag = f"[{lam.turns}]{I}{J}"
        for kind in KINDS:
            B = (2,) if kind == "sandwich" else None
            for A in ((1,), (2, 1)):
                out[f"sot {kind}{A}{B} {tag}"] = iterated_product(kind, x, A, w, lam, B, m=m)
                out[f"closed {kind}{A}{B} {tag}"] = closed_form_product(kind, x, A, w, lam, B)
        f = eigenspace_factorize(x, lam, m)
        out[f"factor {tag}"] = f.a
        one = UnitEigenvalue.from_turns(0)
        for i in range(1, n + 1):
            g = r[i - 1]
            out[f"commutator r{i} {tag}"] = add(
                choi_effros_numeric(m, (x, lam), (g, one)),
                scale(-1, choi_effros_numeric(m, (g, one), (x, lam))))
    x = add(make_peripheral_unitary(p, UnitEigenvalue.root(4, 1)), r[0])
    out["expectation x_i + r1"] = conditional_expectation(m, x, 4)
    U = _random_unitary(n, np.random.default_rng(seed))
    xx = realize(p, family_element(n, w, UnitEigenvalue.root(8, 1), (1,), (2, 1)))
    m_rot = UcpMap(w, p, basis=U)
    out["intertwine lhs"] = conjugate_by(U, m.apply(xx))
    out["intertwine rhs"] = m_rot.apply(conjugate_by(U, xx))
    return out


def oracle_suite(n: int = 2, depths=(6, 8), w: Weights | None = None, seed: int = 0,
                 tol: float = 1e-12) -> SuiteResult:
    t0 = time.perf_counter()
    lo, hi = depths
    small = oracle_operators(TruncationParams(n, lo), w, seed)
    big = oracle_operators(TruncationParams(n, hi), w, seed)
    worst, compared, untrusted = 0.0, 0, 0
    for name, op in small.items():
        if op.trust < 0:
            untrusted += 1
            continue
        worst = max(worst, embedded_distance(op, big[name]))
        compared += 1
    metrics = {"operators": compared, "without_trust": untrusted, "max_difference": worst}
    return _finish(f"depth escalation n={n} d={lo}->{hi}", metrics, [worst < tol, compared > 0],
                   {"max_difference": tol}, t0)


def probe_growth(n: int = 2, depth: int = 8, grid=((1, 1), (2, 1), (4, 1), (1, 2), (2, 2), (4, 2)),
                 w: Weights | None = None, svd_tol: float = 1e-8) -> list:
    """Commutant dimension and gap for growing (q, k) grid bases."""
    w = Weights.uniform(n) if w is None else w
    p = TruncationParams(n, depth)
    m = UcpMap(w, p)
    rows = []
    for q, k in grid:
        basis = PeripheralSpanBasis.grid(n, w, q, k).independent(p)
        rep = commutant_probe(basis, m, svd_tol)
        rows.append({"q": q, "k": k, "basis_size": len(basis), "dropped": len(basis.dropped),
                     "dimension": rep.nullspace_dimension, "gap_ratio": rep.gap_ratio})
    return rows
