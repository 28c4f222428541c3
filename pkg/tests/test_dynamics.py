import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings, strategies as st

from fockbound import algebra as alg
from fockbound.algebra import (EigenTaggedElement, choi_effros_symbolic, eigen_check_symbolic,
                               multiply)
from fockbound.boundary import family_element, fixed_point
from fockbound.dynamics import (UcpMap, apply_ucp, cesaro_average, choi_effros_numeric,
                                detect_peripheral_eigenvalue, eigen_residual, fourier_component,
                                iterate_ucp, unital_residual)
from fockbound.errors import ConvergenceError, TrustError, ValidationError
from fockbound.operators import (TruncatedOperator, add, compose, make_identity,
                                 make_left_creation, make_peripheral_unitary, make_right_creation,
                                 make_vacuum_projection, max_abs, realize, scale, trust_distance)
from fockbound.scalars import UnitEigenvalue
from fockbound.words import TruncationParams, Weights

W = Weights.uniform(2)
P6 = TruncationParams(2, 6)
M6 = UcpMap(W, P6)
I4 = UnitEigenvalue.root(4, 1)


def xl(lam, p=P6):
    return make_peripheral_unitary(p, lam)


def test_apply_examples():
    one = make_identity(P6)
    out = apply_ucp(M6, one)
    assert out.trust == 5 and trust_distance(out, one) == 0
    for k in range(8):
        lam = UnitEigenvalue.root(8, k)
        assert trust_distance(apply_ucp(M6, xl(lam)), scale(complex(lam), xl(lam))) < 1e-15
    r1 = make_right_creation(P6, 1)
    x = compose(r1, xl(I4))
    l1 = make_left_creation(P6, 1)
    correction = compose(compose(make_vacuum_projection(P6), xl(I4)), l1)
    rhs = add(scale(1j, x), scale(0.5, correction))
    assert trust_distance(apply_ucp(M6, x), rhs) < 1e-15


def test_apply_trust_exhausted():
    with pytest.raises(TrustError):
        apply_ucp(M6, make_identity(P6).with_trust(0))
    with pytest.raises(ValidationError):
        apply_ucp(M6, make_identity(TruncationParams(2, 5)))


def test_iterate_examples():
    y = iterate_ucp(M6, xl(I4), 3)
    assert y.trust == 3
    assert trust_distance(y, scale(complex(I4 ** 3), xl(I4))) < 1e-15
    x = compose(make_right_creation(P6, 1), xl(I4))
    assert trust_distance(iterate_ucp(M6, x, 2), scale(1j, iterate_ucp(M6, x, 1))) < 1e-15
    assert trust_distance(iterate_ucp(M6, make_identity(P6), 5), make_identity(P6)) == 0
    with pytest.raises(TrustError):
        iterate_ucp(M6, make_identity(P6), 7)


def test_cesaro_examples():
    assert trust_distance(cesaro_average(M6, make_identity(P6), 4), make_identity(P6)) == 0
    # alternating mean of x_{-1} vanishes for even N
    assert max_abs(cesaro_average(M6, xl(UnitEigenvalue.root(2, 1)), 2)) < 1e-15
    r1 = make_right_creation(P6, 1)
    assert trust_distance(cesaro_average(M6, r1, 5), r1) == 0
    assert detect_peripheral_eigenvalue(M6, r1).turns == 0


def test_fourier_examples():
    x = add(xl(I4), make_identity(P6))
    assert trust_distance(fourier_component(M6, x, 1, 4), make_identity(P6)) < 1e-15
    assert trust_distance(fourier_component(M6, xl(I4), I4, 4), xl(I4)) < 1e-15
    assert max_abs(fourier_component(M6, xl(I4), UnitEigenvalue.root(2, 1), 4)) < 1e-15
    with pytest.raises(TrustError):
        fourier_component(M6, x, 1, 7)


def test_detect_examples():
    lam = UnitEigenvalue.root(8, 1)
    got = detect_peripheral_eigenvalue(M6, xl(lam))
    assert abs(complex(got) - complex(lam)) < 1e-12
    assert detect_peripheral_eigenvalue(M6, make_right_creation(P6, 2)).turns == 0
    assert detect_peripheral_eigenvalue(M6, make_vacuum_projection(P6)) is None
    with pytest.raises(ValidationError):
        detect_peripheral_eigenvalue(M6, scale(0, make_identity(P6)))


def test_detect_non_root_phase():
    lam = UnitEigenvalue(complex(0.6, 0.8))
    got = detect_peripheral_eigenvalue(M6, xl(lam))
    assert abs(complex(got) - complex(0.6, 0.8)) < 1e-12


def test_choi_effros_examples():
    p = TruncationParams(2, 8)
    m = UcpMap(W, p)
    lam, mu = UnitEigenvalue.root(8, 3), UnitEigenvalue.root(8, 2)
    z = choi_effros_numeric(m, (xl(lam, p), lam), (xl(mu, p), mu))
    assert trust_distance(z, xl(lam * mu, p)) < 1e-12
    a = realize(p, alg.multiply(alg.r_word(2, (1,)), alg.rs_word(2, (2,))))
    assert detect_peripheral_eigenvalue(m, a).turns == 0
    z = choi_effros_numeric(m, (a, 1), (xl(lam, p), lam))
    assert trust_distance(z, compose(a, xl(lam, p))) < 1e-12
    y = realize(p, family_element(2, W, lam, (1,), (2, 1)))
    z = choi_effros_numeric(m, (make_identity(p), 1), (y, lam))
    assert trust_distance(z, y) < 1e-12


def test_choi_effros_rejects_non_eigen():
    p = TruncationParams(2, 6)
    m = UcpMap(W, p)
    with pytest.raises(ValidationError):
        choi_effros_numeric(m, (make_vacuum_projection(p), 1), (make_identity(p), 1))


def test_choi_effros_convergence_error():
    p = TruncationParams(2, 6)
    m = UcpMap(W, p)
    # p_Omega is not an eigenvector; with the check off the iteration decays without settling
    pv = make_vacuum_projection(p)
    x = add(make_identity(p), scale(-1, pv))
    with pytest.raises(ConvergenceError):
        choi_effros_numeric(m, (x, 1), (x, 1), tol=1e-16, max_iter=1, check=False)


def test_unital():
    assert unital_residual(M6) == 0


def test_rotated_map_matches_standard_for_identity_basis():
    m = UcpMap(W, P6, basis=np.eye(2))
    x = realize(P6, fixed_point(2, W, (1, 2), (2,)))
    assert trust_distance(m.apply(x), M6.apply(x)) < 1e-15


def _dense_random(p, rng, herm=False):
    a = rng.normal(size=(p.dim, p.dim)) + 1j * rng.normal(size=(p.dim, p.dim))
    if herm:
        a = a @ a.conj().T
    return TruncatedOperator(p, sp.csr_array(a), p.depth, p.depth, -p.depth)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(2, 3), (3, 2), (2, 4)]))
def test_positivity(seed, nd):
    p = TruncationParams(*nd)
    m = UcpMap(Weights.of([0.5, 0.3, 0.2][:p.n] if p.n == 3 else [0.7, 0.3]), p)
    x = _dense_random(p, np.random.default_rng(seed), herm=True)
    px = m.apply(x).block()
    assert np.linalg.eigvalsh((px + px.conj().T) / 2).min() >= -1e-10


@settings(max_examples=20)
@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([(2, 3), (3, 2), (2, 4)]))
def test_schwarz(seed, nd):
    p = TruncationParams(*nd)
    m = UcpMap(Weights.uniform(p.n), p)
    x = _dense_random(p, np.random.default_rng(seed))
    x = scale(1 / np.linalg.norm(x.dense(), 2), x)
    px = m.apply(x)
    lhs = (px.matrix.conj().T @ px.matrix).toarray()
    rhs = m.apply(TruncatedOperator(p, sp.csr_array(x.matrix.conj().T @ x.matrix), p.depth,
                                    p.depth, -p.depth)).matrix.toarray()
    t = p.dim_at(px.trust)
    diff = (rhs - lhs)[:t, :t]
    assert np.linalg.eigvalsh((diff + diff.conj().T) / 2).min() >= -1e-10


family = st.tuples(st.integers(0, 7),
                   st.lists(st.integers(1, 2), max_size=2).map(tuple),
                   st.lists(st.integers(1, 2), max_size=2).map(tuple))


@settings(max_examples=25)
@given(family)
def test_eigen_consistency(case):
    k, I, J = case
    lam = UnitEigenvalue.root(8, k)
    s = family_element(2, W, lam, I, J)
    sym = eigen_check_symbolic(W, s)
    assert sym is not None and sym.turns == lam.turns
    x = realize(P6, s)
    got = detect_peripheral_eigenvalue(M6, x)
    assert got is not None and abs(complex(got) - complex(lam)) < 1e-10
    assert eigen_residual(M6, x, lam) < 1e-12


@settings(max_examples=25)
@given(family, family)
def test_numeric_matches_symbolic_product(a, b):
    p = TruncationParams(2, 8)
    m = UcpMap(W, p)
    lam, mu = UnitEigenvalue.root(8, a[0]), UnitEigenvalue.root(8, b[0])
    x = family_element(2, W, lam, a[1], a[2])
    y = family_element(2, W, mu, b[1], b[2])
    sym = choi_effros_symbolic(EigenTaggedElement(x, lam, W), EigenTaggedElement(y, mu, W))
    num = choi_effros_numeric(m, (realize(p, x), lam), (realize(p, y), mu))
    assert trust_distance(num, realize(p, sym)) < 1e-9


@given(st.integers(0, 7))
def test_phase_unitary_strictly_peripheral(k):
    lam = UnitEigenvalue.root(8, k)
    got = detect_peripheral_eigenvalue(M6, xl(lam))
    assert abs(complex(got) - complex(lam)) < 1e-10
    fixed = trust_distance(M6.apply(xl(lam)), xl(lam)) < 1e-10
    assert fixed == (k == 0)


def test_symbolic_unit_of_product():
    lam = UnitEigenvalue.root(4, 1)
    y = multiply(alg.phase_unitary(2, lam), alg.r_word(2, (2,)))
    assert eigen_check_symbolic(W, y).turns == lam.turns
