import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fockbound import algebra as alg
from fockbound.algebra import multiply
from fockbound.errors import TrustError, ValidationError
from fockbound.operators import (add, adjoint_op, coefficient, compose, compose_band,
                                 embedded_distance, make_creation, make_identity,
                                 make_left_creation, make_peripheral_unitary,
                                 make_right_creation, make_second_quantization,
                                 make_vacuum_projection, make_zero, realize, scale,
                                 trust_distance, trusted_entries, vacuum_state)
from fockbound.scalars import UnitEigenvalue
from fockbound.words import TruncationParams

from strategies import elements

P2 = TruncationParams(2, 4)


def test_creation_coefficients():
    assert coefficient(make_left_creation(P2, 1), (), (1,)) == 1
    assert coefficient(make_right_creation(P2, 2), (1,), (1, 2)) == 1
    assert coefficient(make_left_creation(P2, 1), (2,), (1, 1)) == 0
    assert coefficient(make_left_creation(P2, 1), (1,), ()) == 0
    l1 = make_left_creation(P2, 1)
    assert (l1.trust, l1.raise_) == (4, 1)


def test_creation_of_vector():
    xi = np.array([0.6, 0.8j])
    x = make_creation(P2, xi, "right")
    assert coefficient(x, (1,), (1, 2)) == pytest.approx(0.8j)
    with pytest.raises(ValidationError):
        make_creation(P2, [1.0])


def test_vacuum_projection():
    p = make_vacuum_projection(P2)
    assert coefficient(p, (), ()) == 1
    assert coefficient(p, (1,), (1,)) == 0
    assert trust_distance(compose(p, p), p) == 0


def test_peripheral_unitary():
    x = make_peripheral_unitary(P2, UnitEigenvalue.root(4, 1))
    assert coefficient(x, (1, 2), (1, 2)) == pytest.approx(-1)
    assert trust_distance(make_peripheral_unitary(P2, 1), make_identity(P2)) == 0
    prod = compose(x, adjoint_op(x))
    assert np.abs(prod.dense() - np.eye(P2.dim)).max() < 1e-15


def test_second_quantization():
    assert trust_distance(make_second_quantization(P2, np.eye(2)), make_identity(P2)) == 0
    swap = make_second_quantization(P2, [[0, 1], [1, 0]])
    assert coefficient(swap, (1, 2), (2, 1)) == 1
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    g = make_second_quantization(P2, q)
    assert np.abs((g.matrix @ g.matrix.conj().T).toarray() - np.eye(P2.dim)).max() < 1e-12
    with pytest.raises(ValidationError):
        make_second_quantization(P2, [[1, 1], [0, 1]])


def test_realize_examples():
    l1, r1s = alg.l_word(2, (1,)), alg.rs_word(2, (1,))
    assert trust_distance(realize(P2, l1), make_left_creation(P2, 1)) == 0
    lhs = realize(P2, multiply(r1s, l1))
    rhs = add(realize(P2, multiply(l1, r1s)), make_vacuum_projection(P2))
    assert trust_distance(lhs, rhs) == 0
    # the same identity built from generator matrices
    lhs_num = compose(adjoint_op(make_right_creation(P2, 1)), make_left_creation(P2, 1))
    assert trust_distance(lhs_num, rhs) == 0
    assert realize(P2, alg.AlgebraElement.zero(2)).matrix.nnz == 0


def test_compose_examples():
    l1 = make_left_creation(P2, 1)
    assert trust_distance(compose(adjoint_op(l1), l1), make_identity(P2)) == 0
    s = None
    for i in (1, 2):
        li = make_left_creation(P2, i)
        term = compose(li, adjoint_op(li))
        s = term if s is None else add(s, term)
    target = add(make_identity(P2), scale(-1, make_vacuum_projection(P2)))
    assert s.trust >= P2.depth - 1
    assert trust_distance(s, target) == 0
    x = realize(P2, alg.r_word(2, (1, 2)))
    assert np.abs(add(x, scale(-1, x)).matrix.toarray()).max() == 0


def test_parameter_mismatch():
    with pytest.raises(ValidationError):
        compose(make_identity(P2), make_identity(TruncationParams(2, 3)))


def test_coefficient_and_vacuum_state():
    assert coefficient(make_identity(P2), (1,), (1,)) == 1
    x = make_peripheral_unitary(P2, UnitEigenvalue.root(4, 1))
    assert coefficient(x, (1, 2), (1, 2)) == pytest.approx(-1)
    assert vacuum_state(make_identity(P2)) == 1
    assert vacuum_state(make_vacuum_projection(P2)) == 1
    for k in range(8):
        assert vacuum_state(make_peripheral_unitary(P2, UnitEigenvalue.root(8, k))) == pytest.approx(1)


def test_untrusted_coefficient_flag():
    l1 = make_left_creation(P2, 1)
    x = compose(adjoint_op(l1), l1)
    assert x.trust == 3
    assert coefficient(x, (1, 1, 1), (1, 1, 1)).trusted
    c = coefficient(x, (1, 1, 1, 1), (1, 1, 1, 1))
    assert not c.trusted and c == 0  # truncation artefact, flagged


def test_trust_distance_examples():
    x = realize(P2, alg.r_word(2, (1,)))
    assert trust_distance(x, x) == 0
    assert trust_distance(make_identity(P2), make_zero(P2)) == 1
    with pytest.raises(TrustError):
        vacuum_state(make_identity(P2).with_trust(-1))


def test_trusted_entries_order():
    ents = trusted_entries(make_left_creation(TruncationParams(2, 1), 2))
    assert ents == [((2,), (), 1 + 0j)]


def _chain(p):
    l1 = make_left_creation(p, 1)
    s = adjoint_op(l1)
    x = compose(s, compose(s, compose(s, compose(l1, l1))))
    return x, compose(x, l1)


@pytest.mark.parametrize("d", [4, 5, 6])
def test_naive_trust_rule_is_unsound(d):
    """min(t_x, t_y, d - raise_y) overstates trust when x lowers and y raises."""
    small, big = TruncationParams(2, d), TruncationParams(2, d + 4)
    x, z = _chain(small)
    _, z_big = _chain(big)
    naive = min(x.trust, d, d - 1)
    assert naive > z.trust
    m = small.dim_at(naive)
    assert np.abs((z.matrix[:m, :m] - z_big.matrix[:m, :m]).toarray()).max() == 1
    assert embedded_distance(z, z_big) == 0


def test_compose_band_rule():
    assert compose_band(5, (1, 1), 5, (1, 1)) == (5, 2, 2)
    assert compose_band(5, (-1, -1), 5, (1, 1)) == (4, 0, 0)
    assert compose_band(3, (0, -1), 5, (2, 2)) == (2, 2, 1)


@settings(max_examples=30)
@given(st.lists(elements(2, max_len=3, max_terms=2), min_size=2, max_size=4),
       st.integers(3, 5))
def test_trust_soundness(factors, d):
    small, big = TruncationParams(2, d), TruncationParams(2, d + 2)
    zs, zb = realize(small, factors[0]), realize(big, factors[0])
    for f in factors[1:]:
        zs = compose(zs, realize(small, f))
        zb = compose(zb, realize(big, f))
    if zs.trust >= 0:
        assert embedded_distance(zs, zb) < 1e-12


@settings(max_examples=30)
@given(st.lists(st.sampled_from(["l", "ls", "r", "rs", "p"]), min_size=1, max_size=6),
       st.lists(st.integers(1, 2), min_size=6, max_size=6), st.integers(2, 5))
def test_trust_soundness_generator_chains(kinds, letters, d):
    def build(p):
        out = make_identity(p)
        for k, a in zip(kinds, letters):
            if k == "p":
                g = make_vacuum_projection(p)
            elif k[0] == "l":
                g = make_left_creation(p, a)
            else:
                g = make_right_creation(p, a)
            if k.endswith("s"):
                g = adjoint_op(g)
            out = compose(out, g)
        return out
    zs = build(TruncationParams(2, d))
    zb = build(TruncationParams(2, d + 6))
    if zs.trust >= 0:
        assert embedded_distance(zs, zb) < 1e-12


@settings(max_examples=30)
@given(elements(2, max_len=3), elements(2, max_len=3))
def test_realize_homomorphism(a, b):
    p = TruncationParams(2, 5)
    prod = compose(realize(p, a), realize(p, b))
    assert trust_distance(realize(p, multiply(a, b)), prod) < 1e-12
    assert trust_distance(realize(p, alg.adjoint(a)), adjoint_op(realize(p, a))) < 1e-12


@given(st.integers(0, 7), st.integers(1, 3))
def test_peripheral_unitary_grading(k, n):
    p = TruncationParams(n, 3)
    x = make_peripheral_unitary(p, UnitEigenvalue.root(8, k))
    assert x.raise_ == 0 and x.lower == 0
    m = x.dense()
    assert np.abs(m - np.diag(np.diag(m))).max() == 0
    assert np.abs(np.abs(np.diag(m)) - 1).max() < 1e-15
