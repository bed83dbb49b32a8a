import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from xylab.errors import CapacityError, DimensionError, ValidationError
from xylab.pauli import (
    LieElement,
    PauliString,
    commutator,
    format_label,
    from_dense,
    hs_inner,
    label_from_ops,
    parse_label,
    to_dense,
    xy_generator,
    z_plus,
    zz_plus,
)

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
SINGLE = {"I": I2, "X": X, "Y": Y, "Z": Z}


def kron_label(label):
    out = np.eye(1)
    for ch in label:
        out = np.kron(out, SINGLE[ch])
    return out


labels = lambda n: st.text(alphabet="IXYZ", min_size=n, max_size=n)


def elements(n, max_terms=5):
    coeff = st.floats(-2, 2, allow_nan=False).filter(lambda c: abs(c) > 1e-3)
    return st.dictionaries(labels(n), coeff, min_size=1, max_size=max_terms).map(LieElement.from_labels)


def test_label_round_trip():
    for lbl in ["XIZY", "IIII", "YYYY", "ZXIX"]:
        assert format_label(4, *parse_label(lbl)) == lbl


def test_bad_letter():
    with pytest.raises(ValidationError):
        parse_label("XQ")


def test_label_from_ops_is_one_based():
    assert label_from_ops(4, {1: "X", 4: "Z"}) == "XIIZ"
    with pytest.raises(ValidationError):
        label_from_ops(3, {0: "X"})


@given(labels(3))
def test_word_dense_matches_kron(lbl):
    np.testing.assert_allclose(PauliString.from_label(lbl).to_dense(), kron_label(lbl))


@given(labels(3), labels(3))
def test_product_matches_dense(a, b):
    pa, pb = PauliString.from_label(a), PauliString.from_label(b)
    np.testing.assert_allclose((pa * pb).to_dense(), kron_label(a) @ kron_label(b), atol=1e-12)


@given(labels(3), labels(3))
def test_commutes_with_matches_dense(a, b):
    A, B = kron_label(a), kron_label(b)
    assert PauliString.from_label(a).commutes_with(PauliString.from_label(b)) == np.allclose(A @ B, B @ A)


@given(elements(3), elements(3))
def test_commutator_matches_dense(a, b):
    A, B = a.to_dense(), b.to_dense()
    np.testing.assert_allclose(commutator(a, b).to_dense(), A @ B - B @ A, atol=1e-10)


@given(elements(3), elements(3))
def test_commutator_antisymmetric(a, b):
    assert (commutator(a, b) + commutator(b, a)).max_abs() < 1e-12


@given(elements(2, 3), elements(2, 3), elements(2, 3))
def test_jacobi(a, b, c):
    total = (commutator(a, commutator(b, c)) + commutator(b, commutator(c, a))
             + commutator(c, commutator(a, b)))
    assert total.max_abs() < 1e-10


@given(elements(3), elements(3))
def test_hs_inner_matches_trace(a, b):
    A, B = a.to_dense(), b.to_dense()
    assert np.isclose(hs_inner(a, b), np.trace(A.conj().T @ B).real / 8, atol=1e-12)


@given(elements(3))
def test_from_dense_round_trip(a):
    assert from_dense(a.to_dense()).allclose(a, 1e-10)


@given(elements(3))
def test_dense_is_skew_hermitian(a):
    M = a.to_dense()
    np.testing.assert_allclose(M.conj().T, -M, atol=1e-12)


def test_xy_generator_matrix():
    # (i/2)(XX + YY) swaps 01 and 10 with amplitude i
    M = to_dense(xy_generator(2, 1, 2))
    want = np.zeros((4, 4), dtype=complex)
    want[1, 2] = want[2, 1] = 1j
    np.testing.assert_allclose(M, want)


def test_zplus_and_zzplus_commute_with_xy():
    for n in (3, 4):
        for el in (z_plus(n), zz_plus(n)):
            assert commutator(el, xy_generator(n, 1, 3)).is_zero()


def test_size_mismatch():
    with pytest.raises(DimensionError):
        commutator(xy_generator(2, 1, 2), xy_generator(3, 1, 2))


def test_dense_capacity():
    with pytest.raises(CapacityError):
        to_dense(LieElement.from_labels({"Z" * 11: 1.0}))


def test_left_multiply_requires_commuting_hermitian():
    el = LieElement.from_labels({"XX": 1.0})
    assert el.left_multiply(PauliString.from_label("ZZ")).labels() == {"YY": -1.0}
    with pytest.raises(ValidationError):
        el.left_multiply(PauliString.from_label("ZI"))
    with pytest.raises(ValidationError):
        el.left_multiply(PauliString.from_label("ZZ", phase=1))


def test_left_multiply_matches_dense():
    el = LieElement.from_labels({"XXI": 0.5, "YYZ": -0.25})
    p = PauliString.from_label("ZZZ", phase=2)
    np.testing.assert_allclose(el.left_multiply(p).to_dense(), p.to_dense() @ el.to_dense(), atol=1e-12)
