import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import antideph.operator_core as oc
from antideph.errors import DimensionMismatchError, InstabilityError

from conftest import random_hermitian


def _complex_matrix(n):
    finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
    return st.lists(
        st.lists(st.tuples(finite, finite), min_size=n, max_size=n), min_size=n, max_size=n
    ).map(lambda rows: np.array([[complex(a, b) for a, b in r] for r in rows]))


def test_as_matrix_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        oc.as_matrix(np.zeros((2, 3)))
    with pytest.raises(DimensionMismatchError):
        oc.as_matrix(np.zeros(4))


def test_as_matrix_rejects_non_finite():
    with pytest.raises(InstabilityError):
        oc.as_matrix(np.array([[np.nan, 0], [0, 1]]))
    with pytest.raises(InstabilityError):
        oc.as_matrix(np.array([[1j * np.inf, 0], [0, 1]]))


def test_as_matrix_accepts_non_contiguous():
    m = np.arange(16, dtype=complex).reshape(4, 4)
    assert np.array_equal(oc.as_matrix(m.T), m.T)


def test_pauli_algebra():
    assert np.allclose(oc.commutator(oc.SIGMA_X, oc.SIGMA_Y), 2j * oc.SIGMA_Z)
    assert np.allclose(oc.anticommutator(oc.SIGMA_X, oc.SIGMA_Y), np.zeros((2, 2)))
    assert np.allclose(oc.SIGMA_X @ oc.SIGMA_X, oc.ID2)


@settings(max_examples=25, deadline=None)
@given(_complex_matrix(3))
def test_vectorize_round_trip(m):
    assert np.array_equal(oc.devectorize(oc.vectorize(m)), m)


def test_vectorize_row_major_convention(rng):
    # vec(X rho Y) = (X (x) Y^T) vec(rho)
    x, y, rho = (rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(3))
    lhs = oc.vectorize(x @ rho @ y)
    rhs = oc.kron(x, y.T) @ oc.vectorize(rho)
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_devectorize_rejects_non_square_length():
    with pytest.raises(DimensionMismatchError):
        oc.devectorize(np.zeros(5))


def test_hs_inner_matches_trace(rng):
    x = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    y = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    assert np.isclose(oc.hs_inner(x, y), np.trace(x.conj().T @ y), atol=1e-12)


def test_hermiticity_detection(rng):
    h = random_hermitian(rng, 4)
    assert oc.is_hermitian(h)
    assert oc.hermiticity_defect(h) == 0.0
    h2 = h.copy()
    h2[0, 1] += 1e-6
    assert not oc.is_hermitian(h2)


def test_expm_diagonal():
    d = np.diag([1.0, -2.0, 0.5j])
    assert np.allclose(oc.expm(d), np.diag(np.exp(np.diag(d))), atol=1e-14)


def test_expm_overflow_raises():
    with pytest.raises(InstabilityError):
        oc.expm(np.diag([1e5, 1e5]))


def test_eig_hermitian_oracle(rng):
    h = random_hermitian(rng, 5)
    w, vr, vl = oc.eig(h)
    ref = np.linalg.eigvalsh(h)
    assert np.allclose(np.sort(w.real), ref, atol=1e-12)
    assert np.max(np.abs(w.imag)) < 1e-12
    # right eigenvector residuals
    for k in range(5):
        assert np.linalg.norm(h @ vr[:, k] - w[k] * vr[:, k]) < 1e-10


def test_eig_left_vectors_adjoint_relation(rng):
    a = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    w, vr, vl = oc.eig(a)
    for k in range(4):
        assert np.linalg.norm(a.conj().T @ vl[:, k] - np.conj(w[k]) * vl[:, k]) < 1e-10


def test_eig_extended_precision_refinement():
    # Eigenvalues known exactly for a diagonal matrix with a huge spread.
    d = np.diag([1e8, 3.0, -7.0, 1e-5])
    w, _, _ = oc.eig(d)
    assert np.max(np.abs(np.sort(w.real) - np.sort(np.diag(d).real))) < 1e-10
