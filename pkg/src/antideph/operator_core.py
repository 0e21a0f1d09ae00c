"""Dense complex-matrix substrate.

Operator algebra, row-major vectorization, matrix exponential and
non-symmetric eigendecomposition used by every other module. All
functions are pure; inputs are never mutated.

Vectorization convention (fixed project-wide): an operator written as
rho = sum_nm rho_nm |n><m| maps to the vector |rho) with components
rho_nm in row-major order, i.e. ``vec(|n><m|) = |n> (x) |m>*``. Under
this convention ``(X (x) Y^T) vec(rho) = vec(X rho Y)`` and the
Hilbert-Schmidt inner product ``Tr(X^dag Y)`` becomes the Euclidean one.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as _sla

from .errors import DimensionMismatchError, EigenConvergenceError, InstabilityError
from .tolerances import EPS_HERM

__all__ = [
    "ID2",
    "SIGMA_X",
    "SIGMA_Y",
    "SIGMA_Z",
    "anticommutator",
    "commutator",
    "dagger",
    "devectorize",
    "eig",
    "expm",
    "hermiticity_defect",
    "hs_inner",
    "identity",
    "is_hermitian",
    "kron",
    "vectorize",
]

ID2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def as_matrix(x) -> np.ndarray:
    """Coerce to a finite square complex matrix."""
    m = np.asarray(x, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatchError(f"expected a square matrix, got shape {m.shape}")
    if not (np.all(np.isfinite(m.real)) and np.all(np.isfinite(m.imag))):
        raise InstabilityError("matrix contains non-finite entries")
    return m


def dagger(x: np.ndarray) -> np.ndarray:
    return np.asarray(x).conj().T


def hermiticity_defect(x) -> float:
    """Max-entry deviation from Hermiticity."""
    m = np.asarray(x, dtype=complex)
    return float(np.max(np.abs(m - m.conj().T), initial=0.0))


def is_hermitian(x, tol: float = EPS_HERM) -> bool:
    m = np.asarray(x, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return hermiticity_defect(m) <= tol * scale


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatchError(f"dimension mismatch: {x.shape} vs {y.shape}")


def commutator(x, y) -> np.ndarray:
    """[X, Y] = XY - YX."""
    x, y = as_matrix(x), as_matrix(y)
    _check_same_dim(x, y)
    return x @ y - y @ x


def anticommutator(x, y) -> np.ndarray:
    """{X, Y} = XY + YX."""
    x, y = as_matrix(x), as_matrix(y)
    _check_same_dim(x, y)
    return x @ y + y @ x


def kron(x, y) -> np.ndarray:
    return np.kron(as_matrix(x), as_matrix(y))


def vectorize(x) -> np.ndarray:
    """Row-major vectorization |rho) of an operator."""
    return as_matrix(x).reshape(-1)


def devectorize(v, dim: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize`; bit-identical round trip."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    if dim is None:
        dim = int(round(np.sqrt(v.size)))
    if dim * dim != v.size:
        raise DimensionMismatchError(f"vector of length {v.size} is not a square operator")
    return v.reshape(dim, dim)


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt inner product (X|Y) = Tr(X^dag Y)."""
    return complex(np.vdot(np.asarray(x, dtype=complex), np.asarray(y, dtype=complex)))


def expm(x) -> np.ndarray:
    """Matrix exponential (scaling-and-squaring with a Pade core)."""
    m = as_matrix(x)
    out = _sla.expm(m)
    if not np.all(np.isfinite(out.view(float))):
        raise InstabilityError("matrix exponential overflowed")
    return out


def eig(x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Dense non-symmetric eigendecomposition with left eigenvectors.

    Returns ``(w, vr, vl)`` with right vectors ``X vr[:,k] = w[k] vr[:,k]``
    and left vectors satisfying the adjoint relation
    ``X^dag vl[:,k] = conj(w[k]) vl[:,k]``.

    Eigenvalues are refined with one extended-precision Rayleigh-quotient
    step, which matters for matrices whose entries span many orders of
    magnitude (absolute eigenvalue accuracy then beats plain LAPACK).
    """
    m = as_matrix(x)
    try:
        w, vl, vr = _sla.eig(m, left=True, right=True)
    except _sla.LinAlgError as exc:  # pragma: no cover - LAPACK rarely fails at these dims
        raise EigenConvergenceError(f"eigensolver did not converge: {exc}") from exc
    mx = m.astype(np.clongdouble)
    for k in range(w.size):
        u = vl[:, k].astype(np.clongdouble)
        v = vr[:, k].astype(np.clongdouble)
        denom = u.conj() @ v
        if abs(complex(denom)) > 1e-12:
            w[k] = complex((u.conj() @ (mx @ v)) / denom)
    return w, vr, vl
