"""Vectorized non-trace-preserving Liouvillian and its spectral theory.

The generator acting on an unnormalized state is

    gen[rho] = -i[H0, rho] - {L_d + a*1, rho} + gamma {L_s, {L_s, rho}}

and in Liouville space (row-major vectorization)

    M = -i(H0 (x) 1 - 1 (x) H0^T) - (Ld' (x) 1 + 1 (x) Ld'^T)
        + gamma (Ls^2 (x) 1 + 1 (x) (Ls^2)^T + 2 Ls (x) Ls^T),

with Ld' = L_d + a*1. Eigenoperators are classified as physical
(unit trace and positive semidefinite), traceful or traceless, ordered
physical / traceful / traceless with decreasing real part inside each
block; the dissipative gap is Re(lambda_0 - lambda_1) in that order.

This module also implements the standard-form construction
gen[rho] = -i[H,rho] + {G,rho} + sum_ij a_ij F_i rho F_j^dag over an
orthonormal operator basis, and its diagonalization into rates and
jump operators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import operator_core as oc
from .errors import (
    DegeneratePairingError,
    DimensionMismatchError,
    NearDefectiveError,
    NonHermitianError,
)
from .model import StochNHModel, l_det_effective
from .tolerances import (
    COND_DEFECTIVE,
    EPS_HERM,
    EPS_PAIRING,
    EPS_PSD,
    EPS_SUPPORT,
    EPS_TRACE,
)

__all__ = [
    "SpectralDecomposition",
    "SteadyStateResult",
    "Superoperator",
    "anti_dephasing_coefficients",
    "apply_generator",
    "build_liouvillian",
    "decompose",
    "expansion_coefficients",
    "gksl_g",
    "hermitian_basis",
    "pauli_basis",
    "standard_form",
    "steady_state",
]

_CLASS_RANK = {"physical": 0, "traceful": 1, "traceless": 2}


@dataclass(frozen=True)
class Superoperator:
    """N^2 x N^2 matrix acting on vectorized operators."""

    dim: int
    matrix: np.ndarray

    def __post_init__(self):
        m = oc.as_matrix(self.matrix)
        if m.shape[0] != self.dim**2:
            raise DimensionMismatchError(
                f"superoperator matrix {m.shape} does not match Hilbert dim {self.dim}"
            )
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def apply(self, rho) -> np.ndarray:
        return oc.devectorize(self.matrix @ oc.vectorize(rho), self.dim)


def apply_generator(m: StochNHModel, rho) -> np.ndarray:
    """Direct (matrix-free) evaluation of the generator on a state."""
    rho = oc.as_matrix(rho)
    ld = l_det_effective(m)
    ls = np.asarray(m.l_stoch)
    return (
        -1j * oc.commutator(m.h0, rho)
        - oc.anticommutator(ld, rho)
        + m.gamma * oc.anticommutator(ls, oc.anticommutator(ls, rho))
    )


def build_liouvillian(m: StochNHModel) -> Superoperator:
    """Vectorized generator; its action matches :func:`apply_generator`."""
    n = m.dim
    eye = oc.identity(n)
    ld = l_det_effective(m)
    ls = np.asarray(m.l_stoch)
    ls2 = ls @ ls
    mat = (
        -1j * (oc.kron(m.h0, eye) - oc.kron(eye, m.h0.T))
        - (oc.kron(ld, eye) + oc.kron(eye, ld.T))
        + m.gamma * (oc.kron(ls2, eye) + oc.kron(eye, ls2.T) + 2.0 * oc.kron(ls, ls.T))
    )
    return Superoperator(dim=n, matrix=mat)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigensystem of a Liouvillian in the physical/traceful/traceless order."""

    dim: int
    eigenvalues: np.ndarray
    right_ops: tuple
    left_ops: tuple
    classes: tuple
    order: tuple  # permutation from raw eigensolver order
    gap: float
    omegas: np.ndarray

    @property
    def size(self) -> int:
        return self.eigenvalues.size


def _classify(op: np.ndarray) -> tuple[str, np.ndarray]:
    """Return (class tag, possibly trace-normalized operator)."""
    tr = complex(np.trace(op))
    if abs(tr) <= EPS_TRACE:
        return "traceless", op
    op = op / tr
    herm_defect = oc.hermiticity_defect(op)
    scale = max(1.0, float(np.max(np.abs(op))))
    if herm_defect <= EPS_PSD * scale:
        herm = 0.5 * (op + op.conj().T)
        if float(np.linalg.eigvalsh(herm).min()) >= -EPS_PSD:
            return "physical", op
    return "traceful", op


def decompose(sop: Superoperator) -> SpectralDecomposition:
    """Spectral decomposition with eigenoperator classification.

    Raises :class:`NearDefectiveError` when the eigenvector matrix has
    condition number above ``COND_DEFECTIVE`` (exceptional-point
    vicinity); Jordan blocks are out of scope.
    """
    w, vr, vl = oc.eig(sop.matrix)
    cond = float(np.linalg.cond(vr))
    if not np.isfinite(cond) or cond > COND_DEFECTIVE:
        raise NearDefectiveError(
            f"eigenvector matrix condition number {cond:.3e} exceeds {COND_DEFECTIVE:.0e}"
        )
    n = sop.dim
    rights, lefts, classes = [], [], []
    for k in range(w.size):
        r = oc.devectorize(vr[:, k], n)
        tag, r = _classify(r)
        rights.append(r)
        lefts.append(oc.devectorize(vl[:, k], n))
        classes.append(tag)
    order = sorted(range(w.size), key=lambda k: (_CLASS_RANK[classes[k]], -w[k].real))
    w_sorted = np.array([w[k] for k in order])
    gap = float(w_sorted[0].real - w_sorted[1].real) if w.size > 1 else 0.0
    return SpectralDecomposition(
        dim=n,
        eigenvalues=w_sorted,
        right_ops=tuple(rights[k] for k in order),
        left_ops=tuple(lefts[k] for k in order),
        classes=tuple(classes[k] for k in order),
        order=tuple(order),
        gap=gap,
        omegas=w_sorted.imag.copy(),
    )


def expansion_coefficients(dec: SpectralDecomposition, rho0) -> np.ndarray:
    """Coefficients c_nu = (sigma_nu^l | rho0) / (sigma_nu^l | sigma_nu)."""
    rho0 = oc.as_matrix(rho0)
    coeffs = np.empty(dec.size, dtype=complex)
    for k in range(dec.size):
        lop, rop = dec.left_ops[k], dec.right_ops[k]
        pairing = oc.hs_inner(lop, rop)
        floor = EPS_PAIRING * max(1.0, float(np.linalg.norm(lop) * np.linalg.norm(rop)))
        if abs(pairing) < floor:
            raise DegeneratePairingError(
                f"left/right pairing for eigenvalue {dec.eigenvalues[k]:.6g} is {abs(pairing):.3e}"
            )
        coeffs[k] = oc.hs_inner(lop, rho0) / pairing
    return coeffs


@dataclass(frozen=True)
class SteadyStateResult:
    """Long-time limit starting from a given initial state.

    ``state`` is set when the support-restricted dominant set M1 is a
    single real eigenvalue; otherwise ``converged`` is False and the
    oscillating limit is described by ``m1`` and ``coefficients``.
    """

    state: np.ndarray | None
    m1: tuple
    coefficients: np.ndarray
    converged: bool


def steady_state(dec: SpectralDecomposition, rho0) -> SteadyStateResult:
    coeffs = expansion_coefficients(dec, rho0)
    support = np.abs(coeffs) > EPS_SUPPORT * float(np.max(np.abs(coeffs)))
    supported = np.flatnonzero(support)
    max_re = float(np.max(dec.eigenvalues[supported].real))
    m1 = tuple(k for k in supported if dec.eigenvalues[k].real > max_re - 1e-10)
    if len(m1) == 1 and abs(dec.eigenvalues[m1[0]].imag) <= 1e-10:
        k = m1[0]
        if dec.classes[k] != "traceless":
            return SteadyStateResult(
                state=dec.right_ops[k], m1=m1, coefficients=coeffs, converged=True
            )
    return SteadyStateResult(state=None, m1=m1, coefficients=coeffs, converged=False)


# ---------------------------------------------------------------------------
# Standard form: gen[rho] = -i[H,rho] + {G,rho} + sum a_ij F_i rho F_j^dag
# ---------------------------------------------------------------------------


def pauli_basis() -> list[np.ndarray]:
    """Orthonormal qubit operator basis with the identity last."""
    s = 1.0 / np.sqrt(2.0)
    return [s * oc.SIGMA_X, s * oc.SIGMA_Y, s * oc.SIGMA_Z, s * oc.ID2]


def hermitian_basis(n: int) -> list[np.ndarray]:
    """Orthonormal Hermitian operator basis for dimension n, identity last.

    Off-diagonal symmetric/antisymmetric pairs, then traceless diagonal
    combinations, then 1/sqrt(n); reduces to :func:`pauli_basis` up to
    ordering for n = 2.
    """
    basis: list[np.ndarray] = []
    s = 1.0 / np.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = m[j, i] = s
            basis.append(m)
            m = np.zeros((n, n), dtype=complex)
            m[i, j] = -1j * s
            m[j, i] = 1j * s
            basis.append(m)
    for k in range(1, n):
        d = np.zeros(n)
        d[:k] = 1.0
        d[k] = -float(k)
        basis.append(np.diag(d).astype(complex) / np.sqrt(k * (k + 1.0)))
    basis.append(oc.identity(n) / np.sqrt(n))
    return basis


def _check_basis(basis, n: int) -> None:
    if len(basis) != n * n:
        raise DimensionMismatchError(f"basis must have {n * n} elements, got {len(basis)}")
    gram = np.array([[oc.hs_inner(fi, fj) for fj in basis] for fi in basis])
    if np.max(np.abs(gram - np.eye(n * n))) > 1e-10:
        raise NonHermitianError("operator basis is not orthonormal under the HS product")
    if np.max(np.abs(basis[-1] - oc.identity(n) / np.sqrt(n))) > 1e-10:
        raise NonHermitianError("last basis element must be 1/sqrt(N)")


def standard_form(h, g, a_coeffs, basis) -> tuple[Superoperator, np.ndarray, list[np.ndarray]]:
    """Build the standard-form generator and its diagonal representation.

    Returns ``(generator, rates, ops)`` where the diagonal form
    ``sum_k rates[k] ops[k] rho ops[k]^dag`` reproduces the coefficient
    term exactly (unitary diagonalization of the Hermitian ``a_coeffs``).
    """
    h, g = oc.as_matrix(h), oc.as_matrix(g)
    n = h.shape[0]
    basis = [oc.as_matrix(f) for f in basis]
    _check_basis(basis, n)
    a = oc.as_matrix(a_coeffs)
    if a.shape[0] != n * n:
        raise DimensionMismatchError(f"a_coeffs must be {n * n}x{n * n}, got {a.shape}")
    if not oc.is_hermitian(a, EPS_HERM):
        raise NonHermitianError("a_coeffs must be Hermitian")

    eye = oc.identity(n)
    mat = -1j * (oc.kron(h, eye) - oc.kron(eye, h.T)) + (oc.kron(g, eye) + oc.kron(eye, g.T))
    for i, fi in enumerate(basis):
        for j, fj in enumerate(basis):
            if a[i, j] != 0:
                mat = mat + a[i, j] * oc.kron(fi, fj.conj())

    vals, vecs = np.linalg.eigh(a)
    ops = []
    for k in range(n * n):
        ak = sum(vecs[i, k] * basis[i] for i in range(n * n))
        ops.append(ak)
    return Superoperator(dim=n, matrix=mat), vals, ops


def gksl_g(a_coeffs, basis) -> np.ndarray:
    """The G making the standard form trace-preserving: -1/2 sum a_ij F_j^dag F_i."""
    a = oc.as_matrix(a_coeffs)
    basis = [oc.as_matrix(f) for f in basis]
    n2 = len(basis)
    g = np.zeros_like(basis[0])
    for i in range(n2):
        for j in range(n2):
            if a[i, j] != 0:
                g = g - 0.5 * a[i, j] * (basis[j].conj().T @ basis[i])
    return g


def anti_dephasing_coefficients(m: StochNHModel, basis) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Project a model's generator onto (H, G, a_ij) over an operator basis.

    H = H0, G = gamma*L_s^2 - (L_d + a*1), a_ij = 2*gamma*l_i*conj(l_j)
    with l_i = Tr(F_i^dag L_s); then the standard form reproduces the
    vectorized generator of the model.
    """
    basis = [oc.as_matrix(f) for f in basis]
    ls = np.asarray(m.l_stoch)
    ld = l_det_effective(m)
    g = m.gamma * (ls @ ls) - ld
    l_comps = np.array([oc.hs_inner(f, ls) for f in basis])
    a = 2.0 * m.gamma * np.outer(l_comps, l_comps.conj())
    return np.asarray(m.h0), g, a
