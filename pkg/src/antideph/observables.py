"""State diagnostics and parameter-sweep engines.

Scalar diagnostics: purity and its exact instantaneous rate under the
normalized dynamics, the derived decoherence time, and Uhlmann fidelity
(general Hermitian-eigendecomposition route plus the qubit closed form).

Sweep engines evaluate the closed-form qubit-model quantities cell by
cell on a rectangular grid; each cell is independent and failures are
recorded per cell, never interpolated over.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import operator_core as oc
from . import sdq
from .errors import DimensionMismatchError, UnphysicalStateError
from .liouvillian import build_liouvillian
from .model import StochNHModel, l_det_effective

__all__ = [
    "SweepGrid",
    "decoherence_time",
    "fidelity_general",
    "fidelity_qubit",
    "purity",
    "purity_rate",
    "sweep_fidelity_map",
    "sweep_phase_diagram",
]


def purity(rho) -> float:
    """Tr(rho^2), in [1/N, 1] for a valid state."""
    rho = oc.as_matrix(rho)
    return float(np.trace(rho @ rho).real)


def purity_rate(rho, m: StochNHModel) -> float:
    """Exact d(Tr rho^2)/dt of the normalized dynamics at state rho.

    With Ld the deterministic coupling (gauge shift included), Ls the
    stochastic one, g the noise strength and P = Tr(rho^2):

        -4 Tr(Ld rho^2) + 4g (Tr(Ls^2 rho^2) + Tr(Ls rho Ls rho))
        + 4 Tr(Ld rho) P - 8g Tr(Ls^2 rho) P

    For pure rho this reduces to -4g Var(Ls); the Ld terms cancel.
    """
    rho = oc.as_matrix(rho)
    ld = l_det_effective(m)
    ls = np.asarray(m.l_stoch)
    g = m.gamma
    rho2 = rho @ rho
    p = np.trace(rho2).real
    ls_rho = ls @ rho
    val = (
        -4.0 * np.trace(ld @ rho2)
        + 4.0 * g * (np.trace(ls @ ls_rho @ rho) + np.trace(ls_rho @ ls_rho))
        + 4.0 * np.trace(ld @ rho) * p
        - 8.0 * g * np.trace(ls @ ls_rho) * p
    )
    return float(val.real)


def decoherence_time(rho0, m: StochNHModel) -> float:
    """Signed reciprocal of the initial purity rate; +inf if the rate is ~0."""
    rate = purity_rate(rho0, m)
    if abs(rate) <= 1e-14:
        return math.inf
    return 1.0 / rate


def _psd_eig(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    vals, vecs = np.linalg.eigh(rho)
    if vals.min() < -1e-9:
        raise UnphysicalStateError(f"state has eigenvalue {vals.min():.3e} < -1e-9")
    return np.clip(vals, 0.0, None), vecs


def fidelity_general(rho, sigma) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2.

    Matrix square roots go through Hermitian eigendecompositions with
    eigenvalues clipped at zero: states coming out of long integrations
    routinely carry ~1e-15 negative eigenvalues.
    """
    rho = oc.as_matrix(rho)
    sigma = oc.as_matrix(sigma)
    if rho.shape != sigma.shape:
        raise DimensionMismatchError(f"shape mismatch {rho.shape} vs {sigma.shape}")
    vals, vecs = _psd_eig(0.5 * (rho + rho.conj().T))
    sqrt_rho = (vecs * np.sqrt(vals)) @ vecs.conj().T
    inner = sqrt_rho @ (0.5 * (sigma + sigma.conj().T)) @ sqrt_rho
    ivals = np.linalg.eigvalsh(0.5 * (inner + inner.conj().T))
    if ivals.min() < -1e-9:
        raise UnphysicalStateError(f"inner product operator eigenvalue {ivals.min():.3e}")
    return float(np.sum(np.sqrt(np.clip(ivals, 0.0, None))) ** 2)


def fidelity_qubit(rho, sigma) -> float:
    """Two-level closed form: Tr(rho sigma) + 2 sqrt(det rho det sigma)."""
    rho = oc.as_matrix(rho)
    sigma = oc.as_matrix(sigma)
    if rho.shape != (2, 2) or sigma.shape != (2, 2):
        raise DimensionMismatchError("fidelity_qubit requires 2x2 states")
    dets = []
    for m in (rho, sigma):
        d = float(np.linalg.det(m).real)
        if d < -1e-12:
            raise UnphysicalStateError(f"state determinant {d:.3e} < -1e-12")
        dets.append(max(d, 0.0))
    val = float(np.trace(rho @ sigma).real) + 2.0 * math.sqrt(dets[0] * dets[1])
    return val


@dataclass(frozen=True)
class SweepGrid:
    """Rectangular sweep result: per-cell records in axis1-major order."""

    axis1: tuple[str, np.ndarray]
    axis2: tuple[str, np.ndarray]
    cells: list = field(default_factory=list)

    def __post_init__(self):
        expected = len(self.axis1[1]) * len(self.axis2[1])
        if len(self.cells) != expected:
            raise ValueError(f"expected {expected} cells, got {len(self.cells)}")


def sweep_phase_diagram(gamma_j_values, gamma_ratio_values, j: float = 1.0) -> SweepGrid:
    """Spectral gap, oscillation frequency, steady-state polarization
    and regime label over a (gamma_noise*J, Gamma/J) grid.

    Cells with a non-unique or complex slowest eigenvalue are marked
    failed with the reason recorded.
    """
    gj = np.asarray(gamma_j_values, dtype=float)
    ratios = np.asarray(gamma_ratio_values, dtype=float)
    cells = []
    for gamma_j in gj:
        for ratio in ratios:
            p = sdq.SDQParams(j=j, gamma_decay=ratio * j, gamma_noise=gamma_j / j)
            cell = {"gammaJ": gamma_j, "GammaOverJ": ratio}
            roots = sdq.cardano_spectrum(p)
            cell["gap"] = float(roots[0].real - roots[1].real)
            cell["omega_max"] = float(np.max(roots.imag))
            cell["phase_label"] = sdq.phase(p)
            try:
                _, y, z = sdq.steady_state_bloch(p)
                cell.update(z_ss=z, y_ss=y, status="complete", reason="")
            except Exception as exc:
                cell.update(z_ss=math.nan, y_ss=math.nan, status="failed", reason=str(exc))
            cells.append(cell)
    return SweepGrid(axis1=("gammaJ", gj), axis2=("GammaOverJ", ratios), cells=cells)


def _propagate_column(p: sdq.SDQParams, rho0: np.ndarray, times: np.ndarray) -> np.ndarray:
    """Normalized states at ``times`` via spectral propagation of the 4x4 generator."""
    m = build_liouvillian(sdq.to_model(p)).matrix
    w, vr = np.linalg.eig(m)
    v0 = oc.vectorize(rho0)
    coeffs = np.linalg.solve(vr, v0)
    modes = vr * coeffs  # columns scaled by expansion coefficients
    # shift by the leading rate: the overall exp(max Re w * t) factor
    # cancels under trace normalization and would otherwise under/overflow
    phases = np.exp(np.outer(times, w - np.max(w.real)))
    vecs = phases @ modes.T
    states = vecs.reshape(len(times), 2, 2)
    traces = np.einsum("tii->t", states)
    return states / traces[:, None, None]


def sweep_fidelity_map(
    gamma_noise: float, gamma_values, t_values, rho0=None, j: float = 1.0
) -> SweepGrid:
    """Fidelity of the evolving state against the steady state on a
    (Gamma, t) grid at fixed noise strength, with the two spectral
    timescales (1/gap and 2*pi/omega_max) recorded per cell.
    """
    gammas = np.asarray(gamma_values, dtype=float)
    times = np.asarray(t_values, dtype=float)
    if rho0 is None:
        rho0 = np.array([[1.0, 0.0], [0.0, 0.0]], dtype=complex)
    rho0 = oc.as_matrix(rho0)
    cells = []
    for g in gammas:
        p = sdq.SDQParams(j=j, gamma_decay=g, gamma_noise=gamma_noise)
        roots = sdq.cardano_spectrum(p)
        gap = float(roots[0].real - roots[1].real)
        omega = float(np.max(roots.imag))
        inv_gap = math.inf if gap == 0.0 else 1.0 / gap
        period = math.inf if omega <= 0.0 else 2.0 * math.pi / omega
        base = {"Gamma": g, "inv_gap": inv_gap, "period": period}
        try:
            target = sdq.analytic_steady_state(p)
            states = _propagate_column(p, rho0, times)
            column = []
            for t, st in zip(times, states):
                st = 0.5 * (st + st.conj().T)
                column.append(
                    dict(base, t=float(t), fidelity=fidelity_qubit(st, target),
                         status="complete", reason="")
                )
        except Exception as exc:
            column = [
                dict(base, t=float(t), fidelity=math.nan, status="failed", reason=str(exc))
                for t in times
            ]
        cells.extend(column)
    return SweepGrid(axis1=("Gamma", gammas), axis2=("t", times), cells=cells)
