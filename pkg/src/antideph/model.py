"""Stochastic non-Hermitian Hamiltonian model and its gauge freedom.

The model is H_t = H0 - i(L_d + a*1) - i*sqrt(2*gamma)*xi_t*(L_s),
with Hermitian H0 and Hermitian L_d, L_s. The common single-operator
case L_d = L_s = L >= 0 has a convenience constructor :func:`build`.

Two gauge transformations leave the normalized (trace-renormalized)
dynamics invariant: a constant imaginary energy shift ``a`` and a
constant shift ``b`` of the stochastic coupling. The latter is applied
together with the compensating deterministic shift
``L_d -> L_d + 4*gamma*b*L_s + 2*gamma*b^2*1``; the b^2 identity piece
makes the transformation an exact algebraic involution and in fact
leaves even the unnormalized generator invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import operator_core as oc
from .errors import NonHermitianError, NotPositiveSemidefiniteError
from .tolerances import EPS_HERM, EPS_POSITIVE

__all__ = [
    "StochNHModel",
    "build",
    "gauge_shift_identity",
    "gauge_shift_stochastic",
    "l_det_effective",
    "model_from_dict",
    "model_to_dict",
    "trace_rate",
]


def _frozen(m) -> np.ndarray:
    a = np.array(m, dtype=complex)
    a.setflags(write=False)
    return a


def _require_hermitian(name: str, m: np.ndarray) -> None:
    if not oc.is_hermitian(m, EPS_HERM):
        raise NonHermitianError(f"{name} is not Hermitian (defect {oc.hermiticity_defect(m):.3e})")


@dataclass(frozen=True)
class StochNHModel:
    """Immutable model definition.

    h0: Hermitian Hamiltonian (hbar = 1).
    l_det: deterministic anti-Hermitian coupling L_d (rate units).
    l_stoch: stochastic coupling L_s (rate units).
    gamma: white-noise strength (time units), >= 0.
    offset_a: accumulated identity gauge shift.
    offset_b: accumulated stochastic gauge shift (bookkeeping; the
        operator fields already include its effect).
    """

    h0: np.ndarray
    l_det: np.ndarray
    l_stoch: np.ndarray
    gamma: float
    offset_a: float = 0.0
    offset_b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "h0", _frozen(self.h0))
        object.__setattr__(self, "l_det", _frozen(self.l_det))
        object.__setattr__(self, "l_stoch", _frozen(self.l_stoch))
        for name in ("h0", "l_det", "l_stoch"):
            m = getattr(self, name)
            oc.as_matrix(m)
            _require_hermitian(name, m)
        if self.h0.shape != self.l_det.shape or self.h0.shape != self.l_stoch.shape:
            raise NonHermitianError("h0, l_det, l_stoch must share one dimension")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def dim(self) -> int:
        return self.h0.shape[0]


def build(h0, l, gamma: float) -> StochNHModel:
    """Single-coupling constructor: L_d = L_s = L with L Hermitian, L >= 0."""
    l = oc.as_matrix(l)
    _require_hermitian("l", l)
    min_eig = float(np.linalg.eigvalsh(l).min())
    if min_eig < -EPS_POSITIVE:
        raise NotPositiveSemidefiniteError(f"l has negative eigenvalue {min_eig:.3e}")
    return StochNHModel(h0=h0, l_det=l, l_stoch=l, gamma=float(gamma))


def l_det_effective(m: StochNHModel) -> np.ndarray:
    """Deterministic coupling including the identity gauge shift."""
    return m.l_det + m.offset_a * oc.identity(m.dim)


def gauge_shift_identity(m: StochNHModel, a: float) -> StochNHModel:
    """Shift L_d by a*1; normalized dynamics is unchanged."""
    return replace(m, offset_a=m.offset_a + float(a))


def gauge_shift_stochastic(m: StochNHModel, b: float) -> StochNHModel:
    """Shift L_s by b*1 with the compensating deterministic shift.

    L_s -> L_s + b*1 and L_d -> L_d + 4*gamma*b*L_s + 2*gamma*b^2*1.
    Applying the shift with -b afterwards restores the fields exactly.
    """
    b = float(b)
    eye = oc.identity(m.dim)
    new_ls = m.l_stoch + b * eye
    new_ld = m.l_det + 4.0 * m.gamma * b * np.asarray(m.l_stoch) + 2.0 * m.gamma * b * b * eye
    return replace(m, l_stoch=new_ls, l_det=new_ld, offset_b=m.offset_b + b)


def trace_rate(m: StochNHModel, rho) -> float:
    """Instantaneous trace rate Tr(generator[rho]) including offsets.

    For a unit-trace state: -2 Tr(L_d rho) - 2 a + 4 gamma Tr(L_s^2 rho).
    """
    rho = oc.as_matrix(rho)
    ls2 = m.l_stoch @ m.l_stoch
    val = (
        -2.0 * np.trace(m.l_det @ rho)
        - 2.0 * m.offset_a * np.trace(rho)
        + 4.0 * m.gamma * np.trace(ls2 @ rho)
    )
    return float(val.real)


def _matrix_to_pairs(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def _pairs_to_matrix(rows) -> np.ndarray:
    try:
        return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (TypeError, ValueError) as exc:
        raise ValueError(f"matrix entries must be [re, im] pairs: {exc}") from exc


def model_to_dict(m: StochNHModel) -> dict:
    """JSON-friendly descriptor accepted by the CLI."""
    d = {
        "h0": _matrix_to_pairs(m.h0),
        "gamma": m.gamma,
        "offset_a": m.offset_a,
        "offset_b": m.offset_b,
    }
    if np.array_equal(m.l_det, m.l_stoch):
        d["l"] = _matrix_to_pairs(m.l_det)
    else:
        d["l_det"] = _matrix_to_pairs(m.l_det)
        d["l_stoch"] = _matrix_to_pairs(m.l_stoch)
    return d


def model_from_dict(d: dict) -> StochNHModel:
    known = {"h0", "l", "l_det", "l_stoch", "gamma", "offset_a", "offset_b"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown model keys: {sorted(unknown)}")
    h0 = _pairs_to_matrix(d["h0"])
    if "l" in d:
        if "l_det" in d or "l_stoch" in d:
            raise ValueError("give either 'l' or the pair 'l_det'/'l_stoch', not both")
        l_det = l_stoch = _pairs_to_matrix(d["l"])
    else:
        l_det = _pairs_to_matrix(d["l_det"])
        l_stoch = _pairs_to_matrix(d["l_stoch"])
    return StochNHModel(
        h0=h0,
        l_det=l_det,
        l_stoch=l_stoch,
        gamma=float(d["gamma"]),
        offset_a=float(d.get("offset_a", 0.0)),
        offset_b=float(d.get("offset_b", 0.0)),
    )
