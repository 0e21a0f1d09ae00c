"""Propagation back-ends.

Three mutually cross-validating routes for the same dynamics:

* Ito SDE trajectories of the unnormalized state (Euler-Maruyama or an
  exponential sandwich step), ensemble-averaged;
* 4th-order Runge-Kutta on the nonlinear trace-preserving master
  equation;
* Trotterized matrix-exponential propagation of the vectorized
  linear generator, normalized after the fact.

Trajectory ensembles use a splittable PRNG: stream ``i`` is derived
from ``SeedSequence(seed).spawn()`` child ``i``, so results are
reproducible and independent of chunking or execution order.

The Euler-Maruyama inner loop runs in a compiled Cython kernel when the
extension built, with a vectorized NumPy fallback selected at import
time (``ANTIDEPH_NO_EXT=1`` forces the fallback).
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .. import operator_core as oc
from ..errors import InstabilityError, UnphysicalStateError
from ..liouvillian import Superoperator, build_liouvillian
from ..model import StochNHModel, l_det_effective
from ..tolerances import BLOWUP_LIMIT
from . import _sde_numpy

_FORCE_PY = os.environ.get("ANTIDEPH_NO_EXT", "") not in ("", "0")
if not _FORCE_PY:
    try:
        from . import _sde_cython
    except ImportError:
        _sde_cython = None
else:
    _sde_cython = None

__all__ = [
    "EnsembleResult",
    "Evolution",
    "Trajectory",
    "TrajectoryConfig",
    "evolve_exp",
    "evolve_rk4",
    "kernel_backend",
    "sde_step",
    "simulate_ensemble",
    "simulate_trajectories",
]

_SCHEMES = ("euler_ito", "exp_step")
_MAX_RECORDED = 1000


def kernel_backend(force: str | None = None) -> str:
    """Name of the SDE kernel in use ('cython' or 'numpy')."""
    if force is not None:
        if force not in ("cython", "numpy"):
            raise ValueError(f"unknown kernel {force!r}")
        if force == "cython" and _sde_cython is None:
            raise RuntimeError("cython kernel not available")
        return force
    return "numpy" if _sde_cython is None else "cython"


def _run_chunk(backend: str):
    return _sde_numpy.run_chunk if backend == "numpy" else _sde_cython.run_chunk


@dataclass(frozen=True)
class TrajectoryConfig:
    """Discretization and ensemble parameters for SDE runs."""

    dt: float
    t_end: float
    n_traj: int = 1
    seed: int = 0
    scheme: str = "euler_ito"
    record_every: int | None = None
    chunk_size: int = 256

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.dt > self.t_end:
            raise ValueError(f"dt={self.dt} exceeds t_end={self.t_end}")
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.scheme not in _SCHEMES:
            raise ValueError(f"scheme must be one of {_SCHEMES}, got {self.scheme!r}")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


def _record_indices(n_steps: int, record_every: int | None) -> np.ndarray:
    stride = record_every if record_every else max(1, math.ceil(n_steps / _MAX_RECORDED))
    idx = list(range(0, n_steps + 1, stride))
    if idx[-1] != n_steps:
        idx.append(n_steps)
    return np.asarray(idx, dtype=np.int64)


@dataclass(frozen=True)
class Trajectory:
    """A single unnormalized-state trajectory sampled at ``times``."""

    times: np.ndarray
    states: np.ndarray  # (n_times, n, n), unnormalized
    traces: np.ndarray
    truncated: bool = False


@dataclass(frozen=True)
class EnsembleResult:
    """Noise average of the unnormalized evolution with per-entry stderr."""

    times: np.ndarray
    mean: np.ndarray  # (n_times, n, n) complex
    stderr: np.ndarray  # (n_times, n, n) real
    n_traj: int


@dataclass(frozen=True)
class Evolution:
    """Deterministic evolution record; ``raw_traces`` only for the exp back-end."""

    times: np.ndarray
    states: np.ndarray  # normalized for rk4/exp
    raw_traces: np.ndarray | None = None


def _drift_pieces(m: StochNHModel):
    ld = l_det_effective(m)
    ls = np.asarray(m.l_stoch)
    return np.asarray(m.h0), ld, ls


def sde_step(rho, m: StochNHModel, dt: float, dw: float, scheme: str = "euler_ito") -> np.ndarray:
    """One step of the unnormalized-state SDE.

    euler_ito:  rho + (-i[H0,rho] - {Ld,rho} + gamma{Ls,{Ls,rho}}) dt
                - sqrt(2 gamma) {Ls, rho} dW
    exp_step:   U rho U^dag with U = exp(-iH0 dt - Ld dt - sqrt(2 gamma) Ls dW)
    """
    rho = oc.as_matrix(rho)
    h0, ld, ls = _drift_pieces(m)
    if scheme == "euler_ito":
        anti = ls @ rho + rho @ ls
        drift = (
            -1j * (h0 @ rho - rho @ h0)
            - (ld @ rho + rho @ ld)
            + m.gamma * (ls @ anti + anti @ ls)
        )
        return rho + drift * dt - math.sqrt(2.0 * m.gamma) * anti * dw
    if scheme == "exp_step":
        u = oc.expm(-1j * h0 * dt - ld * dt - math.sqrt(2.0 * m.gamma) * ls * dw)
        return u @ rho @ u.conj().T
    raise ValueError(f"unknown scheme {scheme!r}")


def _euler_matrices(m: StochNHModel, dt: float) -> tuple[np.ndarray, np.ndarray]:
    eye = oc.identity(m.dim)
    lmat = build_liouvillian(m).matrix
    e_mat = np.eye(m.dim**2, dtype=complex) + dt * lmat
    ls = np.asarray(m.l_stoch)
    s_mat = -math.sqrt(2.0 * m.gamma) * (oc.kron(ls, eye) + oc.kron(eye, ls.T))
    return e_mat, s_mat


def _chunk_dw(children, lo: int, hi: int, n_steps: int, dt: float) -> np.ndarray:
    dw = np.empty((hi - lo, n_steps))
    root = math.sqrt(dt)
    for i in range(lo, hi):
        gen = np.random.Generator(np.random.Philox(children[i]))
        dw[i - lo] = gen.standard_normal(n_steps) * root
    return dw


def _iter_chunks(m, rho0, cfg, kernel, rec_idx):
    """Yield (lo, recorded chunk states (m, n_rec, n, n)) per chunk."""
    n = m.dim
    n_steps = cfg.n_steps
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.n_traj)
    v0 = oc.vectorize(oc.as_matrix(rho0))
    if cfg.scheme == "euler_ito":
        e_mat, s_mat = _euler_matrices(m, cfg.dt)
        run = _run_chunk(kernel)
        for lo in range(0, cfg.n_traj, cfg.chunk_size):
            hi = min(lo + cfg.chunk_size, cfg.n_traj)
            dw = _chunk_dw(children, lo, hi, n_steps, cfg.dt)
            chunk = run(e_mat, s_mat, v0, dw, rec_idx)
            finite = np.isfinite(chunk.view(float)).all(axis=(1, 2))
            if not finite.all():
                bad = int(np.flatnonzero(~finite)[0])
                raise InstabilityError(
                    f"non-finite trajectory state (seed={cfg.seed}, trajectory={lo + bad}, "
                    f"dt={cfg.dt}); reduce dt"
                )
            yield lo, chunk.reshape(hi - lo, len(rec_idx), n, n)
    else:  # exp_step: small-scale diagnostic path
        rho0 = oc.as_matrix(rho0)
        for lo in range(0, cfg.n_traj, cfg.chunk_size):
            hi = min(lo + cfg.chunk_size, cfg.n_traj)
            dw = _chunk_dw(children, lo, hi, n_steps, cfg.dt)
            chunk = np.empty((hi - lo, len(rec_idx), n, n), dtype=complex)
            for i in range(hi - lo):
                rho = rho0
                r = 0
                if rec_idx[r] == 0:
                    chunk[i, r] = rho
                    r += 1
                for k in range(n_steps):
                    rho = sde_step(rho, m, cfg.dt, dw[i, k], scheme="exp_step")
                    if r < len(rec_idx) and rec_idx[r] == k + 1:
                        chunk[i, r] = rho
                        r += 1
            yield lo, chunk


def simulate_ensemble(
    m: StochNHModel, rho0, cfg: TrajectoryConfig, kernel: str | None = None
) -> EnsembleResult:
    """Noise-averaged unnormalized evolution over ``cfg.n_traj`` Wiener paths.

    The mean converges to exp(gen*t)[rho0]; ``stderr`` is the entrywise
    standard error sqrt(Var(entry)/n_traj) with complex variance
    E|x|^2 - |E x|^2.
    """
    backend = kernel_backend(kernel)
    rec_idx = _record_indices(cfg.n_steps, cfg.record_every)
    n = m.dim
    total = np.zeros((len(rec_idx), n, n), dtype=complex)
    total_sq = np.zeros((len(rec_idx), n, n))
    for _, chunk in _iter_chunks(m, rho0, cfg, backend, rec_idx):
        total += chunk.sum(axis=0)
        total_sq += (np.abs(chunk) ** 2).sum(axis=0)
    mean = total / cfg.n_traj
    if cfg.n_traj > 1:
        var = (total_sq / cfg.n_traj - np.abs(mean) ** 2) * cfg.n_traj / (cfg.n_traj - 1)
        stderr = np.sqrt(np.clip(var, 0.0, None) / cfg.n_traj)
    else:
        stderr = np.zeros_like(total_sq)
    times = rec_idx * cfg.dt
    return EnsembleResult(times=times, mean=mean, stderr=stderr, n_traj=cfg.n_traj)


def simulate_trajectories(
    m: StochNHModel, rho0, cfg: TrajectoryConfig, kernel: str | None = None
) -> list[Trajectory]:
    """Individual trajectories (intended for small ensembles)."""
    backend = kernel_backend(kernel)
    rec_idx = _record_indices(cfg.n_steps, cfg.record_every)
    times = rec_idx * cfg.dt
    out: list[Trajectory] = []
    for _, chunk in _iter_chunks(m, rho0, cfg, backend, rec_idx):
        for states in chunk:
            traces = np.einsum("tii->t", states).real
            out.append(
                Trajectory(
                    times=times,
                    states=states,
                    traces=traces,
                    truncated=bool(np.any(traces <= 0.0)),
                )
            )
    return out


def _nonlinear_rhs(lmat: np.ndarray, diag_idx: np.ndarray, v: np.ndarray) -> np.ndarray:
    w = lmat @ v
    return w - w[diag_idx].sum() * v


def evolve_rk4(
    m: StochNHModel, rho0, dt: float, t_end: float, record_every: int | None = None
) -> Evolution:
    """RK4 integration of the nonlinear trace-preserving master equation.

    The state is defensively renormalized (divided by its trace) after
    every step, so Tr(rho) = 1 holds to machine precision at all times.
    """
    rho0 = oc.as_matrix(rho0)
    n = m.dim
    n_steps = max(1, int(round(t_end / dt)))
    rec_idx = _record_indices(n_steps, record_every)
    lmat = build_liouvillian(m).matrix
    diag_idx = np.arange(n) * (n + 1)
    v = oc.vectorize(rho0) / np.trace(rho0)
    states = np.empty((len(rec_idx), n, n), dtype=complex)
    r = 0
    if rec_idx[r] == 0:
        states[r] = v.reshape(n, n)
        r += 1
    for k in range(n_steps):
        k1 = _nonlinear_rhs(lmat, diag_idx, v)
        k2 = _nonlinear_rhs(lmat, diag_idx, v + 0.5 * dt * k1)
        k3 = _nonlinear_rhs(lmat, diag_idx, v + 0.5 * dt * k2)
        k4 = _nonlinear_rhs(lmat, diag_idx, v + dt * k3)
        v = v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        v = v / v[diag_idx].sum().real
        amax = np.max(np.abs(v))
        if not np.isfinite(amax) or amax > BLOWUP_LIMIT:
            raise InstabilityError(
                f"rk4 state blew up at step {k + 1} (t={dt * (k + 1):.6g}); reduce dt"
            )
        if r < len(rec_idx) and rec_idx[r] == k + 1:
            states[r] = v.reshape(n, n)
            r += 1
    return Evolution(times=rec_idx * dt, states=states)


def evolve_exp(
    sop: Superoperator, rho0, dt: float, t_end: float, record_every: int | None = None
) -> Evolution:
    """Trotterized exponential propagation of the linear generator.

    Precomputes K = expm(M*dt) once and iterates on the vectorized
    unnormalized state, recording the normalized state and the raw trace.
    """
    rho0 = oc.as_matrix(rho0)
    n = sop.dim
    n_steps = max(1, int(round(t_end / dt)))
    rec_idx = _record_indices(n_steps, record_every)
    kmat = oc.expm(sop.matrix * dt)
    diag_idx = np.arange(n) * (n + 1)
    v = oc.vectorize(rho0)
    states = np.empty((len(rec_idx), n, n), dtype=complex)
    traces = np.empty(len(rec_idx))

    def _record(slot, vec, step):
        tr = vec[diag_idx].sum().real
        if tr <= 0.0:
            raise UnphysicalStateError(f"trace {tr:.3e} <= 0 at step {step}")
        states[slot] = (vec / tr).reshape(n, n)
        traces[slot] = tr

    r = 0
    if rec_idx[r] == 0:
        _record(0, v, 0)
        r += 1
    for k in range(n_steps):
        v = kmat @ v
        tr = v[diag_idx].sum().real
        if tr <= 0.0:
            raise UnphysicalStateError(f"trace {tr:.3e} <= 0 at step {k + 1}")
        if r < len(rec_idx) and rec_idx[r] == k + 1:
            _record(r, v, k + 1)
            r += 1
    return Evolution(times=rec_idx * dt, states=states, raw_traces=traces)
