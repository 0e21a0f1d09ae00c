"""Driven lossy qubit with multiplicative white noise on the loss.

A two-level system spanned by (|f>, |e>) with coherent hopping J*sigma_x
and a fluctuating loss on |e>: the couplings are L_d = L_s = Gamma*P
with P = |e><e|. Everything about this model is analytically solvable:
the 4x4 generator spectrum reduces to a cubic (solved here in closed
form via Vieta's substitution), the steady state is an explicit
eigenvector, and the dynamics projected on the Bloch ball closes on
(x, y, z) alone.

Dimensionless shorthands used throughout, with G = gamma_decay and
g = gamma_noise:

    a_const = (G/J)(gG - 1)        b_const = 2(G/J)(2gG - 1)

Dynamical regimes (see :func:`phase`): oscillatory with a symmetric
near-mixed steady state for G/J < 2 and g < 1/(2G) ("PTu"),
overdamped polarizing toward |f> for G/J > 2 and g < 1/(2G) ("PTb"),
and noise-dominated polarizing toward |e> for g > 1/(2G) ("NI").
At exactly g = 1/(2G) the normalized dynamics is CPTP.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import operator_core as oc
from .errors import NoUniqueSteadyStateError, UnphysicalStateError
from .liouvillian import Superoperator
from .model import StochNHModel, build
from .tolerances import EPS_BOUNDARY

__all__ = [
    "BlochState",
    "SDQParams",
    "analytic_steady_state",
    "bloch_rhs",
    "bloch_to_rho",
    "cardano_spectrum",
    "hybrid_generator",
    "map_to_hybrid",
    "map_to_tilted",
    "nullcline_r_limit",
    "nullclines",
    "phase",
    "polar_rhs",
    "purity_rate_sdq",
    "rho_to_bloch",
    "steady_state_bloch",
    "success_rate",
    "tilted_generator",
    "to_model",
]

PROJECTOR_E = np.array([[0.0, 0.0], [0.0, 1.0]], dtype=complex)


@dataclass(frozen=True)
class SDQParams:
    """Model parameters: hopping j, loss rate gamma_decay, noise gamma_noise."""

    j: float
    gamma_decay: float
    gamma_noise: float

    def __post_init__(self):
        if not self.j > 0:
            raise ValueError(f"j must be > 0, got {self.j}")
        if self.gamma_decay < 0:
            raise ValueError(f"gamma_decay must be >= 0, got {self.gamma_decay}")
        if self.gamma_noise < 0:
            raise ValueError(f"gamma_noise must be >= 0, got {self.gamma_noise}")

    @property
    def a_const(self) -> float:
        return (self.gamma_decay / self.j) * (self.gamma_noise * self.gamma_decay - 1.0)

    @property
    def b_const(self) -> float:
        return 2.0 * (self.gamma_decay / self.j) * (2.0 * self.gamma_noise * self.gamma_decay - 1.0)


def to_model(p: SDQParams) -> StochNHModel:
    """The general model object for these parameters (L = Gamma |e><e|)."""
    return build(p.j * oc.SIGMA_X, p.gamma_decay * PROJECTOR_E, p.gamma_noise)


def phase(p: SDQParams) -> str:
    """Dynamical regime label: 'PTu', 'PTb', 'NI', or 'boundary'.

    Inputs within relative 1e-9 of either critical line (Gamma/J = 2 or
    gamma_noise = 1/(2*Gamma)) get the 'boundary' tag rather than an
    arbitrary side.
    """
    g, gam = p.gamma_decay, p.gamma_noise
    crit = math.inf if g == 0.0 else 1.0 / (2.0 * g)
    if math.isfinite(crit) and abs(gam - crit) <= EPS_BOUNDARY * crit:
        return "boundary"
    ratio = g / p.j
    on_ratio = abs(ratio - 2.0) <= EPS_BOUNDARY * 2.0
    if gam > crit:
        return "NI"
    if on_ratio:
        return "boundary"
    return "PTb" if ratio > 2.0 else "PTu"


def _cubic(a: float, b: float):
    """Coefficient helpers for f(x) = x^3 - (a+b)x^2 + (4+ab)x - 2b."""

    def f(x):
        return ((x - (a + b)) * x + (4.0 + a * b)) * x - 2.0 * b

    def df(x):
        return (3.0 * x - 2.0 * (a + b)) * x + (4.0 + a * b)

    return f, df


def _polish(root: complex, a: float, b: float) -> complex:
    """A few Newton steps in extended precision on the dimensionless cubic."""
    f, df = _cubic(np.clongdouble(a), np.clongdouble(b))
    x = np.clongdouble(root.real) + 1j * np.clongdouble(root.imag)
    for _ in range(3):
        d = df(x)
        if abs(d) == 0.0:
            break
        x = x - f(x) / d
    return complex(x)


def cardano_spectrum(p: SDQParams) -> np.ndarray:
    """All four generator eigenvalues in closed form, in rate units.

    The quartic characteristic polynomial factors into (x - a_const)
    and a cubic; the cubic is solved by Vieta's substitution
    x = u - c/u on the depressed form, taking the larger-magnitude
    root of the auxiliary quadratic in u^3 for stability and rotating
    through the three cube-root branches. Roots are Newton-polished in
    extended precision and returned sorted by descending real part, so
    index 0 is the slowest (steady-state) eigenvalue.
    """
    a, b = p.a_const, p.b_const
    shift = (a + b) / 3.0
    c = (4.0 + a * b) / 3.0 - shift * shift
    d = shift * (4.0 + a * b) - 2.0 * b - 2.0 * shift**3
    if c == 0.0 and d == 0.0:
        cubic_roots = [shift, shift, shift]
    else:
        disc = complex(d * d + 4.0 * c**3) ** 0.5
        w = (-d + disc) / 2.0
        w_alt = (-d - disc) / 2.0
        if abs(w_alt) > abs(w):
            w = w_alt
        u0 = w ** (1.0 / 3.0)
        cubic_roots = []
        for m in range(3):
            u = u0 * np.exp(2j * np.pi * m / 3.0)
            z = u if c == 0.0 else u - c / u
            cubic_roots.append(_polish(z + shift, a, b))
    roots = np.array([*cubic_roots, complex(a)]) * p.j
    order = np.lexsort((roots.imag, -roots.real))
    return roots[order]


def steady_state_bloch(p: SDQParams) -> tuple[float, float, float]:
    """Steady-state Bloch vector (x, y, z) from the slowest eigenvalue."""
    lam0 = _real_lambda0(p)
    den = 4.0 * p.j**2 + lam0 * (lam0 - p.a_const * p.j)
    z = -lam0 * (lam0 - p.a_const * p.j) / den
    y = 2.0 * lam0 * p.j / den
    return 0.0, y, z


def _real_lambda0(p: SDQParams) -> float:
    roots = cardano_spectrum(p)
    lam0 = roots[0]
    scale = max(1.0, abs(lam0))
    if abs(lam0.imag) > 1e-9 * scale:
        raise NoUniqueSteadyStateError(f"slowest eigenvalue is complex: {lam0:.6g}")
    close = np.abs(roots[1:].real - lam0.real) <= 1e-12 * scale
    if np.any(close & (np.abs(roots[1:] - lam0) > 1e-9 * scale)):
        raise NoUniqueSteadyStateError("slowest eigenvalue is degenerate")
    return float(lam0.real)


def analytic_steady_state(p: SDQParams) -> np.ndarray:
    """Unit-trace steady state from the closed-form eigenvector.

    With ell = lambda0/J the (unnormalized) vectorized state is
    (1, -i*ell/2, +i*ell/2, 1 + ell*(ell - a_const)/2).
    """
    ell = _real_lambda0(p) / p.j
    a = p.a_const
    vec = np.array(
        [1.0, -0.5j * ell, 0.5j * ell, 1.0 + 0.5 * ell * (ell - a)], dtype=complex
    )
    tr = vec[0].real + vec[3].real
    if tr <= 0.0:
        raise NoUniqueSteadyStateError(f"steady-state trace {tr:.3e} <= 0")
    rho = oc.devectorize(vec / tr)
    return 0.5 * (rho + rho.conj().T)


@dataclass(frozen=True)
class BlochState:
    """Point in the Bloch ball, Cartesian components."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        if self.r > 1.0 + 1e-9:
            raise UnphysicalStateError(f"Bloch radius {self.r:.12g} > 1")

    @property
    def r(self) -> float:
        return math.sqrt(self.x**2 + self.y**2 + self.z**2)

    @property
    def theta(self) -> float:
        return math.acos(min(1.0, max(-1.0, self.z / self.r))) if self.r > 0 else 0.0

    @property
    def phi(self) -> float:
        return math.atan2(self.y, self.x)

    @classmethod
    def from_polar(cls, r: float, theta: float, phi: float) -> "BlochState":
        st = math.sin(theta)
        return cls(r * st * math.cos(phi), r * st * math.sin(phi), r * math.cos(theta))


def bloch_to_rho(s: BlochState) -> np.ndarray:
    return 0.5 * (oc.ID2 + s.x * oc.SIGMA_X + s.y * oc.SIGMA_Y + s.z * oc.SIGMA_Z)


def rho_to_bloch(rho) -> BlochState:
    rho = oc.as_matrix(rho)
    return BlochState(
        float(np.trace(oc.SIGMA_X @ rho).real),
        float(np.trace(oc.SIGMA_Y @ rho).real),
        float(np.trace(oc.SIGMA_Z @ rho).real),
    )


def bloch_rhs(s: BlochState, p: SDQParams) -> tuple[float, float, float]:
    """Cartesian Bloch-vector velocity of the normalized dynamics."""
    j, g, gam = p.j, p.gamma_decay, p.gamma_noise
    k = gam * g * g + s.z * g * (1.0 - 2.0 * gam * g)
    dx = -k * s.x
    dy = -2.0 * j * s.z - k * s.y
    dz = 2.0 * j * s.y - g * (1.0 - 2.0 * gam * g) * (s.z**2 - 1.0)
    return dx, dy, dz


def polar_rhs(s: BlochState, p: SDQParams) -> tuple[float, float, float]:
    """(dr/dt, dtheta/dt, dphi/dt); dphi/dt is NaN on the polar axis."""
    if s.r <= 0.0:
        raise UnphysicalStateError("polar form requires r > 0")
    j, g, gam = p.j, p.gamma_decay, p.gamma_noise
    r, th, ph = s.r, s.theta, s.phi
    ct, st = math.cos(th), math.sin(th)
    dr = g * ((2.0 * gam * g - 1.0) * (r * r - 1.0) * ct - gam * g * r * st * st)
    dth = -(g * st / r) * (1.0 - 2.0 * gam * g + gam * g * r * ct) - 2.0 * j * math.sin(ph)
    dph = -2.0 * j * math.cos(ph) * ct / st if st != 0.0 else math.nan
    return dr, dth, dph


def purity_rate_sdq(s: BlochState, p: SDQParams) -> float:
    """d(Tr rho^2)/dt for a qubit state, = r * dr/dt."""
    g, gam = p.gamma_decay, p.gamma_noise
    r, ct = s.r, (s.z / s.r if s.r > 0 else 1.0)
    st2 = 1.0 - ct * ct
    return g * r * ((2.0 * gam * g - 1.0) * (r * r - 1.0) * ct - gam * g * r * st2)


def nullcline_r_limit(theta) -> np.ndarray:
    """Strong-noise (gamma_noise*Gamma -> inf) radial-velocity nullcline."""
    theta = np.asarray(theta, dtype=float)
    ct, st2 = np.cos(theta), np.sin(theta) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (st2 - np.sqrt(st2 * st2 + 16.0 * ct * ct)) / (4.0 * ct)
    r = np.where(np.abs(ct) < 1e-300, 0.0, r)
    return np.clip(r, 0.0, 1.0)


def nullclines(p: SDQParams, theta_grid) -> tuple[np.ndarray, np.ndarray]:
    """Radial and polar-angle nullclines in the x = 0 plane.

    Returns (r on the dr/dt = 0 curve, r on the dtheta/dt = 0 curve),
    both clipped to [0, 1]. The dr/dt = 0 quadratic is evaluated with
    its analytic theta = pi/2 limit (r = 0) where cos(theta) vanishes.
    """
    theta = np.asarray(theta_grid, dtype=float)
    g, gam = p.gamma_decay, p.gamma_noise
    ct, st = np.cos(theta), np.sin(theta)
    st2 = st * st
    a = (2.0 * gam * g - 1.0) * ct
    disc = np.sqrt((gam * g * st2) ** 2 + 4.0 * a * a)
    with np.errstate(divide="ignore", invalid="ignore"):
        r_nr = (gam * g * st2 - disc) / (2.0 * a)
    r_nr = np.where(np.abs(a) < 1e-300, 0.0, r_nr)
    r_nr = np.clip(r_nr, 0.0, 1.0)

    den = 2.0 * p.j + gam * g * g * ct * st
    with np.errstate(divide="ignore", invalid="ignore"):
        r_nth = g * (2.0 * gam * g - 1.0) * st / den
    r_nth = np.where(den == 0.0, 1.0, r_nth)
    r_nth = np.clip(r_nth, 0.0, 1.0)
    return r_nr, r_nth


def success_rate(p: SDQParams, rho_ff_history, times, c0: float = 1.0) -> np.ndarray:
    """Trace of the unnormalized state from the lossless-level population.

    Given the unnormalized |f>-population history on a uniform time
    grid, evaluates (with rate beta = J*b_const = 2*Gamma*(2*gamma*Gamma - 1))

        Tr(rho~_t) = e^{beta t} (c0 - beta * Int_0^t e^{-beta tau} rho~_ff dtau)

    by trapezoid quadrature. Constant (= c0) at gamma = 1/(2*Gamma).
    """
    times = np.asarray(times, dtype=float)
    pop = np.asarray(rho_ff_history, dtype=float)
    beta = p.j * p.b_const
    integ = cumulative_trapezoid(np.exp(-beta * times) * pop, times, initial=0.0)
    return np.exp(beta * times) * (c0 - beta * integ)


def map_to_tilted(p: SDQParams) -> tuple[float, float] | None:
    """Parameters (mu, s) of the equivalent jump-biased Lindblad form.

    mu = 2*Gamma*(1 - gamma*Gamma) and e^{-s} = 2*gamma*Gamma^2 / mu.
    Returns None when gamma >= 1/Gamma (the anticommutator weight would
    change sign and no such form exists).
    """
    g, gam = p.gamma_decay, p.gamma_noise
    if g > 0.0 and gam >= 1.0 / g:
        return None
    mu = 2.0 * g * (1.0 - gam * g)
    if mu == 0.0:
        return 0.0, math.inf
    ratio = 2.0 * gam * g * g / mu
    s = math.inf if ratio == 0.0 else -math.log(ratio)
    return mu, s


def map_to_hybrid(p: SDQParams) -> tuple[float, float] | None:
    """Parameters (mu, q) of the equivalent jump/no-jump mixture form.

    q = 2*gamma*Gamma^2 / mu with the same mu as :func:`map_to_tilted`.
    Returns None when the unnormalized trace is non-decreasing
    (gamma >= 1/(2*Gamma)), where the mixture weight loses meaning.
    """
    g, gam = p.gamma_decay, p.gamma_noise
    if g > 0.0 and gam >= 1.0 / (2.0 * g):
        return None
    mu = 2.0 * g * (1.0 - gam * g)
    q = 0.0 if mu == 0.0 else 2.0 * gam * g * g / mu
    return mu, q


def _jump_form_matrix(j: float, mu: float, weight: float) -> np.ndarray:
    """Vectorized -i[J sx, .] - (mu/2){P, .} + mu*weight*P.P superoperator."""
    eye = oc.identity(2)
    h = j * oc.SIGMA_X
    m = -1j * (oc.kron(h, eye) - oc.kron(eye, h.T))
    m -= 0.5 * mu * (oc.kron(PROJECTOR_E, eye) + oc.kron(eye, PROJECTOR_E.T))
    m += mu * weight * oc.kron(PROJECTOR_E, PROJECTOR_E.T)
    return m


def tilted_generator(j: float, mu: float, s: float) -> Superoperator:
    """Generator rebuilt from (mu, s); inverse check for map_to_tilted."""
    weight = 0.0 if math.isinf(s) else math.exp(-s)
    return Superoperator(dim=2, matrix=_jump_form_matrix(j, mu, weight))


def hybrid_generator(j: float, mu: float, q: float) -> Superoperator:
    """Generator rebuilt from (mu, q); inverse check for map_to_hybrid."""
    return Superoperator(dim=2, matrix=_jump_form_matrix(j, mu, q))
