"""Noise-averaged dynamics of stochastic non-Hermitian Hamiltonians.

Core objects: a Hermitian Hamiltonian with deterministic and white-noise
fluctuating loss couplings (:mod:`antideph.model`), the vectorized
linear generator of the noise-averaged unnormalized state and its
spectral theory (:mod:`antideph.liouvillian`), three cross-validating
propagation back-ends (:mod:`antideph.dynamics`), the fully solvable
driven lossy qubit (:mod:`antideph.sdq`), state diagnostics and sweep
engines (:mod:`antideph.observables`), and a reproducible CLI
(:mod:`antideph.cli`).
"""

__version__ = "0.1.0"

from . import dynamics, errors, liouvillian, model, observables, operator_core, sdq
from .model import StochNHModel, build

__all__ = [
    "StochNHModel",
    "__version__",
    "build",
    "dynamics",
    "errors",
    "liouvillian",
    "model",
    "observables",
    "operator_core",
    "sdq",
]
