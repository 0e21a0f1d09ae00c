"""Trajectory and deterministic propagation back-ends."""

from .core import (
    EnsembleResult,
    Evolution,
    Trajectory,
    TrajectoryConfig,
    evolve_exp,
    evolve_rk4,
    kernel_backend,
    sde_step,
    simulate_ensemble,
    simulate_trajectories,
)

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
