import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from antideph import liouvillian as lv
from antideph import observables as ob
from antideph import sdq
from antideph.dynamics import TrajectoryConfig, evolve_exp, evolve_rk4, simulate_ensemble
from antideph.errors import DimensionMismatchError, UnphysicalStateError
from antideph.model import StochNHModel

from conftest import random_density, random_hermitian, random_pure


def test_purity_basics(rng):
    assert ob.purity(np.diag([1.0, 0.0])) == pytest.approx(1.0)
    assert ob.purity(np.eye(2) / 2) == pytest.approx(0.5)
    rho = sdq.bloch_to_rho(sdq.BlochState(0.2, 0.8, 0.4))
    assert ob.purity(rho) == pytest.approx(0.92)
    for n in (2, 3, 5):
        rho = random_density(rng, n)
        assert 1.0 / n - 1e-12 <= ob.purity(rho) <= 1.0 + 1e-12


def test_purity_rate_pure_state_is_variance(rng):
    for _ in range(50):
        n = int(rng.integers(2, 5))
        m = StochNHModel(
            h0=random_hermitian(rng, n),
            l_det=random_hermitian(rng, n),
            l_stoch=random_hermitian(rng, n),
            gamma=float(rng.uniform(0, 2)),
        )
        psi = random_pure(rng, n)
        ls = np.asarray(m.l_stoch)
        var = np.trace(ls @ ls @ psi).real - np.trace(ls @ psi).real ** 2
        assert abs(ob.purity_rate(psi, m) + 4 * m.gamma * var) < 1e-12


def test_purity_rate_eigenstate_of_coupling_is_zero():
    p = sdq.SDQParams(1.0, 1.3, 0.7)
    m = sdq.to_model(p)
    for state in (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])):
        assert abs(ob.purity_rate(state.astype(complex), m)) < 1e-14
        assert ob.decoherence_time(state.astype(complex), m) == math.inf


def test_decoherence_time_equal_superposition():
    p = sdq.SDQParams(1.0, 1.5, 0.4)
    m = sdq.to_model(p)
    rho = sdq.bloch_to_rho(sdq.BlochState(1.0, 0.0, 0.0))
    expected = -1.0 / (p.gamma_noise * p.gamma_decay**2)
    assert ob.decoherence_time(rho, m) == pytest.approx(expected)


def test_purity_rate_matches_rk4_finite_difference(rng):
    m = sdq.to_model(sdq.SDQParams(1.0, 1.0, 0.3))
    rho0 = random_density(rng, 2)
    dt = 1e-5
    ev = evolve_rk4(m, rho0, dt, 2 * dt, record_every=1)
    fd = (ob.purity(ev.states[2]) - ob.purity(ev.states[0])) / (2 * dt)
    rate = ob.purity_rate(ev.states[1], m)
    assert abs(fd - rate) <= 1e-3 * max(abs(rate), 1e-6)


def test_purity_rate_gauge_invariant(rng):
    from antideph.model import gauge_shift_identity, gauge_shift_stochastic

    m = StochNHModel(
        h0=random_hermitian(rng, 2),
        l_det=random_hermitian(rng, 2),
        l_stoch=random_hermitian(rng, 2),
        gamma=0.6,
    )
    rho = random_density(rng, 2)
    base = ob.purity_rate(rho, m)
    assert abs(ob.purity_rate(rho, gauge_shift_identity(m, 2.3)) - base) < 1e-12
    assert abs(ob.purity_rate(rho, gauge_shift_stochastic(m, -0.8)) - base) < 1e-10


def test_fidelity_general_basics(rng):
    rho = random_density(rng, 3)
    assert ob.fidelity_general(rho, rho) == pytest.approx(1.0, abs=1e-10)
    e = np.diag([0.0, 1.0]).astype(complex)
    f = np.diag([1.0, 0.0]).astype(complex)
    assert ob.fidelity_general(e, f) == pytest.approx(0.0, abs=1e-12)
    pure = random_pure(rng, 2)
    assert ob.fidelity_general(np.eye(2) / 2, pure) == pytest.approx(0.5, abs=1e-10)


def test_fidelity_symmetry_and_bounds(rng):
    for _ in range(25):
        a, b = random_density(rng, 3), random_density(rng, 3)
        f1, f2 = ob.fidelity_general(a, b), ob.fidelity_general(b, a)
        assert abs(f1 - f2) < 1e-10
        assert -1e-12 <= f1 <= 1 + 1e-12


def test_fidelity_one_iff_equal(rng):
    a = random_density(rng, 2)
    b = random_density(rng, 2)
    assert ob.fidelity_general(a, a) > 1 - 1e-9
    if np.max(np.abs(a - b)) > 1e-3:
        assert ob.fidelity_general(a, b) < 1 - 1e-9


def test_fidelity_qubit_equals_general(rng):
    for _ in range(200):
        a, b = random_density(rng, 2), random_density(rng, 2)
        assert abs(ob.fidelity_qubit(a, b) - ob.fidelity_general(a, b)) < 1e-10


def test_fidelity_qubit_det_clipping():
    pure = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    pure[0, 0] += 1e-14  # det slightly negative after rounding
    assert ob.fidelity_qubit(pure, np.eye(2) / 2) <= 1.0 + 1e-12


def test_fidelity_errors():
    with pytest.raises(DimensionMismatchError):
        ob.fidelity_qubit(np.eye(3) / 3, np.eye(3) / 3)
    with pytest.raises(UnphysicalStateError):
        ob.fidelity_general(np.diag([1.5, -0.5]), np.eye(2) / 2)


def test_sweep_grid_shape_invariant():
    with pytest.raises(ValueError):
        ob.SweepGrid(axis1=("a", np.arange(3)), axis2=("b", np.arange(2)), cells=[{}] * 5)


def test_sweep_phase_diagram_contents():
    gj = np.logspace(-2, 0, 4)
    ratios = np.logspace(-1, 1.5, 5)
    grid = ob.sweep_phase_diagram(gj, ratios)
    assert len(grid.cells) == 20
    for cell in grid.cells:
        assert cell["status"] in ("complete", "failed")
        if cell["status"] == "complete":
            assert cell["gap"] >= -1e-12
            assert abs(cell["z_ss"]) <= 1 + 1e-9
        assert cell["phase_label"] in ("PTu", "PTb", "NI", "boundary")


def test_sweep_phase_diagram_marks_degenerate_cells_failed():
    # gamma_decay = 0 has a complex leading pair: steady state undefined
    grid = ob.sweep_phase_diagram(np.array([0.1]), np.array([0.0]))
    cell = grid.cells[0]
    assert cell["status"] == "failed"
    assert cell["reason"]


def test_sweep_fidelity_map_t0_row_matches_direct():
    times = np.linspace(0.0, 5.0, 11)
    grid = ob.sweep_fidelity_map(0.05, np.array([0.5, 5.0]), times)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    for cell in grid.cells:
        if cell["t"] == 0.0 and cell["status"] == "complete":
            p = sdq.SDQParams(1.0, cell["Gamma"], 0.05)
            direct = ob.fidelity_qubit(rho0, sdq.analytic_steady_state(p))
            # sqrt(det) amplifies spectral-reconstruction noise for
            # near-pure states, so the match is 1e-7, not 1e-10
            assert cell["fidelity"] == pytest.approx(direct, abs=1e-7)


def test_sweep_fidelity_map_matches_exp_evolution():
    times = np.linspace(0.0, 4.0, 5)
    grid = ob.sweep_fidelity_map(0.05, np.array([1.0]), times)
    p = sdq.SDQParams(1.0, 1.0, 0.05)
    m = sdq.to_model(p)
    target = sdq.analytic_steady_state(p)
    rho0 = np.diag([1.0, 0.0]).astype(complex)
    ev = evolve_exp(lv.build_liouvillian(m), rho0, 1e-3, 4.0, record_every=1000)
    for cell in grid.cells:
        k = np.argmin(np.abs(ev.times - cell["t"]))
        ref = ob.fidelity_qubit(ev.states[k], target)
        assert cell["fidelity"] == pytest.approx(ref, abs=1e-8)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(0.0, 1.5), st.integers(0, 10**6))
def test_purity_rate_matches_generator_derivative(g, gam, seed):
    rng = np.random.default_rng(seed)
    m = sdq.to_model(sdq.SDQParams(1.0, g, gam))
    rho = random_density(rng, 2)
    gen = lv.apply_generator(m, rho)
    drho = gen - np.trace(gen) * rho
    analytic = 2.0 * np.trace(rho @ drho).real
    assert abs(ob.purity_rate(rho, m) - analytic) < 1e-10
