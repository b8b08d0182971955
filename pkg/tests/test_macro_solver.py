import logging

import numpy as np
import pytest

from msmix.errors import NumericalError, SingularSystemError, StabilityError, ValidationError
from msmix.grid import Grid1D
from msmix.macro_solver import (ClosureConfig, MacroState, SolverConfig, ctot_T_variation, flux_solve,
                                heat_step, run_macro, species_step, stable_dt, temperature_characteristics,
                                temperature_step_eulerian)
from msmix.mixture import AngularKernel, Mixture, build_diffusion_matrix
from msmix.scenarios import Scenario, macro_initial_state


def sine_state(grid, amp=0.3, n=2):
    ctot = 1.5 + amp * np.sin(2 * np.pi * grid.centers)
    c = np.array([ctot * (0.3 + 0.1 * k) for k in range(n)])
    c[-1] = ctot - c[:-1].sum(axis=0)
    return MacroState(0.0, c, 1.0 / ctot)


@pytest.mark.parametrize("scheme", ["explicit", "crank-nicolson"])
def test_heat_step_decays_fourier_mode(scheme):
    grid = Grid1D(0.0, 1.0, 128)
    state = sine_state(grid)
    closure = ClosureConfig(alpha=0.7)
    cfg = SolverConfig(heat_scheme=scheme)
    dt, steps = 0.2 * grid.dx**2, 50
    ctot = state.ctot
    for _ in range(steps):
        ctot = heat_step(MacroState(0.0, ctot[None, :], state.T), grid, closure, cfg, dt)
    exact = 1.5 + 0.3 * np.exp(-0.7 * 4 * np.pi**2 * steps * dt) * np.sin(2 * np.pi * grid.centers)
    assert np.max(np.abs(ctot - exact)) < 1e-4


def test_explicit_heat_step_rejects_large_dt():
    grid = Grid1D(0.0, 1.0, 64)
    with pytest.raises(StabilityError) as info:
        heat_step(sine_state(grid), grid, ClosureConfig(), SolverConfig(heat_scheme="explicit"), grid.dx**2)
    assert info.value.suggested_dt == pytest.approx(0.45 * grid.dx**2)


def test_binary_flux_matches_fickian_closed_form(binary, grid64):
    state = sine_state(grid64)
    state = MacroState(0.0, state.c, 1.0 + 0.2 * np.cos(2 * np.pi * grid64.centers))
    closure = ClosureConfig(alpha=0.8)
    D = build_diffusion_matrix(binary)
    res = flux_solve(state, binary, D, closure, grid64)
    c0, c1 = grid64.face_average(state.c)
    g0 = grid64.face_gradient(state.c[0] * state.T)
    total = -0.8 * grid64.face_gradient(state.ctot)
    # c_1 J_0 - c_0 J_1 = -D g_0 with J_0 + J_1 = total
    J0 = (-D[0, 1] * g0 + c0 * total) / (c0 + c1)
    np.testing.assert_allclose(res.J[0], J0, atol=1e-12)
    np.testing.assert_allclose(res.J[1], total - J0, atol=1e-12)
    assert np.max(np.abs(res.closure_residual)) < 1e-12
    # the two rows are antisymmetric, so the dropped one misses by the pressure gradient
    np.testing.assert_allclose(res.dropped_row_residual, -grid64.face_gradient(state.ctot * state.T), atol=1e-12)


def test_flux_rows_hold_for_ternary(ternary, grid64):
    state = sine_state(grid64, n=3)
    D = build_diffusion_matrix(ternary).values
    res = flux_solve(state, ternary, build_diffusion_matrix(ternary), ClosureConfig(), grid64)
    cf = grid64.face_average(state.c)
    rhs = grid64.face_gradient(state.c * state.T)
    for i in range(3):
        if i == res.dropped_species:
            continue
        lhs = -sum((cf[j] * res.J[i] - cf[i] * res.J[j]) / D[i, j] for j in range(3) if j != i)
        np.testing.assert_allclose(lhs, rhs[i], atol=1e-12)


def test_no_flux_boundary_carries_no_flux(binary):
    grid = Grid1D(0.0, 1.0, 32, "no-flux")
    state = sine_state(grid)
    res = flux_solve(state, binary, build_diffusion_matrix(binary), ClosureConfig(), grid)
    assert np.all(res.J[:, [0, -1]] == 0.0)


def test_singular_flux_system_names_weakest_species(binary, grid64):
    state = MacroState(0.0, np.zeros((2, 64)), np.ones(64))
    with pytest.raises(SingularSystemError, match="species 's1' has face concentration"):
        flux_solve(state, binary, build_diffusion_matrix(binary), ClosureConfig(), grid64, floor=0.0)


def test_species_step_conserves_mass(grid64):
    state = sine_state(grid64)
    J = np.random.default_rng(0).normal(size=(2, 65))
    J[:, -1] = J[:, 0]
    c = species_step(state, J, grid64, 1e-4)
    np.testing.assert_allclose(grid64.integrate(c), grid64.integrate(state.c), rtol=1e-14)


def test_species_step_aborts_on_large_clipping(grid64):
    state = sine_state(grid64)
    J = np.zeros((2, 65))
    J[0, 10] = 1e3
    with pytest.raises(NumericalError, match="clipping"):
        species_step(state, J, grid64, 1.0)


def test_species_step_clips_small_undershoot(grid64):
    c = np.ones((2, 64))
    c[0, 5] = 1e-14
    J = np.zeros((2, 65))
    J[0, 6] = 1e-12
    out = species_step(MacroState(0.0, c, np.ones(64)), J, grid64, 1.0, floor=1e-12, max_clip_fraction=1.0)
    assert out[0].min() >= 1e-12
    assert grid64.integrate(out[0]) == pytest.approx(grid64.integrate(c[0]), rel=1e-14)


def test_isothermal_closure_sum(binary, grid64):
    state = MacroState(0.0, sine_state(grid64).c * 0 + np.array([[0.4], [0.6]]) +
                       np.array([[0.1], [-0.1]]) * np.sin(2 * np.pi * grid64.centers), np.ones(64))
    res = flux_solve(state, binary, build_diffusion_matrix(binary), ClosureConfig(), grid64)
    assert np.max(np.abs(res.J.sum(axis=0))) < 1e-14


def test_temperature_drift_from_well_prepared_start(grid64):
    """``d_t log(c_tot T) = (5 alpha / 3) d_xx log c_tot`` when ``c_tot T`` is constant."""
    grid = Grid1D(0.0, 1.0, 512)
    state = sine_state(grid, amp=0.2)
    closure = ClosureConfig(alpha=0.5)
    cfg = SolverConfig()
    dt = 1e-7
    ctot_new = heat_step(state, grid, closure, cfg, dt)
    T_new = temperature_step_eulerian(state, ctot_new, grid, closure, dt)
    rate = (np.log(ctot_new * T_new) - np.log(state.ctot * state.T)) / dt
    expected = (5 * 0.5 / 3) * grid.laplacian(np.log(state.ctot))
    assert np.max(np.abs(rate - expected)) < 2e-2 * np.max(np.abs(expected))


def test_characteristics_reduce_to_pure_source_without_gradient(grid64):
    T0 = 1.0 + 0.1 * np.sin(2 * np.pi * grid64.centers)
    times = [0.0, 0.1]
    fields = [np.full(64, 2.0), np.full(64, 3.0)]
    T = temperature_characteristics(T0, (times, fields), grid64, ClosureConfig())
    np.testing.assert_allclose(T, T0 * 1.5 ** (2 / 3), rtol=1e-13)


def test_characteristics_reject_time_outside_history(grid64):
    with pytest.raises(ValidationError):
        temperature_characteristics(np.ones(64), ([0.0, 0.1], [np.ones(64)] * 2), grid64,
                                    ClosureConfig(), t=0.2)


def test_eulerian_step_rejects_large_courant(grid64):
    state = sine_state(grid64)
    with pytest.raises(StabilityError) as info:
        temperature_step_eulerian(state, state.ctot, grid64, ClosureConfig(), 1.0)
    assert 0 < info.value.suggested_dt < 1.0


def test_run_conserves_mass_and_keeps_max_principle(binary):
    grid = Grid1D(0.0, 1.0, 64)
    init = macro_initial_state(Scenario("gaussian", {"composition_amplitude": 0.1}), grid, 2)
    run = run_macro(binary, init, grid, ClosureConfig(), SolverConfig(t_end=0.02), output_times=[0.01])
    mass0 = run.diagnostics[0]["mass"]
    for d in run.diagnostics:
        np.testing.assert_allclose(d["mass"], mass0, rtol=1e-12)
        assert d["min_ctot"] >= 1.0 - 1e-12 and d["max_ctot"] <= 2.0 + 1e-12
    assert [s.time for s in run.snapshots] == pytest.approx([0.0, 0.01, 0.02])
    assert run.final.J is not None


def test_run_warns_on_ill_prepared_data(binary, grid64, caplog):
    init = macro_initial_state(Scenario("gaussian", {"temperature": "uniform"}), grid64, 2)
    with caplog.at_level(logging.WARNING):
        run_macro(binary, init, grid64, ClosureConfig(), SolverConfig(t_end=1e-4))
    assert "well prepared" in caplog.text


def test_run_attaches_partial_run_on_failure(binary, grid64):
    init = macro_initial_state(Scenario("gaussian"), grid64, 2)
    cfg = SolverConfig(t_end=0.01, dt=0.1, heat_scheme="explicit")
    with pytest.raises(StabilityError) as info:
        run_macro(binary, init, grid64, ClosureConfig(), cfg)
    assert info.value.partial_run.final.time == 0.0


def test_stable_dt_is_accepted(binary, grid64):
    init = macro_initial_state(Scenario("gaussian"), grid64, 2)
    dt = stable_dt(init, build_diffusion_matrix(binary), grid64, ClosureConfig(), SolverConfig())
    ctot = heat_step(init, grid64, ClosureConfig(), SolverConfig(), dt)
    temperature_step_eulerian(init, ctot, grid64, ClosureConfig(), dt)


def test_ctot_T_variation():
    assert ctot_T_variation(np.array([1.0, 2.0]), np.array([2.0, 1.0])) == 0.0
    assert ctot_T_variation(np.array([1.0, 3.0]), np.ones(2)) == pytest.approx(0.5)


@pytest.mark.parametrize("kwargs", [dict(dt=0.0), dict(cfl_safety=1.5), dict(heat_scheme="implicit"),
                                    dict(temperature_scheme="lagrangian"), dict(t_end=-1.0)])
def test_solver_config_validation(kwargs):
    with pytest.raises(ValidationError):
        SolverConfig(**kwargs)


def test_state_validation():
    with pytest.raises(ValidationError):
        MacroState(0.0, -np.ones((2, 8)), np.ones(8))
    with pytest.raises(ValidationError):
        MacroState(0.0, np.ones((2, 8)), np.zeros(8))
    with pytest.raises(ValidationError):
        ClosureConfig(alpha=0.0)


def test_fixed_step_above_species_bound_is_rejected(binary, grid64):
    init = macro_initial_state(Scenario("step"), grid64, 2)
    with pytest.raises(StabilityError) as info:
        run_macro(binary, init, grid64, ClosureConfig(), SolverConfig(t_end=1e-3, dt=0.6 * grid64.dx**2))
    assert info.value.suggested_dt == pytest.approx(0.5 * grid64.dx**2)


def test_gaussian_heat_kernel():
    grid = Grid1D(-5.0, 5.0, 512)
    s, alpha, t = 0.5, 1.0, 0.1
    ctot = 1.0 + np.exp(-grid.centers**2 / (2 * s**2))
    cfg = SolverConfig()
    steps = int(np.ceil(t / (0.9 * grid.dx**2)))
    dt = t / steps
    for _ in range(steps):
        ctot = heat_step(MacroState(0.0, ctot[None, :], np.ones(512)), grid, ClosureConfig(alpha), cfg, dt)
    var = s**2 + 2 * alpha * t
    exact = 1.0 + s / np.sqrt(var) * np.exp(-grid.centers**2 / (2 * var))
    assert np.max(np.abs(ctot - exact)) < 1e-3


def test_equimolar_counter_diffusion_decays_monotonically(binary):
    grid = Grid1D(0.0, 1.0, 64)
    init = macro_initial_state(Scenario("gaussian", {"ctot_amplitude": 0.0, "composition_amplitude": 0.2}),
                               grid, 2)
    run = run_macro(binary, init, grid, ClosureConfig(), SolverConfig(t_end=0.02), output_times=[0.005, 0.01])
    mean = init.c[0].mean()
    norms = [np.linalg.norm(s.c[0] - mean) for s in run.snapshots]
    assert all(b < a for a, b in zip(norms, norms[1:]))


def test_isothermal_fluxes_match_plain_maxwell_stefan(ternary, grid64):
    """At constant T and c_tot, the closure row only pins sum J = 0 and every row holds."""
    x = grid64.centers
    c = np.array([0.3 + 0.1 * np.sin(2 * np.pi * x), 0.3 - 0.1 * np.sin(2 * np.pi * x), np.full(64, 0.4)])
    state = MacroState(0.0, c, np.full(64, 1.3))
    res = flux_solve(state, ternary, build_diffusion_matrix(ternary), ClosureConfig(), grid64)
    np.testing.assert_allclose(res.dropped_row_residual, 0.0, atol=1e-13)
    assert np.max(np.abs(res.J.sum(axis=0))) < 1e-14


def test_characteristics_respect_source_bounds(grid64):
    scenario = Scenario("gaussian")
    init = macro_initial_state(scenario, grid64, 2)
    run = run_macro(Mixture.uniform([1.0, 2.0], AngularKernel.constant(0.5)), init, grid64, ClosureConfig(),
                    SolverConfig(t_end=0.01))
    times, fields = run.ctot_history
    T = temperature_characteristics(init.T, run.ctot_history, grid64, ClosureConfig())
    logs = np.log(fields)
    L = np.sum(np.max(np.abs(np.diff(logs, axis=0)), axis=1))
    assert np.all(T >= init.T.min() * np.exp(-(2 / 3) * L) - 1e-14)
    assert np.all(T <= init.T.max() * np.exp((2 / 3) * L) + 1e-14)
