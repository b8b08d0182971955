"""Limit system under the decoupling closure on a 1D slab.

Unknowns are the species concentrations ``c_i`` and the common temperature
``T``. One step of :func:`run_macro` is

1. ``c_tot`` advanced by the heat equation ``d_t c_tot = alpha c_tot_xx``;
2. ``T`` advanced by ``d_t T - (2/3) d_t(log c_tot) T + V d_x T = 0`` with
   ``V = -(5 alpha / 3) d_x log c_tot``;
3. face fluxes from the Maxwell-Stefan relations plus ``sum_i J_i = -alpha d_x c_tot``;
4. conservative update ``d_t c_i + d_x J_i = 0``.

All right-hand sides use the state at the start of the step.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MsmixError, NumericalError, SingularSystemError, StabilityError, ValidationError
from .grid import Grid1D
from .mixture import DiffusionMatrix, Mixture, build_diffusion_matrix

__all__ = [
    "Grid1D", "MacroState", "ClosureConfig", "SolverConfig", "FluxResult", "MacroRun",
    "heat_step", "temperature_step_eulerian", "temperature_characteristics", "flux_solve",
    "species_step", "run_macro", "stable_dt", "species_dt_bound", "ctot_T_variation",
]

log = logging.getLogger(__name__)

HEAT_SCHEMES = ("explicit", "crank-nicolson")
TEMPERATURE_SCHEMES = ("eulerian-upwind", "characteristics")
CLOSURES = ("decoupling",)


@dataclass(frozen=True)
class MacroState:
    time: float
    c: np.ndarray
    T: np.ndarray
    J: np.ndarray | None = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        T = np.array(self.T, dtype=float)
        if c.ndim != 2 or T.shape != c.shape[1:]:
            raise ValidationError(f"state shapes: c {c.shape}, T {T.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValidationError("concentrations must be finite and >= 0")
        if np.any(T <= 0) or not np.all(np.isfinite(T)):
            raise ValidationError("temperature must be finite and > 0")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "T", T)
        if self.J is not None:
            object.__setattr__(self, "J", np.array(self.J, dtype=float))

    @property
    def n_species(self) -> int:
        return self.c.shape[0]

    @property
    def ctot(self) -> np.ndarray:
        return self.c.sum(axis=0)


@dataclass(frozen=True)
class ClosureConfig:
    alpha: float = 1.0
    kind: str = "decoupling"

    def __post_init__(self):
        if not np.isfinite(self.alpha) or self.alpha <= 0:
            raise ValidationError(f"closure.alpha must be > 0, got {self.alpha}")
        if self.kind not in CLOSURES:
            raise ValidationError(f"closure kind must be one of {CLOSURES}, got {self.kind!r}")


@dataclass(frozen=True)
class SolverConfig:
    dt: float | None = None
    t_end: float = 0.1
    cfl_safety: float = 0.9
    heat_scheme: str = "crank-nicolson"
    temperature_scheme: str = "eulerian-upwind"
    ctot_T_variation: float = 1e-2
    nonnegativity_floor: float = 1e-12

    def __post_init__(self):
        if self.dt is not None and not self.dt > 0:
            raise ValidationError(f"solver.dt must be > 0 or auto, got {self.dt}")
        if not self.t_end >= 0:
            raise ValidationError(f"solver.t_end must be >= 0, got {self.t_end}")
        if not 0 < self.cfl_safety <= 1:
            raise ValidationError(f"solver.cfl_safety must be in (0, 1], got {self.cfl_safety}")
        if self.heat_scheme not in HEAT_SCHEMES:
            raise ValidationError(f"solver.heat_scheme must be one of {HEAT_SCHEMES}")
        if self.temperature_scheme not in TEMPERATURE_SCHEMES:
            raise ValidationError(f"solver.temperature_scheme must be one of {TEMPERATURE_SCHEMES}")
        if not self.ctot_T_variation > 0:
            raise ValidationError("solver.ctot_T_variation must be > 0")
        if not self.nonnegativity_floor >= 0:
            raise ValidationError("solver.nonnegativity_floor must be >= 0")


def ctot_T_variation(c_tot, T) -> float:
    """``max |c_tot T - mean| / mean`` over the grid."""
    p = np.asarray(c_tot) * np.asarray(T)
    mean = p.mean()
    return float(np.max(np.abs(p - mean)) / mean)


# --- heat equation for c_tot ------------------------------------------------

@lru_cache(maxsize=16)
def _laplacian_matrix(n: int, periodic: bool) -> sp.csc_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    L = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        L[0, n - 1] = 1.0
        L[n - 1, 0] = 1.0
    else:
        L[0, 0] = -1.0
        L[n - 1, n - 1] = -1.0
    return L.tocsc()


@lru_cache(maxsize=16)
def _cn_factor(n: int, periodic: bool, r: float):
    L = _laplacian_matrix(n, periodic)
    A = (sp.identity(n, format="csc") - 0.5 * r * L).tocsc()
    return spla.splu(A)


def heat_step(state: MacroState, grid: Grid1D, closure: ClosureConfig, config: SolverConfig,
              dt: float) -> np.ndarray:
    """Advance ``c_tot`` by one step of ``d_t c_tot = alpha d_xx c_tot``.

    Explicit steps need ``alpha dt / dx^2 <= cfl_safety / 2``; Crank-Nicolson
    steps keep the discrete maximum principle for ``alpha dt / dx^2 <= 1``.
    """
    ctot = state.ctot
    r = closure.alpha * dt / grid.dx**2
    if config.heat_scheme == "explicit":
        limit = 0.5 * config.cfl_safety
        if r > limit * (1 + 1e-12):
            raise StabilityError(f"explicit heat step: alpha dt/dx^2 = {r:.4g} exceeds {limit:.4g}",
                                 suggested_dt=limit * grid.dx**2 / closure.alpha)
        return ctot + r * grid.dx**2 * grid.laplacian(ctot)
    if r > 1.0 + 1e-12:
        raise StabilityError(f"Crank-Nicolson heat step: alpha dt/dx^2 = {r:.4g} exceeds the "
                             "maximum-principle bound 1", suggested_dt=grid.dx**2 / closure.alpha)
    rhs = ctot + 0.5 * r * grid.dx**2 * grid.laplacian(ctot)
    return _cn_factor(grid.n_cells, grid.periodic, float(r)).solve(rhs)


# --- temperature ------------------------------------------------------------

def _advection_velocity(ctot, grid: Grid1D, closure: ClosureConfig) -> np.ndarray:
    """``V = -(5 alpha / 3) d_x log c_tot`` on faces."""
    return -(5.0 * closure.alpha / 3.0) * grid.face_gradient(np.log(ctot))


def temperature_step_eulerian(state: MacroState, ctot_new, grid: Grid1D, closure: ClosureConfig,
                              dt: float, cfl_safety: float = 1.0) -> np.ndarray:
    """First-order upwind advection of ``T`` plus an exact exponential source step.

    ``ctot_new`` is the heat-step output; the source uses the discrete
    ``d_t log c_tot = (log ctot_new - log ctot) / dt``.
    """
    ctot = state.ctot
    ctot_new = np.asarray(ctot_new, dtype=float)
    if np.any(ctot <= 0) or np.any(ctot_new <= 0):
        raise NumericalError("temperature step needs strictly positive c_tot")
    V = grid.cell_average(_advection_velocity(ctot, grid, closure))
    courant = dt * np.max(np.abs(V)) / grid.dx
    if courant > cfl_safety * (1 + 1e-12):
        vmax = np.max(np.abs(V))
        raise StabilityError(f"temperature advection Courant number {courant:.4g} exceeds {cfl_safety}",
                             suggested_dt=cfl_safety * grid.dx / vmax)
    T = state.T
    ext = grid._extend(T)
    back = (ext[1:-1] - ext[:-2]) / grid.dx
    fwd = (ext[2:] - ext[1:-1]) / grid.dx
    dTdx = np.where(V > 0, back, fwd)
    T_adv = T - dt * V * dTdx
    return T_adv * np.exp((2.0 / 3.0) * (np.log(ctot_new) - np.log(ctot)))


def _interp_periodic(xq, xp, fp, period, x0):
    return np.interp((xq - x0) % period + x0, xp, fp, period=period)


def temperature_characteristics(initial_T, ctot_history, grid: Grid1D, closure: ClosureConfig,
                                t: float | None = None, substeps: int = 1) -> np.ndarray:
    """``T(t, x) = T_in(X(0; t, x)) exp((2/3) int_0^t d_t log c_tot(s, X(s; t, x)) ds)``.

    ``ctot_history`` is ``(times, fields)`` with ``fields[k]`` the cell values
    of ``c_tot`` at ``times[k]``. Characteristics are traced backward from the
    cell centres with Heun's method on every history interval (optionally
    subdivided), with ``V`` linearly interpolated in space and time and
    ``d_t log c_tot`` piecewise constant in time on each interval. The
    exponent is accumulated with the trapezoid rule.
    """
    times, fields = ctot_history
    times = np.asarray(times, dtype=float)
    fields = np.asarray(fields, dtype=float)
    if fields.ndim != 2 or fields.shape[0] != times.size or times.size < 1:
        raise ValidationError("ctot_history must be (times[K], fields[K, n_cells])")
    if np.any(fields <= 0):
        raise NumericalError("characteristics need strictly positive c_tot history")
    if t is None:
        t = times[-1]
    if t > times[-1] * (1 + 1e-12) or t < times[0]:
        raise ValidationError(f"t={t} outside the c_tot history [{times[0]}, {times[-1]}]")
    xc, xf = grid.centers, grid.faces
    logs = np.log(fields)
    V = np.array([_advection_velocity(f, grid, closure) for f in fields])
    T_in = np.asarray(initial_T, dtype=float)

    def interp(xq, xp, fp):
        if grid.periodic:
            return _interp_periodic(xq, xp, fp, grid.length, grid.x_min)
        return np.interp(xq, xp, fp)

    clamped = False

    def clamp(x):
        nonlocal clamped
        if grid.periodic:
            return x
        out = np.clip(x, grid.x_min, grid.x_max)
        clamped = clamped or bool(np.any(out != x))
        return out

    last = int(np.searchsorted(times, t, side="left"))
    last = min(max(last, 1), times.size - 1) if times.size > 1 else 0
    X = xc.copy()
    exponent = np.zeros_like(xc)
    s_hi = t
    for k in range(last, 0, -1):
        t0, t1 = times[k - 1], times[k]
        h_int = t1 - t0
        rate_field = (logs[k] - logs[k - 1]) / h_int
        s_top = min(s_hi, t1)
        if s_top <= t0:
            continue
        nsub = max(1, int(substeps))
        h = (s_top - t0) / nsub
        for q in range(nsub):
            sa = s_top - q * h
            sb = sa - h
            wa, wb = (sa - t0) / h_int, (sb - t0) / h_int
            Va = (1 - wa) * V[k - 1] + wa * V[k]
            Vb = (1 - wb) * V[k - 1] + wb * V[k]
            va = interp(X, xf, Va)
            Xp = clamp(X - h * va)
            vb = interp(Xp, xf, Vb)
            Xn = clamp(X - 0.5 * h * (va + vb))
            exponent += 0.5 * h * (interp(X, xc, rate_field) + interp(Xn, xc, rate_field))
            X = Xn
        s_hi = t0
    if clamped:
        log.warning("characteristic left the no-flux domain; clamped to the boundary")
    return interp(X, xc, T_in) * np.exp((2.0 / 3.0) * exponent)


# --- Maxwell-Stefan fluxes ----------------------------------------------------

@dataclass
class FluxResult:
    J: np.ndarray
    dropped_species: int
    dropped_row_residual: np.ndarray
    closure_residual: np.ndarray


def flux_solve(state: MacroState, mixture: Mixture, diffusion: DiffusionMatrix,
               closure: ClosureConfig, grid: Grid1D, floor: float = 1e-12) -> FluxResult:
    """Face fluxes from ``n - 1`` Maxwell-Stefan rows plus the closure row.

    Row ``i`` reads ``d_x(c_i T) = -sum_{j != i} (c_j J_i - c_i J_j) / D_ij``
    with face concentrations from the arithmetic mean of the neighbouring
    cells (floored at ``floor``). The row of the species with the largest
    mean concentration is replaced by ``sum_i J_i = -alpha d_x c_tot``; its
    residual is returned for monitoring.
    """
    n = state.n_species
    if n != mixture.n or diffusion.n != n:
        raise ValidationError("state, mixture and diffusion matrix disagree on species count")
    cf = np.maximum(grid.face_average(state.c), floor)          # (n, F)
    rhs = grid.face_gradient(state.c * state.T[None, :])        # (n, F)
    grad_ctot = grid.face_gradient(state.ctot)
    D = diffusion.values
    invD = np.zeros_like(D)
    off = ~np.eye(n, dtype=bool)
    invD[off] = 1.0 / D[off]

    F = cf.shape[1]
    A = np.zeros((F, n, n))
    for i in range(n):
        A[:, i, i] = -np.sum(invD[i, :, None] * cf, axis=0)
        for j in range(n):
            if j != i:
                A[:, i, j] = invD[i, j] * cf[i]
    full_A = A.copy()
    b = rhs.T.copy()                                            # (F, n)
    drop = int(np.argmax(state.c.mean(axis=1)))
    A[:, drop, :] = 1.0
    b[:, drop] = -closure.alpha * grad_ctot

    active = grid.interior_faces()
    J = np.zeros((F, n))
    try:
        J[active] = np.linalg.solve(A[active], b[active][..., None])[..., 0]
    except np.linalg.LinAlgError:
        J[active] = np.nan
    bad = ~np.all(np.isfinite(J), axis=1)
    if np.any(bad):
        face = int(np.argmax(bad))
        weakest = int(np.argmin(cf[:, face]))
        raise SingularSystemError(f"singular flux system at face {face} (x={grid.faces[face]:.6g}); "
                                  f"species {mixture.names[weakest]!r} has face concentration "
                                  f"{cf[weakest, face]:.3g}")
    resid = np.einsum("fj,fj->f", full_A[:, drop, :], J) - rhs[drop]
    resid[~active] = 0.0
    closure_res = J.sum(axis=1) + closure.alpha * grad_ctot
    closure_res[~active] = 0.0
    return FluxResult(J.T.copy(), drop, resid, closure_res)


# --- species update -----------------------------------------------------------

def species_step(state: MacroState, fluxes, grid: Grid1D, dt: float, floor: float = 1e-12,
                 max_clip_fraction: float = 1e-6) -> np.ndarray:
    """Conservative update ``c_i <- c_i - dt d_x J_i``.

    Values that drop below ``floor`` are lifted to it and the added mass is
    taken back proportionally from the remaining cells of that species.
    """
    c = state.c - dt * grid.divergence(fluxes)
    for i in range(c.shape[0]):
        low = c[i] < floor
        if not np.any(low):
            continue
        deficit = float(np.sum(floor - c[i][low])) * grid.dx
        total = float(grid.integrate(state.c[i]))
        if total > 0 and deficit > max_clip_fraction * total:
            raise NumericalError(f"species {i}: clipping {deficit:.3g} exceeds "
                                 f"{max_clip_fraction:g} of its mass {total:.3g}")
        c[i][low] = floor
        rest = ~low
        excess = c[i][rest] - floor
        if deficit > 0 and excess.sum() > 0:
            c[i][rest] -= deficit / grid.dx * excess / excess.sum()
        log.info("species %d: clipped %d cells (mass %.3g redistributed)", i, int(low.sum()), deficit)
    return c


# --- orchestration --------------------------------------------------------------

def species_dt_bound(state: MacroState, diffusion: DiffusionMatrix, grid: Grid1D,
                     closure: ClosureConfig) -> float:
    """Explicit diffusion bound of the species update, ``dx^2 / (2 max(alpha, D T / c_tot))``.

    The closure makes ``c_tot`` follow an explicit heat step inside the
    species update, so ``alpha`` enters as well as the Maxwell-Stefan rates.
    """
    off = ~np.eye(diffusion.n, dtype=bool)
    d_species = np.max(diffusion.values[off]) * np.max(state.T) / np.min(state.ctot)
    return 0.5 * grid.dx**2 / max(closure.alpha, d_species)


def stable_dt(state: MacroState, diffusion: DiffusionMatrix, grid: Grid1D,
              closure: ClosureConfig, config: SolverConfig) -> float:
    """Largest step accepted by every sub-step, scaled by ``cfl_safety``."""
    dx2 = grid.dx**2
    ctot = state.ctot
    bounds = [species_dt_bound(state, diffusion, grid, closure)]
    if config.heat_scheme == "crank-nicolson":
        bounds.append(dx2 / closure.alpha)
    V = grid.cell_average(_advection_velocity(ctot, grid, closure))
    vmax = float(np.max(np.abs(V)))
    if vmax > 0:
        bounds.append(grid.dx / vmax)
    return config.cfl_safety * min(bounds)


@dataclass
class MacroRun:
    grid: Grid1D
    closure: ClosureConfig
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    ctot_times: list = field(default_factory=list)
    ctot_fields: list = field(default_factory=list)
    heat_ctot_range: list = field(default_factory=list)
    dropped_row_residual: list = field(default_factory=list)

    @property
    def final(self) -> MacroState:
        return self.snapshots[-1]

    def snapshot_at(self, t: float) -> MacroState:
        times = np.array([s.time for s in self.snapshots])
        return self.snapshots[int(np.argmin(np.abs(times - t)))]

    @property
    def ctot_history(self):
        return np.array(self.ctot_times), np.array(self.ctot_fields)


def _diagnostic_row(state: MacroState, grid: Grid1D, closure_residual) -> dict:
    ctot = state.ctot
    return {
        "t": state.time,
        "mass": grid.integrate(state.c),
        "min_ctot": float(ctot.min()),
        "max_ctot": float(ctot.max()),
        "ctotT_variation": ctot_T_variation(ctot, state.T),
        "closure_residual": float(np.max(np.abs(closure_residual))) if closure_residual is not None else 0.0,
    }


def run_macro(mixture: Mixture, initial: MacroState, grid: Grid1D, closure: ClosureConfig,
              config: SolverConfig, output_times=None) -> MacroRun:
    """Time loop heat -> temperature -> fluxes -> species with per-step diagnostics.

    Snapshots are stored at the initial time, at every requested output time
    (the step is shortened to land on it) and at ``t_end``. On a numerical
    failure the exception gets a ``partial_run`` attribute holding everything
    computed up to the last valid state.
    """
    if initial.c.shape[1] != grid.n_cells:
        raise ValidationError(f"initial state has {initial.c.shape[1]} cells, grid has {grid.n_cells}")
    diffusion = build_diffusion_matrix(mixture)
    var0 = ctot_T_variation(initial.ctot, initial.T)
    if var0 > config.ctot_T_variation:
        log.warning("initial data not well prepared: c_tot T varies by %.3g (tolerance %.3g)",
                    var0, config.ctot_T_variation)
    stops = sorted({float(t) for t in (output_times or []) if 0 < t < config.t_end} | {config.t_end})
    floor = config.nonnegativity_floor
    run = MacroRun(grid, closure)
    state = initial
    first = flux_solve(state, mixture, diffusion, closure, grid, floor)
    state = replace(state, J=first.J)
    run.snapshots.append(state)
    run.diagnostics.append(_diagnostic_row(state, grid, first.closure_residual))
    run.ctot_times.append(state.time)
    run.ctot_fields.append(state.ctot)
    fixed_dt = config.dt
    try:
        for stop in stops:
            while state.time < stop - 1e-12 * max(1.0, stop):
                if fixed_dt is None:
                    dt = stable_dt(state, diffusion, grid, closure, config)
                else:
                    dt = fixed_dt
                    bound = species_dt_bound(state, diffusion, grid, closure)
                    if dt > bound * (1 + 1e-12):
                        raise StabilityError(f"species step dt={dt:.4g} exceeds the explicit diffusion "
                                             f"bound {bound:.4g}", suggested_dt=bound)
                dt = min(dt, stop - state.time)
                ctot_new = heat_step(state, grid, closure, config, dt)
                if np.any(ctot_new <= 0):
                    raise NumericalError("heat step produced non-positive c_tot")
                if config.temperature_scheme == "eulerian-upwind":
                    T_new = temperature_step_eulerian(state, ctot_new, grid, closure, dt)
                else:
                    T_new = temperature_characteristics(
                        state.T, ([state.time, state.time + dt], [state.ctot, ctot_new]), grid, closure)
                fluxes = flux_solve(state, mixture, diffusion, closure, grid, floor)
                c_new = species_step(state, fluxes.J, grid, dt, floor)
                state = MacroState(state.time + dt, c_new, T_new, fluxes.J)
                run.diagnostics.append(_diagnostic_row(state, grid, fluxes.closure_residual))
                run.heat_ctot_range.append((float(ctot_new.min()), float(ctot_new.max())))
                run.dropped_row_residual.append(float(np.max(np.abs(fluxes.dropped_row_residual))))
                run.ctot_times.append(state.time)
                run.ctot_fields.append(ctot_new)
            final_flux = flux_solve(state, mixture, diffusion, closure, grid, floor)
            state = replace(state, J=final_flux.J)
            run.snapshots.append(state)
    except (MsmixError, ValueError) as err:
        if state is not run.snapshots[-1]:
            run.snapshots.append(state)
        err.partial_run = run
        raise
    return run
