"""Finite-epsilon moment system in 1D with Strang transport/relaxation splitting.

Per species the unknowns are ``c_i`` and ``T_i`` in cells and the bulk
velocity ``u_i`` on faces (staggered). With ``S_ij = 2 pi ||b_ij||``,
``M_ij = m_i + m_j``, ``p_i = k c_i T_i`` and ``th_i = 3 p_i``:

    d_t c_i + d_x(c_i u_i) = 0
    d_t (c_i u_i) + d_x(c_i u_i^2) = eps^-2 [ -d_x p_i / m_i + sum_j S_ij m_j/M_ij c_i c_j (u_j - u_i) ]
    d_t th_i + d_x(th_i u_i) + 2 p_i d_x u_i = 3 k c_i eps^-2 sum_j S_ij c_j 2 m_i m_j/M_ij^2 (T_j - T_i)
                                            + (friction heating)

The stiff part, at frozen ``c``, is :func:`relaxation_substep`: pressure
gradient, friction, enthalpy flux and compression work are advanced together
by one linearly implicit (backward Euler) solve, so acoustic waves of speed
``O(1/eps)`` impose no step restriction, and temperature exchange is applied
exactly. Only advection of mass and momentum is explicit
(:func:`transport_substep`). As ``eps -> 0`` the implicit solve turns into a
Maxwell-Stefan flux solve with a pressure projection.

Discrete energy is ``sum_cells sum_i th_i dx + sum_faces sum_i eps^2 m_i c_if u_i^2 dx``
(twice the physical energy). The relaxation substep conserves it together
with per-species mass and the total momentum ``sum_faces sum_i m_i c_if u_i dx``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from .errors import MsmixError, NumericalError, StabilityError, ValidationError
from .grid import Grid1D
from .macro_solver import (ClosureConfig, MacroRun, MacroState, SolverConfig, flux_solve,
                           run_macro)
from .mixture import Mixture, build_diffusion_matrix

log = logging.getLogger(__name__)




@dataclass(frozen=True)
class KineticMomentState:
    """Per-species fields; ``u_face`` has ``n_cells + 1`` entries per species."""

    time: float
    epsilon: float
    c: np.ndarray
    T: np.ndarray
    u_face: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float)
        T = np.array(self.T, dtype=float)
        u = np.array(self.u_face, dtype=float)
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be > 0, got {self.epsilon}")
        if c.ndim != 2 or T.shape != c.shape or u.shape != (c.shape[0], c.shape[1] + 1):
            raise ValidationError(f"state shapes: c {c.shape}, T {T.shape}, u_face {u.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise NumericalError("concentrations must be finite and >= 0")
        if np.any(T <= 0) or not np.all(np.isfinite(T)):
            raise NumericalError("temperatures must be finite and > 0")
        if not np.all(np.isfinite(u)):
            raise NumericalError("velocities must be finite")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "T", T)
        object.__setattr__(self, "u_face", u)

    @property
    def n_species(self) -> int:
        return self.c.shape[0]

    @property
    def u(self) -> np.ndarray:
        """Cell-centred velocity (mean of the two faces)."""
        return 0.5 * (self.u_face[:, 1:] + self.u_face[:, :-1])

    @property
    def ctot(self) -> np.ndarray:
        return self.c.sum(axis=0)

    @property
    def mean_T(self) -> np.ndarray:
        """Concentration-weighted mixture temperature."""
        return np.sum(self.c * self.T, axis=0) / self.ctot

    def face_flux(self, grid: Grid1D) -> np.ndarray:
        """``J_i = c_i u_i`` on faces."""
        return grid.face_average(self.c) * self.u_face

    def cell_flux(self, grid: Grid1D) -> np.ndarray:
        return grid.cell_average(self.face_flux(grid))


def _unique_faces(grid: Grid1D):
    """Indices of independent flux-carrying faces and their left/right cells."""
    n = grid.n_cells
    if grid.periodic:
        faces = np.arange(n)
        return faces, (faces - 1) % n, faces
    faces = np.arange(1, n)
    return faces, faces - 1, faces


def total_mass(state: KineticMomentState, grid: Grid1D) -> np.ndarray:
    return grid.integrate(state.c)


def total_momentum(state: KineticMomentState, mixture: Mixture, grid: Grid1D) -> float:
    faces, _, _ = _unique_faces(grid)
    cf = grid.face_average(state.c)[:, faces]
    return float(np.sum(mixture.masses[:, None] * cf * state.u_face[:, faces]) * grid.dx)


def momentum_scale(state: KineticMomentState, mixture: Mixture, grid: Grid1D) -> float:
    faces, _, _ = _unique_faces(grid)
    cf = grid.face_average(state.c)[:, faces]
    return float(np.sum(mixture.masses[:, None] * cf * np.abs(state.u_face[:, faces])) * grid.dx)


def total_energy(state: KineticMomentState, mixture: Mixture, grid: Grid1D) -> float:
    """``sum (3 k c_i T_i + eps^2 m_i c_i u_i^2)`` with kinetic parts on faces."""
    faces, _, _ = _unique_faces(grid)
    cf = grid.face_average(state.c)[:, faces]
    thermal = np.sum(3.0 * mixture.k * state.c * state.T)
    kinetic = np.sum(state.epsilon**2 * mixture.masses[:, None] * cf * state.u_face[:, faces] ** 2)
    return float((thermal + kinetic) * grid.dx)


def effective_diffusivity(state: KineticMomentState, mixture: Mixture) -> np.ndarray:
    """``k T_i / (m_i sum_j S_ij m_j/M_ij c_j)`` per species and cell (inf without partners)."""
    m = mixture.masses
    S = mixture.sphere_factors()
    drag = np.zeros(state.c.shape)
    for i in range(state.n_species):
        for j in range(state.n_species):
            if j != i:
                drag[i] += S[i, j] * m[j] / (m[i] + m[j]) * state.c[j]
    safe = np.where(drag > 0, drag, 1.0)
    return np.where(drag > 0, mixture.k * state.T / (m[:, None] * safe), np.inf)


def stable_dt(state: KineticMomentState, mixture: Mixture, grid: Grid1D, cfl: float = 0.45) -> float:
    """Step limited by advection (``dx / max|u|``) and the diffusive bound ``dx^2 / (2 D)``."""
    umax = float(np.max(np.abs(state.u_face)))
    limits = [grid.dx / umax] if umax > 0 else []
    D = effective_diffusivity(state, mixture)
    if np.any(np.isfinite(D)):
        limits.append(grid.dx**2 / (2.0 * float(np.max(D[np.isfinite(D)]))))
    if not limits:
        # single species at rest: fall back to the acoustic transit time
        sound = np.sqrt(5.0 * mixture.k * state.T / (3.0 * mixture.masses[:, None])) / state.epsilon
        limits.append(grid.dx / float(np.max(sound)))
    return cfl * min(limits)


# --- relaxation -----------------------------------------------------------------

def _embed(grid: Grid1D, values, faces):
    """Scatter values on independent faces into all ``n_cells + 1`` faces."""
    full = np.zeros(values.shape[:-1] + (grid.n_cells + 1,))
    full[..., faces] = values
    if grid.periodic:
        full[..., -1] = full[..., 0]
    return full


def _implicit_system(grid: Grid1D, mixture: Mixture, cf, p0, thf, eps, dt):
    """Sparse matrix of the backward-Euler velocity solve on independent faces.

    Row ``(i, f)`` reads ``u_if (1 + drag_if) - sum_j rate_ijf u_jf
    - dt^2 / (eps^2 m_i c_if) [grad G_i u_i]_f`` where ``G_i`` maps face
    velocities to the pressure change of species ``i``.
    """
    faces, left, right = _unique_faces(grid)
    F, n = faces.size, mixture.n
    m = mixture.masses
    S = mixture.sphere_factors()
    a = np.arange(F)
    if grid.periodic:
        plus, minus = (a + 1) % F, (a - 1) % F
        has_plus = has_minus = np.ones(F, dtype=bool)
    else:
        plus, minus = np.minimum(a + 1, F - 1), np.maximum(a - 1, 0)
        has_plus, has_minus = a + 1 < F, a > 0
    scale = dt * dt / (3.0 * grid.dx**2 * eps**2 * m[:, None] * cf)
    rows, cols, vals = [], [], []
    for i in range(n):
        pR, pL = p0[i, right], p0[i, left]
        diag = 1.0 + scale[i] * 2.0 * (thf[i] + pR + pL)
        for j in range(n):
            if j != i:
                rate = dt * S[i, j] * m[j] / (m[i] + m[j]) * cf[j] / eps**2
                diag = diag + rate
                rows.append(i * F + a)
                cols.append(j * F + a)
                vals.append(-rate)
        rows += [i * F + a, i * F + a[has_plus], i * F + a[has_minus]]
        cols += [i * F + a, i * F + plus[has_plus], i * F + minus[has_minus]]
        vals += [diag, (-scale[i] * (thf[i, plus] + 2.0 * pR))[has_plus],
                 (-scale[i] * (thf[i, minus] + 2.0 * pL))[has_minus]]
    rows, cols, vals = (np.concatenate(x) for x in (rows, cols, vals))
    return sp.csc_matrix((vals, (rows, cols)), shape=(n * F, n * F))


def _temperature_generator(mixture: Mixture, c, eps):
    """Temperature-exchange matrices per cell: ``dT_i/dt = sum_j B_ij T_j`` (shape (N, n, n))."""
    m = mixture.masses
    S = mixture.sphere_factors()
    n = mixture.n
    B = np.zeros((c.shape[1], n, n))
    for i in range(n):
        for j in range(n):
            if j != i:
                rate = S[i, j] * 2.0 * m[i] * m[j] / (m[i] + m[j]) ** 2 * c[j] / eps**2
                B[:, i, j] = rate
                B[:, i, i] -= rate
    return B


def exchange_temperatures(mixture: Mixture, c, T, eps, dt, floor: float = 1e-300):
    """Exact ``dT/dt = B T`` per cell; each update is a convex combination conserving ``sum c_i T_i``.

    ``B`` is similar to a symmetric matrix through ``diag(sqrt(c))``, so the
    exponential comes from a batched symmetric eigendecomposition.
    """
    B = _temperature_generator(mixture, c, eps)
    r = np.sqrt(np.maximum(c, floor)).T                              # (N, n)
    sym = B * r[:, :, None] / r[:, None, :]
    sym = 0.5 * (sym + np.swapaxes(sym, 1, 2))
    w, V = np.linalg.eigh(sym)
    E = np.einsum("kab,kb,kcb->kac", V, np.exp(w * dt), V)
    return np.einsum("kab,bk->ak", E / r[:, :, None] * r[:, None, :], T)


@dataclass
class RelaxationAudit:
    momentum_before: float
    momentum_after: float
    energy_before: float
    energy_after: float
    momentum_scale: float


def relaxation_substep(state: KineticMomentState, mixture: Mixture, grid: Grid1D, dt: float,
                       floor: float = 1e-12, audit: bool = False):
    """Stiff update at frozen ``c``.

    Temperature exchange over ``dt/2``, then the implicit pressure/friction
    solve over ``dt``, then temperature exchange over ``dt/2`` again. The
    implicit solve is backward Euler for

        u_i' = -grad p_i / (eps^2 m_i c_if) + eps^-2 sum_j S_ij m_j/M_ij c_jf (u_j - u_i)
        p_i' = -(1/3) div(th_if u_i) - (2/3) p_i div u_i

    with the coefficients ``th_if`` and ``p_i`` (second term) frozen. The
    thermal energy is then updated from the new velocities in conservative
    form, and the kinetic energy lost at each face beyond the pressure work
    (friction plus the damping of the implicit step, never negative) is
    deposited as heat, half in each neighbouring cell. Each species gets
    ``m_j / M_ij`` of the friction loss of every pair it belongs to; the
    remainder is shared in proportion to concentration. If no species pair
    interacts the friction part is empty and only the pressure coupling acts.

    Returns the new state, and a :class:`RelaxationAudit` when ``audit``.
    """
    eps = state.epsilon
    k = mixture.k
    m = mixture.masses
    n = state.n_species
    c = state.c
    faces, left, right = _unique_faces(grid)
    F = faces.size
    before = None
    if audit:
        before = (total_momentum(state, mixture, grid), total_energy(state, mixture, grid),
                  momentum_scale(state, mixture, grid))

    T = exchange_temperatures(mixture, c, state.T, eps, 0.5 * dt)

    cf = np.maximum(grid.face_average(c), floor)[:, faces]
    p0 = k * c * T
    thf_full = 3.0 * grid.face_average(p0)
    thf = thf_full[:, faces]
    u0 = state.u_face[:, faces]
    S = mixture.sphere_factors()
    inertia = eps**2 * m[:, None] * cf                               # (n, F)

    if n > 1 and not np.any(S[~np.eye(n, dtype=bool)]):
        log.debug("relaxation: all cross-species kernels vanish; friction and exchange are the identity")
    system = _implicit_system(grid, mixture, cf, p0, thf, eps, dt)
    rhs = u0 - dt * grid.face_gradient(p0)[:, faces] / inertia
    u1 = spsolve(system, rhs.ravel()).reshape(n, F)
    if not np.all(np.isfinite(u1)):
        raise NumericalError("relaxation: implicit velocity solve returned non-finite values")

    u1_full = _embed(grid, u1, faces)
    div_thu = dt * grid.divergence(thf_full * u1_full)
    div_U = dt * grid.divergence(u1_full)
    p_new = p0 - (div_thu + 2.0 * p0 * div_U) / 3.0
    theta = 3.0 * p0 - div_thu - 2.0 * p_new * div_U
    work = -2.0 * dt * u1 * grid.face_gradient(p_new)[:, faces]
    dke = inertia * (u1**2 - u0**2)
    dissipation = -np.sum(dke - work, axis=0)                          # (F,), >= 0 up to rounding

    # friction heat goes to species i as m_j/M of each pair's loss; the rest
    # (numerical damping of the implicit step) in proportion to concentration
    friction = np.zeros((n, F))
    for i in range(n):
        for j in range(n):
            if j != i:
                M = m[i] + m[j]
                friction[i] += 2.0 * dt * S[i, j] * cf[i] * cf[j] * m[i] * m[j] / M * (u1[j] - u1[i]) ** 2 * m[j] / M
    total = friction.sum(axis=0)
    friction *= np.clip(dissipation / np.where(total > 0, total, 1.0), 0.0, 1.0)
    heat = friction + (dissipation - friction.sum(axis=0)) * cf / cf.sum(axis=0)
    np.add.at(theta, (slice(None), left), 0.5 * heat)
    np.add.at(theta, (slice(None), right), 0.5 * heat)

    T_mid = np.where(c > floor, theta / (3.0 * k * np.maximum(c, floor)), T)
    if np.any(T_mid <= 0):
        cell = int(np.argmin(T_mid.min(axis=0)))
        raise NumericalError(f"relaxation: temperature non-positive in cell {cell}; reduce dt")
    T1 = exchange_temperatures(mixture, c, T_mid, eps, 0.5 * dt)

    new = replace(state, T=T1, u_face=u1_full)
    if audit:
        after = RelaxationAudit(before[0], total_momentum(new, mixture, grid),
                                before[1], total_energy(new, mixture, grid), before[2])
        return new, after
    return new


# --- transport --------------------------------------------------------------------

def transport_substep(state: KineticMomentState, mixture: Mixture, grid: Grid1D, dt: float,
                      cfl: float = 1.0, floor: float = 1e-12) -> KineticMomentState:
    """Explicit conservative advection of ``c_i`` and face momentum ``c_i u_i``.

    Thermal energy ``3 k c_i T_i`` is left unchanged here (its flux is part
    of the implicit relaxation), so ``T_i`` is rescaled with the new
    concentrations. Rejects steps above ``cfl * dx / max|u|``.
    """
    umax = float(np.max(np.abs(state.u_face)))
    if umax > 0 and dt > cfl * grid.dx / umax * (1 + 1e-12):
        limit = cfl * grid.dx / umax
        raise StabilityError(f"transport step dt={dt:.4g} exceeds the advective CFL limit {limit:.4g}",
                             suggested_dt=limit)
    k = mixture.k
    c, T, u = state.c, state.T, state.u_face
    cf = grid.face_average(c)
    theta = 3.0 * k * c * T
    c_new = c - dt * grid.divergence(cf * u)
    q_new = cf * u - dt * grid.face_gradient(c * state.u**2)
    if np.any(c_new < 0):
        i, cell = np.unravel_index(np.argmin(c_new), c_new.shape)
        raise NumericalError(f"transport: species {mixture.names[i]!r} concentration negative in cell {cell}")
    cf_new = np.maximum(grid.face_average(c_new), floor)
    u_new = q_new / cf_new
    u_new[:, ~grid.interior_faces()] = 0.0
    T_new = np.where(c_new > floor, theta / (3.0 * k * np.maximum(c_new, floor)), T)
    return replace(state, time=state.time + dt, c=c_new, T=T_new, u_face=u_new)


def strang_step(state, relax, transport, dt):
    """``relax(dt/2) -> transport(dt) -> relax(dt/2)``."""
    half = relax(state, 0.5 * dt)
    return relax(transport(half, dt), 0.5 * dt)


def moment_step(state: KineticMomentState, mixture: Mixture, grid: Grid1D, dt: float,
                cfl: float = 1.0, floor: float = 1e-12, audits: list | None = None) -> KineticMomentState:
    """One Strang step; relaxation audits are appended to ``audits`` when given."""

    def relax(s, h):
        if audits is None:
            return relaxation_substep(s, mixture, grid, h, floor)
        new, rec = relaxation_substep(s, mixture, grid, h, floor, audit=True)
        audits.append(rec)
        return new

    def transport(s, h):
        return transport_substep(s, mixture, grid, h, cfl, floor)

    return strang_step(state, relax, transport, dt)


# --- runs ----------------------------------------------------------------------------

@dataclass
class MomentRun:
    grid: Grid1D
    epsilon: float
    snapshots: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    audits: list = field(default_factory=list)

    @property
    def final(self) -> KineticMomentState:
        return self.snapshots[-1]

    def snapshot_at(self, t: float) -> KineticMomentState:
        times = np.array([s.time for s in self.snapshots])
        return self.snapshots[int(np.argmin(np.abs(times - t)))]


def temperature_gap(state: KineticMomentState) -> float:
    """``max`` over cells and species pairs of ``|T_i - T_j|``."""
    return float(np.max(state.T.max(axis=0) - state.T.min(axis=0)))


def _moment_diagnostics(state, mixture, grid):
    return {
        "t": state.time,
        "mass": total_mass(state, grid),
        "momentum": total_momentum(state, mixture, grid),
        "energy": total_energy(state, mixture, grid),
        "temp_gap": temperature_gap(state),
    }


def run_moment(mixture: Mixture, initial: KineticMomentState, grid: Grid1D, t_end: float,
               cfl: float = 0.45, dt: float | None = None, output_times=None, floor: float = 1e-12,
               audit: bool = False) -> MomentRun:
    """Integrate to ``t_end`` with Strang steps, landing exactly on output times."""
    if initial.c.shape[1] != grid.n_cells:
        raise ValidationError(f"initial state has {initial.c.shape[1]} cells, grid has {grid.n_cells}")
    stops = sorted({float(t) for t in (output_times or []) if 0 < t < t_end} | {float(t_end)})
    run = MomentRun(grid, initial.epsilon)
    state = initial
    run.snapshots.append(state)
    run.diagnostics.append(_moment_diagnostics(state, mixture, grid))
    audits = run.audits if audit else None
    try:
        for stop in stops:
            while state.time < stop - 1e-12 * max(1.0, stop):
                h = dt if dt is not None else stable_dt(state, mixture, grid, cfl)
                h = min(h, stop - state.time)
                state = moment_step(state, mixture, grid, h, cfl=1.0, floor=floor, audits=audits)
                run.diagnostics.append(_moment_diagnostics(state, mixture, grid))
            run.snapshots.append(state)
    except (MsmixError, ValueError) as err:
        if state is not run.snapshots[-1]:
            run.snapshots.append(state)
        err.partial_run = run
        raise
    return run


def equilibrium_face_velocities(mixture: Mixture, c, T_mix, grid: Grid1D, closure: ClosureConfig,
                                floor: float = 1e-12) -> np.ndarray:
    """Face velocities ``J_i / c_if`` of the limit fluxes for the given fields."""
    state = MacroState(0.0, c, T_mix)
    res = flux_solve(state, mixture, build_diffusion_matrix(mixture), closure, grid, floor)
    cf = np.maximum(grid.face_average(c), floor)
    return res.J / cf


# --- comparison with the limit and epsilon sweeps ----------------------------------------

def _l2(grid: Grid1D, f) -> np.ndarray:
    return np.sqrt(np.sum(np.asarray(f) ** 2, axis=-1) * grid.dx)


def compare_to_limit(moment_run, macro_run, t: float, grid: Grid1D | None = None) -> dict:
    """Per-species L2 distances between a moment run and a limit run at time ``t``.

    Accepts runs or single states (``grid`` is then required). Fluxes are compared cell-centred. Returns
    absolute distances (``c``, ``J``, ``T``, each of shape (n,)), the same
    relative to the norm of the limit field (``*_rel``), and the
    mixture-temperature distance plus maximal pairwise gap used in the
    triangle-inequality bound ``||T_i - T|| <= ||T_mix - T|| + gap sqrt(L)``.
    """
    ms = moment_run.snapshot_at(t) if hasattr(moment_run, "snapshot_at") else moment_run
    ref = macro_run.snapshot_at(t) if hasattr(macro_run, "snapshot_at") else macro_run
    grid = grid or getattr(moment_run, "grid", None) or getattr(macro_run, "grid", None)
    if grid is None:
        raise ValidationError("compare_to_limit needs a grid when given bare states")
    if ms.c.shape != ref.c.shape:
        raise ValidationError(f"grid mismatch: {ms.c.shape} vs {ref.c.shape}")
    if abs(ms.time - ref.time) > 1e-9 * max(1.0, abs(t)):
        raise ValidationError(f"snapshot times differ: {ms.time} vs {ref.time}")

    if isinstance(ms, KineticMomentState):
        c_m, J_m, T_m = ms.c, ms.cell_flux(grid), ms.T
        T_mix = ms.mean_T
    else:
        c_m, J_m = ms.c, grid.cell_average(ms.J)
        T_m = np.broadcast_to(ms.T, ms.c.shape)
        T_mix = ms.T
    if isinstance(ref, KineticMomentState):
        J_ref, T_ref = ref.cell_flux(grid), ref.mean_T
    else:
        J_ref = grid.cell_average(ref.J) if ref.J is not None else np.zeros_like(ref.c)
        T_ref = ref.T

    def rel(d, base):
        norm = _l2(grid, base)
        return np.where(norm > 0, d / np.where(norm > 0, norm, 1.0), d)

    dc = _l2(grid, c_m - ref.c)
    dJ = _l2(grid, J_m - J_ref)
    dT = _l2(grid, T_m - T_ref[None, :])
    gap = float(np.max(T_m.max(axis=0) - T_m.min(axis=0)))
    return {
        "t": float(ms.time),
        "c": dc, "J": dJ, "T": dT,
        "c_rel": rel(dc, ref.c), "J_rel": rel(dJ, J_ref),
        "T_rel": rel(dT, np.broadcast_to(T_ref, ref.c.shape)),
        "T_mix": float(_l2(grid, T_mix - T_ref)),
        "gap": gap,
        "length": grid.length,
    }


@dataclass(frozen=True)
class EpsSweepConfig:
    epsilons: tuple
    scenario: str = "gaussian"
    t_measure: float = 0.05

    def __post_init__(self):
        eps = tuple(float(e) for e in self.epsilons)
        if len(eps) < 3:
            raise ValidationError(f"sweep needs at least 3 epsilon values, got {len(eps)}")
        if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValidationError(f"epsilons must be positive and strictly decreasing: {eps}")
        if not self.t_measure > 0:
            raise ValidationError("t_measure must be > 0")
        object.__setattr__(self, "epsilons", eps)


def fit_order(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])


@dataclass
class ConvergenceReport:
    epsilons: list
    temp_gap: list
    running_order: list
    fitted_order: float
    dist_c: list
    dist_J: list
    dist_T: list
    gap_monotone: bool
    dist_monotone: bool
    distances: list = field(default_factory=list)
    macro_reference: MacroRun | None = None

    @property
    def inconclusive(self) -> bool:
        return not self.gap_monotone


def build_report(epsilons, gaps, distances) -> ConvergenceReport:
    running = [float("nan")]
    for k in range(1, len(epsilons)):
        running.append(fit_order(epsilons[:k + 1], gaps[:k + 1]))
    gaps_ok = all(b < a for a, b in zip(gaps, gaps[1:])) and all(g > 0 for g in gaps)
    order = fit_order(epsilons, gaps) if all(g > 0 for g in gaps) else float("nan")
    dist_c = [float(np.max(d["c_rel"])) for d in distances]
    dist_J = [float(np.max(d["J_rel"])) for d in distances]
    dist_T = [float(np.max(d["T_rel"])) for d in distances]
    mono = all(all(b < a for a, b in zip(s, s[1:])) for s in (dist_c, dist_J, dist_T))
    if not gaps_ok:
        log.warning("temperature gaps are not monotone in epsilon; order fit is inconclusive")
    return ConvergenceReport(list(epsilons), list(gaps), running, order, dist_c, dist_J, dist_T,
                             gaps_ok, mono, list(distances))


def eps_sweep(config: EpsSweepConfig, mixture: Mixture, grid: Grid1D, make_initial, closure: ClosureConfig,
              macro_config: SolverConfig | None = None, cfl: float = 0.45, dt: float | None = None,
              macro_reference: MacroRun | None = None) -> ConvergenceReport:
    """Run the moment solver for each epsilon and compare with the limit solver.

    ``make_initial(epsilon)`` returns the (epsilon-independent) initial
    moments as a :class:`KineticMomentState`; the limit run starts from the
    same concentrations and the concentration-weighted temperature.
    """
    t = config.t_measure
    gaps, distances = [], []
    ref = macro_reference
    for eps in config.epsilons:
        init = make_initial(eps)
        if ref is None:
            mcfg = replace(macro_config or SolverConfig(), t_end=t)
            ref = run_macro(mixture, MacroState(0.0, init.c, init.mean_T), grid, closure, mcfg)
        run = run_moment(mixture, init, grid, t, cfl=cfl, dt=dt)
        gaps.append(temperature_gap(run.final))
        distances.append(compare_to_limit(run, ref, t))
        log.info("epsilon=%g: gap=%.4e", eps, gaps[-1])
    report = build_report(config.epsilons, gaps, distances)
    report.macro_reference = ref
    return report
