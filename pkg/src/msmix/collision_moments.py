"""Moments of the Maxwell-molecule collision operator between local Maxwellians.

Closed forms for the momentum and energy exchange rates live next to a
direct quadrature of the weak form

    int Q_ij(f_i, f_j)(v) psi(v) dv
        = iiint b_ij(k . sigma) f_i(v) f_j(v*) [psi(v') - psi(v)] dsigma dv dv*

with ``v' = (m_i v + m_j v* + m_j |v - v*| sigma) / (m_i + m_j)``. The
quadrature is the ground truth for every constant and sign used by the closed
forms; see CONSTANTS.md.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .mixture import Mixture

WEIGHTS = ("unity", "velocity", "speed-squared")


@dataclass(frozen=True)
class MaxwellianState:
    """Point values ``c_i``, ``u_i`` (3-vectors) and ``T_i`` of a Maxwellian mixture."""

    c: np.ndarray
    u: np.ndarray
    T: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).reshape(-1)
        T = np.array(self.T, dtype=float).reshape(-1)
        u = np.array(self.u, dtype=float)
        if u.ndim == 1:
            u = np.column_stack([u, np.zeros((u.size, 2))])
        if u.shape != (c.size, 3) or T.shape != c.shape:
            raise ValidationError(f"inconsistent shapes c{c.shape} u{u.shape} T{T.shape}")
        if np.any(c < 0) or not np.all(np.isfinite(c)):
            raise ValidationError("concentrations must be finite and >= 0")
        if np.any(T <= 0) or not np.all(np.isfinite(T)):
            raise ValidationError("temperatures must be finite and > 0")
        for arr in (c, u, T):
            arr.setflags(write=False)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "T", T)

    @property
    def n(self) -> int:
        return self.c.size

    def shifted(self, w) -> "MaxwellianState":
        return MaxwellianState(self.c, self.u + np.asarray(w, dtype=float), self.T)


@dataclass(frozen=True)
class ExchangeRates:
    """Per-species momentum (3-vectors) and energy (scalars) exchange rates.

    Both balances close only mass-weighted: ``sum_i m_i * momentum_i = 0`` and
    ``sum_i m_i * energy_i = 0``.
    """

    momentum: np.ndarray
    energy: np.ndarray


def _check_state(mixture: Mixture, state: MaxwellianState):
    if state.n != mixture.n:
        raise ValidationError(f"state has {state.n} species, mixture has {mixture.n}")


def _check_pair(mixture: Mixture, pair):
    i, j = pair
    if i == j:
        raise ValidationError(f"pair must join distinct species, got ({i}, {j})")
    if not (0 <= i < mixture.n and 0 <= j < mixture.n):
        raise ValidationError(f"pair ({i}, {j}) out of range")
    return int(i), int(j)


def maxwellian_moments(mixture: Mixture, state: MaxwellianState, i: int, epsilon: float):
    """Zeroth, first and second velocity moments of the scaled Maxwellian of species ``i``.

    The Maxwellian is centred at ``epsilon * u_i``, so the first moment is
    ``epsilon c_i u_i`` and the second ``3 k c_i T_i / m_i + epsilon^2 c_i |u_i|^2``.
    """
    if epsilon < 0:
        raise ValidationError(f"epsilon must be >= 0, got {epsilon}")
    c, u, T = state.c[i], state.u[i], state.T[i]
    m = mixture.masses[i]
    zeroth = float(c)
    first = epsilon * c * u
    second = float(3.0 * mixture.k * c * T / m + epsilon**2 * c * (u @ u))
    return zeroth, first, second


def momentum_exchange_pair(mixture: Mixture, state: MaxwellianState, i: int, j: int) -> np.ndarray:
    """Contribution of collisions with ``j`` to the momentum exchange of ``i``."""
    m = mixture.masses
    s = mixture.sphere_factors()[i, j]
    return s * m[j] / (m[i] + m[j]) * state.c[i] * state.c[j] * (state.u[j] - state.u[i])


def momentum_exchange_closed(mixture: Mixture, state: MaxwellianState) -> np.ndarray:
    """Leading-order momentum exchange for every species, shape (n, 3).

    For Maxwell molecules the leading-order term is also exact: the first
    moment of ``Q_ij`` is ``epsilon`` times the returned pair contribution.
    """
    _check_state(mixture, state)
    n = mixture.n
    out = np.zeros((n, 3))
    for i in range(n):
        for j in range(n):
            if j != i:
                out[i] += momentum_exchange_pair(mixture, state, i, j)
    return out


def energy_exchange_pair(mixture: Mixture, state: MaxwellianState, epsilon: float, i: int, j: int) -> float:
    """Pair contribution ``(1/epsilon) int |v|^2 Q_ij dv`` in closed form.

    Temperature relaxation at order ``1/epsilon`` plus drag heating at order
    ``epsilon``; the overall factor is the full-sphere kernel integral.
    """
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    m = mixture.masses
    k = mixture.k
    s = mixture.sphere_factors()[i, j]
    M = m[i] + m[j]
    cc = state.c[i] * state.c[j]
    ui, uj = state.u[i], state.u[j]
    thermal = 6.0 * k * m[j] * (state.T[j] - state.T[i]) / M**2
    drag = 2.0 * m[j] * ((m[j] * uj + m[i] * ui) @ (uj - ui)) / M**2
    return float(s * cc * (thermal / epsilon + epsilon * drag))


def energy_exchange_closed(mixture: Mixture, state: MaxwellianState, epsilon: float) -> np.ndarray:
    _check_state(mixture, state)
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    n = mixture.n
    out = np.zeros(n)
    for i in range(n):
        for j in range(n):
            if j != i:
                out[i] += energy_exchange_pair(mixture, state, epsilon, i, j)
    return out


def exchange_rates(mixture: Mixture, state: MaxwellianState, epsilon: float) -> ExchangeRates:
    return ExchangeRates(momentum_exchange_closed(mixture, state),
                         energy_exchange_closed(mixture, state, epsilon))


def i_term_decomposition(mixture: Mixture, state: MaxwellianState, epsilon: float, pair):
    """The five Gaussian integrals whose sum is the pair energy exchange.

    Splitting ``|v'|^2 - |v|^2`` into the ``|v|^2``, ``|v*|^2``, ``v.v*``,
    sigma-linear and ``|v - v*|^2`` parts. The sigma-linear part (I4)
    vanishes for an even kernel.
    """
    i, j = _check_pair(mixture, pair)
    if epsilon <= 0:
        raise ValidationError(f"epsilon must be > 0, got {epsilon}")
    m = mixture.masses
    k = mixture.k
    s = mixture.sphere_factors()[i, j]
    M2 = (m[i] + m[j]) ** 2
    cc = state.c[i] * state.c[j]
    ui, uj = state.u[i], state.u[j]
    Ti, Tj = state.T[i], state.T[j]
    e2 = epsilon**2
    pref = s * cc / epsilon
    i1 = pref * (m[i] ** 2 / M2 - 1.0) * (3.0 * k * Ti / m[i] + e2 * (ui @ ui))
    i2 = pref * m[j] ** 2 / M2 * (3.0 * k * Tj / m[j] + e2 * (uj @ uj))
    i3 = pref * 2.0 * m[i] * m[j] / M2 * e2 * (ui @ uj)
    i4 = 0.0
    du = ui - uj
    i5 = pref * m[j] ** 2 / M2 * (3.0 * k * Ti / m[i] + 3.0 * k * Tj / m[j] + e2 * (du @ du))
    return tuple(float(x) for x in (i1, i2, i3, i4, i5))


@dataclass(frozen=True)
class OracleResolution:
    """Node counts: Gauss-Hermite per velocity axis, Gauss-Legendre in cos(theta), uniform in azimuth."""

    velocity: int = 16
    polar: int = 16
    azimuth: int = 16

    def __post_init__(self):
        for name in ("velocity", "polar", "azimuth"):
            if getattr(self, name) < 4:
                raise ValidationError(f"oracle resolution {name}={getattr(self, name)} < 4 nodes")

    def doubled(self) -> "OracleResolution":
        return OracleResolution(2 * self.velocity, 2 * self.polar, 2 * self.azimuth)


def _maxwellian_nodes(mean, variance, n):
    """Tensor Gauss-Hermite nodes (n^3, 3) and probability weights (n^3,) for N(mean, variance I)."""
    x, w = np.polynomial.hermite.hermgauss(n)
    x = np.sqrt(2.0 * variance) * x
    w = w / np.sqrt(np.pi)
    gx, gy, gz = np.meshgrid(x, x, x, indexing="ij")
    wx, wy, wz = np.meshgrid(w, w, w, indexing="ij")
    nodes = np.column_stack([gx.ravel(), gy.ravel(), gz.ravel()]) + mean
    return nodes, (wx * wy * wz).ravel()


def _sphere_nodes(kernel, n_polar, n_azimuth):
    eta, w_eta = np.polynomial.legendre.leggauss(n_polar)
    phi = 2.0 * np.pi * np.arange(n_azimuth) / n_azimuth
    w_phi = np.full(n_azimuth, 2.0 * np.pi / n_azimuth)
    E, P = np.meshgrid(eta, phi, indexing="ij")
    W = np.outer(w_eta * kernel(eta), w_phi)
    st = np.sqrt(1.0 - E**2)
    local = np.stack([E, st * np.cos(P), st * np.sin(P)], axis=-1).reshape(-1, 3)
    return local, W.ravel()


def _frames(rel):
    """Orthonormal frames (k_hat, e1, e2) with k_hat along ``rel``; shape (..., 3) each."""
    x, y, z = rel[..., 0], rel[..., 1], rel[..., 2]
    g = np.sqrt(x * x + y * y + z * z)
    zero = g == 0
    inv = 1.0 / np.where(zero, 1.0, g)
    kx, ky, kz = x * inv, y * inv, np.where(zero, 1.0, z * inv)
    # helper axis: e_x unless k_hat is nearly parallel to it, then e_y
    use_x = np.abs(kx) < 0.9
    hx, hy = use_x.astype(float), (~use_x).astype(float)
    dot = hx * kx + hy * ky
    ax, ay, az = hx - dot * kx, hy - dot * ky, -dot * kz
    n1 = 1.0 / np.sqrt(ax * ax + ay * ay + az * az)
    ax, ay, az = ax * n1, ay * n1, az * n1
    bx, by, bz = ky * az - kz * ay, kz * ax - kx * az, kx * ay - ky * ax
    stack = lambda *c: np.stack(c, axis=-1)
    return g, stack(kx, ky, kz), stack(ax, ay, az), stack(bx, by, bz)


def oracle_pair_moments(mixture: Mixture, state: MaxwellianState, pair,
                        resolution: OracleResolution | None = None, epsilon: float = 1.0,
                        method: str = "frame", chunk: int = 256):
    """Weak-form moments of ``Q_ij(M_i, M_j)`` and ``Q_ji(M_j, M_i)`` from one quadrature pass.

    Returns two dicts ``{"unity": float, "velocity": (3,) array,
    "speed-squared": float}``, for ``(i, j)`` and ``(j, i)``. The second uses
    the same nodes with the post-collision velocity
    ``v*' = (m_i v + m_j v* - m_i |v - v*| sigma) / (m_i + m_j)``.

    Maxwellians are centred at ``epsilon * u``. ``method="frame"`` sums the
    sphere quadrature once in the local frame of ``v - v*`` and rotates the
    result, which is exact for test functions of degree <= 2 in ``v'``;
    ``method="direct"`` evaluates ``psi(v')`` at every sphere node and is
    meant for small resolutions.
    """
    _check_state(mixture, state)
    i, j = _check_pair(mixture, pair)
    if method not in ("frame", "direct"):
        raise ValidationError(f"unknown oracle method {method!r}")
    res = resolution or OracleResolution()
    m = mixture.masses
    k = mixture.k
    M = m[i] + m[j]
    mu_i, mu_j = m[j] / M, m[i] / M

    vi, wi = _maxwellian_nodes(epsilon * state.u[i], k * state.T[i] / m[i], res.velocity)
    vj, wj = _maxwellian_nodes(epsilon * state.u[j], k * state.T[j] / m[j], res.velocity)
    local, ws = _sphere_nodes(mixture.kernel(i, j), res.polar, res.azimuth)
    s0 = ws.sum()
    s1 = ws @ local

    # transverse sphere sums vanish for a uniform azimuth grid; the frame is then not needed
    axial = bool(np.all(np.abs(s1[1:]) <= 1e-14 * abs(s0)))
    zeroth = np.zeros(2)
    first = np.zeros((2, 3))
    second = np.zeros(2)
    vs = vj[None, :, :]
    vs2 = np.sum(vj**2, -1)[None, :]
    for start in range(0, vi.shape[0], chunk):
        v = vi[start:start + chunk, None, :]
        wgt = wi[start:start + chunk, None] * wj[None, :]
        v2 = np.sum(v**2, -1)
        # psi = 1: psi(v') - psi(v) is 1 - 1 at every node
        zeroth += float(np.sum(wgt)) * (s0 - s0)
        if method == "frame" and axial:
            # g sigma_bar = s1[0] (v - v*): every term is linear or quadratic in the nodes, so the
            # vector parts reduce to weighted node sums and the scalar parts need only v.v*
            va = vi[start:start + chunk]
            dot = va @ vj.T
            g2 = v2 + vs2 - 2.0 * dot
            center2 = (m[i] ** 2 * v2 + 2.0 * m[i] * m[j] * dot + m[j] ** 2 * vs2) / M**2
            gsig = s1[0] * (m[i] * v2 + (m[j] - m[i]) * dot - m[j] * vs2) / M
            sum_v = wgt.sum(axis=1) @ va
            sum_vs = wgt.sum(axis=0) @ vj
            mean_center = (m[i] * sum_v + m[j] * sum_vs) / M
            first[0] += s0 * (mean_center - sum_v) + mu_i * s1[0] * (sum_v - sum_vs)
            first[1] += s0 * (mean_center - sum_vs) - mu_j * s1[0] * (sum_v - sum_vs)
            second[0] += float(np.sum(wgt * (s0 * (center2 + mu_i**2 * g2 - v2) + 2.0 * mu_i * gsig)))
            second[1] += float(np.sum(wgt * (s0 * (center2 + mu_j**2 * g2 - vs2) - 2.0 * mu_j * gsig)))
            continue
        rel = v - vs
        g, khat, e1, e2 = _frames(rel)
        center = (m[i] * v + m[j] * vs) / M
        if method == "frame":
            gsig_vec = g[..., None] * (s1[0] * khat + s1[1] * e1 + s1[2] * e2)
            g2 = g * g
            center2 = (m[i] ** 2 * v2 + 2.0 * m[i] * m[j] * np.sum(v * vs, -1) + m[j] ** 2 * vs2) / M**2
            gsig = np.sum(center * gsig_vec, -1)
            first[0] += np.einsum("ab,abk->k", wgt, s0 * (center - v) + mu_i * gsig_vec)
            first[1] += np.einsum("ab,abk->k", wgt, s0 * (center - vs) - mu_j * gsig_vec)
            second[0] += float(np.sum(wgt * (s0 * (center2 + mu_i**2 * g2 - v2) + 2.0 * mu_i * gsig)))
            second[1] += float(np.sum(wgt * (s0 * (center2 + mu_j**2 * g2 - vs2) - 2.0 * mu_j * gsig)))
        else:
            for (a, b, c), wq in zip(local, ws):
                sigma = g[..., None] * (a * khat + b * e1 + c * e2)
                vp = center + mu_i * sigma
                vsp = center - mu_j * sigma
                first[0] += wq * np.einsum("ab,abk->k", wgt, vp - v)
                first[1] += wq * np.einsum("ab,abk->k", wgt, vsp - vs)
                second[0] += wq * float(np.sum(wgt * (np.sum(vp**2, -1) - v2)))
                second[1] += wq * float(np.sum(wgt * (np.sum(vsp**2, -1) - vs2)))
    scale = state.c[i] * state.c[j]
    return tuple({"unity": float(scale * zeroth[a]), "velocity": scale * first[a],
                  "speed-squared": float(scale * second[a])} for a in (0, 1))


def oracle_moments(mixture: Mixture, state: MaxwellianState, pair,
                   resolution: OracleResolution | None = None, epsilon: float = 1.0,
                   method: str = "frame") -> dict:
    """All three weak-form moments of ``Q_ij(M_i, M_j)``; see :func:`oracle_pair_moments`."""
    return oracle_pair_moments(mixture, state, pair, resolution, epsilon, method)[0]


def collision_moment_oracle(mixture: Mixture, state: MaxwellianState, pair, weight: str,
                            resolution: OracleResolution | None = None, epsilon: float = 1.0,
                            method: str = "frame"):
    """Quadrature of ``int Q_ij(M_i, M_j) psi dv`` for one psi in {1, v, |v|^2}."""
    if weight not in WEIGHTS:
        raise ValidationError(f"weight must be one of {WEIGHTS}, got {weight!r}")
    return oracle_moments(mixture, state, pair, resolution, epsilon, method)[weight]
