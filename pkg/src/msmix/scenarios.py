"""Named initial-data presets shared by the macro and moment solvers.

Every preset builds a total concentration ``c_tot(x)`` and composition
fractions ``y_i(x)`` (summing to one), so ``c_i = y_i c_tot``. The mixture
temperature is either uniform (``T0``) or well prepared, ``T = T0 ctot_base / c_tot``
so that ``c_tot T`` is constant. For the moment solver each species gets
``T_i = T (1 + temperature_split * w_i)`` with ``sum_i c_i w_i = 0``, which
keeps ``sum_i c_i T_i = c_tot T`` and makes ``T_1 - T_2 = temperature_split * T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .grid import Grid1D

_COMMON = {
    "ctot_base": 1.0,
    "fractions": None,
    "T0": 1.0,
    "temperature": "well-prepared",
    "temperature_split": 0.0,
    "initial_velocity": "equilibrium",
}

PRESETS = {
    "uniform": {},
    "gaussian": {"ctot_amplitude": 1.0, "composition_amplitude": 0.0, "center": 0.5, "width": 0.1},
    "step": {"composition_amplitude": 0.2, "center": 0.5, "width": 0.05},
    "two-bump": {"ctot_amplitude": 0.5, "composition_amplitude": 0.0, "centers": [0.3, 0.7], "width": 0.07},
}

PRESET_HELP = {
    "uniform": "constant c_tot and composition",
    "gaussian": "gaussian bump in c_tot and/or in the fraction of species 1",
    "step": "smoothed (tanh) jump in the fraction of species 1 at constant c_tot",
    "two-bump": "two gaussian bumps in c_tot and/or in the fraction of species 1",
}

TEMPERATURE_MODES = ("well-prepared", "uniform")
VELOCITY_MODES = ("equilibrium", "zero")


def preset_defaults(name: str) -> dict:
    if name not in PRESETS:
        raise ValidationError(f"unknown scenario {name!r}; available: {', '.join(PRESETS)}")
    return {**_COMMON, **PRESETS[name]}


@dataclass(frozen=True)
class Scenario:
    """A preset name plus its parameters; missing parameters take preset defaults."""

    name: str = "gaussian"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        defaults = preset_defaults(self.name)
        unknown = sorted(set(self.params) - set(defaults))
        if unknown:
            raise ValidationError(f"scenario {self.name!r}: unknown parameters {unknown}")
        p = {**defaults, **self.params}
        if p["temperature"] not in TEMPERATURE_MODES:
            raise ValidationError(f"scenario.temperature must be one of {TEMPERATURE_MODES}")
        if p["initial_velocity"] not in VELOCITY_MODES:
            raise ValidationError(f"scenario.initial_velocity must be one of {VELOCITY_MODES}")
        for key in ("ctot_base", "T0"):
            if not float(p[key]) > 0:
                raise ValidationError(f"scenario.{key} must be > 0, got {p[key]}")
        if "width" in p and not float(p["width"]) > 0:
            raise ValidationError(f"scenario.width must be > 0, got {p['width']}")
        if "centers" in p and len(p["centers"]) != 2:
            raise ValidationError("scenario.centers must list two positions")
        object.__setattr__(self, "params", p)

    def __getitem__(self, key):
        return self.params[key]

    def explicit_params(self) -> dict:
        """Parameters that differ from the preset defaults."""
        d = preset_defaults(self.name)
        return {k: v for k, v in self.params.items() if d.get(k) != v}


def _bump(x, center, width, grid: Grid1D):
    d = x - center
    if grid.periodic:
        d = (d + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    return np.exp(-0.5 * (d / width) ** 2)


def _base_fractions(p, n):
    if p["fractions"] is None:
        return np.full(n, 1.0 / n)
    y = np.asarray(p["fractions"], dtype=float)
    if y.shape != (n,) or np.any(y <= 0) or abs(y.sum() - 1.0) > 1e-12:
        raise ValidationError(f"scenario.fractions must be {n} positive numbers summing to 1, got {p['fractions']}")
    return y


def concentrations(scenario: Scenario, grid: Grid1D, n_species: int) -> np.ndarray:
    """Species concentrations, shape ``(n_species, n_cells)``."""
    p = scenario.params
    x = (grid.centers - grid.x_min) / grid.length
    xg = x * grid.length
    L = grid.length
    y0 = _base_fractions(p, n_species)
    shape = np.zeros_like(x)
    bump_c = np.zeros_like(x)
    if scenario.name == "gaussian":
        shape = _bump(xg, p["center"] * L, p["width"] * L, grid)
        bump_c = shape
    elif scenario.name == "two-bump":
        shape = sum(_bump(xg, c * L, p["width"] * L, grid) for c in p["centers"])
        bump_c = shape
    elif scenario.name == "step":
        shape = 0.5 * (1.0 + np.tanh((x - p["center"]) / p["width"]))
    ctot = p["ctot_base"] + p.get("ctot_amplitude", 0.0) * bump_c
    a = p.get("composition_amplitude", 0.0)
    y = np.tile(y0[:, None], (1, x.size))
    if n_species > 1:
        y[0] += a * shape
        y[1:] -= a * shape / (n_species - 1)
    if np.any(y <= 0):
        raise ValidationError(f"scenario {scenario.name!r}: composition_amplitude {a} drives a fraction non-positive")
    return y * ctot


def mixture_temperature(scenario: Scenario, c: np.ndarray) -> np.ndarray:
    p = scenario.params
    ctot = c.sum(axis=0)
    if p["temperature"] == "uniform":
        return np.full(ctot.shape, float(p["T0"]))
    return p["T0"] * p["ctot_base"] / ctot


def species_temperatures(scenario: Scenario, c: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Per-species temperatures with the configured split and ``sum c_i T_i = c_tot T``."""
    delta = float(scenario.params["temperature_split"])
    ctot = c.sum(axis=0)
    w = np.tile(-c[0] / ctot, (c.shape[0], 1))
    w[0] = (ctot - c[0]) / ctot
    Ti = T[None, :] * (1.0 + delta * w)
    if np.any(Ti <= 0):
        raise ValidationError(f"scenario.temperature_split {delta} drives a species temperature non-positive")
    return Ti


def macro_initial_state(scenario: Scenario, grid: Grid1D, n_species: int):
    from .macro_solver import MacroState

    c = concentrations(scenario, grid, n_species)
    return MacroState(0.0, c, mixture_temperature(scenario, c))


def moment_initial_state(scenario: Scenario, grid: Grid1D, mixture, closure, epsilon: float):
    """Epsilon-independent moments; face velocities from the limit fluxes or zero."""
    from .moment_solver import KineticMomentState, equilibrium_face_velocities

    c = concentrations(scenario, grid, mixture.n)
    T = mixture_temperature(scenario, c)
    Ti = species_temperatures(scenario, c, T)
    if scenario.params["initial_velocity"] == "equilibrium":
        u = equilibrium_face_velocities(mixture, c, T, grid, closure)
    else:
        u = np.zeros((mixture.n, grid.n_cells + 1))
    return KineticMomentState(0.0, epsilon, c, Ti, u)
