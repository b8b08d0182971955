"""TOML run configuration: parsing, validation with field paths, and emission.

Schema (every key optional unless noted)::

    [mixture]
    k_boltzmann = 1.0
    quadrature_order = 32
    species = [{name = "A", mass = 1.0}, {name = "B", mass = 2.0}]   # required, >= 2 entries
    kernel = {form = "constant", value = 0.5}     # default kernel for every pair
    pairs = [{species = ["A", "B"], form = "poly", coefficients = [0.5, 0.0, 0.25]}]

    [grid]
    x_min = 0.0
    x_max = 1.0
    n_cells = 256
    boundary = "periodic"          # or "no-flux"

    [scenario]
    name = "gaussian"              # uniform | gaussian | step | two-bump
    # preset parameters, see msmix.scenarios.PRESETS

    [solver]
    alpha = 1.0                    # closure coefficient
    t_end = 0.1
    dt = "auto"
    cfl_safety = 0.9
    heat_scheme = "crank-nicolson"
    temperature_scheme = "eulerian-upwind"
    ctot_T_variation = 0.01
    nonnegativity_floor = 1e-12
    epsilon = 0.01                 # moment solver
    moment_cfl = 0.45
    moment_dt = "auto"
    epsilons = [0.1, 0.05, 0.025]  # sweep-eps
    t_measure = 0.05

    [output]
    directory = "output"
    times = []
    precision = 12
"""
from __future__ import annotations

import sys
from dataclasses import dataclass, field, fields, replace

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ValidationError
from .grid import Grid1D
from .macro_solver import ClosureConfig, SolverConfig
from .mixture import AngularKernel, Mixture, PhysicalConstants, Species
from .scenarios import Scenario, preset_defaults

SECTIONS = ("mixture", "grid", "scenario", "solver", "output")
DEFAULT_KERNEL = {"form": "constant", "value": 0.5}


@dataclass(frozen=True)
class MixtureSpec:
    species: tuple
    kernel: dict = field(default_factory=lambda: dict(DEFAULT_KERNEL))
    pairs: tuple = ()
    k_boltzmann: float = 1.0
    quadrature_order: int = 32

    def build(self) -> Mixture:
        names = [s.name for s in self.species]
        default = _kernel_from_dict(self.kernel, "mixture.kernel")
        n = len(self.species)
        kernels = {(i, j): default for i in range(n) for j in range(i, n)}
        for idx, pair in enumerate(self.pairs):
            where = f"mixture.pairs[{idx}]"
            a, b = pair["species"]
            for nm in (a, b):
                if nm not in names:
                    raise ValidationError(f"{where}.species: unknown species {nm!r}")
            body = {k: v for k, v in pair.items() if k != "species"}
            kernels[tuple(sorted((names.index(a), names.index(b))))] = _kernel_from_dict(body, where)
        return Mixture(self.species, kernels, PhysicalConstants(self.k_boltzmann), self.quadrature_order)


@dataclass(frozen=True)
class SolverSettings:
    alpha: float = 1.0
    t_end: float = 0.1
    dt: float | None = None
    cfl_safety: float = 0.9
    heat_scheme: str = "crank-nicolson"
    temperature_scheme: str = "eulerian-upwind"
    ctot_T_variation: float = 1e-2
    nonnegativity_floor: float = 1e-12
    epsilon: float = 0.01
    moment_cfl: float = 0.45
    moment_dt: float | None = None
    epsilons: tuple = (0.1, 0.05, 0.025)
    t_measure: float = 0.05

    def closure(self) -> ClosureConfig:
        return ClosureConfig(self.alpha)

    def macro(self, t_end: float | None = None) -> SolverConfig:
        return SolverConfig(dt=self.dt, t_end=self.t_end if t_end is None else t_end,
                            cfl_safety=self.cfl_safety, heat_scheme=self.heat_scheme,
                            temperature_scheme=self.temperature_scheme,
                            ctot_T_variation=self.ctot_T_variation,
                            nonnegativity_floor=self.nonnegativity_floor)


@dataclass(frozen=True)
class OutputSpec:
    directory: str = "output"
    times: tuple = ()
    precision: int = 12


@dataclass(frozen=True)
class RunConfig:
    mixture: MixtureSpec
    grid: Grid1D = field(default_factory=Grid1D)
    scenario: Scenario = field(default_factory=Scenario)
    solver: SolverSettings = field(default_factory=SolverSettings)
    output: OutputSpec = field(default_factory=OutputSpec)

    def build_mixture(self) -> Mixture:
        return self.mixture.build()


def _kernel_from_dict(d: dict, where: str) -> AngularKernel:
    allowed = {"form", "value", "coefficients", "nodes", "values"}
    unknown = sorted(set(d) - allowed)
    if unknown:
        raise ValidationError(f"{where}: unknown keys {unknown}")
    if "form" not in d:
        raise ValidationError(f"{where}.form is required")
    form = d["form"]
    try:
        if form == "constant":
            return AngularKernel.constant(float(d.get("value", 0.0)))
        if form == "poly":
            return AngularKernel.polynomial(d.get("coefficients", ()))
        if form == "table":
            return AngularKernel.tabulated(d.get("nodes", ()), d.get("values", ()))
    except ValidationError as err:
        raise ValidationError(f"{where}: {err}") from None
    raise ValidationError(f"{where}.form must be constant, poly or table, got {form!r}")


def _check_keys(section: dict, allowed, where: str, unknown: list):
    for key in section:
        if key not in allowed:
            unknown.append(f"{where}.{key}")


def _number(value, where: str, *, integer=False, positive=False, lower=None, upper=None):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValidationError(f"{where} must be a number, got {value!r}")
    if integer and int(value) != value:
        raise ValidationError(f"{where} must be an integer, got {value!r}")
    if positive and not value > 0:
        raise ValidationError(f"{where} must be > 0, got {value!r}")
    if lower is not None and value < lower:
        raise ValidationError(f"{where} must be >= {lower}, got {value!r}")
    if upper is not None and value > upper:
        raise ValidationError(f"{where} must be <= {upper}, got {value!r}")
    return int(value) if integer else float(value)


def _auto(value, where):
    if value == "auto":
        return None
    return _number(value, where, positive=True)


def _wrap(where: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ValidationError as err:
        msg = str(err)
        raise ValidationError(msg if msg.startswith(where) else f"{where}: {msg}") from None


def config_from_dict(doc: dict) -> RunConfig:
    """Validate a decoded document and materialize all defaults."""
    unknown = []
    _check_keys(doc, SECTIONS, "", unknown)
    unknown = [u.lstrip(".") for u in unknown]
    mix = doc.get("mixture", {})
    grid = doc.get("grid", {})
    scen = doc.get("scenario", {})
    solv = doc.get("solver", {})
    out = doc.get("output", {})
    _check_keys(mix, {"species", "kernel", "pairs", "k_boltzmann", "quadrature_order"}, "mixture", unknown)
    _check_keys(grid, {"x_min", "x_max", "n_cells", "boundary"}, "grid", unknown)
    _check_keys(solv, {f.name for f in fields(SolverSettings)}, "solver", unknown)
    _check_keys(out, {"directory", "times", "precision"}, "output", unknown)
    name = scen.get("name", "gaussian")
    try:
        scen_keys = set(preset_defaults(name)) | {"name"}
    except ValidationError:
        raise ValidationError(f"scenario.name: unknown scenario {name!r}") from None
    _check_keys(scen, scen_keys, "scenario", unknown)
    for idx, sp in enumerate(mix.get("species", [])):
        if isinstance(sp, dict):
            _check_keys(sp, {"name", "mass"}, f"mixture.species[{idx}]", unknown)
    for idx, pair in enumerate(mix.get("pairs", [])):
        if isinstance(pair, dict):
            _check_keys(pair, {"species", "form", "value", "coefficients", "nodes", "values"},
                        f"mixture.pairs[{idx}]", unknown)
    if unknown:
        raise ValidationError(f"unknown configuration keys: {', '.join(unknown)}")

    # mixture
    raw_species = mix.get("species")
    if not isinstance(raw_species, list) or len(raw_species) < 2:
        raise ValidationError("mixture.species must list at least 2 species")
    species = []
    for idx, sp in enumerate(raw_species):
        where = f"mixture.species[{idx}]"
        if not isinstance(sp, dict):
            raise ValidationError(f"{where} must be a table with name and mass")
        nm = sp.get("name", f"s{idx + 1}")
        if not isinstance(nm, str) or not nm:
            raise ValidationError(f"{where}.name must be a non-empty string")
        if "mass" not in sp:
            raise ValidationError(f"{where}.mass is required")
        mass = _number(sp["mass"], f"{where}.mass", positive=True)
        species.append(Species(nm, mass))
    kernel = dict(mix.get("kernel", DEFAULT_KERNEL))
    pairs = []
    for idx, pair in enumerate(mix.get("pairs", [])):
        where = f"mixture.pairs[{idx}]"
        if not isinstance(pair, dict) or len(pair.get("species", ())) != 2:
            raise ValidationError(f"{where}.species must name exactly two species")
        pairs.append({**pair, "species": list(pair["species"])})
    spec = MixtureSpec(
        species=tuple(species),
        kernel=kernel,
        pairs=tuple(pairs),
        k_boltzmann=_number(mix.get("k_boltzmann", 1.0), "mixture.k_boltzmann", positive=True),
        quadrature_order=_number(mix.get("quadrature_order", 32), "mixture.quadrature_order",
                                 integer=True, lower=2),
    )
    _wrap("mixture", spec.build)

    # grid
    g = _wrap("grid", Grid1D,
              _number(grid.get("x_min", 0.0), "grid.x_min"),
              _number(grid.get("x_max", 1.0), "grid.x_max"),
              _number(grid.get("n_cells", 256), "grid.n_cells", integer=True, lower=8),
              grid.get("boundary", "periodic"))

    # scenario
    params = {k: v for k, v in scen.items() if k != "name"}
    for key, value in params.items():
        if isinstance(value, list):
            params[key] = list(value)
    scenario = _wrap("scenario", Scenario, name, params)

    # solver
    kw = {}
    for f in fields(SolverSettings):
        if f.name not in solv:
            continue
        where = f"solver.{f.name}"
        v = solv[f.name]
        if f.name in ("dt", "moment_dt"):
            kw[f.name] = _auto(v, where)
        elif f.name in ("heat_scheme", "temperature_scheme"):
            kw[f.name] = v
        elif f.name == "epsilons":
            if not isinstance(v, list):
                raise ValidationError(f"{where} must be a list")
            kw[f.name] = tuple(_number(e, f"{where}[{i}]", positive=True) for i, e in enumerate(v))
        elif f.name == "t_end":
            kw[f.name] = _number(v, where, lower=0.0)
        elif f.name == "nonnegativity_floor":
            kw[f.name] = _number(v, where, lower=0.0)
        else:
            kw[f.name] = _number(v, where, positive=True)
    settings = SolverSettings(**kw)
    if settings.moment_cfl > 1:
        raise ValidationError(f"solver.moment_cfl must be <= 1, got {settings.moment_cfl}")
    eps = settings.epsilons
    if len(eps) < 3 or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValidationError(f"solver.epsilons must hold >= 3 strictly decreasing values, got {list(eps)}")
    _wrap("solver", settings.closure)
    _wrap("solver", settings.macro)

    # output
    times = out.get("times", [])
    if not isinstance(times, list):
        raise ValidationError("output.times must be a list")
    times = tuple(_number(t, f"output.times[{i}]", lower=0.0) for i, t in enumerate(times))
    directory = out.get("directory", "output")
    if not isinstance(directory, str) or not directory:
        raise ValidationError("output.directory must be a non-empty string")
    precision = _number(out.get("precision", 12), "output.precision", integer=True, lower=6, upper=17)
    return RunConfig(spec, g, scenario, settings, OutputSpec(directory, times, precision))


def parse_config(text: str) -> RunConfig:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise ValidationError(f"malformed configuration: {err}") from None
    return config_from_dict(doc)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: RunConfig) -> dict:
    """Fully materialized document; ``None`` steps are written as ``"auto"``."""
    m = cfg.mixture
    s = cfg.solver
    solver = {}
    for f in fields(SolverSettings):
        v = getattr(s, f.name)
        solver[f.name] = "auto" if v is None else (list(v) if isinstance(v, tuple) else v)
    return {
        "mixture": {
            "k_boltzmann": m.k_boltzmann,
            "quadrature_order": m.quadrature_order,
            "species": [{"name": sp.name, "mass": sp.mass} for sp in m.species],
            "kernel": dict(m.kernel),
            "pairs": [dict(p) for p in m.pairs],
        },
        "grid": {"x_min": cfg.grid.x_min, "x_max": cfg.grid.x_max,
                 "n_cells": cfg.grid.n_cells, "boundary": cfg.grid.boundary},
        "scenario": {"name": cfg.scenario.name,
                     **{k: v for k, v in cfg.scenario.params.items() if v is not None}},
        "solver": solver,
        "output": {"directory": cfg.output.directory, "times": list(cfg.output.times),
                   "precision": cfg.output.precision},
    }


def emit_config(cfg: RunConfig) -> str:
    return tomli_w.dumps(config_to_dict(cfg))


def with_overrides(cfg: RunConfig, **solver) -> RunConfig:
    return replace(cfg, solver=replace(cfg.solver, **solver))
