"""Deterministic CSV, report and manifest writers.

All numbers are written in scientific notation with a fixed number of
digits after the point, columns come in a fixed order and lines end with
``\\n``. Nothing time- or host-dependent is written.
"""
from __future__ import annotations

import csv
import math
import os
from importlib.metadata import PackageNotFoundError, version

import numpy as np
import tomli_w

from .config import RunConfig, config_to_dict
from .errors import OutputError
from .grid import Grid1D


def code_version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "unknown"


def fmt(value, precision: int = 12) -> str:
    if value is None or value == "":
        return ""
    if isinstance(value, str):
        return value
    v = float(value)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{precision}e}"


def _write_rows(path, header, rows, precision):
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([fmt(v, precision) for v in row])
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err.strerror or err}") from err


def fields_header(n_species: int, per_species_T: bool = False) -> list:
    head = ["x", *[f"c_{i + 1}" for i in range(n_species)], "T", "c_tot",
            *[f"J_{i + 1}" for i in range(n_species)]]
    if per_species_T:
        head += [f"T_{i + 1}" for i in range(n_species)]
    return head


def write_fields_csv(path, grid: Grid1D, n_species: int, state=None, precision: int = 12):
    """Cell-centred snapshot ``x, c_1..c_n, T, c_tot, J_1..J_n``.

    Moment-solver states (those with per-species temperatures) get the
    concentration-weighted ``T`` and extra ``T_1..T_n`` columns. Fluxes are
    averaged from faces to cells. ``state=None`` writes the header only.
    """
    kinetic = state is not None and np.ndim(state.T) == 2
    header = fields_header(n_species, per_species_T=kinetic)
    rows = []
    if state is not None:
        if kinetic:
            T = state.mean_T
            J = state.cell_flux(grid)
        else:
            T = state.T
            J = grid.cell_average(state.J) if state.J is not None else np.zeros_like(state.c)
        cols = [grid.centers, *state.c, T, state.c.sum(axis=0), *J]
        if kinetic:
            cols += list(state.T)
        rows = np.column_stack(cols)
    _write_rows(path, header, rows, precision)


def macro_diagnostics_header(n_species: int) -> list:
    return ["t", *[f"mass_{i + 1}" for i in range(n_species)], "min_ctot", "max_ctot",
            "ctotT_variation", "closure_residual"]


def write_diagnostics(path, diagnostics, n_species: int, precision: int = 12):
    """Per-step macro diagnostics ``t, mass_1..mass_n, min_ctot, max_ctot, ctotT_variation, closure_residual``."""
    rows = [[d["t"], *d["mass"], d["min_ctot"], d["max_ctot"], d["ctotT_variation"], d["closure_residual"]]
            for d in diagnostics]
    _write_rows(path, macro_diagnostics_header(n_species), rows, precision)


def write_moment_diagnostics(path, diagnostics, n_species: int, precision: int = 12):
    """Per-step moment diagnostics ``t, mass_1..mass_n, momentum, energy, temp_gap``."""
    header = ["t", *[f"mass_{i + 1}" for i in range(n_species)], "momentum", "energy", "temp_gap"]
    rows = [[d["t"], *d["mass"], d["momentum"], d["energy"], d["temp_gap"]] for d in diagnostics]
    _write_rows(path, header, rows, precision)


REPORT_HEADER = ["epsilon", "temp_gap", "fitted_order_running", "dist_c", "dist_J", "dist_T"]


def write_report(report, path, precision: int = 12):
    """One row per epsilon plus a ``summary`` row.

    Distances are the largest per-species L2 distance relative to the limit
    field. The summary row holds the overall fitted gap order, whether the
    gap sequence allowed a conclusive fit, and whether all distances
    decrease with epsilon.
    """
    rows = [[e, g, o, dc, dj, dt] for e, g, o, dc, dj, dt in
            zip(report.epsilons, report.temp_gap, report.running_order,
                report.dist_c, report.dist_J, report.dist_T)]
    rows.append(["summary", "conclusive" if not report.inconclusive else "inconclusive",
                 report.fitted_order, "decreasing" if report.dist_monotone else "not-decreasing", "", ""])
    _write_rows(path, REPORT_HEADER, rows, precision)


def write_compare(path, distances: dict, names, precision: int = 12):
    header = ["species", "dist_c", "dist_J", "dist_T", "rel_c", "rel_J", "rel_T"]
    rows = [[nm, distances["c"][i], distances["J"][i], distances["T"][i],
             distances["c_rel"][i], distances["J_rel"][i], distances["T_rel"][i]]
            for i, nm in enumerate(names)]
    _write_rows(path, header, rows, precision)


def write_manifest(path, cfg: RunConfig, command: str, outputs=(), results: dict | None = None):
    """Resolved configuration plus command, code version and output list."""
    doc = {"manifest": {"command": command, "code_version": code_version(), "outputs": list(outputs)}}
    if results:
        doc["results"] = {k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in results.items()}
    doc.update(config_to_dict(cfg))
    try:
        parent = os.path.dirname(os.fspath(path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(tomli_w.dumps(doc).encode("utf-8"))
    except OSError as err:
        raise OutputError(f"cannot write {path}: {err.strerror or err}") from err
