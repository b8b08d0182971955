"""Command-line entry point ``msmix``.

Exit codes: 0 success, 1 invalid input or configuration, 2 numerical
failure, 3 file-system error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import io
from .collision_moments import (MaxwellianState, OracleResolution, energy_exchange_pair,
                                i_term_decomposition, momentum_exchange_pair, oracle_pair_moments)
from .config import RunConfig, emit_config, load_config
from .errors import MsmixError, NumericalError, OutputError, ValidationError
from .macro_solver import run_macro
from .mixture import build_diffusion_matrix
from .moment_solver import EpsSweepConfig, compare_to_limit, eps_sweep, run_moment
from .scenarios import PRESET_HELP, PRESETS, macro_initial_state, moment_initial_state

log = logging.getLogger("msmix")

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


def _presets_text() -> str:
    lines = ["scenario presets:"]
    for name, text in PRESET_HELP.items():
        lines.append(f"  {name:<10} {text}")
    return "\n".join(lines)


def _out_dir(args, cfg: RunConfig) -> str:
    return args.output_dir or cfg.output.directory


def _fields_outputs(out, grid, n, snapshots, precision, prefix="fields"):
    names = []
    for idx, state in enumerate(snapshots):
        name = f"{prefix}_{idx:04d}.csv"
        io.write_fields_csv(os.path.join(out, name), grid, n, state, precision)
        names.append(name)
    return names


def cmd_diffusion_matrix(args, cfg: RunConfig):
    mixture = cfg.build_mixture()
    D = build_diffusion_matrix(mixture).values
    p = args.precision or cfg.output.precision
    names = mixture.names
    width = max(p + 8, max(len(nm) for nm in names) + 2)
    print(" " * width + "".join(f"{nm:>{width}}" for nm in names))
    for i, nm in enumerate(names):
        print(f"{nm:<{width}}" + "".join(f"{io.fmt(v, p):>{width}}" for v in D[i]))
    if args.output:
        io._write_rows(args.output, ["species", *names], [[nm, *D[i]] for i, nm in enumerate(names)], p)
    return EXIT_OK


def random_states(mixture, count: int, seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        n = mixture.n
        yield MaxwellianState(rng.uniform(0.5, 2.0, n), rng.uniform(-1.0, 1.0, (n, 3)),
                              rng.uniform(0.5, 2.0, n))


def cmd_oracle_check(args, cfg: RunConfig):
    """Compare quadrature moments of Q_ij with the closed-form exchange rates."""
    mixture = cfg.build_mixture()
    res = OracleResolution(args.resolution, args.resolution, args.resolution)
    eps = args.epsilon
    rows, worst = [], {"unity": 0.0, "momentum": 0.0, "energy": 0.0, "i_sum": 0.0}
    for s_idx, state in enumerate(random_states(mixture, args.states, args.seed)):
        for i in range(mixture.n):
            for j in range(i + 1, mixture.n):
                for (a, b), q in zip(((i, j), (j, i)), oracle_pair_moments(mixture, state, (i, j), res, eps)):
                    scale = state.c[a] * state.c[b] * mixture.sphere_factors()[a, b]
                    # the v and |v|^2 moments of Q are eps times the exchange rates
                    mom = momentum_exchange_pair(mixture, state, a, b)
                    en = energy_exchange_pair(mixture, state, eps, a, b)
                    e_mom = np.linalg.norm(q["velocity"] - eps * mom) / max(np.linalg.norm(eps * mom), 1e-300)
                    e_en = abs(q["speed-squared"] - eps * en) / max(abs(eps * en), 1e-300)
                    e_one = abs(q["unity"]) / scale
                    e_sum = abs(sum(i_term_decomposition(mixture, state, eps, (a, b))) - en) / max(abs(en), 1e-300)
                    worst["unity"] = max(worst["unity"], e_one)
                    worst["momentum"] = max(worst["momentum"], e_mom)
                    worst["energy"] = max(worst["energy"], e_en)
                    worst["i_sum"] = max(worst["i_sum"], e_sum)
                    rows.append([s_idx, mixture.names[a], mixture.names[b], e_one, e_mom, e_en, e_sum])
    p = cfg.output.precision
    if args.output:
        io._write_rows(args.output, ["state", "species_i", "species_j", "unity_scaled", "momentum_rel",
                                     "energy_rel", "i_terms_rel"], rows, p)
    tol = {"unity": 1e-10, "momentum": 1e-6, "energy": 1e-5, "i_sum": 1e-10}
    ok = True
    for key, val in worst.items():
        passed = val <= tol[key]
        ok &= passed
        print(f"{key:<9} max error {val:.3e}  tolerance {tol[key]:.0e}  {'ok' if passed else 'FAIL'}")
    if not ok:
        raise NumericalError("oracle and closed-form exchange rates disagree beyond tolerance")
    return EXIT_OK


def cmd_macro_run(args, cfg: RunConfig):
    mixture = cfg.build_mixture()
    grid = cfg.grid
    out = _out_dir(args, cfg)
    p = cfg.output.precision
    initial = macro_initial_state(cfg.scenario, grid, mixture.n)
    try:
        run = run_macro(mixture, initial, grid, cfg.solver.closure(), cfg.solver.macro(), cfg.output.times)
    except (MsmixError, ValueError) as err:
        partial = getattr(err, "partial_run", None)
        if partial is not None:
            io.write_diagnostics(os.path.join(out, "diagnostics.csv"), partial.diagnostics, mixture.n, p)
            _fields_outputs(out, grid, mixture.n, partial.snapshots[-1:], p, prefix="last_valid")
        raise
    outputs = _fields_outputs(out, grid, mixture.n, run.snapshots, p)
    io.write_diagnostics(os.path.join(out, "diagnostics.csv"), run.diagnostics, mixture.n, p)
    outputs.append("diagnostics.csv")
    times = [s.time for s in run.snapshots]
    io.write_manifest(os.path.join(out, "manifest_macro.toml"), cfg, "macro run", outputs,
                      {"snapshot_times": times, "steps": len(run.diagnostics) - 1})
    print(f"macro run: {len(run.diagnostics) - 1} steps, outputs in {out}")
    return EXIT_OK


def _moment_dt(cfg):
    return cfg.solver.moment_dt


def cmd_moment_run(args, cfg: RunConfig):
    mixture = cfg.build_mixture()
    grid = cfg.grid
    out = _out_dir(args, cfg)
    p = cfg.output.precision
    eps = args.epsilon or cfg.solver.epsilon
    initial = moment_initial_state(cfg.scenario, grid, mixture, cfg.solver.closure(), eps)
    try:
        run = run_moment(mixture, initial, grid, cfg.solver.t_end, cfl=cfg.solver.moment_cfl,
                         dt=_moment_dt(cfg), output_times=cfg.output.times)
    except (MsmixError, ValueError) as err:
        partial = getattr(err, "partial_run", None)
        if partial is not None:
            io.write_moment_diagnostics(os.path.join(out, "moment_diagnostics.csv"),
                                        partial.diagnostics, mixture.n, p)
            _fields_outputs(out, grid, mixture.n, partial.snapshots[-1:], p, prefix="last_valid")
        raise
    outputs = _fields_outputs(out, grid, mixture.n, run.snapshots, p, prefix="moment_fields")
    io.write_moment_diagnostics(os.path.join(out, "moment_diagnostics.csv"), run.diagnostics, mixture.n, p)
    outputs.append("moment_diagnostics.csv")
    io.write_manifest(os.path.join(out, "manifest_moment.toml"), cfg, f"moment run --epsilon {eps!r}", outputs,
                      {"epsilon": eps, "snapshot_times": [s.time for s in run.snapshots],
                       "steps": len(run.diagnostics) - 1})
    print(f"moment run (epsilon={eps:g}): {len(run.diagnostics) - 1} steps, outputs in {out}")
    return EXIT_OK


def cmd_sweep(args, cfg: RunConfig):
    mixture = cfg.build_mixture()
    grid = cfg.grid
    out = _out_dir(args, cfg)
    closure = cfg.solver.closure()
    sweep = EpsSweepConfig(cfg.solver.epsilons, cfg.scenario.name, cfg.solver.t_measure)

    def make_initial(eps):
        return moment_initial_state(cfg.scenario, grid, mixture, closure, eps)

    report = eps_sweep(sweep, mixture, grid, make_initial, closure, cfg.solver.macro(t_end=sweep.t_measure),
                       cfl=cfg.solver.moment_cfl, dt=_moment_dt(cfg))
    io.write_report(report, os.path.join(out, "sweep.csv"), cfg.output.precision)
    io.write_manifest(os.path.join(out, "manifest_sweep.toml"), cfg, "sweep-eps", ["sweep.csv"],
                      {"fitted_order": report.fitted_order, "inconclusive": report.inconclusive})
    status = "inconclusive" if report.inconclusive else f"{report.fitted_order:.3f}"
    print(f"temperature-gap order: {status}; outputs in {out}")
    return EXIT_OK


def cmd_compare(args, cfg: RunConfig):
    mixture = cfg.build_mixture()
    grid = cfg.grid
    out = _out_dir(args, cfg)
    closure = cfg.solver.closure()
    eps = args.epsilon or cfg.solver.epsilon
    t = cfg.solver.t_end
    initial = moment_initial_state(cfg.scenario, grid, mixture, closure, eps)
    from .macro_solver import MacroState

    macro = run_macro(mixture, MacroState(0.0, initial.c, initial.mean_T), grid, closure, cfg.solver.macro())
    moment = run_moment(mixture, initial, grid, t, cfl=cfg.solver.moment_cfl, dt=_moment_dt(cfg))
    d = compare_to_limit(moment, macro, t)
    io.write_compare(os.path.join(out, "compare.csv"), d, mixture.names, cfg.output.precision)
    io.write_manifest(os.path.join(out, "manifest_compare.toml"), cfg, f"compare --epsilon {eps!r}", ["compare.csv"],
                      {"epsilon": eps, "time": t})
    for i, nm in enumerate(mixture.names):
        print(f"{nm}: rel L2 c {d['c_rel'][i]:.3e}  J {d['J_rel'][i]:.3e}  T {d['T_rel'][i]:.3e}")
    return EXIT_OK


def cmd_presets(args, cfg=None):
    for name in PRESETS:
        from .scenarios import preset_defaults

        params = ", ".join(f"{k}={v}" for k, v in preset_defaults(name).items())
        print(f"{name}: {PRESET_HELP[name]}\n    {params}")
    return EXIT_OK


def cmd_show_config(args, cfg: RunConfig):
    sys.stdout.write(emit_config(cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msmix",
        description="Maxwell-Stefan mixture solvers: diffusion matrix, collision-moment oracle, "
                    "limit (macro) and finite-epsilon (moment) solvers.",
        epilog=_presets_text(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p, output_dir=True):
        p.add_argument("config", help="TOML run configuration")
        if output_dir:
            p.add_argument("--output-dir", help="override output.directory")
        return p

    p = with_config(sub.add_parser("diffusion-matrix", help="print the binary diffusion coefficients"),
                    output_dir=False)
    p.add_argument("--precision", type=int, help="digits after the decimal point")
    p.add_argument("--output", help="also write the table as CSV")
    p.set_defaults(func=cmd_diffusion_matrix)

    oracle = sub.add_parser("oracle", help="collision-moment quadrature oracle")
    osub = oracle.add_subparsers(dest="oracle_command", required=True)
    p = with_config(osub.add_parser("check", help="compare quadrature with closed-form exchange rates"),
                    output_dir=False)
    p.add_argument("--states", type=int, default=10, help="number of random Maxwellian states")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--resolution", type=int, default=16, help="quadrature nodes per axis")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--output", help="write per-pair errors as CSV")
    p.set_defaults(func=cmd_oracle_check)

    macro = sub.add_parser("macro", help="limit solver")
    msub = macro.add_subparsers(dest="macro_command", required=True)
    with_config(msub.add_parser("run", help="run the limit system")).set_defaults(func=cmd_macro_run)

    moment = sub.add_parser("moment", help="finite-epsilon moment solver")
    msub = moment.add_subparsers(dest="moment_command", required=True)
    p = with_config(msub.add_parser("run", help="run the moment system"))
    p.add_argument("--epsilon", type=float, help="override solver.epsilon")
    p.set_defaults(func=cmd_moment_run)

    with_config(sub.add_parser("sweep-eps", help="temperature-gap order and distance to the limit over epsilons")
                ).set_defaults(func=cmd_sweep)

    p = with_config(sub.add_parser("compare", help="moment run against the limit run at solver.t_end"))
    p.add_argument("--epsilon", type=float, help="override solver.epsilon")
    p.set_defaults(func=cmd_compare)

    sub.add_parser("presets", help="list scenario presets and their parameters").set_defaults(
        func=cmd_presets, config=None)
    with_config(sub.add_parser("show-config", help="print the configuration with all defaults"),
                output_dir=False).set_defaults(func=cmd_show_config)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config) if args.config else None
        return args.func(args, cfg)
    except ValidationError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OutputError, OSError) as err:
        print(f"i/o error: {err}", file=sys.stderr)
        return EXIT_IO
    except (NumericalError, MsmixError, ArithmeticError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
