"""Command-line entry point: ``nmqo <subcommand> --config run.ini``.

Exit codes: 0 success, 2 configuration, 3 solver non-convergence,
4 Green's-function singularity, 5 Fock truncation breach.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import io
from .config import RunConfig, load_config
from .dynamics import propagate
from .errors import ConfigError, NMQOError
from .kernels import sample_kernels
from .pipeline import compare_methods, green_route, integral_route

log = logging.getLogger("nmqo")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_SINGULAR, EXIT_TRUNCATION = 0, 2, 3, 4, 5


def _coefficients(cfg: RunConfig, kernel):
    """(coeffs, extra, tables) for the configured route."""
    if cfg.route == "green":
        gr = green_route(kernel, cfg.scenario, cfg.grid)
        extra = None
        if cfg.scenario.kind == "driven-cavity":
            # C, D come from x13, which only the integral route provides
            extra = integral_route(kernel, cfg.scenario, cfg.grid, cfg.policy).extra
        return gr.coeffs, extra, gr.tables
    ir = integral_route(kernel, cfg.scenario, cfg.grid, cfg.policy)
    return ir.coeffs, ir.extra, ir.tables


def _write_coeffs(out: Path, coeffs, extra, tables, dump: bool):
    io.write_coeffs(out / "coeffs.csv", coeffs)
    if extra is not None and np.any(extra["C"]):
        io.write_coeffs(out / "coeffs_CD.csv", extra)
    if dump:
        for name, table in tables.items():
            io.write_table(out / "tables" / f"{name}.csv", table)


def cmd_coeffs(cfg: RunConfig, args) -> int:
    kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, cfg.grid)
    coeffs, extra, tables = _coefficients(cfg, kernel)
    _write_coeffs(cfg.out_dir, coeffs, extra, tables, cfg.dump_tables)
    print(f"wrote {cfg.out_dir / 'coeffs.csv'}")
    return EXIT_OK


def cmd_propagate(cfg: RunConfig, args) -> int:
    kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, cfg.grid)
    coeffs, extra, tables = _coefficients(cfg, kernel)
    _write_coeffs(cfg.out_dir, coeffs, extra, tables, cfg.dump_tables)
    traj = propagate(cfg.scenario, coeffs, cfg.grid, extra=extra)
    io.write_observables(cfg.out_dir / "observables.csv", traj)
    print(f"wrote {cfg.out_dir / 'observables.csv'} (max trace drift {traj.max_trace_drift:.2e})")
    return EXIT_OK


def cmd_compare(cfg: RunConfig, args) -> int:
    kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, cfg.grid)
    report, ir, gr = compare_methods(cfg, kernel)
    out = cfg.out_dir
    _write_coeffs(out, ir.coeffs, ir.extra, {**ir.tables, **gr.tables}, cfg.dump_tables)
    header, cols = ["t"], [cfg.grid.times]
    for j in ("1", "2", "3"):
        header += [f"A{j}", f"B{j}", f"abs_gap{j}", f"rel_gap{j}"]
        cols += [report.A["A" + j], report.B["B" + j], report.abs_gap[j], report.rel_gap[j]]
    io.write_csv(out / "compare.csv", header, cols, extra_lines=[report.summary()])
    traj = propagate(cfg.scenario, ir.coeffs, cfg.grid, extra=ir.extra)
    io.write_observables(out / "observables.csv", traj)
    print(report.summary())
    return EXIT_OK


def cmd_unravel(cfg: RunConfig, args) -> int:
    from .unravel import run_ensemble

    kernel = sample_kernels(cfg.scenario.model, cfg.scenario.beta, cfg.grid)
    res = run_ensemble(cfg.scenario, kernel, cfg.grid, cfg.n_traj, cfg.seed, threads=args.threads,
                       omit_channels=cfg.omit_channels)
    io.write_ensemble(cfg.out_dir / "ensemble.csv", res)
    print(f"wrote {cfg.out_dir / 'ensemble.csv'} ({res.n_used}/{res.n_traj} trajectories used)")
    return EXIT_OK


def cmd_selftest(cfg, args) -> int:
    from .selftest import run_selftest

    return EXIT_OK if run_selftest() else 1


COMMANDS = {
    "coeffs": cmd_coeffs,
    "propagate": cmd_propagate,
    "compare": cmd_compare,
    "unravel": cmd_unravel,
    "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nmqo", description="Time-local non-Markovian master equations for a cavity "
                                                         "mode or a two-state atom in a bosonic bath.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, required=name != "selftest", help="INI run configuration")
        s.add_argument("--out", type=Path, default=None, help="output directory (overrides [output] dir)")
        s.add_argument("--dump-tables", action="store_true", help="also write coefficient-function tables")
        s.add_argument("--threads", type=int, default=None,
                       help="worker threads for the ensemble; 0 = auto (NMQO_THREADS, else CPU count)")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.threads is not None and args.threads < 0:
        print("error: --threads must be >= 0", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = None
        if args.config is not None:
            cfg = load_config(args.config)
            if args.out is not None:
                cfg = replace(cfg, out_dir=args.out)
            if args.dump_tables:
                cfg = replace(cfg, dump_tables=True)
        return COMMANDS[args.command](cfg, args)
    except NMQOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        diag = getattr(exc, "diagnostics", None)
        if diag:
            print(f"diagnostics: {diag}", file=sys.stderr)
        return exc.exit_code
    except OverflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
