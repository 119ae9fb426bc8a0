"""Command-line entry point.

``sandflux solve CONFIG`` runs a configuration to its stationary state
and writes the requested outputs (field CSVs, history, diagnostics,
figures) into the output directory.  Exit codes: 0 when the run reaches
stationarity, 2 for configuration or validation problems, 1 when the
solver fails to deliver a stationary state.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import analysis, export, figures
from .config import BuiltProblem, ConfigError, apply_overlay, build_problem, \
    load_config, preset_names, preset_text
from .solver import IterationDivergedError, run_to_stationary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sandflux",
        description="Stationary transport flux and potential on 2D domains "
                    "with slope-bounded surfaces.")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser(
        "solve", help="run a configuration to its stationary state")
    solve.add_argument("config", nargs="?", default=None,
                       help="configuration file (optional when --preset is given)")
    solve.add_argument("--preset", metavar="NAME",
                       help="start from a shipped preset: " + ", ".join(preset_names()))
    solve.add_argument("--out", metavar="DIR", help="output directory override")
    solve.add_argument("--resolution", type=int, metavar="N",
                       help="cells along the x-axis (overrides nx/h)")
    solve.add_argument("--max-steps", type=int, metavar="N",
                       help="step cap override")
    solve.add_argument("--accurate-potential", action="store_true",
                       help="tighter stepping for a well-resolved potential "
                            "(slower)")
    solve.add_argument("--no-figures", action="store_true",
                       help="skip figure rendering")
    return parser


def _configure(args: argparse.Namespace) -> BuiltProblem:
    cfg = load_config(args.config, preset=args.preset)
    if args.accurate_potential:
        cfg = apply_overlay(cfg, preset_text("accurate-potential"))
    if args.resolution is not None:
        cfg.nx = args.resolution
        cfg.h = None
    if args.max_steps is not None:
        cfg.max_steps = args.max_steps
    if args.out is not None:
        cfg.out_dir = args.out
    if args.no_figures:
        cfg.figures_out = False
    return build_problem(cfg)


def _solve(args: argparse.Namespace) -> int:
    try:
        built = _configure(args)
    except (ConfigError, OSError, ValueError) as exc:
        print(f"sandflux: error: {exc}", file=sys.stderr)
        return 2

    cfg, problem = built.cfg, built.problem
    grid = problem.grid
    print(f"grid {grid.nx} x {grid.ny}, h = {grid.h:.6g}")
    try:
        result = run_to_stationary(problem, built.params)
    except IterationDivergedError as exc:
        print(f"sandflux: solver failed: {exc}", file=sys.stderr)
        return 1

    report = analysis.diagnostics(
        result.flux, result.potential, problem.source, problem.k, grid,
        analysis.default_thresholds(cfg.k_base, grid))

    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if cfg.fields_out:
        export.export_fields(out, result)
    if cfg.history_out:
        export.write_history(out / "history.csv", result.history)
    if cfg.diagnostics_out:
        export.write_diagnostics(out / "diagnostics.txt", report, extra={
            "converged": result.converged,
            "steps": result.steps,
            "div_tolerance": built.tol_div,
        })
    if cfg.figures_out:
        figures.render_figures(out, result)

    status = "stationary" if result.converged else "NOT stationary"
    print(f"{status} after {result.steps} steps "
          f"(max |du|/dt = {result.history[-1].max_du_dt:.3e})")
    print(f"total cost {report.total_cost:.6g}, "
          f"div residual {report.div_residual_inf:.3e} "
          f"(tolerance {built.tol_div:.3e})")
    print(f"outputs in {out}")
    if not result.converged:
        print("sandflux: solver failed: no stationary state within "
              f"{built.params.max_steps} steps", file=sys.stderr)
        return 1
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "solve":
        return _solve(args)
    parser.error(f"unknown command {args.command!r}")
    return 2


if __name__ == "__main__":
    sys.exit(main())
