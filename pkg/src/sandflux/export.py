"""Delimited output: field CSVs, run history, diagnostics key-value text.

Every float is written with ``repr``, which round-trips exactly, and all
files use LF newlines regardless of platform, so identical runs produce
byte-identical files.

Field CSV layout: one metadata row ``nx,ny,h,x0,y0`` describing the
grid, then one row per second-axis index (ny rows for cell fields,
ny or ny+1 for edge fields) each holding one value per first-axis index.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .analysis import DiagnosticsReport
from .grid import FluxField, Grid
from .solver import SolveResult, StepRecord


def _fmt(v: float) -> str:
    return repr(float(v))


def write_field(path: str | Path, values: np.ndarray, grid: Grid) -> None:
    """Write a 2D field (cell- or edge-sampled) with grid metadata."""
    values = np.asarray(values, dtype=float)
    if values.ndim != 2:
        raise ValueError("field must be 2D")
    lines = [f"{grid.nx},{grid.ny},{_fmt(grid.h)},{_fmt(grid.x0)},{_fmt(grid.y0)}"]
    for j in range(values.shape[1]):
        lines.append(",".join(_fmt(v) for v in values[:, j]))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_field(path: str | Path) -> tuple[np.ndarray, Grid]:
    """Inverse of :func:`write_field`; returns the values and the grid."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"empty field file: {path}")
    head = lines[0].split(",")
    if len(head) != 5:
        raise ValueError(f"malformed field header in {path}")
    nx, ny = int(head[0]), int(head[1])
    h, x0, y0 = float(head[2]), float(head[3]), float(head[4])
    rows = [np.array([float(tok) for tok in ln.split(",")]) for ln in lines[1:]]
    values = np.vstack(rows).T
    return values, Grid(nx=nx, ny=ny, h=h, x0=x0, y0=y0)


def write_history(path: str | Path, history: list[StepRecord]) -> None:
    lines = ["step,t,objective,max_du_dt,total_cost"]
    for rec in history:
        lines.append(f"{rec.step},{_fmt(rec.t)},{_fmt(rec.objective)},"
                     f"{_fmt(rec.max_du_dt)},{_fmt(rec.total_cost)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def write_diagnostics(path: str | Path, report: DiagnosticsReport,
                      extra: dict | None = None) -> None:
    """Key-value dump, one ``key = value`` pair per line."""
    items: dict = dict(report.as_dict())
    if extra:
        items.update(extra)
    lines = []
    for key, val in items.items():
        if isinstance(val, bool):
            text = "true" if val else "false"
        elif isinstance(val, float):
            text = _fmt(val)
        else:
            text = str(val)
        lines.append(f"{key} = {text}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def export_fields(out_dir: str | Path, result: SolveResult) -> list[Path]:
    """Write u, a, f, k and both flux components as CSVs; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = result.problem.grid
    written = []
    for name, values in (
        ("u", result.potential),
        ("a", result.density),
        ("f", result.problem.source),
        ("k", result.problem.k),
        ("qx", result.flux.qx),
        ("qy", result.flux.qy),
    ):
        path = out / f"{name}.csv"
        write_field(path, values, grid)
        written.append(path)
    return written


def read_flux(out_dir: str | Path) -> tuple[FluxField, Grid]:
    """Reassemble a flux field from exported qx.csv / qy.csv."""
    qx, grid = read_field(Path(out_dir) / "qx.csv")
    qy, _ = read_field(Path(out_dir) / "qy.csv")
    flux = FluxField(qx=qx, qy=qy)
    flux.check(grid)
    return flux, grid
