"""Report figures rendered straight to PNG files.

Uses matplotlib's object-oriented API with an Agg canvas, so no backend
or display is ever involved and repeated runs write identical bytes
(PNG metadata is pinned).  Three views cover what a run produces: the
potential with the flux direction field, the flux speed, and the
transport density.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.figure import Figure

from .solver import SolveResult

_METADATA = {"Software": "sandflux"}
_DPI = 150


def _new_axes(grid):
    fig = Figure(figsize=(6.4, 6.4 * grid.ny / grid.nx + 0.4))
    ax = fig.add_subplot()
    ax.set_xlim(grid.x0, grid.x1)
    ax.set_ylim(grid.y0, grid.y1)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    return fig, ax


def _overlay_k_regions(ax, k, grid):
    # Dashed outline where the cost coefficient departs from background.
    if np.max(k) <= np.min(k):
        return
    xs, ys = grid.cell_centers()
    level = float(np.sqrt(np.max(k) * np.min(k)))
    ax.contour(xs, ys, k.T, levels=[level], colors="black",
               linewidths=0.8, linestyles="--")


def _save(fig: Figure, path: Path) -> None:
    fig.savefig(path, dpi=_DPI, metadata=_METADATA, format="png")


def render_figures(out_dir: str | Path, result: SolveResult) -> list[Path]:
    """Render the three report figures into ``out_dir``; returns paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = result.problem.grid
    k = result.problem.k
    xs, ys = grid.cell_centers()
    extent = (grid.x0, grid.x1, grid.y0, grid.y1)
    written = []

    # Potential contours with the flux direction field on top.
    fig, ax = _new_axes(grid)
    cs = ax.contour(xs, ys, result.potential.T, levels=20, linewidths=0.7)
    fig.colorbar(cs, ax=ax, shrink=0.85, label="potential")
    qbx = 0.5 * (result.flux.qx[:-1, :] + result.flux.qx[1:, :])
    qby = 0.5 * (result.flux.qy[:, :-1] + result.flux.qy[:, 1:])
    speed = np.hypot(qbx, qby)
    stride = max(1, grid.nx // 32, grid.ny // 32)
    sl = (slice(stride // 2, None, stride), slice(stride // 2, None, stride))
    X, Y = grid.center_mesh()
    mask = speed[sl] > 1e-3 * speed.max() if speed.max() > 0 else speed[sl] > 0
    ax.quiver(X[sl][mask], Y[sl][mask], qbx[sl][mask], qby[sl][mask],
              angles="xy", width=0.003, color="tab:red")
    _overlay_k_regions(ax, k, grid)
    ax.set_title("potential and flux")
    path = out / "potential_flux.png"
    _save(fig, path)
    written.append(path)

    # Flux speed.
    fig, ax = _new_axes(grid)
    im = ax.imshow(speed.T, origin="lower", extent=extent, cmap="magma")
    fig.colorbar(im, ax=ax, shrink=0.85, label="|q|")
    _overlay_k_regions(ax, k, grid)
    ax.set_title("flux speed")
    path = out / "flux_speed.png"
    _save(fig, path)
    written.append(path)

    # Transport density.
    fig, ax = _new_axes(grid)
    im = ax.imshow(result.density.T, origin="lower", extent=extent,
                   cmap="viridis")
    fig.colorbar(im, ax=ax, shrink=0.85, label="a")
    _overlay_k_regions(ax, k, grid)
    ax.set_title("transport density")
    path = out / "transport_density.png"
    _save(fig, path)
    written.append(path)
    return written
