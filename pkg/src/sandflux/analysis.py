"""Recovering the transport pair from a finished evolution, plus checks.

The solver only tracks fluxes; the potential is algebraic in them.  The
stationary pair must satisfy three conditions, each mirrored by a
diagnostic here: the flux balances the source (divergence residual),
the potential nowhere exceeds the critical slope (slope violations),
and material moves only where the slope is critical (complementarity
violations).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CellField, FluxField, Grid, cell_speed, divergence


def recover_potential(cumulative_flux: FluxField, source: CellField,
                      u0: CellField, t: float, grid: Grid) -> CellField:
    """Surface height at time ``t``: supplied material minus what slid away.

    ``u = u0 + t * source - div(cumulative_flux)``.  At stationarity this
    is the transport potential (up to the gauge constant the evolution
    happened to settle on).
    """
    return u0 + t * source - divergence(cumulative_flux, grid)


def transport_density(flux: FluxField, k: CellField, grid: Grid,
                      eps: float = 0.0) -> CellField:
    """Transport density ``a = |q| / k`` on cells.

    ``eps`` is accepted for symmetry with the solver's smoothed
    functionals but deliberately ignored: reported densities always use
    the raw flux magnitude.
    """
    del eps
    return cell_speed(flux, grid, 0.0) / k


def _neighbor_slope(u: CellField, k: CellField, h: float):
    """Largest |du|/h toward any 4-neighbor, and that neighbor's k.

    Missing neighbors (domain boundary) are padded with -inf so they
    never win the maximum; nx, ny >= 4 guarantees a real winner.
    """
    nx, ny = u.shape
    diffs = np.full((4, nx, ny), -np.inf)
    kn = np.empty((4, nx, ny))
    kn[:] = k
    dx = np.abs(np.diff(u, axis=0)) / h
    dy = np.abs(np.diff(u, axis=1)) / h
    diffs[0, 1:, :] = dx
    kn[0, 1:, :] = k[:-1, :]
    diffs[1, :-1, :] = dx
    kn[1, :-1, :] = k[1:, :]
    diffs[2, :, 1:] = dy
    kn[2, :, 1:] = k[:, :-1]
    diffs[3, :, :-1] = dy
    kn[3, :, :-1] = k[:, 1:]
    pick = np.argmax(diffs, axis=0)
    slope = np.take_along_axis(diffs, pick[None], axis=0)[0]
    k_at = np.take_along_axis(kn, pick[None], axis=0)[0]
    return slope, k_at


def slope_field(u: CellField, grid: Grid) -> CellField:
    """Per-cell slope: the largest |du|/h toward any direct neighbor."""
    ones = np.ones_like(u)
    slope, _ = _neighbor_slope(u, ones, grid.h)
    return slope


@dataclass(frozen=True)
class DiagnosticsThresholds:
    """Tolerances for the stationarity checks.

    tol_slope:
        Slack on slope comparisons.  Cell-center differencing smears the
        slope near kinks by O(h) and near coefficient jumps by the jump
        itself, hence the combined default ``0.05 * k_base + 2 * h``.
    active_fraction:
        A cell counts as carrying material when its density exceeds this
        fraction of the maximum density.
    """

    tol_slope: float
    active_fraction: float = 0.05


def default_thresholds(k_base: float, grid: Grid) -> DiagnosticsThresholds:
    return DiagnosticsThresholds(tol_slope=0.05 * k_base + 2.0 * grid.h)


@dataclass(frozen=True)
class DiagnosticsReport:
    div_residual_inf: float
    slope_violation_fraction: float
    complementarity_violation_fraction: float
    total_cost: float
    source_imbalance: float
    max_density: float
    thresholds: DiagnosticsThresholds

    def as_dict(self) -> dict[str, float]:
        return {
            "div_residual_inf": self.div_residual_inf,
            "slope_violation_fraction": self.slope_violation_fraction,
            "complementarity_violation_fraction": self.complementarity_violation_fraction,
            "total_cost": self.total_cost,
            "source_imbalance": self.source_imbalance,
            "max_density": self.max_density,
            "tol_slope": self.thresholds.tol_slope,
            "active_fraction": self.thresholds.active_fraction,
        }


def diagnostics(flux: FluxField, u: CellField, source: CellField, k: CellField,
                grid: Grid, thresholds: DiagnosticsThresholds | None = None
                ) -> DiagnosticsReport:
    """Measure how far a candidate pair is from a true stationary point.

    Slope comparisons use an effective bound per cell: the minimum of
    the cell's own k and the k of the neighbor the steepest difference
    points to, so a legitimate critical slope against a cheap neighbor
    is not flagged.  Complementarity flags cells that carry density
    (above ``active_fraction`` of the max) while their slope sits below
    critical by more than ``tol_slope``.
    """
    if thresholds is None:
        # Without problem context, read the background k off the grid;
        # the median is robust against override regions.
        thresholds = default_thresholds(float(np.median(k)), grid)
    slope, k_at = _neighbor_slope(u, k, grid.h)
    k_eff = np.minimum(k, k_at)
    density = transport_density(flux, k, grid)

    div_res = float(np.max(np.abs(divergence(flux, grid) - source)))
    n_cells = u.size
    slope_bad = slope > k_eff + thresholds.tol_slope
    max_density = float(np.max(density))
    active = density > thresholds.active_fraction * max_density if max_density > 0 \
        else np.zeros_like(density, dtype=bool)
    comp_bad = active & (slope < k_eff - thresholds.tol_slope)
    total_cost = float(np.sum(k * density) * grid.cell_area)
    return DiagnosticsReport(
        div_residual_inf=div_res,
        slope_violation_fraction=float(np.count_nonzero(slope_bad)) / n_cells,
        complementarity_violation_fraction=float(np.count_nonzero(comp_bad)) / n_cells,
        total_cost=total_cost,
        source_imbalance=float(np.sum(source) * grid.cell_area),
        max_density=max_density,
        thresholds=thresholds,
    )
