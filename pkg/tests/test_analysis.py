from __future__ import annotations

import numpy as np
import pytest

from sandflux import (DiagnosticsThresholds, FluxField, Grid, default_thresholds,
                      diagnostics, divergence, recover_potential, slope_field,
                      transport_density)


def _grid(n=16, h=None):
    return Grid(nx=n, ny=n, h=1.0 / n if h is None else h, x0=0.0, y0=0.0)


def test_recover_potential_inverts_divergence():
    grid = _grid()
    rng = np.random.default_rng(2)
    W = FluxField.zeros(grid)
    W.qx[1:-1, :] = rng.standard_normal((grid.nx - 1, grid.ny))
    W.qy[:, 1:-1] = rng.standard_normal((grid.nx, grid.ny - 1))
    f = rng.standard_normal(grid.shape)
    u0 = rng.standard_normal(grid.shape)
    u = recover_potential(W, f, u0, 2.5, grid)
    assert np.allclose(u - u0 - 2.5 * f, -divergence(W, grid), atol=1e-13)


def test_recover_potential_zero_flux_is_supplied_surface():
    grid = _grid()
    f = grid.cell_field()
    f[3, 3] = 1.0
    f[9, 9] = -1.0
    u = recover_potential(FluxField.zeros(grid), f, grid.cell_field(), 7.0, grid)
    assert u[3, 3] == pytest.approx(7.0)
    assert u[9, 9] == pytest.approx(-7.0)
    assert u[0, 0] == 0.0


def test_transport_density_divides_by_k():
    grid = _grid()
    flux = FluxField.zeros(grid)
    flux.qx[5, 5] = 2.0
    k = grid.cell_field(4.0)
    a = transport_density(flux, k, grid)
    assert a[4, 5] == pytest.approx(1.0 / 4.0)
    assert a.min() == 0.0


def test_slope_field_of_plane_is_its_gradient():
    grid = _grid()
    X, Y = grid.center_mesh()
    u = 0.75 * X - 0.25 * Y
    slope = slope_field(u, grid)
    # the max neighbor difference picks the steeper axis
    assert np.allclose(slope, 0.75, atol=1e-12)


def test_slope_field_is_gauge_invariant():
    grid = _grid()
    rng = np.random.default_rng(5)
    u = rng.standard_normal(grid.shape)
    assert np.allclose(slope_field(u, grid), slope_field(u + 11.0, grid), atol=1e-12)


def test_slope_field_cone_underreads_on_diagonals():
    # the 4-neighbor proxy sees max(|x|,|y|)/r of a radial cone, at worst
    # 1/sqrt(2) of the true gradient
    grid = Grid(nx=64, ny=64, h=1.0 / 32, x0=-1.0, y0=-1.0)
    X, Y = grid.center_mesh()
    u = -np.hypot(X, Y)
    slope = slope_field(u, grid)
    interior = (np.hypot(X, Y) > 0.2) & (np.hypot(X, Y) < 0.9)
    assert slope[interior].max() <= 1.0 + 1e-9
    assert slope[interior].min() == pytest.approx(1 / np.sqrt(2), abs=0.05)


def test_default_thresholds_combine_k_and_h():
    grid = _grid(32)
    thr = default_thresholds(2.0, grid)
    assert thr.tol_slope == pytest.approx(0.05 * 2.0 + 2.0 / 32)
    assert thr.active_fraction == 0.05


def test_diagnostics_of_exact_discrete_pair():
    # build a flux satisfying div q = f exactly, and a potential whose
    # slope is critical along the transport line
    grid = Grid(nx=16, ny=8, h=0.125, x0=0.0, y0=0.0)
    f = grid.cell_field()
    f[2, :] = 1.0
    f[13, :] = -1.0
    flux = FluxField.zeros(grid)
    for i in range(3, 14):
        flux.qx[i, :] = 1.0 * grid.h
    X, _ = grid.center_mesh()
    u = -np.clip(X, 0.3125, 1.6875)
    k = grid.cell_field(1.0)
    rep = diagnostics(flux, u, f, k, grid)
    assert rep.div_residual_inf < 1e-12
    assert rep.slope_violation_fraction == 0.0
    assert rep.complementarity_violation_fraction == 0.0
    assert rep.source_imbalance == pytest.approx(0.0, abs=1e-15)
    assert rep.max_density == pytest.approx(grid.h)
    # mass h (one column, unit height) over mean distance 11 h
    assert rep.total_cost == pytest.approx(11 * grid.h ** 2, rel=1e-9)


def test_diagnostics_flags_slope_violation():
    grid = _grid()
    X, _ = grid.center_mesh()
    u = -3.0 * X  # three times the permitted slope
    rep = diagnostics(FluxField.zeros(grid), u, grid.cell_field(),
                      grid.cell_field(1.0), grid,
                      DiagnosticsThresholds(tol_slope=0.1))
    assert rep.slope_violation_fraction == 1.0
    assert rep.complementarity_violation_fraction == 0.0  # nothing moves


def test_diagnostics_flags_complementarity_violation():
    grid = _grid()
    flux = FluxField.zeros(grid)
    flux.qx[1:-1, :] = 1.0  # material moves everywhere
    u = grid.cell_field()   # but the surface is flat
    rep = diagnostics(flux, u, grid.cell_field(), grid.cell_field(1.0), grid,
                      DiagnosticsThresholds(tol_slope=0.1))
    assert rep.complementarity_violation_fraction > 0.9
    assert rep.slope_violation_fraction == 0.0


def test_diagnostics_cliff_toward_obstacle_flags_cheap_side():
    # a steep drop toward an expensive region is judged by the cheap side
    grid = _grid()
    k = grid.cell_field(1.0)
    k[8:, :] = 1e6
    X, _ = grid.center_mesh()
    u = np.where(X < 0.5, 0.0, -5.0)  # cliff across the k jump
    rep = diagnostics(FluxField.zeros(grid), u, grid.cell_field(), k, grid,
                      DiagnosticsThresholds(tol_slope=0.1))
    # the cliff pair has k_eff = min(1, 1e6) = 1, so those cells flag
    assert rep.slope_violation_fraction == pytest.approx(2.0 / 16.0)


def test_diagnostics_report_as_dict_round_trips():
    grid = _grid()
    rep = diagnostics(FluxField.zeros(grid), grid.cell_field(),
                      grid.cell_field(), grid.cell_field(1.0), grid)
    d = rep.as_dict()
    assert d["div_residual_inf"] == 0.0
    assert d["total_cost"] == 0.0
    assert d["max_density"] == 0.0
    assert set(d) == {"div_residual_inf", "slope_violation_fraction",
                      "complementarity_violation_fraction", "total_cost",
                      "source_imbalance", "max_density", "tol_slope",
                      "active_fraction"}
