"""Round-trip and formatting checks for the delimited writers."""

from __future__ import annotations

import numpy as np
import pytest

from sandflux import export
from sandflux.analysis import DiagnosticsReport, DiagnosticsThresholds
from sandflux.grid import FluxField, Grid
from sandflux.solver import StepRecord

GRID = Grid(nx=7, ny=4, h=0.25, x0=-0.5, y0=0.25)


def test_field_round_trip_is_exact(tmp_path):
    rng = np.random.default_rng(5)
    values = rng.normal(size=(7, 4)) * 10.0 ** rng.integers(-8, 8, size=(7, 4))
    export.write_field(tmp_path / "field.csv", values, GRID)
    back, grid = export.read_field(tmp_path / "field.csv")
    assert np.array_equal(back, values)
    assert grid == GRID


def test_field_round_trip_edge_shapes(tmp_path):
    # Edge-sampled arrays are one longer along their own axis.
    qx = np.arange(8 * 4, dtype=float).reshape(8, 4)
    export.write_field(tmp_path / "qx.csv", qx, GRID)
    back, _ = export.read_field(tmp_path / "qx.csv")
    assert np.array_equal(back, qx)


def test_field_rejects_non_2d(tmp_path):
    with pytest.raises(ValueError, match="2D"):
        export.write_field(tmp_path / "x.csv", np.zeros(5), GRID)


def test_read_field_rejects_malformed_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("1,2,3\n0.0\n")
    with pytest.raises(ValueError, match="header"):
        export.read_field(p)
    p.write_text("")
    with pytest.raises(ValueError, match="empty"):
        export.read_field(p)


def test_history_written_with_full_precision(tmp_path):
    records = [StepRecord(step=1, t=0.1, objective=1 / 3, max_du_dt=2e-17,
                          total_cost=np.pi, u_inf=1.0)]
    export.write_history(tmp_path / "h.csv", records)
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "step,t,objective,max_du_dt,total_cost"
    cols = lines[1].split(",")
    assert float(cols[2]) == 1 / 3
    assert float(cols[3]) == 2e-17
    assert float(cols[4]) == np.pi


def test_diagnostics_formatting(tmp_path):
    report = DiagnosticsReport(
        div_residual_inf=1e-9, slope_violation_fraction=0.0,
        complementarity_violation_fraction=0.125, total_cost=2.0,
        source_imbalance=0.0, max_density=1.5,
        thresholds=DiagnosticsThresholds(tol_slope=0.07, active_fraction=0.05))
    export.write_diagnostics(tmp_path / "d.txt", report,
                             extra={"converged": True, "steps": 12})
    text = (tmp_path / "d.txt").read_text()
    assert "converged = true" in text
    assert "steps = 12" in text
    assert "complementarity_violation_fraction = 0.125" in text


def test_read_flux_checks_boundary(tmp_path):
    flux = FluxField.zeros(GRID)
    flux.qx[2, 1] = 0.75
    export.write_field(tmp_path / "qx.csv", flux.qx, GRID)
    export.write_field(tmp_path / "qy.csv", flux.qy, GRID)
    back, grid = export.read_flux(tmp_path)
    assert back.qx[2, 1] == 0.75
    assert grid == GRID
    # A corrupted file with boundary flow must not load silently.
    bad = flux.qx.copy()
    bad[0, 0] = 1.0
    export.write_field(tmp_path / "qx.csv", bad, GRID)
    with pytest.raises(ValueError):
        export.read_flux(tmp_path)
