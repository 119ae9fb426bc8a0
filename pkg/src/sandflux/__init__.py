"""sandflux: stationary transport flux and potential on slope-bounded surfaces.

Pose a balanced source/sink layout with a spatially varying critical
slope, evolve the surface implicitly until it freezes, and read off the
transport density and potential.  See the README for the model and the
configuration format.
"""

from .analysis import (DiagnosticsReport, DiagnosticsThresholds,
                       default_thresholds, diagnostics, recover_potential,
                       slope_field, transport_density)
from .geometry import (ProblemSpec, ShapeSpec, balance_mass, point_source,
                       rasterize_k, rasterize_sources)
from .grid import CellField, FluxField, Grid, cell_speed, divergence, transport_cost
from .solver import (IterationDivergedError, SolveResult, SolveState,
                     SolverParams, StepRecord, TransportProblem, advance_step,
                     edge_update, initial_state, resolve_params,
                     run_to_stationary, step_objective)

__version__ = "0.1.0"

__all__ = [
    "CellField", "FluxField", "Grid", "cell_speed", "divergence",
    "transport_cost",
    "ProblemSpec", "ShapeSpec", "balance_mass", "point_source",
    "rasterize_k", "rasterize_sources",
    "SolverParams", "TransportProblem", "SolveState", "SolveResult",
    "StepRecord", "IterationDivergedError", "initial_state", "resolve_params",
    "step_objective", "edge_update", "advance_step", "run_to_stationary",
    "DiagnosticsReport", "DiagnosticsThresholds", "default_thresholds",
    "diagnostics", "recover_potential", "slope_field", "transport_density",
    "__version__",
]
