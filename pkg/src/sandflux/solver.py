"""Implicit surface evolution toward the stationary transport state.

The model: pour material onto a surface at rate ``f`` while the surface
slope may nowhere exceed ``k``.  Excess material slides as a flux ``q``.
Each implicit time step turns into an unconstrained convex problem in
the step flux alone,

    J(q) = 0.5 * ||div(W + dt*q) - (u0 + t*f)||^2 * h^2
           + dt * sum_c k_c |q|_eps,c * h^2,

where ``W`` is the accumulated flux integral and ``|q|_eps`` the
smoothed magnitude.  The surface is recovered algebraically as
``u = u0 + t*f - div(W)``; it never needs its own unknowns.  J is
minimized by nonlinear Gauss-Seidel over edges (see ``_kernels``).
As t grows the surface freezes; the per-step surface change then
measures how far ``div(q)`` is from ``f``, so stationarity of ``u`` is
exactly the stationarity of the transport problem.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .grid import CellField, FluxField, Grid, divergence, transport_cost

# Default smoothing: this fraction of (positive mass / domain diagonal),
# which is the scale of the largest fluxes a balanced problem produces.
EPS_MASS_FRACTION = 1e-6


class IterationDivergedError(RuntimeError):
    """Raised when a relaxation step produces non-finite flux values."""

    def __init__(self, step: int):
        super().__init__(f"divergence of iteration at step {step}")
        self.step = step


@dataclass(frozen=True)
class SolverParams:
    """Knobs for the implicit evolution.

    dt:
        Time step; also the weight coupling the flux to the surface
        residual, so larger steps enforce ``div q = f`` more strongly.
    eps:
        Magnitude smoothing. ``None`` resolves to
        ``1e-6 * positive mass / domain diagonal`` for the problem at
        hand.
    omega:
        Over-relaxation factor in (0, 2).
    sweeps_per_step / newton_iters:
        Gauss-Seidel passes per step and Newton iterations per edge.
    tol_stationary / stationary_patience:
        Stop once ``max |du| / dt <= tol * max(1, max|u|)`` holds for
        this many consecutive steps.
    max_steps:
        Hard cap; hitting it reports non-convergence, not an error.
    symmetric_sweeps:
        Alternate forward/backward edge orderings between sweeps.  Helps
        propagation on some layouts but can destabilize the outer
        evolution when combined with large omega; off by default.
    track_sweep_objectives:
        Record the objective after every sweep (not just every step).
        Costs an extra objective evaluation per sweep; meant for
        verification runs.
    """

    dt: float = 1.0
    eps: float | None = None
    omega: float = 1.5
    sweeps_per_step: int = 5
    newton_iters: int = 2
    tol_stationary: float = 1e-8
    stationary_patience: int = 5
    max_steps: int = 100_000
    symmetric_sweeps: bool = False
    track_sweep_objectives: bool = False

    def __post_init__(self) -> None:
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ValueError("dt must be positive")
        if self.eps is not None and not (np.isfinite(self.eps) and self.eps > 0):
            raise ValueError("eps must be positive (or None for automatic)")
        if not (0.0 < self.omega < 2.0):
            raise ValueError("omega must lie in (0, 2)")
        if self.sweeps_per_step < 1:
            raise ValueError("sweeps_per_step must be >= 1")
        if self.newton_iters < 1:
            raise ValueError("newton_iters must be >= 1")
        if not (np.isfinite(self.tol_stationary) and self.tol_stationary > 0):
            raise ValueError("tol_stationary must be positive")
        if self.stationary_patience < 1:
            raise ValueError("stationary_patience must be >= 1")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


@dataclass
class TransportProblem:
    """Discrete problem data: grid plus cell-sampled source, cost, surface."""

    grid: Grid
    source: CellField
    k: CellField
    u0: CellField | None = None

    def __post_init__(self) -> None:
        self.source = np.asarray(self.source, dtype=float)
        self.k = np.asarray(self.k, dtype=float)
        if self.source.shape != self.grid.shape:
            raise ValueError(f"source has shape {self.source.shape}, "
                             f"expected {self.grid.shape}")
        if self.k.shape != self.grid.shape:
            raise ValueError(f"k has shape {self.k.shape}, expected {self.grid.shape}")
        if not np.all(np.isfinite(self.source)):
            raise ValueError("source contains non-finite values")
        if not (np.all(np.isfinite(self.k)) and np.all(self.k > 0)):
            raise ValueError("k must be finite and positive everywhere")
        if self.u0 is None:
            self.u0 = self.grid.cell_field()
        else:
            self.u0 = np.asarray(self.u0, dtype=float)
            if self.u0.shape != self.grid.shape:
                raise ValueError(f"u0 has shape {self.u0.shape}, "
                                 f"expected {self.grid.shape}")
            if not np.all(np.isfinite(self.u0)):
                raise ValueError("u0 contains non-finite values")

    def positive_mass(self) -> float:
        return float(np.sum(np.where(self.source > 0, self.source, 0.0))
                     * self.grid.cell_area)

    def mass_imbalance(self) -> float:
        """Net source integral, zero for a balanced problem."""
        return float(np.sum(self.source) * self.grid.cell_area)


@dataclass(frozen=True)
class StepRecord:
    """Per-step history entry."""

    step: int
    t: float
    objective: float
    max_du_dt: float
    total_cost: float
    u_inf: float
    sweep_objectives: tuple[float, ...] = ()


@dataclass
class SolveState:
    """Mutable evolution state.

    cumulative_flux:
        Time integral of the flux up to ``t`` (trapezoid-free: each step
        adds ``dt * flux``).
    flux:
        Flux of the most recent step; the warm start for the next one.
    supplied:
        ``u0 + t * source``, the surface the pile would have if nothing
        had slid.  The actual surface is ``supplied - div(cumulative_flux)``.
    """

    cumulative_flux: FluxField
    flux: FluxField
    supplied: CellField
    t: float = 0.0
    step: int = 0
    history: list[StepRecord] = field(default_factory=list)


def initial_state(problem: TransportProblem) -> SolveState:
    return SolveState(
        cumulative_flux=FluxField.zeros(problem.grid),
        flux=FluxField.zeros(problem.grid),
        supplied=np.array(problem.u0, dtype=float, copy=True),
    )


def resolve_params(params: SolverParams, problem: TransportProblem) -> SolverParams:
    """Fill in the automatic smoothing width for this problem."""
    if params.eps is not None:
        return params
    eps = EPS_MASS_FRACTION * problem.positive_mass() / problem.grid.diameter
    if eps <= 0:
        # Sourceless problem: any positive width keeps the magnitude smooth.
        eps = 1e-12 * problem.grid.h
    return replace(params, eps=eps)


def _residual(flux: FluxField, state: SolveState, problem: TransportProblem,
              dt: float) -> CellField:
    combined = FluxField(
        qx=state.cumulative_flux.qx + dt * flux.qx,
        qy=state.cumulative_flux.qy + dt * flux.qy,
    )
    return divergence(combined, problem.grid) - state.supplied


def step_objective(flux: FluxField, state: SolveState, problem: TransportProblem,
                   params: SolverParams) -> float:
    """Objective the sweeps descend, evaluated at ``flux``."""
    p = resolve_params(params, problem)
    r = _residual(flux, state, problem, p.dt)
    grid = problem.grid
    quad = 0.5 * float(np.sum(r * r)) * grid.cell_area
    return quad + p.dt * transport_cost(flux, problem.k, grid, p.eps)


def edge_update(edge: tuple[str, int, int], state: SolveState,
                problem: TransportProblem, params: SolverParams) -> float:
    """Minimize the step objective along a single interior edge.

    ``edge`` is ``(axis, i, j)`` with axis ``"x"`` or ``"y"`` indexing
    into the corresponding flux array.  Returns the accepted value.
    Intended for inspection and testing; `advance_step` runs the same
    update inside compiled sweeps.
    """
    axis, i, j = edge
    grid = problem.grid
    p = resolve_params(params, problem)
    q = state.flux
    res = _residual(q, state, problem, p.dt)
    if axis == "x":
        if not (1 <= i <= grid.nx - 1 and 0 <= j <= grid.ny - 1):
            raise ValueError(f"not an interior x-edge: {(i, j)}")
        return float(_kernels.update_x_edge(q.qx, q.qy, res, problem.k, i, j,
                                            grid.h, p.dt, p.eps, p.omega,
                                            p.newton_iters))
    if axis == "y":
        if not (0 <= i <= grid.nx - 1 and 1 <= j <= grid.ny - 1):
            raise ValueError(f"not an interior y-edge: {(i, j)}")
        return float(_kernels.update_y_edge(q.qx, q.qy, res, problem.k, i, j,
                                            grid.h, p.dt, p.eps, p.omega,
                                            p.newton_iters))
    raise ValueError(f"edge axis must be 'x' or 'y', got {axis!r}")


def advance_step(state: SolveState, problem: TransportProblem,
                 params: SolverParams) -> StepRecord:
    """One implicit step: relax the flux, then bank it into the integral."""
    p = resolve_params(params, problem)
    grid = problem.grid
    u_old = state.supplied - divergence(state.cumulative_flux, grid)

    state.step += 1
    state.t = state.step * p.dt  # keeps t = step * dt exact
    state.supplied = problem.u0 + state.t * problem.source

    q = state.flux
    sweep_objs = []
    # The kernel keeps the cell residual current while it mutates edges,
    # so one evaluation up front serves every sweep of the step.
    res = _residual(q, state, problem, p.dt)
    for sweep_index in range(p.sweeps_per_step):
        reverse = p.symmetric_sweeps and (sweep_index % 2 == 1)
        _kernels.sweep(q.qx, q.qy, res, problem.k, grid.h, p.dt, p.eps,
                       p.omega, p.newton_iters, reverse)
        if p.track_sweep_objectives:
            sweep_objs.append(step_objective(q, state, problem, p))

    # Non-finite values or absurd magnitudes mean the outer evolution is
    # amplifying (too-aggressive omega/dt); no admissible flux gets near
    # this bound on a balanced problem.
    if not (np.all(np.isfinite(q.qx)) and np.all(np.isfinite(q.qy))) \
            or q.max_abs() > 1e100:
        raise IterationDivergedError(state.step)

    state.cumulative_flux.qx += p.dt * q.qx
    state.cumulative_flux.qy += p.dt * q.qy

    u_new = state.supplied - divergence(state.cumulative_flux, grid)
    record = StepRecord(
        step=state.step,
        t=state.t,
        objective=sweep_objs[-1] if sweep_objs
        else step_objective(q, state, problem, p),
        max_du_dt=float(np.max(np.abs(u_new - u_old))) / p.dt,
        total_cost=transport_cost(q, problem.k, grid, 0.0),
        u_inf=float(np.max(np.abs(u_new))),
        sweep_objectives=tuple(sweep_objs),
    )
    state.history.append(record)
    return record


@dataclass
class SolveResult:
    """Everything the run produced."""

    converged: bool
    steps: int
    flux: FluxField
    cumulative_flux: FluxField
    potential: CellField
    density: CellField
    history: list[StepRecord]
    problem: TransportProblem
    params: SolverParams
    state: SolveState


def _check_balanced(problem: TransportProblem) -> None:
    area = problem.grid.cell_area
    pos = float(np.sum(np.where(problem.source > 0, problem.source, 0.0))) * area
    neg = -float(np.sum(np.where(problem.source < 0, problem.source, 0.0))) * area
    if pos == 0 and neg == 0:
        return
    net = problem.mass_imbalance()
    if abs(net) > 1e-10 * max(pos, neg):
        raise ValueError(
            f"source field is not balanced (net mass {net:.3e}); "
            "apply balance_mass first")


def _check_initial_surface(problem: TransportProblem) -> None:
    # The evolution assumes the starting surface already respects the
    # slope bound; check pairwise center differences with a small slack.
    u0, k, h = problem.u0, problem.k, problem.grid.h
    for du, kk in (
        (np.abs(np.diff(u0, axis=0)) / h, np.maximum(k[1:, :], k[:-1, :])),
        (np.abs(np.diff(u0, axis=1)) / h, np.maximum(k[:, 1:], k[:, :-1])),
    ):
        if np.any(du > kk * (1 + 1e-6) + 1e-9):
            raise ValueError("initial surface violates the slope bound")


def run_to_stationary(problem: TransportProblem,
                      params: SolverParams | None = None,
                      state: SolveState | None = None) -> SolveResult:
    """Evolve until the surface stops changing (or the step cap hits).

    A run is accepted as stationary when ``max |du| / dt`` stays at or
    below ``tol_stationary * max(1, max|u|)`` for
    ``stationary_patience`` consecutive steps.  Reaching ``max_steps``
    first is reported through ``converged=False``, not an exception;
    partial results are still useful.
    """
    from .analysis import recover_potential, transport_density

    p = resolve_params(params if params is not None else SolverParams(), problem)
    _check_balanced(problem)
    _check_initial_surface(problem)
    if state is None:
        state = initial_state(problem)

    converged = False
    streak = 0
    while state.step < p.max_steps:
        record = advance_step(state, problem, p)
        if record.max_du_dt <= p.tol_stationary * max(1.0, record.u_inf):
            streak += 1
        else:
            streak = 0
        if streak >= p.stationary_patience:
            converged = True
            break

    potential = recover_potential(state.cumulative_flux, problem.source,
                                  problem.u0, state.t, problem.grid)
    density = transport_density(state.flux, problem.k, problem.grid)
    return SolveResult(
        converged=converged,
        steps=state.step,
        flux=state.flux,
        cumulative_flux=state.cumulative_flux,
        potential=potential,
        density=density,
        history=state.history,
        problem=problem,
        params=p,
        state=state,
    )
