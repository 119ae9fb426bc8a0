"""Reference solutions the solver can be checked against.

Two closed forms (a 1D block-to-block corridor and a radially symmetric
disk-to-annulus layout) follow from mass conservation alone, which makes
them independent of everything in :mod:`sandflux.solver`.  The third
reference reposes the problem as a minimum-cost flow on the grid graph
and solves it exactly with an LP; its optimum bounds the continuum cost
from above by the usual 8-neighbor metric stretch (at most ~8.2% on a
straight line) and is insensitive to the evolution dynamics entirely.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .grid import CellField, Grid

# Above this many cells the LP would need a smarter solver; refuse early.
MAX_FLOW_CELLS = 200_000


@dataclass(frozen=True)
class LineSolution:
    """Transport between two x-interval blocks, uniform along y.

    Source block ``[a0, a1]`` carries density ``source_density > 0``; the
    sink block ``[b0, b1]`` to its right absorbs the same mass.  In 1D,
    mass conservation fixes the flux outright:

        q(x) = integral of f up to x

    which rises linearly across the source, stays flat on the gap, and
    falls linearly across the sink.  The transport density is ``q / k``
    and the potential drops at critical slope wherever material moves.
    Costs are reported per unit transverse length.
    """

    source: tuple[float, float]
    sink: tuple[float, float]
    source_density: float
    k: float

    def __post_init__(self) -> None:
        a0, a1 = self.source
        b0, b1 = self.sink
        if not (a0 < a1 <= b0 < b1):
            raise ValueError("need source interval strictly left of sink interval")
        if self.source_density <= 0 or self.k <= 0:
            raise ValueError("source_density and k must be positive")

    @property
    def mass(self) -> float:
        a0, a1 = self.source
        return self.source_density * (a1 - a0)

    @property
    def sink_density(self) -> float:
        b0, b1 = self.sink
        return self.mass / (b1 - b0)

    def flux(self, x: np.ndarray) -> np.ndarray:
        a0, a1 = self.source
        b0, b1 = self.sink
        m = self.mass
        return np.interp(np.asarray(x, dtype=float),
                         [a0, a1, b0, b1], [0.0, m, m, 0.0], left=0.0, right=0.0)

    def density(self, x: np.ndarray) -> np.ndarray:
        return self.flux(x) / self.k

    def potential(self, x: np.ndarray) -> np.ndarray:
        # Gauge: zero at the left edge of the source block.
        a0, _ = self.source
        _, b1 = self.sink
        return -self.k * (np.clip(np.asarray(x, dtype=float), a0, b1) - a0)

    @property
    def total_cost(self) -> float:
        # k * integral(|q|/k) = trapezoid area of the flux profile:
        # height M, base (b1 - a0), top (b0 - a1).
        a0, a1 = self.source
        b0, b1 = self.sink
        return self.mass * 0.5 * ((b0 - a1) + (b1 - a0))


@dataclass(frozen=True)
class RadialSolution:
    """Disk source draining into a surrounding annulus sink.

    Source density ``source_density`` on ``r < r_inner``; the annulus
    ``r_inner < r < r_outer`` absorbs everything with the uniform
    density that balances the mass.  Radial symmetry plus conservation
    gives the radial flux

        q(r) = (1/r) * integral_0^r f(s) s ds,

    so ``q = rho r / 2`` inside the disk and
    ``q = rho r_inner^2 (r_outer^2 - r^2) / (2 r (r_outer^2 - r_inner^2))``
    across the annulus, vanishing at ``r_outer``.
    """

    r_inner: float
    r_outer: float
    k: float = 1.0
    source_density: float = 1.0

    def __post_init__(self) -> None:
        if not (0 < self.r_inner < self.r_outer):
            raise ValueError("need 0 < r_inner < r_outer")
        if self.k <= 0 or self.source_density <= 0:
            raise ValueError("k and source_density must be positive")

    @property
    def sink_density(self) -> float:
        r1, r2 = self.r_inner, self.r_outer
        return self.source_density * r1 * r1 / (r2 * r2 - r1 * r1)

    def source(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        return np.where(r < self.r_inner, self.source_density,
                        np.where(r < self.r_outer, -self.sink_density, 0.0))

    def flux(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        rho, r1, r2 = self.source_density, self.r_inner, self.r_outer
        inner = 0.5 * rho * r
        with np.errstate(divide="ignore", invalid="ignore"):
            outer = rho * r1 * r1 * (r2 * r2 - r * r) / (
                2.0 * r * (r2 * r2 - r1 * r1))
        out = np.where(r < r1, inner, np.where(r < r2, outer, 0.0))
        return np.where(r == 0.0, 0.0, out)

    def density(self, r: np.ndarray) -> np.ndarray:
        return self.flux(r) / self.k

    @property
    def total_cost(self) -> float:
        # 2 pi * integral q(r) r dr over both regions, in closed form.
        rho, r1, r2 = self.source_density, self.r_inner, self.r_outer
        inner = rho * r1 ** 3 / 6.0
        outer = rho * r1 * r1 / (2.0 * (r2 * r2 - r1 * r1)) * (
            r2 * r2 * (r2 - r1) - (r2 ** 3 - r1 ** 3) / 3.0)
        return float(2.0 * np.pi * (inner + outer))


@dataclass(frozen=True)
class MinCostFlowResult:
    total_cost: float
    tails: np.ndarray
    heads: np.ndarray
    flow: np.ndarray
    unit_costs: np.ndarray


def grid_min_cost_flow(source: CellField, k: CellField, grid: Grid
                       ) -> MinCostFlowResult:
    """Exact min-cost flow of the balanced source over the 8-neighbor graph.

    Nodes are cells; arcs join axis neighbors (length h) and diagonal
    neighbors (length h*sqrt(2)); an arc costs its length times the mean
    k of its endpoints.  Both directions share one undirected arc split
    into two nonnegative variables, and the LP is solved to optimality
    with HiGHS.  The optimal cost is the graph-metric transport cost of
    the sampled source, a dynamics-free yardstick for the solver's cost.
    """
    if source.shape != grid.shape or k.shape != grid.shape:
        raise ValueError("source and k must be cell fields on the given grid")
    n = grid.nx * grid.ny
    if n > MAX_FLOW_CELLS:
        raise ValueError(f"grid has {n} cells; min-cost flow supports "
                         f"at most {MAX_FLOW_CELLS}")
    area = grid.cell_area
    b = source.reshape(-1) * area
    pos = float(np.sum(b[b > 0]))
    neg = -float(np.sum(b[b < 0]))
    if pos > 0 or neg > 0:
        if abs(pos - neg) > 1e-8 * max(pos, neg):
            raise ValueError("min-cost flow needs a balanced source field")

    idx = np.arange(n).reshape(grid.shape)
    kf = k.reshape(-1)
    tails_parts, heads_parts, length_parts = [], [], []

    def add(t, h_, length):
        tails_parts.append(t.reshape(-1))
        heads_parts.append(h_.reshape(-1))
        length_parts.append(np.full(t.size, length))

    add(idx[:-1, :], idx[1:, :], grid.h)                  # east
    add(idx[:, :-1], idx[:, 1:], grid.h)                  # north
    add(idx[:-1, :-1], idx[1:, 1:], grid.h * np.sqrt(2))  # northeast
    add(idx[1:, :-1], idx[:-1, 1:], grid.h * np.sqrt(2))  # northwest

    tails = np.concatenate(tails_parts)
    heads = np.concatenate(heads_parts)
    lengths = np.concatenate(length_parts)
    unit_costs = lengths * 0.5 * (kf[tails] + kf[heads])
    m = tails.size

    # Node-arc incidence for both flow directions of each arc.
    rows = np.concatenate([tails, heads, tails, heads])
    cols = np.concatenate([np.arange(m), np.arange(m),
                           np.arange(m) + m, np.arange(m) + m])
    data = np.concatenate([np.ones(m), -np.ones(m), -np.ones(m), np.ones(m)])
    A = sp.coo_matrix((data, (rows, cols)), shape=(n, 2 * m)).tocsr()

    res = linprog(np.concatenate([unit_costs, unit_costs]),
                  A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"min-cost flow LP failed: {res.message}")
    flow = res.x[:m] - res.x[m:]
    return MinCostFlowResult(total_cost=float(res.fun), tails=tails,
                             heads=heads, flow=flow, unit_costs=unit_costs)
