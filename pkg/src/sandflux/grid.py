"""Staggered rectangular grid and the fields that live on it.

Scalar quantities (source density, cost coefficient, surface height)
are sampled on cell centers as ``(nx, ny)`` arrays.  Fluxes are sampled
on cell edges, normal to the edge: the x-component on vertical edges,
the y-component on horizontal edges.  This staggering makes the
discrete divergence a natural per-cell flux balance and keeps the
no-outflow boundary condition exact: boundary edge values are pinned
to zero and never updated.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Type alias for documentation purposes: cell-centered scalar samples.
CellField = np.ndarray


@dataclass(frozen=True)
class Grid:
    """Uniform grid of square cells covering ``[x0, x0+nx*h] x [y0, y0+ny*h]``.

    Cell ``(i, j)`` is the square with center
    ``(x0 + (i + 0.5) * h, y0 + (j + 0.5) * h)`` for ``0 <= i < nx`` and
    ``0 <= j < ny``.  Cells must be square; rectangular domains are
    handled by the cell counts, not the cell shape.
    """

    nx: int
    ny: int
    h: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self) -> None:
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs at least 4 cells along each axis")
        if not (np.isfinite(self.h) and self.h > 0):
            raise ValueError("cell size h must be positive and finite")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def x1(self) -> float:
        return self.x0 + self.nx * self.h

    @property
    def y1(self) -> float:
        return self.y0 + self.ny * self.h

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def diameter(self) -> float:
        """Length of the domain diagonal."""
        return float(np.hypot(self.nx * self.h, self.ny * self.h))

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1D arrays of cell-center coordinates along each axis."""
        xs = self.x0 + (np.arange(self.nx) + 0.5) * self.h
        ys = self.y0 + (np.arange(self.ny) + 0.5) * self.h
        return xs, ys

    def center_mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as two ``(nx, ny)`` arrays."""
        xs, ys = self.cell_centers()
        return np.meshgrid(xs, ys, indexing="ij")

    def cell_field(self, fill: float = 0.0) -> CellField:
        return np.full(self.shape, float(fill))


@dataclass
class FluxField:
    """Edge-normal flux samples on a :class:`Grid`.

    ``qx`` has shape ``(nx + 1, ny)``; ``qx[i, j]`` is the x-flux through
    the vertical edge between cells ``(i - 1, j)`` and ``(i, j)``.  ``qy``
    has shape ``(nx, ny + 1)`` with the analogous meaning along y.  The
    outermost rows/columns sit on the domain boundary and must stay zero
    (no flux leaves the domain).
    """

    qx: np.ndarray
    qy: np.ndarray

    @classmethod
    def zeros(cls, grid: Grid) -> "FluxField":
        return cls(
            qx=np.zeros((grid.nx + 1, grid.ny)),
            qy=np.zeros((grid.nx, grid.ny + 1)),
        )

    def copy(self) -> "FluxField":
        return FluxField(qx=self.qx.copy(), qy=self.qy.copy())

    def check(self, grid: Grid) -> None:
        """Raise ValueError if shapes, finiteness, or the zero-boundary
        condition are violated."""
        if self.qx.shape != (grid.nx + 1, grid.ny):
            raise ValueError(
                f"qx has shape {self.qx.shape}, expected {(grid.nx + 1, grid.ny)}"
            )
        if self.qy.shape != (grid.nx, grid.ny + 1):
            raise ValueError(
                f"qy has shape {self.qy.shape}, expected {(grid.nx, grid.ny + 1)}"
            )
        if not (np.all(np.isfinite(self.qx)) and np.all(np.isfinite(self.qy))):
            raise ValueError("flux field contains non-finite values")
        boundary = (self.qx[0, :], self.qx[-1, :], self.qy[:, 0], self.qy[:, -1])
        if any(np.any(b != 0.0) for b in boundary):
            raise ValueError("boundary-normal flux must be exactly zero")

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(self.qx))), float(np.max(np.abs(self.qy))))


def divergence(flux: FluxField, grid: Grid) -> CellField:
    """Per-cell net outflow divided by cell area.

    For cell ``(i, j)``:
    ``(qx[i+1, j] - qx[i, j]) / h + (qy[i, j+1] - qy[i, j]) / h``.
    Summed against the cell area this telescopes to the boundary flux,
    so a field with zero boundary values has exactly zero total
    divergence (up to float rounding).
    """
    return (np.diff(flux.qx, axis=0) + np.diff(flux.qy, axis=1)) / grid.h


def cell_speed(flux: FluxField, grid: Grid, eps: float = 0.0) -> CellField:
    """Flux magnitude sampled on cells, ``sqrt(qbar_x^2 + qbar_y^2 + eps^2)``.

    Each component is averaged from the two opposing edges of the cell,
    which keeps the value exact for edge samples of a linear field.
    ``eps > 0`` gives the smoothed magnitude used by the regularized
    transport cost.
    """
    qbx = 0.5 * (flux.qx[:-1, :] + flux.qx[1:, :])
    qby = 0.5 * (flux.qy[:, :-1] + flux.qy[:, 1:])
    return np.sqrt(qbx * qbx + qby * qby + eps * eps)


def transport_cost(flux: FluxField, k: CellField, grid: Grid, eps: float = 0.0) -> float:
    """Weighted total flux magnitude, ``sum_c k_c * |q|_c * h^2``.

    With ``eps = 0`` this is the exact transport cost of the flux field;
    with ``eps > 0`` it is the smoothed functional the solver actually
    descends (the smoothing adds at most ``eps`` per unit of weighted
    area, since ``|q| <= |q|_eps <= |q| + eps``).
    """
    if k.shape != grid.shape:
        raise ValueError(f"k has shape {k.shape}, expected {grid.shape}")
    return float(np.sum(k * cell_speed(flux, grid, eps)) * grid.cell_area)
