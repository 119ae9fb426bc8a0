"""Problem geometry: shape primitives and their rasterization onto grids.

A problem is posed with continuum data (source/sink shapes carrying
densities, regions overriding the cost coefficient) and sampled onto a
:class:`~sandflux.grid.Grid` here.  Source shapes are rasterized by
area fraction (subsampled coverage), cost regions by a cell-center
test; the two deliberately differ because sources need accurate mass
while cost overrides must stay crisp.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import shapely

from .grid import CellField, Grid

_KINDS = ("rectangle", "ellipse", "polygon")

# Source shapes must keep this many cells of clearance from the domain
# boundary: the no-outflow condition needs room for flux to turn.
SOURCE_MARGIN_CELLS = 2


@dataclass(frozen=True)
class ShapeSpec:
    """One geometric primitive with an attached scalar value.

    kind:
        ``"rectangle"``: params ``(cx, cy, hw, hh, rot)``, half-widths
        ``hw``/``hh`` and rotation ``rot`` (radians, counterclockwise).
        ``"ellipse"``: params ``(cx, cy, a, b, rot)``, semi-axes ``a``/``b``.
        ``"polygon"``: params ``(x0, y0, x1, y1, ...)``, a simple polygon
        with at least 3 vertices.
    value:
        Signed density for source shapes, positive cost coefficient for
        cost-override regions.  Interpretation is up to the caller.
    """

    kind: str
    params: tuple[float, ...]
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        if self.kind not in _KINDS:
            raise ValueError(f"unknown shape kind {self.kind!r}")
        if not np.isfinite(self.value):
            raise ValueError("shape value must be finite")
        if not all(np.isfinite(p) for p in self.params):
            raise ValueError("shape parameters must be finite")
        if self.kind in ("rectangle", "ellipse"):
            if len(self.params) != 5:
                raise ValueError(f"{self.kind} takes 5 parameters, got {len(self.params)}")
            if self.params[2] <= 0 or self.params[3] <= 0:
                raise ValueError(f"{self.kind} extents must be positive")
        else:
            if len(self.params) < 6 or len(self.params) % 2 != 0:
                raise ValueError("polygon needs an even number of >= 6 coordinates")
            poly = shapely.Polygon(self._vertices())
            if not poly.is_valid or poly.area <= 0:
                raise ValueError("polygon must be simple with positive area")

    def _vertices(self) -> np.ndarray:
        return np.asarray(self.params, dtype=float).reshape(-1, 2)

    def bbox(self) -> tuple[float, float, float, float]:
        """Axis-aligned bounding box ``(xmin, ymin, xmax, ymax)``."""
        if self.kind == "polygon":
            v = self._vertices()
            return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())
        cx, cy, ax, ay, rot = self.params
        c, s = abs(np.cos(rot)), abs(np.sin(rot))
        if self.kind == "rectangle":
            ex = ax * c + ay * s
            ey = ax * s + ay * c
        else:
            ex = float(np.hypot(ax * np.cos(rot), ay * np.sin(rot)))
            ey = float(np.hypot(ax * np.sin(rot), ay * np.cos(rot)))
        return (cx - ex, cy - ey, cx + ex, cy + ey)

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Pointwise membership test (boundary counts as inside)."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "polygon":
            poly = shapely.Polygon(self._vertices())
            inside = shapely.contains_xy(poly, x.ravel(), y.ravel())
            on_edge = shapely.intersects_xy(poly.boundary, x.ravel(), y.ravel())
            return (inside | on_edge).reshape(x.shape)
        cx, cy, ax, ay, rot = self.params
        c, s = np.cos(rot), np.sin(rot)
        # Rotate into the shape frame.
        dx, dy = x - cx, y - cy
        xr = c * dx + s * dy
        yr = -s * dx + c * dy
        if self.kind == "rectangle":
            return (np.abs(xr) <= ax) & (np.abs(yr) <= ay)
        return (xr / ax) ** 2 + (yr / ay) ** 2 <= 1.0

    def coverage(self, grid: Grid, subsamples: int = 8) -> CellField:
        """Fraction of each cell covered by the shape.

        Estimated on an ``subsamples x subsamples`` lattice of points per
        cell, so the per-cell error is at most ``O(1/subsamples)`` and
        concentrated along the shape boundary.  Only cells meeting the
        bounding box are visited.
        """
        if subsamples < 1:
            raise ValueError("subsamples must be >= 1")
        xmin, ymin, xmax, ymax = self.bbox()
        i0 = int(np.clip(np.floor((xmin - grid.x0) / grid.h), 0, grid.nx))
        i1 = int(np.clip(np.ceil((xmax - grid.x0) / grid.h), 0, grid.nx))
        j0 = int(np.clip(np.floor((ymin - grid.y0) / grid.h), 0, grid.ny))
        j1 = int(np.clip(np.ceil((ymax - grid.y0) / grid.h), 0, grid.ny))
        out = grid.cell_field()
        if i0 >= i1 or j0 >= j1:
            return out
        offs = (np.arange(subsamples) + 0.5) / subsamples * grid.h
        xs = grid.x0 + (i0 + np.arange(i1 - i0))[:, None] * grid.h + offs[None, :]
        ys = grid.y0 + (j0 + np.arange(j1 - j0))[:, None] * grid.h + offs[None, :]
        X = xs.reshape(-1)[:, None] + np.zeros_like(ys.reshape(-1))[None, :]
        Y = np.zeros_like(xs.reshape(-1))[:, None] + ys.reshape(-1)[None, :]
        hit = self.contains(X, Y)
        frac = hit.reshape(i1 - i0, subsamples, j1 - j0, subsamples).mean(axis=(1, 3))
        out[i0:i1, j0:j1] = frac
        return out


@dataclass(frozen=True)
class ProblemSpec:
    """Continuum description of a transport problem.

    domain:
        ``(x0, y0, x1, y1)`` with positive extent along both axes.
    sources:
        Shapes with signed densities; positive values add mass, negative
        values remove it.
    k_base:
        Background cost coefficient (critical slope), strictly positive.
    k_regions:
        Shapes overriding the coefficient inside them; later entries win
        where regions overlap.  Large values model impassable obstacles,
        small values cheap corridors.
    u0:
        Optional initial surface sampled on cells; defaults to flat zero.
    """

    domain: tuple[float, float, float, float]
    sources: tuple[ShapeSpec, ...] = ()
    k_base: float = 1.0
    k_regions: tuple[ShapeSpec, ...] = ()
    u0: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "domain", tuple(float(v) for v in self.domain))
        object.__setattr__(self, "sources", tuple(self.sources))
        object.__setattr__(self, "k_regions", tuple(self.k_regions))
        x0, y0, x1, y1 = self.domain
        if not (x1 > x0 and y1 > y0):
            raise ValueError("domain box must have positive extent")
        if not (np.isfinite(self.k_base) and self.k_base > 0):
            raise ValueError("k_base must be positive")
        for shape in self.sources:
            if shape.value == 0:
                raise ValueError("source density must be nonzero")
        for region in self.k_regions:
            if region.value <= 0:
                raise ValueError("cost coefficient must be positive")


def point_source(x: float, y: float, mass: float, grid: Grid) -> ShapeSpec:
    """Approximate a point mass as a one-cell square of matching total mass.

    The square has side ``h`` centered at ``(x, y)``, density
    ``mass / h^2``.  Rasterized coverage then spreads the mass over the
    (up to four) cells the square overlaps.
    """
    if mass == 0:
        raise ValueError("point source needs nonzero mass")
    half = 0.5 * grid.h
    return ShapeSpec("rectangle", (x, y, half, half, 0.0), mass / grid.cell_area)


def _require_inside(shape: ShapeSpec, spec: ProblemSpec, margin: float) -> None:
    x0, y0, x1, y1 = spec.domain
    bx0, by0, bx1, by1 = shape.bbox()
    if bx0 < x0 or by0 < y0 or bx1 > x1 or by1 > y1:
        raise ValueError(f"shape escapes domain: {shape.kind} bbox "
                         f"({bx0:.4g}, {by0:.4g}, {bx1:.4g}, {by1:.4g}) "
                         f"not inside ({x0:.4g}, {y0:.4g}, {x1:.4g}, {y1:.4g})")
    if margin > 0 and (bx0 < x0 + margin or by0 < y0 + margin
                       or bx1 > x1 - margin or by1 > y1 - margin):
        raise ValueError(f"shape escapes domain margin: {shape.kind} must keep "
                         f"{margin:.4g} of clearance from the boundary")


def rasterize_sources(spec: ProblemSpec, grid: Grid, subsamples: int = 8) -> CellField:
    """Sample the signed source density onto cells by area fraction.

    Each shape contributes ``value * coverage``; overlapping shapes add.
    Shapes must keep a two-cell margin from the domain boundary.
    """
    f = grid.cell_field()
    margin = SOURCE_MARGIN_CELLS * grid.h
    for shape in spec.sources:
        _require_inside(shape, spec, margin)
        f += shape.value * shape.coverage(grid, subsamples)
    return f


def balance_mass(f: CellField, grid: Grid) -> CellField:
    """Rescale the negative part of ``f`` so total mass integrates to zero.

    Positive entries are left untouched; negative entries are multiplied
    by ``M+ / M-`` (ratio of positive to negative total mass).  Raises
    ValueError when either part vanishes, since no rescaling can balance
    a one-sided source.
    """
    f = np.asarray(f, dtype=float)
    area = grid.cell_area
    pos = float(np.sum(np.where(f > 0, f, 0.0))) * area
    neg = -float(np.sum(np.where(f < 0, f, 0.0))) * area
    if pos <= 0 or neg <= 0:
        raise ValueError("one-sided source: need both positive and negative mass")
    out = f.copy()
    out[f < 0] *= pos / neg
    return out


def rasterize_k(spec: ProblemSpec, grid: Grid) -> CellField:
    """Sample the cost coefficient onto cells by center-point membership.

    Starts from ``k_base`` everywhere; each region overwrites the cells
    whose centers it contains, later regions winning.  Center testing
    keeps region boundaries crisp (no blended coefficients), which
    matters for obstacles.
    """
    k = grid.cell_field(spec.k_base)
    if not spec.k_regions:
        return k
    X, Y = grid.center_mesh()
    for region in spec.k_regions:
        _require_inside(region, spec, 0.0)
        k[region.contains(X, Y)] = region.value
    if np.any(k <= 0):
        raise ValueError("cost coefficient must stay positive everywhere")
    return k
