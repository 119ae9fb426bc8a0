"""Plain-text run configuration: parsing, presets, problem assembly.

The format is line-based: ``key = value`` pairs, ``#`` comments, and
``[shape.source]`` / ``[shape.sink]`` / ``[shape.k]`` blocks that each
describe one geometric primitive.  Example::

    domain = 0 0 3 1
    nx = 288
    k_base = 1

    [shape.source]
    kind = rectangle
    params = 0.5 0.5 0.5 0.5 0
    value = 1

    [shape.sink]
    kind = rectangle
    params = 2.5 0.5 0.5 0.5 0
    value = 1

Sink blocks take positive values (the density is negated internally);
the negative side is rescaled to balance the positive side exactly, so
source/sink totals never need to match in the file.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import numpy as np

from .geometry import ProblemSpec, ShapeSpec, point_source, rasterize_k, \
    rasterize_sources, balance_mass
from .grid import Grid
from .solver import SolverParams, TransportProblem

# At least this many cells across the shorter domain side; coarser grids
# cannot resolve the source shapes the format is meant for.
MIN_SHORT_AXIS_CELLS = 16

_BLOCK_RE = re.compile(r"\[shape\.(source|sink|k)\]\Z")


class ConfigError(ValueError):
    """A configuration file problem, with the offending line when known."""


@dataclass
class ShapeEntry:
    role: str
    line: int
    kind: str | None = None
    params: tuple[float, ...] | None = None
    value: float | None = None


@dataclass
class RunConfig:
    """Parsed configuration; ``None`` means "not given"."""

    domain: tuple[float, float, float, float] | None = None
    nx: int | None = None
    h: float | None = None
    k_base: float = 1.0
    subsamples: int = 8
    u0: str = "zero"
    shapes: list[ShapeEntry] = field(default_factory=list)

    dt: float = 1.0
    eps: float | None = None
    omega: float = 1.5
    sweeps_per_step: int = 5
    newton_iters: int = 2
    tol_stationary: float = 1e-8
    stationary_patience: int = 5
    max_steps: int = 100_000
    symmetric_sweeps: bool = False

    out_dir: str = "out"
    fields_out: bool = True
    history_out: bool = True
    diagnostics_out: bool = True
    figures_out: bool = True
    tol_div: float | None = None
    preset: str | None = None

    explicit: set = field(default_factory=set)

    def solver_params(self) -> SolverParams:
        return SolverParams(
            dt=self.dt, eps=self.eps, omega=self.omega,
            sweeps_per_step=self.sweeps_per_step,
            newton_iters=self.newton_iters,
            tol_stationary=self.tol_stationary,
            stationary_patience=self.stationary_patience,
            max_steps=self.max_steps,
            symmetric_sweeps=self.symmetric_sweeps,
        )


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("on", "true", "yes", "1"):
        return True
    if low in ("off", "false", "no", "0"):
        return False
    raise ValueError(f"expected on/off, got {raw!r}")


def _parse_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.replace(",", " ").split())


# key -> (attribute, converter)
_GLOBAL_KEYS = {
    "domain": ("domain", lambda raw: _domain(raw)),
    "nx": ("nx", lambda raw: int(raw)),
    "h": ("h", lambda raw: float(raw)),
    "k_base": ("k_base", lambda raw: float(raw)),
    "subsamples": ("subsamples", lambda raw: int(raw)),
    "u0": ("u0", lambda raw: raw),
    "dt": ("dt", lambda raw: float(raw)),
    "eps": ("eps", lambda raw: None if raw.lower() == "auto" else float(raw)),
    "omega": ("omega", lambda raw: float(raw)),
    "sweeps_per_step": ("sweeps_per_step", lambda raw: int(raw)),
    "newton_iters": ("newton_iters", lambda raw: int(raw)),
    "tol_stationary": ("tol_stationary", lambda raw: float(raw)),
    "stationary_patience": ("stationary_patience", lambda raw: int(raw)),
    "max_steps": ("max_steps", lambda raw: int(raw)),
    "symmetric_sweeps": ("symmetric_sweeps", _parse_bool),
    "out_dir": ("out_dir", lambda raw: raw),
    "fields": ("fields_out", _parse_bool),
    "history": ("history_out", _parse_bool),
    "diagnostics": ("diagnostics_out", _parse_bool),
    "figures": ("figures_out", _parse_bool),
    "tol_div": ("tol_div", lambda raw: None if raw.lower() == "auto" else float(raw)),
    "preset": ("preset", lambda raw: raw),
}


def _domain(raw: str) -> tuple[float, float, float, float]:
    vals = _parse_floats(raw)
    if len(vals) != 4:
        raise ValueError("domain takes four numbers: x0 y0 x1 y1")
    return vals  # type: ignore[return-value]


def parse_config(text: str) -> RunConfig:
    """Parse configuration text; errors cite the 1-based line number."""
    cfg = RunConfig()
    block: ShapeEntry | None = None
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            m = _BLOCK_RE.match(line)
            if not m:
                raise ConfigError(f"unknown block {line!r} at line {lineno}")
            block = ShapeEntry(role=m.group(1), line=lineno)
            cfg.shapes.append(block)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value' at line {lineno}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if block is None:
            if key not in _GLOBAL_KEYS:
                raise ConfigError(f"unknown key '{key}' at line {lineno}")
            attr, conv = _GLOBAL_KEYS[key]
            try:
                setattr(cfg, attr, conv(raw))
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}' at line {lineno}: {exc}")
            cfg.explicit.add(attr)
        else:
            try:
                if key == "kind":
                    block.kind = raw
                elif key == "params":
                    block.params = _parse_floats(raw)
                elif key == "value":
                    block.value = float(raw)
                else:
                    raise ConfigError(f"unknown key '{key}' at line {lineno}")
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"bad value for '{key}' at line {lineno}: {exc}")
    return cfg


def preset_names() -> list[str]:
    root = resources.files("sandflux") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    path = resources.files("sandflux") / "presets" / f"{name}.cfg"
    if not path.is_file():
        raise ConfigError(f"unknown preset '{name}'; available: "
                          + ", ".join(preset_names()))
    return path.read_text(encoding="utf-8")


def _merge(base: RunConfig, over: RunConfig) -> RunConfig:
    """Overlay explicitly-set scalar keys of ``over`` onto ``base``.

    Shape blocks are all-or-nothing: if ``over`` declares any, they
    replace the base's shapes wholesale.
    """
    for f in fields(RunConfig):
        if f.name in ("shapes", "explicit", "preset"):
            continue
        if f.name in over.explicit:
            setattr(base, f.name, getattr(over, f.name))
            base.explicit.add(f.name)
    if over.shapes:
        base.shapes = list(over.shapes)
    return base


def load_config(path: str | Path | None, preset: str | None = None) -> RunConfig:
    """Load a config file and/or preset; file keys override preset keys."""
    file_cfg = None
    if path is not None:
        file_cfg = parse_config(Path(path).read_text(encoding="utf-8"))
        if preset is None:
            preset = file_cfg.preset
    if preset is not None:
        cfg = parse_config(preset_text(preset))
        cfg.preset = preset
        if file_cfg is not None:
            cfg = _merge(cfg, file_cfg)
        return cfg
    if file_cfg is None:
        raise ConfigError("need a config file or a preset name")
    return file_cfg


def apply_overlay(cfg: RunConfig, text: str) -> RunConfig:
    """Apply an overlay snippet (e.g. a tuning preset) on top of ``cfg``."""
    return _merge(cfg, parse_config(text))


def _build_grid(cfg: RunConfig) -> Grid:
    x0, y0, x1, y1 = cfg.domain
    if not (x1 > x0 and y1 > y0):
        raise ConfigError("domain box must have positive extent")
    if cfg.nx is not None and cfg.h is not None:
        raise ConfigError("give either nx or h, not both")
    if cfg.nx is not None:
        if cfg.nx < 4:
            raise ConfigError("nx must be at least 4")
        h = (x1 - x0) / cfg.nx
        nx = cfg.nx
    else:
        h = cfg.h if cfg.h is not None else (x1 - x0) / 128
        if h <= 0:
            raise ConfigError("h must be positive")
        nx = max(4, round((x1 - x0) / h))
        h = (x1 - x0) / nx
    # Pad the top edge if the aspect ratio is not an exact multiple.
    ny = max(4, math.ceil((y1 - y0) / h - 1e-9))
    grid = Grid(nx=nx, ny=ny, h=h, x0=x0, y0=y0)
    if min(grid.nx, grid.ny) < MIN_SHORT_AXIS_CELLS:
        raise ConfigError(f"resolution too coarse: need at least "
                          f"{MIN_SHORT_AXIS_CELLS} cells across the short side, "
                          f"got {min(grid.nx, grid.ny)}")
    return grid


def _build_shape(entry: ShapeEntry, grid: Grid) -> ShapeSpec:
    if entry.kind is None or entry.params is None or entry.value is None:
        raise ConfigError(f"shape block at line {entry.line} needs kind, "
                          "params, and value")
    if entry.value <= 0:
        raise ConfigError(f"shape value at line {entry.line} must be positive "
                          "(sinks are negated automatically)")
    sign = -1.0 if entry.role == "sink" else 1.0
    if entry.kind == "point":
        if entry.role == "k":
            raise ConfigError(f"point shapes cannot set k (line {entry.line})")
        if len(entry.params) != 2:
            raise ConfigError(f"point takes 2 parameters at line {entry.line}")
        x, y = entry.params
        return point_source(x, y, sign * entry.value, grid)
    try:
        return ShapeSpec(entry.kind, entry.params, sign * entry.value)
    except ValueError as exc:
        raise ConfigError(f"bad shape at line {entry.line}: {exc}")


@dataclass
class BuiltProblem:
    """Config resolved against a concrete grid."""

    cfg: RunConfig
    grid: Grid
    spec: ProblemSpec
    problem: TransportProblem
    params: SolverParams
    tol_div: float


def build_problem(cfg: RunConfig) -> BuiltProblem:
    """Assemble grid, fields, and solver parameters from a parsed config."""
    if cfg.domain is None:
        raise ConfigError("domain is required")
    grid = _build_grid(cfg)
    if cfg.subsamples < 1:
        raise ConfigError("subsamples must be >= 1")

    sources, k_regions = [], []
    for entry in cfg.shapes:
        shape = _build_shape(entry, grid)
        (k_regions if entry.role == "k" else sources).append(shape)
    if not any(s.value > 0 for s in sources) or not any(s.value < 0 for s in sources):
        raise ConfigError("config needs at least one source and one sink shape")

    spec = ProblemSpec(domain=(grid.x0, grid.y0, grid.x1, grid.y1),
                       sources=tuple(sources), k_base=cfg.k_base,
                       k_regions=tuple(k_regions))
    f = balance_mass(rasterize_sources(spec, grid, cfg.subsamples), grid)
    k = rasterize_k(spec, grid)

    u0 = None
    if cfg.u0 != "zero":
        from .export import read_field
        values, meta = read_field(cfg.u0)
        if values.shape != grid.shape:
            raise ConfigError(f"u0 file has shape {values.shape}, grid needs "
                              f"{grid.shape}")
        u0 = values

    problem = TransportProblem(grid=grid, source=f, k=k, u0=u0)
    try:
        params = cfg.solver_params()
    except ValueError as exc:
        raise ConfigError(str(exc))
    tol_div = cfg.tol_div if cfg.tol_div is not None \
        else 1e-3 * float(np.max(np.abs(f)))
    return BuiltProblem(cfg=cfg, grid=grid, spec=spec, problem=problem,
                        params=params, tol_div=tol_div)
