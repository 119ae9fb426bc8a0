from __future__ import annotations

import numpy as np
import pytest

from sandflux.config import (ConfigError, apply_overlay, build_problem,
                             load_config, parse_config, preset_names,
                             preset_text)

BASIC = """
# a small corridor
domain = 0 0 2 1
nx = 32
k_base = 1.5

[shape.source]
kind = rectangle
params = 0.25 0.5 0.125 0.25 0
value = 1

[shape.sink]
kind = rectangle
params = 1.75 0.5 0.125 0.25 0
value = 2
"""


def test_parse_basic_keys_and_blocks():
    cfg = parse_config(BASIC)
    assert cfg.domain == (0.0, 0.0, 2.0, 1.0)
    assert cfg.nx == 32
    assert cfg.k_base == 1.5
    assert [s.role for s in cfg.shapes] == ["source", "sink"]
    assert cfg.shapes[0].params == (0.25, 0.5, 0.125, 0.25, 0.0)
    assert "k_base" in cfg.explicit
    assert "omega" not in cfg.explicit


def test_parse_comments_and_commas():
    cfg = parse_config("domain = 0, 0, 1, 1  # inline note\nnx = 16\n")
    assert cfg.domain == (0.0, 0.0, 1.0, 1.0)


@pytest.mark.parametrize("text,fragment", [
    ("wat = 1", "unknown key 'wat' at line 1"),
    ("[shape.nope]", "unknown block"),
    ("domain 0 0 1 1", "expected 'key = value' at line 1"),
    ("nx = twelve", "bad value for 'nx' at line 1"),
    ("domain = 0 0 1", "bad value for 'domain'"),
    ("[shape.source]\nrotation = 3", "unknown key 'rotation' at line 2"),
])
def test_parse_error_messages(text, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("[", "\\[")):
        parse_config(text)


def test_solver_keys_round_trip_to_params():
    cfg = parse_config("dt = 2.5\nomega = 1.8\nsweeps_per_step = 12\n"
                       "eps = auto\ntol_stationary = 1e-5\n")
    params = cfg.solver_params()
    assert params.dt == 2.5
    assert params.omega == 1.8
    assert params.sweeps_per_step == 12
    assert params.eps is None
    assert params.tol_stationary == 1e-5


def test_build_problem_produces_balanced_fields():
    built = build_problem(parse_config(BASIC))
    grid = built.grid
    assert grid.shape == (32, 16)
    assert grid.h == pytest.approx(2.0 / 32)
    f = built.problem.source
    assert abs(f.sum()) * grid.cell_area < 1e-12
    # sink density was rescaled to balance the source, ignoring its value=2
    assert f.max() == pytest.approx(1.0)
    assert f.min() == pytest.approx(-1.0)
    assert np.all(built.problem.k == 1.5)
    assert built.tol_div == pytest.approx(1e-3 * f.max())


def test_build_problem_pads_ragged_aspect():
    cfg = parse_config("domain = 0 0 1 0.77\nnx = 64\n"
                       "[shape.source]\nkind = ellipse\n"
                       "params = 0.5 0.55 0.1 0.1 0\nvalue = 1\n"
                       "[shape.sink]\nkind = ellipse\n"
                       "params = 0.5 0.2 0.1 0.1 0\nvalue = 1\n")
    built = build_problem(cfg)
    # 0.77 / (1/64) = 49.28 cells -> padded up to 50
    assert built.grid.ny == 50
    assert built.grid.y1 >= 0.77


def test_build_problem_rejects_coarse_grid():
    cfg = parse_config("domain = 0 0 10 1\nnx = 64\n"
                       "[shape.source]\nkind = ellipse\n"
                       "params = 2 0.5 0.2 0.2 0\nvalue = 1\n"
                       "[shape.sink]\nkind = ellipse\n"
                       "params = 8 0.5 0.2 0.2 0\nvalue = 1\n")
    with pytest.raises(ConfigError, match="at least 16 cells"):
        build_problem(cfg)


def test_build_problem_rejects_nx_and_h_together():
    with pytest.raises(ConfigError, match="not both"):
        build_problem(parse_config("domain = 0 0 1 1\nnx = 32\nh = 0.03125\n"))


def test_build_problem_needs_source_and_sink():
    cfg = parse_config("domain = 0 0 1 1\nnx = 32\n"
                       "[shape.source]\nkind = ellipse\n"
                       "params = 0.5 0.5 0.1 0.1 0\nvalue = 1\n")
    with pytest.raises(ConfigError, match="source and one sink"):
        build_problem(cfg)


def test_build_problem_point_shapes():
    cfg = parse_config("domain = 0 0 1 1\nnx = 32\n"
                       "[shape.source]\nkind = point\nparams = 0.3 0.5\nvalue = 0.2\n"
                       "[shape.sink]\nkind = point\nparams = 0.7 0.5\nvalue = 0.2\n")
    built = build_problem(cfg)
    f = built.problem.source
    assert f.max() > 0 and f.min() < 0
    assert abs(f.sum()) * built.grid.cell_area < 1e-12


def test_point_cannot_set_k():
    cfg = parse_config("domain = 0 0 1 1\nnx = 32\n"
                       "[shape.k]\nkind = point\nparams = 0.5 0.5\nvalue = 2\n"
                       "[shape.source]\nkind = point\nparams = 0.3 0.5\nvalue = 1\n"
                       "[shape.sink]\nkind = point\nparams = 0.7 0.5\nvalue = 1\n")
    with pytest.raises(ConfigError, match="point shapes cannot set k"):
        build_problem(cfg)


def test_shape_value_must_be_positive():
    cfg = parse_config("domain = 0 0 1 1\nnx = 32\n"
                       "[shape.sink]\nkind = ellipse\n"
                       "params = 0.5 0.5 0.1 0.1 0\nvalue = -1\n")
    with pytest.raises(ConfigError, match="must be positive"):
        build_problem(cfg)


def test_overlay_updates_only_explicit_keys():
    cfg = parse_config("omega = 1.6\n" + BASIC)
    out = apply_overlay(cfg, "dt = 0.25\nsweeps_per_step = 12\n")
    assert out.dt == 0.25
    assert out.sweeps_per_step == 12
    assert out.omega == 1.6  # untouched by the overlay
    assert out.nx == 32
    assert len(out.shapes) == 2  # overlay without shapes keeps the originals


def test_overlay_with_shapes_replaces_them():
    cfg = parse_config(BASIC)
    out = apply_overlay(cfg, "[shape.source]\nkind = point\n"
                             "params = 0.5 0.5\nvalue = 1\n")
    assert [s.role for s in out.shapes] == ["source"]


def test_presets_ship_and_parse():
    names = preset_names()
    assert {"example1", "example2", "example3"} <= set(names)
    for name in names:
        cfg = parse_config(preset_text(name))
        if name.startswith("example"):
            built = build_problem(cfg)
            assert built.problem.positive_mass() > 0


def test_unknown_preset_lists_available():
    with pytest.raises(ConfigError, match="unknown preset 'nope'"):
        preset_text("nope")


def test_load_config_requires_something():
    with pytest.raises(ConfigError, match="config file or a preset"):
        load_config(None, None)


def test_load_config_file_overrides_preset(tmp_path):
    p = tmp_path / "run.cfg"
    p.write_text("preset = example1\nnx = 48\nmax_steps = 7\n", encoding="utf-8")
    cfg = load_config(p)
    assert cfg.preset == "example1"
    assert cfg.nx == 48          # file wins over the preset's resolution
    assert cfg.max_steps == 7
    assert len(cfg.shapes) >= 2  # shapes came from the preset
