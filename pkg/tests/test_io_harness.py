import hashlib
import json

import numpy as np
import pytest

from channel_islands import io
from channel_islands.cli import main
from channel_islands.config import ExperimentConfig, config_from_dict, load_config
from channel_islands.geometry import BoundaryShape, FourierSeries, build_grid
from channel_islands.harness import fit_slope, random_perturbation, run_genericity, run_sweep
from channel_islands.nonlinearity import Nonlinearity
from channel_islands.operators import ScalarField
from channel_islands.svg import emit_svg
from channel_islands.topology import find_critical_points, trace_level_set

SVG_SHA256 = "cfa6ff96c295136b0d06e26bfb863e42a455146f761d2f1bad2c8b2549b14444"

SMALL_TOML = """
kind = "sweep"
seed = 7
[shape]
h = [[1, 1.0, 0.0]]
[nonlinearity]
poly = [-1.0]
sin = [[0.3, 1.0, 0.0]]
[grid]
Nx = 32
Ns = 33
[sweep]
epsilons = [0.04, 0.02, 0.01, 0.005]
samples = 3
complement = 1
"""


def _cat_eye():
    g = build_grid(BoundaryShape.flat(epsilon=0.02), 64, 65)
    return ScalarField.from_function(g, lambda x, y: (1 - y**2) / 2 + 0.02 * np.cos(x))


@pytest.fixture
def small_config(tmp_path):
    p = tmp_path / "exp.toml"
    p.write_text(SMALL_TOML)
    return p


def test_svg_golden(tmp_path):
    f = _cat_eye()
    text = emit_svg(f, None, [], tmp_path / "a.svg", find_critical_points(f), n_levels=8)
    assert text.startswith('<?xml version="1.0" encoding="UTF-8"?>\n<!-- viewport:')
    assert 'id="walls"' in text and 'id="critical-points"' in text
    assert hashlib.sha256(text.encode()).hexdigest() == SVG_SHA256


def test_field_bin_round_trip(tmp_path):
    f = _cat_eye()
    io.write_field_bin(f, tmp_path / "f.bin")
    raw = (tmp_path / "f.bin").read_bytes()
    assert len(raw) == 8 + 8 * f.values.size
    assert np.frombuffer(raw[:8], "<u4").tolist() == [64, 65]
    back = io.read_field_bin(tmp_path / "f.bin", f.grid)
    assert np.array_equal(back.values, f.values)
    (tmp_path / "bad.bin").write_bytes(raw[:-8])
    with pytest.raises(ValueError):
        io.read_field_bin(tmp_path / "bad.bin")


def test_csv_and_json_writers(tmp_path):
    f = _cat_eye()
    io.write_field_csv(f, tmp_path / "f.csv")
    lines = (tmp_path / "f.csv").read_text().splitlines()
    assert lines[0] == "i,j,x,y,value" and len(lines) == 1 + 64 * 65
    io.write_contours_csv(trace_level_set(f, 0.51), tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().startswith("contour,vertex,kind,level,x,y\n")
    obj = {"b": np.float64(1.5), "a": [np.int64(2), np.nan], "c": np.bool_(True)}
    assert json.loads(io.dumps(obj)) == {"a": [2, None], "b": 1.5, "c": True}
    assert io.dumps(obj).index('"a"') < io.dumps(obj).index('"b"')


def test_config_validation(small_config):
    cfg = load_config(small_config)
    assert cfg.Nx == 32 and cfg.seed == 7 and cfg.F.sines == ((0.3, 1.0, 0.0),)
    assert cfg.with_overrides(seed=None, jobs=2).jobs == 2
    with pytest.raises(ValueError):
        ExperimentConfig(epsilons=(0.01, -0.02))
    with pytest.raises(ValueError):
        ExperimentConfig(epsilons=(0.01, 0.04, 0.02))
    with pytest.raises(ValueError):
        ExperimentConfig(resolutions=((64, 65), (32, 33)))
    with pytest.raises(ValueError):
        config_from_dict({"kind": "bogus"})
    assert config_from_dict(cfg.to_dict()).to_dict() == cfg.to_dict()


def test_fit_slope_recovers_power_law():
    eps = np.array([0.04, 0.02, 0.01, 0.005])
    fit = fit_slope(eps, 3 * eps**0.5 * (1 + np.array([0.01, -0.01, 0.01, -0.01])))
    assert abs(fit["slope"] - 0.5) < 0.01 and fit["ci95"][0] <= 0.5 <= fit["ci95"][1]
    assert fit_slope([0.1], [1.0]) is None


def test_random_perturbation_normalised():
    rng = np.random.default_rng(0)
    for _ in range(5):
        h, g = random_perturbation(rng, 4)
        assert max(h.sup_norm(), g.sup_norm()) == pytest.approx(1.0)
        assert h.cos[0] == 0.0 and g.cos[0] == 0.0


def test_sweep_outputs_are_deterministic(small_config, tmp_path):
    cfg = load_config(small_config)
    a = run_sweep(cfg, tmp_path / "a")
    run_sweep(cfg, tmp_path / "b")
    assert a.status == "ok" and len(a.records) == 4
    for name in ("results.csv", "summary.json", "fields/psi_eps_00.bin", "plots/eps_03.svg"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_genericity_small(small_config, tmp_path):
    cfg = load_config(small_config)
    s = run_genericity(cfg, tmp_path)
    assert s["n_samples"] == 3 and s["max_oscillation_complement"] < 1e-8
    assert s["island_fraction_Bprime"] == 1.0


@pytest.mark.parametrize("command", ["solve", "expand", "fixed-point", "oracle"])
def test_cli_commands(command, small_config, tmp_path):
    assert main([command, "--config", str(small_config), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "summary.json").exists() and (tmp_path / "results.csv").exists()


def test_cli_assertion_failure_exit_code(tmp_path, monkeypatch):
    from channel_islands import cli
    from channel_islands.errors import AssertionFailed

    def failing(cfg, out, proposition):
        raise AssertionFailed("expected islands not found", {"case": proposition})

    monkeypatch.setattr(cli, "run_appendixA", failing)
    rc = main(["appendix-a", "--out", str(tmp_path), "--proposition", "ctnbottombdry"])
    assert rc == 1
    dump = json.loads((tmp_path / "failure.json").read_text())
    assert dump["dump"] == {"case": "ctnbottombdry"}
