import json
import math

import pytest

from cluster_bifurc.cli import EXIT_CONFIG, EXIT_OK, build_diagram, load_config, main, run_verification
from cluster_bifurc.diagram import load_diagram
from cluster_bifurc.potentials import ConfigError, LennardJones
from cluster_bifurc.continuation import ContinuationSettings


def write_config(tmp_path, obj, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


LJ_STABILITY = {
    "problem": "triangle",
    "potential": {"family": "lennard_jones",
                  "params": {"c1": 1, "c2": 2, "delta1": 12, "delta2": 6}},
    "window": [0.1, 10.0],
}


def test_verify_passes():
    assert main(["verify"]) == EXIT_OK


def test_stability_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path, LJ_STABILITY)
    assert main(["stability", "--config", cfg]) == EXIT_OK
    out = capsys.readouterr().out
    assert "0.587688" in out
    assert "closed-form" in out and "agrees" in out


def test_trivial_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path, {**LJ_STABILITY, "values": [math.sqrt(3.0) / 4.0]})
    assert main(["trivial", "--config", cfg]) == EXIT_OK
    out = capsys.readouterr().out
    assert "edge=1" in out and "mu=" in out
    cfg = write_config(tmp_path, {**LJ_STABILITY, "problem": "tetrahedron",
                                  "values": [1.0 / (6.0 * math.sqrt(2.0))]})
    assert main(["trivial", "--config", cfg]) == EXIT_OK
    out = capsys.readouterr().out
    assert "mu1=" in out and "mu2=" in out and "edge=1" in out


def test_config_errors_exit_2(tmp_path, capsys):
    assert main(["stability", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    cfg = write_config(tmp_path, {"problem": "hexagon", "potential": LJ_STABILITY["potential"],
                                  "window": [0.1, 1.0]})
    assert main(["stability", "--config", cfg]) == EXIT_CONFIG
    assert "problem" in capsys.readouterr().err
    cfg = write_config(tmp_path, {**LJ_STABILITY,
                                  "potential": {"family": "morse", "params": {}}})
    assert main(["stability", "--config", cfg]) == EXIT_CONFIG
    assert "family" in capsys.readouterr().err
    cfg = write_config(tmp_path, {**LJ_STABILITY, "window": [5.0, 1.0]})
    assert main(["stability", "--config", cfg]) == EXIT_CONFIG
    cfg = write_config(tmp_path, {**LJ_STABILITY, "continuation": {"step": 1}})
    assert main(["diagram", "--config", cfg]) == EXIT_CONFIG


def test_set_overrides(tmp_path, capsys):
    cfg = write_config(tmp_path, LJ_STABILITY)
    assert main(["stability", "--config", cfg, "--set", "window.1=2.0"]) == EXIT_OK
    assert main(["stability", "--config", cfg, "--set", "grid_n=oops"]) == EXIT_CONFIG
    # malformed --set syntax
    assert main(["stability", "--config", cfg, "--set", "windowhigh"]) == EXIT_CONFIG


def test_load_config_set_paths(tmp_path):
    cfg_path = write_config(tmp_path, {"a": {"b": 1}, "w": [1, 2]})
    cfg = load_config(cfg_path, ["a.b=3", "w.0=9", "name=run"])
    assert cfg["a"]["b"] == 3
    assert cfg["w"][0] == 9
    assert cfg["name"] == "run"
    with pytest.raises(ConfigError):
        load_config(cfg_path, ["w.5=1"])


def test_trace_subcommand(tmp_path, capsys):
    cfg = write_config(tmp_path, {
        **LJ_STABILITY,
        "window": [0.3, 0.7],
        "continuation": {"h_max": 0.05},
        "trace": {"start": "trivial", "parameter": 0.35, "direction": 1},
        "outputs": ["json", "csv"],
    })
    out_dir = tmp_path / "trace_out"
    assert main(["trace", "--config", cfg, "--out", str(out_dir)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "traced" in out and "event primary" in out
    d = load_diagram((out_dir / "diagram.json").read_bytes())
    assert d.branches[0].points[-1].parameter <= 0.7
    assert (out_dir / "diagram.csv").exists()


def test_diagram_subcommand_and_determinism(tmp_path):
    cfg_obj = {
        "problem": "triangle",
        "potential": {"family": "spring", "params": {"k": 1, "beta": -0.1}},
        "window": [0.5, 6.0],
        "continuation": {"h_max": 0.05, "max_points": 200},
        "trivial_samples": 50,
    }
    cfg = write_config(tmp_path, cfg_obj)
    out1 = tmp_path / "run1"
    out2 = tmp_path / "run2"
    assert main(["diagram", "--config", cfg, "--out", str(out1)]) == EXIT_OK
    assert main(["diagram", "--config", cfg, "--out", str(out2)]) == EXIT_OK
    assert (out1 / "diagram.json").read_bytes() == (out2 / "diagram.json").read_bytes()
    assert (out1 / "diagram.csv").read_bytes() == (out2 / "diagram.csv").read_bytes()
    assert (out1 / "diagram.svg").read_bytes() == (out2 / "diagram.svg").read_bytes()
    assert (out1 / "run_meta.json").exists()  # timestamps live only in the sidecar
    d = load_diagram((out1 / "diagram.json").read_bytes())
    assert len(d.branches) == 4  # trivial + 3 isosceles images
    assert any(ev.kind == "primary" for ev in d.events)


def test_build_diagram_rejects_bad_window():
    with pytest.raises(ConfigError):
        build_diagram("triangle", LennardJones(1, 2, 12, 6), (0.9, 0.3), ContinuationSettings())


def test_run_verification_all_green():
    checks = run_verification()
    assert len(checks) >= 10
    assert all(ok for _, ok, _ in checks)


def test_svg_projection_config():
    from cluster_bifurc.cli import _svg_projection
    from cluster_bifurc.diagram import Abc3d, ParamVsComponent

    assert _svg_projection({}, "triangle") == ParamVsComponent("a")
    assert _svg_projection({"svg": {"component": "c"}}, "triangle") == ParamVsComponent("c")
    assert _svg_projection({"svg": {"projection": "abc_3d"}}, "triangle") == Abc3d.trivial_axis_view()
    assert _svg_projection({"svg": {"projection": "abc_3d", "azimuth_deg": 10, "tilt_deg": 20}},
                           "triangle") == Abc3d(10.0, 20.0)
    with pytest.raises(ConfigError):
        _svg_projection({"svg": {"projection": "polar"}}, "triangle")


def test_threads_env_cap(tmp_path, monkeypatch):
    monkeypatch.setenv("CLUSTER_BIFURC_THREADS", "1")
    d = build_diagram("triangle", LennardJones(1, 2, 12, 6), (0.55, 0.62),
                      ContinuationSettings(h_max=0.02, max_points=120), trivial_samples=40)
    assert len(d.branches) == 4
    monkeypatch.setenv("CLUSTER_BIFURC_THREADS", "zebra")
    with pytest.raises(ConfigError):
        build_diagram("triangle", LennardJones(1, 2, 12, 6), (0.55, 0.62),
                      ContinuationSettings(h_max=0.02, max_points=120), trivial_samples=40)
