"""End-to-end runs of the command-line front end, in process."""

import json

import numpy as np
import pytest

from wsrot.cli import main
from wsrot.serialize import read_scan_csv, read_trajectory_csv

REF_X = 0.75917214380935716


def _write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj), encoding="utf-8")
    return str(path)


def _model4(**extra):
    return {"kind": "classic_rotator", "n": 4, "omega": 0.8, "kappa": -0.7,
            **extra}


def test_fixed_point_reports_reference_values(tmp_path, capsys):
    cfg = _write(tmp_path, "fp.json", {"omega": 0.8, "kappa": -0.7})
    rc = main(["fixed-point", "--config", cfg, "--out", str(tmp_path / "o")])
    out = capsys.readouterr()
    assert rc == 0
    payload = json.loads(out.out)
    assert payload["x"] == pytest.approx(REF_X, abs=1e-12)
    assert payload["omega_rot"] == pytest.approx(0.10951872199119664,
                                                abs=1e-12)
    on_disk = json.loads((tmp_path / "o" / "fixed_point.json").read_text())
    assert on_disk == payload


def test_fixed_point_without_root_exits_4(tmp_path, capsys):
    cfg = _write(tmp_path, "fp.json", {"omega": 0.8, "kappa": -0.5})
    rc = main(["fixed-point", "--config", cfg, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 4
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "NoFixedPointError"


def test_fixed_point_zero_frequency_warns(tmp_path, capsys):
    cfg = _write(tmp_path, "fp.json", {"omega": 0.0, "kappa": -1.5})
    rc = main(["fixed-point", "--config", cfg, "--out", str(tmp_path)])
    out = capsys.readouterr()
    assert rc == 0
    warning = json.loads(out.err.strip().splitlines()[-1])
    assert "threshold" in warning["warning"]
    assert json.loads(out.out)["omega_rot"] == 0.0


def test_unknown_config_key_exits_2_with_pointer(tmp_path, capsys):
    cfg = _write(tmp_path, "fp.json",
                 {"omega": 0.8, "kappa": -0.7, "bogus": 1})
    rc = main(["fixed-point", "--config", cfg, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    payload = json.loads(err.strip().splitlines()[-1])
    assert payload["error"] == "ConfigError"


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text("{not json", encoding="utf-8")
    rc = main(["fixed-point", "--config", str(path), "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_missing_config_exits_2(tmp_path, capsys):
    rc = main(["simulate", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "--config" in json.loads(err.strip().splitlines()[-1])["message"]


def test_bad_seed_exits_2(tmp_path, capsys):
    rc = main(["invariants", "--seed", "-3", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert "64 bits" in json.loads(err.strip().splitlines()[-1])["message"]


def test_simulate_writes_trajectory_and_summary(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", {
        "model": _model4(n=5),
        "initial": {"phases": [-2.0, -1.0, 0.2, 1.1, 2.3]},
        "t_final": 5.0,
        "n_out": 11,
        "plot": True,
    })
    out_dir = tmp_path / "run"
    rc = main(["simulate", "--config", cfg, "--out", str(out_dir)])
    assert rc == 0
    assert "simulate: wrote 11 samples" in capsys.readouterr().out
    t, phases = read_trajectory_csv(out_dir / "trajectory.csv")
    assert t.shape == (11,) and phases.shape == (11, 5)
    assert t[-1] == 5.0
    summary = json.loads((out_dir / "summary.json").read_text())
    assert summary["lambda_drift_max"] < 1e-8
    assert len(summary["lambda_initial"]) == 2
    assert 0.0 <= summary["z_modulus"]["min"] <= summary["z_modulus"]["max"] <= 1.0
    assert (out_dir / "trajectory.png").stat().st_size > 0


def test_simulate_is_byte_deterministic(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", {
        "model": _model4(),
        "initial": {"random": True},
        "t_final": 2.0,
        "n_out": 5,
    })
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        assert main(["simulate", "--config", cfg, "--out", str(d),
                     "--seed", "42"]) == 0
        outs.append((d / "trajectory.csv").read_bytes()
                    + (d / "summary.json").read_bytes())
    capsys.readouterr()
    assert outs[0] == outs[1]


def test_simulate_rejects_wrong_phase_count(tmp_path, capsys):
    cfg = _write(tmp_path, "sim.json", {
        "model": _model4(),
        "initial": {"phases": [0.0, 1.0, 2.0]},
        "t_final": 1.0,
    })
    rc = main(["simulate", "--config", cfg, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert json.loads(err.strip().splitlines()[-1])["pointer"] == "/initial/phases"


def test_scan_fh_writes_curves_and_roots(tmp_path, capsys):
    cfg = _write(tmp_path, "scan.json", {
        "model": _model4(),
        "perturbations": [{"a": {"2": 1.0}, "eps": 1e-3},
                          {"b": {"2": -1.0}, "eps": 1e-3}],
        "grid": {"lo": 0.3, "hi": 0.7, "n": 3},
        "refine_roots": False,
    })
    out_dir = tmp_path / "scan_out"
    rc = main(["scan-fh", "--config", cfg, "--out", str(out_dir)])
    assert rc == 0
    text = capsys.readouterr().out
    assert "curve 1: 3/3 points ok" in text
    assert "curve 2: 3/3 points ok" in text
    lam, f, status = read_scan_csv(out_dir / "scan_1.csv")
    assert lam[:, 0] == pytest.approx([0.3, 0.5, 0.7])
    assert f[0, 0] == pytest.approx(9.9854738e-3, abs=1e-8)
    assert status == ["ok"] * 3
    roots = json.loads((out_dir / "roots_1.json").read_text())
    assert len(roots["roots"]) == 1
    assert roots["roots"][0]["lambda_root"] == pytest.approx(0.5, abs=1e-9)
    assert roots["roots"][0]["stable_for_positive_eps"] is True
    roots2 = json.loads((out_dir / "roots_2.json").read_text())
    assert roots2["roots"][0]["stable_for_positive_eps"] is False


def test_scan_fh_renders_figure(tmp_path, capsys):
    cfg = _write(tmp_path, "scan.json", {
        "model": _model4(),
        "perturbations": [{"a": {"2": 1.0}, "eps": 1e-3}],
        "grid": {"lo": 0.4, "hi": 0.6, "n": 2},
        "refine_roots": False,
        "plot": True,
    })
    out_dir = tmp_path / "scan_fig"
    assert main(["scan-fh", "--config", cfg, "--out", str(out_dir)]) == 0
    capsys.readouterr()
    assert (out_dir / "scan.png").stat().st_size > 0


def test_scan_fh_rejects_wrong_unit_count(tmp_path, capsys):
    cfg = _write(tmp_path, "scan.json", {
        "model": _model4(n=5),
        "perturbations": [{"a": {"2": 1.0}}],
    })
    rc = main(["scan-fh", "--config", cfg, "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert json.loads(err.strip().splitlines()[-1])["pointer"] == "/model/n"


def test_scan_fh_flags_poor_convergence(tmp_path, capsys):
    # kappa^2 < 1 - omega^2: every grid point fails, quality gate trips.
    cfg = _write(tmp_path, "scan.json", {
        "model": {"kind": "classic_rotator", "n": 4, "omega": 0.8,
                  "kappa": -0.5},
        "perturbations": [{"a": {"2": 1.0}, "eps": 1e-3}],
        "grid": {"lo": 0.4, "hi": 0.6, "n": 3},
    })
    out_dir = tmp_path / "bad"
    rc = main(["scan-fh", "--config", cfg, "--out", str(out_dir)])
    out = capsys.readouterr()
    assert rc == 3
    payload = json.loads(out.err.strip().splitlines()[-1])
    assert payload["error"] == "ScanQuality"
    _, _, status = read_scan_csv(out_dir / "scan_1.csv")
    assert status == ["NotConvergedError"] * 3


def test_splay_check_confirms_splay_leaf(tmp_path, capsys):
    cfg = _write(tmp_path, "splay.json", {"model": _model4(n=6)})
    out_dir = tmp_path / "splay_out"
    rc = main(["splay-check", "--config", cfg, "--out", str(out_dir)])
    assert rc == 0
    assert "is_splay=True" in capsys.readouterr().out
    payload = json.loads((out_dir / "splay.json").read_text())
    assert payload["report"]["is_splay"] is True
    assert payload["report"]["max_shift_error"] < 1e-6
    assert payload["orbit"]["converged"] is True
    assert payload["orbit"]["winding"] == 1


def test_splay_check_rejects_generic_leaf(tmp_path, capsys):
    cfg = _write(tmp_path, "splay.json", {
        "model": _model4(),
        "lambda": {"values": [0.3], "convention": "canonical"},
    })
    out_dir = tmp_path / "generic"
    rc = main(["splay-check", "--config", cfg, "--out", str(out_dir)])
    assert rc == 0
    assert "is_splay=False" in capsys.readouterr().out
    payload = json.loads((out_dir / "splay.json").read_text())
    assert payload["report"]["is_splay"] is False
    assert payload["report"]["max_shift_error"] > 1e-2


def test_invariants_filter_and_report(tmp_path, capsys):
    out_dir = tmp_path / "inv"
    rc = main(["invariants", "--filter", "torus", "--out", str(out_dir)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "2/2 invariant suites passed" in out
    assert out.count("PASS") == 2
    payload = json.loads((out_dir / "invariants.json").read_text())
    assert [r["name"] for r in payload["results"]] == [
        "torus.canonicalize", "torus.order_parameter"]


def test_invariants_unmatched_filter_exits_2(tmp_path, capsys):
    rc = main(["invariants", "--filter", "nonsense", "--out", str(tmp_path)])
    err = capsys.readouterr().err
    assert rc == 2
    assert json.loads(err.strip().splitlines()[-1])["error"] == "ConfigError"


def test_invariants_tolerance_override_fails_suite(tmp_path, capsys):
    cfg = _write(tmp_path, "inv.json",
                 {"tolerances": {"torus.canonicalize": 1e-30}})
    rc = main(["invariants", "--config", cfg, "--filter", "torus.canonicalize",
               "--out", str(tmp_path / "x")])
    out = capsys.readouterr().out
    assert rc == 3
    assert "FAIL" in out
