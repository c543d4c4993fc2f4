import json
from pathlib import Path

import pytest
import yaml

from wsrsim.cli import main
from wsrsim.config import PRESETS


@pytest.fixture
def small_yaml(tmp_path):
    data = PRESETS["paper-circular"].to_dict()
    data["name"] = "small"
    data["traj_i"]["duration"] = 10.0
    data["traj_j"]["duration"] = 10.0
    data["estimator"]["azimuth_step"] = 2.0
    data["estimator"]["polar_step"] = 2.0
    path = tmp_path / "small.yaml"
    path.write_text(yaml.safe_dump(data))
    return path


def test_presets_listing(capsys):
    assert main(["presets"]) == 0
    assert "paper-circular" in capsys.readouterr().out
    assert main(["presets", "--show", "paper-linear"]) == 0
    assert yaml.safe_load(capsys.readouterr().out)["estimator"]["polar_fixed"] == 90.0
    assert main(["presets", "--show", "nope"]) == 1


def test_sim_is_deterministic(tmp_path, small_yaml, capsys):
    assert main(["sim", str(small_yaml), "--output", str(tmp_path / "a")]) == 0
    assert main(["sim", str(small_yaml), "--output", str(tmp_path / "b")]) == 0
    assert main(["sim", str(small_yaml), "--seed", "5", "--output", str(tmp_path / "c")]) == 0
    for name in ("packets_i.jsonl", "packets_j.jsonl", "odometry_i.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "packets_i.jsonl").read_bytes() != (tmp_path / "c" / "packets_i.jsonl").read_bytes()
    manifest = json.loads((tmp_path / "c" / "manifest.json").read_text())
    assert manifest["config"]["rng_seed"] == 5


def test_default_output_uses_env(tmp_path, small_yaml, monkeypatch):
    monkeypatch.setenv("WSRSIM_OUTPUT", str(tmp_path / "root"))
    assert main(["sim", str(small_yaml)]) == 0
    assert (tmp_path / "root" / "small" / "manifest.json").exists()


def test_estimate_writes_profile(tmp_path, small_yaml, capsys):
    out = tmp_path / "ds"
    main(["sim", str(small_yaml), "--output", str(out)])
    capsys.readouterr()
    assert main(["estimate", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["azimuth_error_deg"] <= 3.0
    assert (out / "profile.csv").exists() and (out / "profile.pgm").exists()
    assert json.loads((out / "summary.json").read_text())["pair_count"] == summary["pair_count"]


def test_compare_self_and_noise(tmp_path, small_yaml, capsys):
    noisy = tmp_path / "noisy"
    main(["sim", str(small_yaml), "--output", str(noisy)])
    data = yaml.safe_load(small_yaml.read_text())
    data["noise"] = {"snr_db": None, "sto_mean": 0.0, "epsilon_t": 0.0}
    clean_cfg = tmp_path / "clean.yaml"
    clean_cfg.write_text(yaml.safe_dump(data))
    clean = tmp_path / "clean"
    main(["sim", str(clean_cfg), "--output", str(clean)])
    capsys.readouterr()

    assert main(["compare", str(clean), str(clean)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["max_relative_difference"] == 0.0 and report["peak_displacement_steps"] == 0

    assert main(["compare", str(clean), str(noisy)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["peak_shift_azimuth_steps"] <= 2


def test_run_single_rep_has_zero_std(tmp_path, small_yaml, capsys):
    out = tmp_path / "run"
    assert main(["run", str(small_yaml), "--reps", "1", "--output", str(out), "--polar-fixed", "90"]) == 0
    agg = json.loads((out / "aggregate.json").read_text())
    assert agg["repetitions"] == 1 and agg["std_azimuth_error_deg"] == 0.0
    assert (out / "rep_000" / "manifest.json").exists()
    assert (out / "runs.csv").read_text().startswith("repetition,seed,")
    assert "mean error" in capsys.readouterr().out


def test_validation_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("traj_i:\n  kind: circular\n  radius: -0.3\n")
    assert main(["sim", str(bad), "--output", str(tmp_path / "x")]) == 1
    assert "traj_i.radius" in capsys.readouterr().err


def test_corrupt_dataset_exit_code(tmp_path, small_yaml, capsys):
    out = tmp_path / "ds"
    main(["sim", str(small_yaml), "--output", str(out)])
    (out / "odometry_j.csv").write_text("garbage\n")
    assert main(["estimate", str(out)]) == 1
    assert "checksum" in capsys.readouterr().err


def test_missing_dataset_exit_code(tmp_path, capsys):
    assert main(["estimate", str(tmp_path / "nowhere")]) == 2


def test_bad_reps_exit_code(tmp_path, small_yaml):
    assert main(["run", str(small_yaml), "--reps", "0", "--output", str(tmp_path / "r")]) == 1


def test_internal_error_exit_code(monkeypatch, small_yaml, tmp_path):
    import wsrsim.cli as cli

    def boom(*a, **k):
        raise RuntimeError("boom")

    monkeypatch.setattr(cli, "simulate", boom)
    assert main(["sim", str(small_yaml), "--output", str(tmp_path / "x")]) == 3
