import json
import subprocess
import sys

import numpy as np
import pytest

from modeshape import cli
from modeshape.report import ESTIMATES_FORMAT, PLOT_DATA_FORMAT
from modeshape.synth import ModeSpec, ScenarioSpec, scenario_to_dict

SINGLE_MODE = ScenarioSpec(
    (ModeSpec(0.5, -0.3, (1.0, -0.8, 0.9, -0.7)),),
    duration_s=30.0,
    sample_rate_hz=50.0,
)


@pytest.fixture
def scenario(tmp_path):
    p = tmp_path / "scenario.json"
    p.write_text(json.dumps(scenario_to_dict(SINGLE_MODE)))
    return p


@pytest.fixture
def recording(tmp_path, scenario):
    out = tmp_path / "rec.csv"
    assert cli.main(["synth", "--spec", str(scenario), "--out", str(out)]) == 0
    return out


def analyze(recording, out_dir, *extra):
    return cli.main(["analyze", "--input", str(recording), "--out-dir", str(out_dir), *extra])


def test_synth_csv_and_json(tmp_path, scenario, capsys):
    assert cli.main(["synth", "--spec", str(scenario), "--out", str(tmp_path / "a.json")]) == 0
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["sample_rate_hz"] == 50.0
    assert cli.main(["synth", "--spec", str(scenario), "--out", str(tmp_path / "a.csv")]) == 0
    header = next(ln for ln in (tmp_path / "a.csv").read_text().splitlines() if not ln.startswith("#"))
    assert header.split(",")[1:] == ["ch1", "ch2", "ch3", "ch4"]
    assert "4 channels, 1500 samples" in capsys.readouterr().out


def test_analyze_single_mode(tmp_path, recording, capsys):
    out = tmp_path / "out"
    assert analyze(recording, out, "--reproducible") == 0
    est = json.loads((out / "estimates.json").read_text())
    assert est["format"] == ESTIMATES_FORMAT
    assert len(est["modes"]) == 1
    mode = est["modes"][0]
    assert mode["frequency_hz"] == pytest.approx(0.5, abs=0.05)
    assert set(mode["shape"]) == {"ch1", "ch2", "ch3", "ch4"}
    assert set(mode["plot"]) == {"polar", "member_histograms"}
    assert "generated_at" not in est
    assert est["settings"]["seed"] == 0 and "jobs" not in est["settings"]
    plot = json.loads((out / "plot_data.json").read_text())
    assert plot["format"] == PLOT_DATA_FORMAT
    assert sum(plot["frequency_histogram"]["counts"]) == est["n_observations"]
    lines = (out / "observations.jsonl").read_text().splitlines()
    assert len(lines) == est["n_observations"] > 0
    assert "k = " in capsys.readouterr().out


def test_part1_only(tmp_path, recording):
    out = tmp_path / "p1"
    assert analyze(recording, out, "--part1-only") == 0
    assert (out / "observations.jsonl").exists()
    assert not (out / "estimates.json").exists()


def test_reproducible_outputs_byte_identical(tmp_path, recording):
    a, b = tmp_path / "a", tmp_path / "b"
    assert analyze(recording, a, "--reproducible") == 0
    assert analyze(recording, b, "--reproducible") == 0
    for name in ("observations.jsonl", "estimates.json", "plot_data.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_timestamp_without_reproducible(tmp_path, recording):
    assert analyze(recording, tmp_path / "t") == 0
    assert "generated_at" in json.loads((tmp_path / "t" / "estimates.json").read_text())


def test_inspect_both_kinds(tmp_path, recording, capsys):
    out = tmp_path / "o"
    analyze(recording, out, "--reproducible")
    capsys.readouterr()
    assert cli.main(["inspect", str(out / "observations.jsonl")]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].endswith("observations, 4 channels")
    assert cli.main(["inspect", str(out / "estimates.json")]) == 0
    assert "1 modes from" in capsys.readouterr().out


def test_config_and_flag_precedence(tmp_path, recording):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"window": 8, "kmax": 4, "seed": 3}))
    out = tmp_path / "c"
    assert analyze(recording, out, "--config", str(cfg), "--kmax", "5", "--reproducible") == 0
    settings = json.loads((out / "estimates.json").read_text())["settings"]
    assert settings["window"] == 8 and settings["kmax"] == 5 and settings["seed"] == 3


def test_seed_from_environment(tmp_path, recording, monkeypatch):
    monkeypatch.setenv("MODESHAPE_SEED", "42")
    assert analyze(recording, tmp_path / "s", "--reproducible") == 0
    assert json.loads((tmp_path / "s" / "estimates.json").read_text())["settings"]["seed"] == 42


def test_bad_seed_environment(tmp_path, recording, monkeypatch):
    monkeypatch.setenv("MODESHAPE_SEED", "abc")
    assert analyze(recording, tmp_path / "s") == 2


def test_unknown_config_key(tmp_path, recording, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"windw": 8}))
    assert analyze(recording, tmp_path / "x", "--config", str(cfg)) == 2
    assert "unknown keys" in capsys.readouterr().err


def test_missing_files_are_usage_errors(tmp_path):
    assert cli.main(["synth", "--spec", str(tmp_path / "nope.json"), "--out", str(tmp_path / "x.csv")]) == 2
    assert analyze(tmp_path / "nope.csv", tmp_path / "x") == 2
    assert cli.main(["inspect", str(tmp_path / "nope.json")]) == 2


def test_invalid_scenario_exit_1(tmp_path, capsys):
    p = tmp_path / "fast.json"
    d = scenario_to_dict(ScenarioSpec((ModeSpec(0.5, -0.3, (1.0,)),), 10, 50))
    d["sample_rate_hz"] = 0.8
    p.write_text(json.dumps(d))
    assert cli.main(["synth", "--spec", str(p), "--out", str(tmp_path / "x.csv")]) == 1
    assert "SamplingTooSlow" in capsys.readouterr().err


def test_corrupted_observations_exit_1(tmp_path):
    p = tmp_path / "obs.jsonl"
    p.write_text('{"frequency_hz": 0.5}\n')
    assert cli.main(["inspect", str(p)]) == 1


def test_window_out_of_range_is_usage_error(tmp_path, recording):
    assert analyze(recording, tmp_path / "w", "--window", "20") == 2


def test_no_observations_exit_1_and_no_outputs(tmp_path, capsys):
    t = np.arange(1500) / 50
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, t.size)) * 1e-3
    rows = ["t,a,b"] + [f"{float(ti)!r},{float(a)!r},{float(b)!r}" for ti, a, b in zip(t, *x)]
    noise = tmp_path / "noise.csv"
    noise.write_text("\n".join(rows) + "\n")
    out = tmp_path / "n"
    assert analyze(noise, out) == 1
    assert "NoObservations" in capsys.readouterr().err
    assert list(out.iterdir()) == []


def test_console_script_entry_point(tmp_path, scenario):
    out = tmp_path / "via_module.csv"
    proc = subprocess.run(
        [sys.executable, "-m", "modeshape.cli", "synth", "--spec", str(scenario), "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert out.exists()
