import json

import numpy as np
import pytest

from modeshape.clustering import select_and_cluster
from modeshape.errors import MalformedInput
from modeshape.observation import ModeObservation
from modeshape.report import (
    assignment,
    atomic_write_text,
    dumps,
    estimates_document,
    format_estimates_table,
    format_observations_table,
    plot_data,
    read_estimates,
)

IDS = ("A", "B")


@pytest.fixture
def observations(rng):
    obs = []
    for f, g in ((0.4, [1.0, -0.5]), (0.9, [1.0, 0.6j])):
        for i in range(8):
            jitter = 0.01 * rng.standard_normal(3)
            obs.append(
                ModeObservation(
                    f + jitter[0], -0.3 + jitter[1], np.array(g) + jitter[2], window_index=i, window_t_start=float(i)
                )
            )
    return obs


def test_estimates_document_and_read_back(tmp_path, observations):
    res = select_and_cluster(observations)
    doc = estimates_document(res.estimates, res, IDS, len(observations), replicates_merged=True, reproducible=True)
    assert doc["k_selected"] == 2
    assert "generated_at" not in doc
    mode = doc["modes"][0]
    assert mode["member_count"] == 8
    assert mode["damping_ratio"] == pytest.approx(
        0.3 / np.hypot(0.3, 2 * np.pi * mode["frequency_hz"]), rel=0.05
    )
    polar = mode["plot"]["polar"]
    for ch in IDS:
        re, im = mode["shape"][ch]
        assert polar[ch][0] == pytest.approx(np.hypot(re, im))
        assert polar[ch][1] == pytest.approx(np.degrees(np.arctan2(im, re)))
    hists = mode["plot"]["member_histograms"]
    assert set(hists) == {"frequency_hz", "decay_rate", "re:A", "im:A", "re:B", "im:B"}
    assert all(sum(h["counts"]) == 8 for h in hists.values())

    p = tmp_path / "est.json"
    atomic_write_text(p, dumps(doc))
    assert read_estimates(p) == doc


def test_read_estimates_rejects(tmp_path):
    p = tmp_path / "x.json"
    p.write_text("{")
    with pytest.raises(MalformedInput):
        read_estimates(p)
    p.write_text(json.dumps({"format": "other"}))
    with pytest.raises(MalformedInput):
        read_estimates(p)
    p.write_text(json.dumps({"format": "modeshape-estimates/1", "modes": [{"frequency_hz": 1}]}))
    with pytest.raises(MalformedInput):
        read_estimates(p)


def test_dumps_rejects_nan():
    with pytest.raises(ValueError):
        dumps({"x": float("nan")})


def test_plot_data_counts(observations):
    res = select_and_cluster(observations)
    doc = plot_data(observations, res.estimates, IDS, reproducible=True)
    fh = doc["frequency_histogram"]
    assert len(fh["edges"]) == 96  # 0.1 .. 2.0 Hz in 0.02 Hz bins
    assert fh["edges"][0] == pytest.approx(0.1) and fh["edges"][-1] == pytest.approx(2.0)
    assert sum(fh["counts"]) == 16
    assert [sum(c) for c in fh["per_mode"]] == [8, 8]
    ph = doc["phasor_histograms"]["channels"]["B"]
    assert np.sum(ph["counts"]) == 16
    assert [t["mode"] for t in doc["detection_track"]] == res.labels.tolist()


def test_plot_data_empty():
    doc = plot_data([], [], IDS, reproducible=True)
    assert doc["n_observations"] == 0 and doc["detection_track"] == []


def test_assignment_unassigned_is_minus_one(observations):
    res = select_and_cluster(observations)
    labels = assignment(res.estimates[:1], len(observations))
    assert (labels == -1).sum() == 8


def test_tables(observations):
    res = select_and_cluster(observations)
    doc = estimates_document(res.estimates, res, IDS, 16, replicates_merged=False, reproducible=True)
    lines = format_estimates_table(doc).splitlines()
    assert lines[0].startswith("#") and len(lines) == 3
    text = format_observations_table(observations, limit=5)
    assert text.splitlines()[0] == "16 observations, 2 channels"
    assert text.splitlines()[-1] == "... 11 more"


def test_atomic_write_leaves_no_temp_files(tmp_path):
    atomic_write_text(tmp_path / "f.txt", "hello")
    atomic_write_text(tmp_path / "f.txt", "again")
    assert [p.name for p in tmp_path.iterdir()] == ["f.txt"]
    assert (tmp_path / "f.txt").read_text() == "again"
