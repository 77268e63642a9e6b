import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FS, single_mode_window, window_from
from modeshape.clustering import shape_errors
from modeshape.errors import MalformedInput, ZeroShape
from modeshape.observation import (
    ModeObservation,
    ObservationSet,
    PipelineConfig,
    dumps_observations,
    extract_observations,
    prefilter,
    read_observations,
    rotate_to_reference,
    run_part1,
    write_observations,
)
from modeshape.sigproc import fit_envelope, mean_frequency
from modeshape.synth import Event, ModeSpec, ScenarioSpec, generate
from modeshape.timeseries import ChannelSet


class TestRotation:
    def test_examples(self):
        np.testing.assert_allclose(
            rotate_to_reference([1 + 1j, 0.5]), [np.sqrt(2), 0.5 * np.exp(-1j * np.pi / 4)], atol=1e-15
        )
        np.testing.assert_array_equal(rotate_to_reference([2, 1]), [2, 1])

    def test_zero(self):
        with pytest.raises(ZeroShape):
            rotate_to_reference([0, 0])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False), min_size=1, max_size=8))
    def test_preserves_magnitudes_and_phase_differences(self, g):
        g = np.array(g)
        if not np.abs(g).max() > 1e-6:
            return
        r = rotate_to_reference(g)
        i = int(np.argmax(np.abs(g)))
        assert abs(np.angle(r[i])) < 1e-9 and r[i].real > 0
        np.testing.assert_allclose(np.abs(r), np.abs(g), rtol=1e-12, atol=1e-15)
        ref = g[i].conjugate() / abs(g[i])
        np.testing.assert_allclose(r * np.conj(r[i]), g * np.conj(g[i]) * abs(ref) ** 2, rtol=1e-9, atol=1e-12)


class TestObservationRecord:
    obs = ModeObservation(0.5, -0.3, np.array([1.0, -0.5 + 0.25j, 0.1j]), 7, 7.0, 1, 1e-4)

    def test_point_layout(self):
        np.testing.assert_array_equal(self.obs.as_point(), [0.5, -0.3, 1.0, 0.0, -0.5, 0.25, 0.0, 0.1])

    def test_point_round_trip(self):
        back = ModeObservation.from_point(self.obs.as_point(), window_index=7, window_t_start=7.0, cpc_index=1,
                                          regression_mse=1e-4)
        assert back == self.obs

    def test_bad_point(self):
        with pytest.raises(ValueError):
            ModeObservation.from_point([1.0, 2.0, 3.0])

    def test_dict_field_order_and_round_trip(self):
        d = self.obs.to_dict()
        assert list(d) == ["window_index", "window_t_start", "cpc_index", "frequency_hz", "decay_rate",
                           "regression_mse", "phasors"]
        assert ModeObservation.from_dict(json.loads(json.dumps(d))) == self.obs

    def test_schema_mismatch(self):
        d = self.obs.to_dict()
        d["extra"] = 1
        with pytest.raises(MalformedInput):
            ModeObservation.from_dict(d)

    def test_jsonl_round_trip(self, tmp_path):
        path = tmp_path / "o.jsonl"
        write_observations([self.obs, self.obs], path)
        assert read_observations(path) == [self.obs, self.obs]
        assert dumps_observations([self.obs]).count("\n") == 1

    def test_corrupted_line_is_reported(self, tmp_path):
        path = tmp_path / "o.jsonl"
        path.write_text(dumps_observations([self.obs]) + "{oops\n")
        with pytest.raises(MalformedInput, match=":2:"):
            read_observations(path)

    def test_observation_set(self):
        s = ObservationSet(("a", "b", "c"), [self.obs], 3)
        assert len(s) == 1 and s[0] is self.obs and s.points().shape == (1, 8)
        assert ObservationSet(("a", "b"), []).points().shape == (0, 6)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"window_s": 4.0},
            {"window_s": 12.0},
            {"step_s": 0.0},
            {"taper": 0.5},
            {"band_hz": (2.0, 1.0)},
            {"mse_max": 0.0},
            {"lowpass_hz": 1.5},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            PipelineConfig(**kw)


class TestExtract:
    def test_single_mode(self):
        shape = np.array([1, 1, -1, -1], dtype=float)
        obs = extract_observations(single_mode_window(0.5, -0.3, shape))
        assert len(obs) == 1
        o = obs[0]
        assert o.frequency_hz == pytest.approx(0.5, abs=0.05)
        assert o.decay_rate == pytest.approx(-0.3, rel=0.3)
        angle, mag = shape_errors(o.phasors, shape)
        assert angle.max() < 10 and mag.max() < 0.1
        assert np.abs(o.phasors).max() == pytest.approx(1.0)
        assert np.angle(o.phasors[np.argmax(np.abs(o.phasors))]) == 0.0

    @pytest.mark.parametrize("seed", range(5))
    def test_white_noise_yields_nothing(self, seed):
        x = np.random.default_rng(seed).standard_normal((4, 500))
        assert extract_observations(window_from(x)) == []

    def test_three_hertz_is_out_of_band(self):
        t = np.arange(500) / FS
        x = np.outer([1, -0.5, 0.8, 0.3], np.exp(-0.2 * t) * np.cos(2 * np.pi * 3.0 * t))
        assert extract_observations(window_from(x)) == []

    def test_constant_window(self):
        assert extract_observations(window_from(np.ones((3, 500)) * 5.0)) == []

    @pytest.mark.parametrize("scale", [1e-3, 7.0, 1e4])
    def test_common_scale_invariance(self, scale):
        w = single_mode_window(0.6, -0.25, (1, 0.5, -0.7))
        a = extract_observations(w)[0]
        b = extract_observations(window_from(w.samples * scale))[0]
        assert b.frequency_hz == pytest.approx(a.frequency_hz, rel=1e-9)
        assert b.decay_rate == pytest.approx(a.decay_rate, rel=1e-9)

    def test_gates_recheckable(self):
        cs = generate(ScenarioSpec(
            (ModeSpec(0.45, -0.2, (1, 0.6, -0.4, -0.9)), ModeSpec(1.2, -0.3, (0.2, -1, 0.7, 0.1), 0.6)),
            40.0, FS, (Event(0.0), Event(20.0)), noise_std=0.005, rng_seed=2,
        ))
        cfg = PipelineConfig()
        obs = run_part1(cs, cfg)
        assert len(obs) > 0
        for o in obs:
            assert cfg.band_hz[0] <= o.frequency_hz <= cfg.band_hz[1]
            assert o.regression_mse < cfg.mse_max


class TestRunPart1:
    def test_observations_follow_events(self):
        events = (Event(1.0), Event(21.0), Event(41.0), Event(61.0))
        cs = generate(ScenarioSpec((ModeSpec(0.5, -0.3, (-0.4, -0.4, 0.7, 0.7)),), 81.0, FS, events))
        obs = run_part1(cs)
        assert len(obs) > 0 and obs.n_windows == 72
        # each accepted window starts within about one window length after an event
        for o in obs:
            since = [o.window_t_start - e.time_s for e in events if o.window_t_start >= e.time_s - 1.0]
            assert min(since) <= 10.0

    def test_constant_input(self):
        cs = ChannelSet(["a", "b"], FS, np.full((2, 1000), 3.0))
        assert len(run_part1(cs)) == 0

    def test_two_mode_histogram_peaks(self):
        modes = (ModeSpec(0.4, -0.2, (1, 0.8, -0.6, -0.9)), ModeSpec(0.9, -0.2, (0.3, -0.9, 1.0, -0.2)))
        events = (Event(0.0, (1.0, 0.2)), Event(20.0, (0.2, 1.0)))
        obs = run_part1(generate(ScenarioSpec(modes, 40.0, FS, events)))
        f = np.array([o.frequency_hz for o in obs])
        counts, edges = np.histogram(f, bins=np.arange(0.1, 2.01, 0.1))
        centres = 0.5 * (edges[:-1] + edges[1:])
        for f0 in (0.4, 0.9):
            near = np.abs(centres - f0) <= 0.1
            far = np.abs(centres - f0) >= 0.25
            assert counts[near].max() > 0
            assert counts[near].max() >= counts[far & (np.abs(centres - (1.3 - f0)) > 0.15)].max(initial=0)

    def test_parallel_matches_serial(self):
        cs = generate(ScenarioSpec((ModeSpec(0.5, -0.3, (1, -1, 0.5)),), 25.0, FS, (Event(0.0), Event(12.0))))
        a = run_part1(cs, jobs=1)
        b = run_part1(cs, jobs=2)
        assert dumps_observations(a) == dumps_observations(b)

    def test_observation_order(self):
        cs = generate(ScenarioSpec((ModeSpec(0.5, -0.3, (1, -1, 0.5)),), 25.0, FS, (Event(0.0),)))
        keys = [(o.window_index, o.cpc_index) for o in run_part1(cs)]
        assert keys == sorted(keys)


class TestPrefilter:
    def test_off_by_default(self):
        cs = ChannelSet(["a"], FS, np.arange(100.0))
        assert prefilter(cs, PipelineConfig()) is cs

    def test_keeps_band_removes_high_frequency(self):
        t = np.arange(2000) / FS
        slow = np.cos(2 * np.pi * 0.5 * t)
        cs = ChannelSet(["a"], FS, slow + np.cos(2 * np.pi * 10.0 * t))
        out = prefilter(cs, PipelineConfig(lowpass_hz=2.5)).samples[0]
        assert np.abs(out - slow)[200:-200].max() < 1e-3
