"""Part I: turn each measurement window into zero or more mode observations.

For every window the two-layer decomposition is run; each complex component
gets a frequency (power-weighted mean of its spectrum) and a decay rate
(exponential fit to its normalised envelope). Components outside the
frequency band or with a poor exponential fit are discarded. Survivors keep
their column of ``W`` as the mode shape, rotated so the largest phasor is
real-positive and scaled to unit length.
"""
from __future__ import annotations

import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .decomp import ComponentSelection, two_layer
from .errors import MalformedInput, NoComponentsKept, NonPositiveAmplitude, ZeroPower, ZeroShape
from .sigproc import EmdConfig, fit_envelope, mean_frequency
from .timeseries import ChannelSet, MeasurementWindow, sliding_windows

QUIET_RTOL = 1e-11

OBSERVATION_FIELDS = (
    "window_index",
    "window_t_start",
    "cpc_index",
    "frequency_hz",
    "decay_rate",
    "regression_mse",
    "phasors",
)


@dataclass(frozen=True)
class PipelineConfig:
    window_s: float = 10.0
    step_s: float = 1.0
    taper: float = 0.10
    keep1: ComponentSelection = field(default_factory=ComponentSelection)
    keep2: ComponentSelection = field(default_factory=ComponentSelection)
    band_hz: tuple = (0.1, 2.0)
    mse_max: float = 4e-3
    spectral_window: object = ("kaiser", 38.0)
    freq_range_hz: tuple | None = (0.0, 5.0)
    lowpass_hz: float | None = None
    lowpass_order: int = 4
    emd: EmdConfig = field(default_factory=EmdConfig)
    min_window_s: float = 5.0
    max_window_s: float = 10.0

    def __post_init__(self):
        if not self.min_window_s <= self.window_s <= self.max_window_s:
            raise ValueError(
                f"window length {self.window_s} s outside [{self.min_window_s}, {self.max_window_s}] s"
            )
        if self.step_s <= 0:
            raise ValueError("step must be positive")
        if not 0 <= self.taper < 0.5:
            raise ValueError("taper fraction must be in [0, 0.5)")
        lo, hi = self.band_hz
        if not 0 <= lo < hi:
            raise ValueError(f"invalid band {self.band_hz}")
        if not self.mse_max > 0:
            raise ValueError("mse threshold must be positive")
        if self.lowpass_hz is not None and not self.lowpass_hz > hi:
            raise ValueError(f"low-pass corner {self.lowpass_hz} Hz must lie above the band {self.band_hz}")


@dataclass(frozen=True, eq=False)
class ModeObservation:
    frequency_hz: float
    decay_rate: float
    phasors: np.ndarray
    window_index: int = 0
    window_t_start: float = 0.0
    cpc_index: int = 0
    regression_mse: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "phasors", np.asarray(self.phasors, dtype=np.complex128))

    @property
    def n_channels(self) -> int:
        return self.phasors.size

    def as_point(self) -> np.ndarray:
        """``[f, sigma, Re G1, Im G1, ..., Re GM, Im GM]``."""
        p = np.empty(2 + 2 * self.n_channels)
        p[0] = self.frequency_hz
        p[1] = self.decay_rate
        p[2::2] = self.phasors.real
        p[3::2] = self.phasors.imag
        return p

    @classmethod
    def from_point(cls, point, **meta) -> "ModeObservation":
        point = np.asarray(point, dtype=float)
        if point.size < 4 or point.size % 2:
            raise ValueError(f"point must have 2M+2 entries, got {point.size}")
        return cls(point[0], point[1], point[2::2] + 1j * point[3::2], **meta)

    def to_dict(self) -> dict:
        return {
            "window_index": int(self.window_index),
            "window_t_start": float(self.window_t_start),
            "cpc_index": int(self.cpc_index),
            "frequency_hz": float(self.frequency_hz),
            "decay_rate": float(self.decay_rate),
            "regression_mse": float(self.regression_mse),
            "phasors": [[float(g.real), float(g.imag)] for g in self.phasors],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ModeObservation":
        if set(d) != set(OBSERVATION_FIELDS):
            raise MalformedInput(f"observation fields {sorted(d)} do not match schema")
        phasors = np.array([complex(re, im) for re, im in d["phasors"]])
        return cls(
            float(d["frequency_hz"]),
            float(d["decay_rate"]),
            phasors,
            int(d["window_index"]),
            float(d["window_t_start"]),
            int(d["cpc_index"]),
            float(d["regression_mse"]),
        )

    def __eq__(self, other):
        if not isinstance(other, ModeObservation):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None


@dataclass
class ObservationSet:
    channel_ids: tuple
    observations: list
    n_windows: int = 0

    def __len__(self):
        return len(self.observations)

    def __iter__(self):
        return iter(self.observations)

    def __getitem__(self, i):
        return self.observations[i]

    def points(self) -> np.ndarray:
        if not self.observations:
            return np.empty((0, 2 + 2 * len(self.channel_ids)))
        return np.vstack([o.as_point() for o in self.observations])


# ------------------------------------------------------------------------ rotation


def rotate_to_reference(phasors) -> np.ndarray:
    """Rotate so the largest-magnitude phasor lies on the positive real axis.

    >>> rotate_to_reference([2, 1])
    array([2.+0.j, 1.+0.j])
    """
    g = np.asarray(phasors, dtype=np.complex128)
    mags = np.abs(g)
    if g.size == 0 or not mags.max() > 0:
        raise ZeroShape("mode shape is identically zero")
    i = int(np.argmax(mags))
    out = g * (g[i].conjugate() / mags[i])
    out[i] = mags[i]
    return out


# ---------------------------------------------------------------------- extraction


def extract_observations(window: MeasurementWindow, cfg: PipelineConfig | None = None) -> list:
    """Observations from a single window; an empty list means nothing passed the gates."""
    cfg = cfg or PipelineConfig()
    raw = np.asarray(window.samples, dtype=np.float64)
    x = raw - raw.mean(axis=1, keepdims=True)
    scale = np.max(np.abs(raw))
    if not np.max(np.abs(x)) > QUIET_RTOL * scale:
        return []
    fs = window.sample_rate_hz
    try:
        dec = two_layer(x, fs, cfg.keep1, cfg.keep2, cfg.taper, cfg.emd)
    except NoComponentsKept:
        return []

    t = (dec.taper_offset + np.arange(dec.z.shape[1])) / fs
    lo, hi = cfg.band_hz
    out = []
    for j in range(dec.n_components):
        zj = dec.z[j]
        try:
            f = mean_frequency(zj, fs, cfg.spectral_window, cfg.freq_range_hz)
            if not lo <= f <= hi:
                continue
            fit = fit_envelope(t, zj)
        except (ZeroPower, NonPositiveAmplitude):
            continue
        if not fit.mse < cfg.mse_max:
            continue
        g = rotate_to_reference(dec.w[:, j])
        g = g / np.abs(g).max()
        out.append(
            ModeObservation(
                frequency_hz=f,
                decay_rate=fit.beta,
                phasors=g,
                window_index=window.window_index,
                window_t_start=window.t_start,
                cpc_index=j,
                regression_mse=fit.mse,
            )
        )
    return out


def prefilter(cs: ChannelSet, cfg: PipelineConfig) -> ChannelSet:
    """Zero-phase Butterworth low-pass over the whole record, if configured.

    Filtering once before windowing avoids per-window edge transients; the
    zero-phase response leaves the phase relations between channels intact.
    """
    if cfg.lowpass_hz is None:
        return cs
    nyq = cs.sample_rate_hz / 2
    if cfg.lowpass_hz >= nyq:
        return cs
    sos = butter(cfg.lowpass_order, cfg.lowpass_hz, fs=cs.sample_rate_hz, output="sos")
    # sosfiltfilt needs a few times the filter length; short records pass unfiltered
    if cs.n_samples <= 3 * (2 * len(sos) + 1):
        return cs
    return ChannelSet(cs.channel_ids, cs.sample_rate_hz, sosfiltfilt(sos, cs.samples, axis=1), cs.t0)


def _extract(args):
    window, cfg = args
    return extract_observations(window, cfg)


def run_part1(cs: ChannelSet, cfg: PipelineConfig | None = None, jobs: int = 1) -> ObservationSet:
    """Slide a window over `cs` and collect every accepted observation.

    Output order is by (window_index, cpc_index) regardless of `jobs`.
    """
    cfg = cfg or PipelineConfig()
    windows = sliding_windows(prefilter(cs, cfg), cfg.window_s, cfg.step_s)
    if jobs > 1 and len(windows) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            per_window = list(pool.map(_extract, [(w, cfg) for w in windows], chunksize=4))
    else:
        per_window = [extract_observations(w, cfg) for w in windows]
    obs = [o for batch in per_window for o in batch]
    return ObservationSet(cs.channel_ids, obs, len(windows))


# ---------------------------------------------------------------------------- I/O


def dumps_observations(observations: Iterable[ModeObservation]) -> str:
    return "".join(json.dumps(o.to_dict()) + "\n" for o in observations)


def write_observations(observations: Iterable[ModeObservation], path: str | os.PathLike) -> None:
    Path(path).write_text(dumps_observations(observations), encoding="utf-8")


def read_observations(path: str | os.PathLike) -> list:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(ModeObservation.from_dict(json.loads(line)))
            except (json.JSONDecodeError, TypeError, KeyError, ValueError) as exc:
                raise MalformedInput(f"{path}:{lineno}: {exc}") from None
    return out
