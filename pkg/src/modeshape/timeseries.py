"""Multi-channel time series: ingestion, serialization and sliding windows.

Input may be absolute frequency or frequency deviation (Hz or per unit); the
per-window mean is removed downstream, so both give identical results.

CSV layout::

    # rate_hz=50
    # t0=0.0
    t,G1,G2,G3,G4
    0.00,0.0012,...

Leading ``# key=value`` lines are optional metadata. The ``t`` column is
optional when ``rate_hz`` is given; with both present ``rate_hz`` wins and the
time column is only checked for ordering and consistency.

JSON layout: an object with ``channel_ids``, ``sample_rate_hz``, ``t0`` and
``samples`` (row-major M x N list of lists).
"""
from __future__ import annotations

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Sequence, TextIO, Union

import numpy as np

from .errors import GapDetected, MalformedInput, TimeOrderError, WindowTooLong

MIN_WINDOW_SAMPLES = 4

Source = Union[str, os.PathLike, bytes, BinaryIO, TextIO]


@dataclass(frozen=True, eq=False)
class ChannelSet:
    """Uniformly sampled, time-aligned channels. ``samples`` row i is channel i."""

    channel_ids: tuple
    sample_rate_hz: float
    samples: np.ndarray
    t0: float = 0.0

    def __post_init__(self):
        ids = tuple(str(c) for c in self.channel_ids)
        x = np.asarray(self.samples, dtype=np.float64)
        if x.flags.writeable:
            x = x.copy()
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim != 2:
            raise MalformedInput(f"samples must be 2-D, got shape {x.shape}")
        if len(ids) != x.shape[0]:
            raise MalformedInput(f"{len(ids)} channel ids for {x.shape[0]} rows")
        if len(set(ids)) != len(ids):
            raise MalformedInput("duplicate channel ids")
        if x.shape[1] < 2:
            raise MalformedInput("need at least 2 samples per channel")
        rate = float(self.sample_rate_hz)
        if not (math.isfinite(rate) and rate > 0):
            raise MalformedInput(f"sample rate must be positive, got {self.sample_rate_hz}")
        bad = np.argwhere(~np.isfinite(x))
        if bad.size:
            row, col = bad[0]
            raise GapDetected(int(col), ids[row])
        x.setflags(write=False)
        object.__setattr__(self, "channel_ids", ids)
        object.__setattr__(self, "sample_rate_hz", rate)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "t0", float(self.t0))

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_samples) / self.sample_rate_hz

    def __eq__(self, other):
        if not isinstance(other, ChannelSet):
            return NotImplemented
        return (
            self.channel_ids == other.channel_ids
            and self.sample_rate_hz == other.sample_rate_hz
            and self.t0 == other.t0
            and self.samples.shape == other.samples.shape
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class MeasurementWindow:
    channels: ChannelSet
    window_index: int
    length_s: float
    start_sample: int = 0
    t_start: float = field(default=0.0)

    def __post_init__(self):
        if self.channels.n_samples < MIN_WINDOW_SAMPLES:
            raise MalformedInput(
                f"window has {self.channels.n_samples} samples, need {MIN_WINDOW_SAMPLES}"
            )

    @property
    def samples(self) -> np.ndarray:
        return self.channels.samples

    @property
    def sample_rate_hz(self) -> float:
        return self.channels.sample_rate_hz


# --------------------------------------------------------------------------- ingest


def _read_text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        return Path(source).read_text(encoding="utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def _guess_format(source: Source) -> str:
    if isinstance(source, (str, os.PathLike)):
        return "json" if str(source).lower().endswith(".json") else "csv"
    raise ValueError("format must be given for non-path sources")


def ingest(source: Source, format: str | None = None, fill_max_gap: int | None = None) -> ChannelSet:
    """Read a channel set from CSV or JSON.

    Parameters
    ----------
    source : path, bytes or file object
    format : {"csv", "json"}, optional
        Inferred from the file extension for paths.
    fill_max_gap : int, optional
        When given, runs of up to this many missing samples inside a channel
        are linearly interpolated. Longer runs and edge gaps still raise
        :class:`GapDetected`. By default any gap is an error.
    """
    fmt = (format or _guess_format(source)).lower()
    text = _read_text(source)
    if fmt == "csv":
        ids, rate, t0, x = _parse_csv(text)
    elif fmt == "json":
        ids, rate, t0, x = _parse_json(text)
    else:
        raise ValueError(f"unknown format {format!r}")
    if fill_max_gap is not None:
        x = fill_gaps(x, fill_max_gap, ids)
    else:
        bad = np.argwhere(np.isnan(x))
        if bad.size:
            row, col = bad[0]
            raise GapDetected(int(col), ids[row])
    return ChannelSet(ids, rate, x, t0)


def fill_gaps(x: np.ndarray, max_gap: int, channel_ids: Sequence[str] | None = None) -> np.ndarray:
    """Linearly interpolate interior NaN runs no longer than `max_gap` samples."""
    x = np.array(x, dtype=np.float64)
    for i, row in enumerate(x):
        missing = np.isnan(row)
        if not missing.any():
            continue
        name = channel_ids[i] if channel_ids is not None else i
        idx = np.flatnonzero(missing)
        runs = np.split(idx, np.flatnonzero(np.diff(idx) > 1) + 1)
        for run in runs:
            if run[0] == 0 or run[-1] == row.size - 1 or run.size > max_gap:
                raise GapDetected(int(run[0]), name)
        good = ~missing
        pos = np.arange(row.size)
        row[missing] = np.interp(pos[missing], pos[good], row[good])
    return x


def _cell(value: str, row: int, col: str) -> float:
    value = value.strip()
    if value == "" or value.lower() in ("nan", "na", "null"):
        return math.nan
    try:
        v = float(value)
    except ValueError:
        raise MalformedInput(f"non-numeric value {value!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise GapDetected(row, col)
    return v


def _parse_csv(text: str):
    meta = {}
    lines = text.splitlines()
    body_start = 0
    for line in lines:
        stripped = line.strip()
        if stripped.startswith("#"):
            key, sep, value = stripped[1:].partition("=")
            if sep:
                meta[key.strip()] = value.strip()
            body_start += 1
        elif not stripped:
            body_start += 1
        else:
            break
    rows = list(csv.reader(io.StringIO("\n".join(lines[body_start:]))))
    rows = [r for r in rows if r]
    if not rows:
        raise MalformedInput("missing header row")
    header = [h.strip() for h in rows[0]]
    has_t = header[0].lower() == "t"
    ids = header[1:] if has_t else header
    if not ids:
        raise MalformedInput("no channel columns")
    if len(rows) < 3:
        raise MalformedInput("need at least 2 data rows")

    data = np.empty((len(rows) - 1, len(header)))
    for r, row in enumerate(rows[1:]):
        if len(row) != len(header):
            raise MalformedInput(f"row {r} has {len(row)} fields, header has {len(header)}")
        for c, value in enumerate(row):
            data[r, c] = _cell(value, r, header[c])

    rate = float(meta["rate_hz"]) if "rate_hz" in meta else None
    t0 = float(meta["t0"]) if "t0" in meta else None
    if has_t:
        t = data[:, 0]
        if np.isnan(t).any():
            raise GapDetected(int(np.flatnonzero(np.isnan(t))[0]), "t")
        dt = np.diff(t)
        if np.any(dt <= 0):
            raise TimeOrderError(f"time column not strictly increasing at row {int(np.argmax(dt <= 0)) + 1}")
        step = (t[-1] - t[0]) / (t.size - 1)
        if np.max(np.abs(dt - step)) > 1e-6 + 1e-3 * step:
            raise MalformedInput("time column is not uniformly sampled")
        if rate is None:
            rate = 1.0 / step
        elif abs(rate * step - 1.0) > 1e-3:
            raise MalformedInput(f"rate_hz={rate} disagrees with time column step {step}")
        if t0 is None:
            t0 = float(t[0])
        data = data[:, 1:]
    if rate is None:
        raise MalformedInput("sample rate unknown: add a 't' column or a '# rate_hz=' line")
    return ids, rate, t0 or 0.0, data.T


def _parse_json(text: str):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"invalid JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise MalformedInput("JSON channel set must be an object")
    missing = {"channel_ids", "sample_rate_hz", "samples"} - obj.keys()
    if missing:
        raise MalformedInput(f"missing keys: {sorted(missing)}")
    rows = obj["samples"]
    ids = [str(c) for c in obj["channel_ids"]]
    if not isinstance(rows, list) or len(rows) != len(ids):
        raise MalformedInput("samples must be a list with one row per channel")
    n = len(rows[0]) if rows else 0
    x = np.empty((len(rows), n))
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise MalformedInput(f"channel {ids[i]} has a ragged row")
        for k, v in enumerate(row):
            if v is None:
                x[i, k] = math.nan
            elif isinstance(v, (int, float)) and not isinstance(v, bool):
                if not math.isfinite(v):
                    raise GapDetected(k, ids[i])
                x[i, k] = v
            else:
                raise MalformedInput(f"non-numeric value {v!r} in channel {ids[i]}")
    return ids, float(obj["sample_rate_hz"]), float(obj.get("t0", 0.0)), x


# ------------------------------------------------------------------------ serialize


def serialize(cs: ChannelSet, format: str = "csv") -> str:
    """Text form of `cs` that :func:`ingest` reads back bit-identically."""
    if format == "json":
        return json.dumps(
            {
                "channel_ids": list(cs.channel_ids),
                "sample_rate_hz": cs.sample_rate_hz,
                "t0": cs.t0,
                "samples": cs.samples.tolist(),
            }
        )
    if format != "csv":
        raise ValueError(f"unknown format {format!r}")
    out = io.StringIO()
    out.write(f"# rate_hz={cs.sample_rate_hz!r}\n# t0={cs.t0!r}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["t", *cs.channel_ids])
    for t, col in zip(cs.times, cs.samples.T):
        writer.writerow([repr(float(t)), *(repr(float(v)) for v in col)])
    return out.getvalue()


def write(cs: ChannelSet, path: str | os.PathLike, format: str | None = None) -> None:
    fmt = format or _guess_format(path)
    Path(path).write_text(serialize(cs, fmt), encoding="utf-8")


# -------------------------------------------------------------------------- windows


def window_bounds(n_total: int, sample_rate_hz: float, length_s: float, step_s: float) -> list[tuple[int, int]]:
    n_win = int(round(length_s * sample_rate_hz))
    n_step = int(round(step_s * sample_rate_hz))
    if step_s <= 0 or n_step < 1:
        raise ValueError(f"step must be positive and at least one sample, got {step_s} s")
    if n_win > n_total:
        raise WindowTooLong(
            f"window of {length_s} s ({n_win} samples) exceeds data of {n_total} samples"
        )
    if n_win < MIN_WINDOW_SAMPLES:
        raise ValueError(f"window of {n_win} samples is shorter than {MIN_WINDOW_SAMPLES}")
    count = (n_total - n_win) // n_step + 1
    return [(i * n_step, i * n_step + n_win) for i in range(count)]


def sliding_windows(cs: ChannelSet, length_s: float = 10.0, step_s: float = 1.0) -> list[MeasurementWindow]:
    """Consecutive windows of `length_s` seconds, every `step_s` seconds.

    A trailing partial window is dropped.

    >>> cs = ChannelSet(["a"], 50.0, np.zeros((1, 1000)))
    >>> len(sliding_windows(cs, 10.0, 1.0))
    11
    """
    out = []
    for i, (a, b) in enumerate(window_bounds(cs.n_samples, cs.sample_rate_hz, length_s, step_s)):
        view = ChannelSet(cs.channel_ids, cs.sample_rate_hz, cs.samples[:, a:b], cs.t0 + a / cs.sample_rate_hz)
        out.append(MeasurementWindow(view, i, length_s, a, view.t0))
    return out
