"""Machine-readable results: the estimates document and plot-ready data.

Nothing here draws figures. The plot-data document carries the histograms
and tracks needed to redraw the usual diagnostic figures with any tool:

``frequency_histogram`` / ``decay_histogram``
    Bin edges, total counts, and per-mode counts, so each bar can be split
    into the share of observations assigned to each mode.
``phasor_histograms``
    One 2-D histogram of (Re G, Im G) per channel over ``[-1, 1]^2``, with
    per-mode counts.
``detection_track``
    One entry per observation: when it was seen, its frequency, and which mode
    it was assigned to (``-1`` if none).
"""
from __future__ import annotations

import datetime as _dt
import json
import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .clustering import ClusteringResult, ModeEstimate
from .errors import MalformedInput

ESTIMATES_FORMAT = "modeshape-estimates/1"
PLOT_DATA_FORMAT = "modeshape-plot-data/1"


# --------------------------------------------------------------------------- files


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write `text` to `path` so that readers never see a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def _timestamp() -> str:
    return _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()


# ----------------------------------------------------------------------- estimates


def _shape_dict(shape, channel_ids):
    return {str(ch): [float(g.real), float(g.imag)] for ch, g in zip(channel_ids, shape)}


def _dispersion_dict(disp, channel_ids):
    disp = np.asarray(disp, dtype=float)
    return {
        "frequency_hz": float(disp[0]),
        "decay_rate": float(disp[1]),
        "phasors": {str(ch): [float(disp[2 + 2 * i]), float(disp[3 + 2 * i])] for i, ch in enumerate(channel_ids)},
    }


def _member_histogram(values, bins=10):
    values = np.asarray(values, dtype=float)
    lo, hi = float(values.min()), float(values.max())
    if hi - lo < 1e-12:
        lo, hi = lo - 0.5e-3, hi + 0.5e-3
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return {"edges": edges.tolist(), "counts": counts.tolist()}


def _plot_block(est: ModeEstimate, channel_ids):
    """Polar form of each phasor (magnitude, degrees) and a histogram of every
    dimension of the member observations, one per ``frequency_hz``,
    ``decay_rate``, ``re:<channel>`` and ``im:<channel>``."""
    block = {
        "polar": {
            str(ch): [float(abs(g)), float(np.degrees(np.angle(g)))] for ch, g in zip(channel_ids, est.shape)
        }
    }
    if est.member_points is not None and len(est.member_points):
        rows = np.asarray(est.member_points)
        hists = {"frequency_hz": _member_histogram(rows[:, 0]), "decay_rate": _member_histogram(rows[:, 1])}
        for i, ch in enumerate(channel_ids):
            hists[f"re:{ch}"] = _member_histogram(rows[:, 2 + 2 * i])
            hists[f"im:{ch}"] = _member_histogram(rows[:, 3 + 2 * i])
        block["member_histograms"] = hists
    return block


def estimate_to_dict(est: ModeEstimate, channel_ids: Sequence[str]) -> dict:
    f, s = est.frequency_hz, est.decay_rate
    omega = 2 * np.pi * f
    return {
        "frequency_hz": float(f),
        "decay_rate": float(s),
        "damping_ratio": float(-s / np.hypot(s, omega)) if np.hypot(s, omega) > 0 else 0.0,
        "member_count": int(est.member_count),
        "member_indices": [int(i) for i in est.member_indices],
        "low_confidence": bool(est.low_confidence),
        "shape": _shape_dict(est.shape, channel_ids),
        "dispersion": _dispersion_dict(est.dispersion, channel_ids),
        "plot": _plot_block(est, channel_ids),
    }


def estimates_document(
    estimates: Sequence[ModeEstimate],
    result: ClusteringResult,
    channel_ids: Sequence[str],
    n_observations: int,
    *,
    replicates_merged: bool,
    settings: dict | None = None,
    reproducible: bool = False,
) -> dict:
    """Everything needed to interpret and reproduce a clustering run.

    `estimates` may differ from ``result.estimates`` when replicates were
    merged afterwards; `result` still supplies the silhouette table and the
    scaling record.
    """
    doc = {
        "format": ESTIMATES_FORMAT,
        "channel_ids": [str(c) for c in channel_ids],
        "n_observations": int(n_observations),
        "k_selected": int(result.k),
        "silhouettes": {str(k): float(v) for k, v in sorted(result.silhouettes.items())},
        "low_confidence": bool(result.low_confidence),
        "replicates_merged": bool(replicates_merged),
        "scaling": result.matrix.scaling_record(),
        "settings": settings or {},
        "modes": [estimate_to_dict(e, channel_ids) for e in estimates],
    }
    if not reproducible:
        doc["generated_at"] = _timestamp()
    return doc


def read_estimates(path: str | os.PathLike) -> dict:
    """Load and sanity-check an estimates document."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise MalformedInput(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict) or doc.get("format") != ESTIMATES_FORMAT:
        raise MalformedInput(f"{path}: not an estimates file (format {ESTIMATES_FORMAT!r} expected)")
    for i, mode in enumerate(doc.get("modes", [])):
        missing = {"frequency_hz", "decay_rate", "member_count", "shape"} - set(mode)
        if missing:
            raise MalformedInput(f"{path}: mode {i} lacks {sorted(missing)}")
    return doc


# ------------------------------------------------------------------------ plotting


def assignment(estimates: Sequence[ModeEstimate], n_observations: int) -> np.ndarray:
    """Index of the estimate each observation belongs to, ``-1`` if none."""
    labels = np.full(n_observations, -1, dtype=np.int64)
    for i, est in enumerate(estimates):
        labels[list(est.member_indices)] = i
    return labels


def _histogram(values, labels, n_modes, edges):
    counts, _ = np.histogram(values, bins=edges)
    per_mode = [np.histogram(values[labels == m], bins=edges)[0].tolist() for m in range(n_modes)]
    return {"edges": [float(e) for e in edges], "counts": counts.tolist(), "per_mode": per_mode}


def plot_data(
    observations,
    estimates: Sequence[ModeEstimate],
    channel_ids: Sequence[str],
    band_hz=(0.1, 2.0),
    freq_bin_hz: float = 0.02,
    decay_bins: int = 30,
    phasor_bins: int = 21,
    reproducible: bool = False,
) -> dict:
    obs = list(observations)
    q = len(obs)
    n_modes = len(estimates)
    labels = assignment(estimates, q)
    freqs = np.array([o.frequency_hz for o in obs], dtype=float)
    decays = np.array([o.decay_rate for o in obs], dtype=float)

    lo, hi = band_hz
    n_fbins = max(1, int(np.ceil(round((hi - lo) / freq_bin_hz, 9))))
    f_edges = np.linspace(lo, lo + n_fbins * freq_bin_hz, n_fbins + 1)
    if q:
        d_lo, d_hi = float(decays.min()), float(decays.max())
    else:
        d_lo, d_hi = -1.0, 0.0
    if d_hi - d_lo < 1e-9:
        d_lo, d_hi = d_lo - 0.5, d_hi + 0.5
    d_edges = np.linspace(d_lo, d_hi, decay_bins + 1)

    p_edges = np.linspace(-1.0, 1.0, phasor_bins + 1)
    phasors = np.array([o.phasors for o in obs]).reshape(q, len(channel_ids)) if q else np.empty((0, len(channel_ids)))
    per_channel = {}
    for c, ch in enumerate(channel_ids):
        g = phasors[:, c]
        counts = np.histogram2d(g.real, g.imag, bins=(p_edges, p_edges))[0].astype(int)
        per_mode = [
            np.histogram2d(g[labels == m].real, g[labels == m].imag, bins=(p_edges, p_edges))[0].astype(int).tolist()
            for m in range(n_modes)
        ]
        per_channel[str(ch)] = {"counts": counts.tolist(), "per_mode": per_mode}

    doc = {
        "format": PLOT_DATA_FORMAT,
        "channel_ids": [str(c) for c in channel_ids],
        "n_observations": q,
        "modes": [{"frequency_hz": float(e.frequency_hz), "member_count": int(e.member_count)} for e in estimates],
        "frequency_histogram": _histogram(freqs, labels, n_modes, f_edges),
        "decay_histogram": _histogram(decays, labels, n_modes, d_edges),
        "phasor_histograms": {"re_edges": p_edges.tolist(), "im_edges": p_edges.tolist(), "channels": per_channel},
        "detection_track": [
            {
                "window_index": int(o.window_index),
                "window_t_start": float(o.window_t_start),
                "frequency_hz": float(o.frequency_hz),
                "mode": int(labels[i]),
            }
            for i, o in enumerate(obs)
        ],
    }
    if not reproducible:
        doc["generated_at"] = _timestamp()
    return doc


# --------------------------------------------------------------------------- tables


def format_estimates_table(doc: dict, top_phasors: int = 2) -> str:
    rows = [("#", "f [Hz]", "sigma [1/s]", "zeta", "members", "flag", "largest phasors")]
    for i, mode in enumerate(doc.get("modes", [])):
        shape = {ch: complex(*v) for ch, v in mode["shape"].items()}
        top = sorted(shape.items(), key=lambda kv: -abs(kv[1]))[:top_phasors]
        phs = ", ".join(f"{ch} {abs(g):.2f}/{np.degrees(np.angle(g)):+.0f}deg" for ch, g in top)
        rows.append(
            (
                str(i),
                f"{mode['frequency_hz']:.3f}",
                f"{mode['decay_rate']:+.3f}",
                f"{mode.get('damping_ratio', float('nan')):.3f}",
                str(mode["member_count"]),
                "low-conf" if mode.get("low_confidence") else "",
                phs,
            )
        )
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(r, widths)).rstrip() for r in rows]
    return "\n".join(lines)


def format_observations_table(observations, channel_ids=None, limit: int = 20) -> str:
    obs = list(observations)
    m = obs[0].n_channels if obs else (len(channel_ids) if channel_ids else 0)
    lines = [f"{len(obs)} observations, {m} channels"]
    if obs:
        lines.append(f"{'window':>6}  {'t0 [s]':>8}  {'cpc':>3}  {'f [Hz]':>7}  {'sigma':>7}  {'mse':>9}")
        for o in obs[:limit]:
            lines.append(
                f"{o.window_index:>6d}  {o.window_t_start:>8.2f}  {o.cpc_index:>3d}  "
                f"{o.frequency_hz:>7.3f}  {o.decay_rate:>+7.3f}  {o.regression_mse:>9.2e}"
            )
        if len(obs) > limit:
            lines.append(f"... {len(obs) - limit} more")
    return "\n".join(lines)
