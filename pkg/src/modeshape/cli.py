"""``modeshape`` command line: ``synth``, ``analyze`` and ``inspect``.

Exit codes: 0 on success, 1 when the data or the pipeline fails (malformed
input, nothing observed, invalid scenario), 2 for usage errors such as a
missing file or an unknown option.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import __version__
from .clustering import merge_replicates, select_and_cluster
from .decomp import ComponentSelection
from .errors import ModeshapeError
from .observation import PipelineConfig, dumps_observations, read_observations, run_part1
from .report import (
    atomic_write_text,
    dumps,
    estimates_document,
    format_estimates_table,
    format_observations_table,
    plot_data,
    read_estimates,
)
from .synth import generate, load_scenario
from .timeseries import ingest, serialize

SEED_ENV = "MODESHAPE_SEED"

OBSERVATIONS_FILE = "observations.jsonl"
ESTIMATES_FILE = "estimates.json"
PLOT_DATA_FILE = "plot_data.json"

# Keys accepted in an --config file, with their built-in defaults. Every key
# is also a command-line flag (underscores become dashes); flags win.
ANALYZE_DEFAULTS = {
    "window": 10.0,
    "step": 1.0,
    "taper": 0.10,
    "keep1": "0.95",
    "keep2": "0.95",
    "band": "0.1:2.0",
    "mse_max": 4e-3,
    "freq_range": "0:5",
    "spectral_window": "kaiser",
    "lowpass": None,
    "kmin": 2,
    "kmax": 10,
    "n_init": 10,
    "scaling": "standardize",
    "min_silhouette": 0.25,
    "no_merge": False,
    "fill_gaps": None,
    "jobs": 1,
}

SPECTRAL_WINDOWS = {"kaiser": ("kaiser", 38.0), "hann": "hann", "none": None}


class UsageError(Exception):
    """Bad invocation; reported with exit status 2."""


def _range(text: str, name: str) -> tuple:
    try:
        lo, hi = (float(v) for v in str(text).split(":"))
    except ValueError:
        raise UsageError(f"--{name} expects LO:HI, got {text!r}") from None
    if not lo < hi:
        raise UsageError(f"--{name}: lower bound must be below upper bound, got {text!r}")
    return lo, hi


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}") from None


def _load_config(path) -> dict:
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}")
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON ({exc})") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{p}: expected a JSON object")
    allowed = set(ANALYZE_DEFAULTS) | {"seed"}
    unknown = sorted(set(cfg) - allowed)
    if unknown:
        raise UsageError(f"{p}: unknown keys {unknown}; allowed: {sorted(allowed)}")
    return cfg


def _resolve(args) -> dict:
    """Built-in defaults, overridden by --config, overridden by explicit flags."""
    settings = dict(ANALYZE_DEFAULTS)
    settings["seed"] = None
    settings.update(_load_config(args.config))
    for key in list(settings):
        value = getattr(args, key, None)
        if value is not None and value is not False:
            settings[key] = value
    if settings["seed"] is None:
        settings["seed"] = _default_seed()
    return settings


def pipeline_config(settings: dict) -> PipelineConfig:
    if settings["spectral_window"] not in SPECTRAL_WINDOWS:
        raise UsageError(f"spectral window must be one of {sorted(SPECTRAL_WINDOWS)}")
    try:
        return PipelineConfig(
            window_s=float(settings["window"]),
            step_s=float(settings["step"]),
            taper=float(settings["taper"]),
            keep1=ComponentSelection.parse(str(settings["keep1"])),
            keep2=ComponentSelection.parse(str(settings["keep2"])),
            band_hz=_range(settings["band"], "band"),
            mse_max=float(settings["mse_max"]),
            spectral_window=SPECTRAL_WINDOWS[settings["spectral_window"]],
            freq_range_hz=_range(settings["freq_range"], "freq-range"),
            lowpass_hz=None if settings["lowpass"] is None else float(settings["lowpass"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ModeshapeError):
            raise
        raise UsageError(str(exc)) from None


# ------------------------------------------------------------------------ commands


def cmd_synth(args) -> int:
    spec_path = Path(args.spec)
    if not spec_path.is_file():
        raise UsageError(f"scenario file not found: {spec_path}")
    spec = load_scenario(spec_path)
    cs = generate(spec)
    out = Path(args.out)
    fmt = args.format or ("json" if out.suffix.lower() == ".json" else "csv")
    atomic_write_text(out, serialize(cs, fmt))
    print(f"wrote {out}: {cs.n_channels} channels, {cs.n_samples} samples at {cs.sample_rate_hz:g} Hz, "
          f"{len(spec.modes)} modes, {len(spec.events)} events")
    return 0


def cmd_analyze(args) -> int:
    settings = _resolve(args)
    cfg = pipeline_config(settings)
    src = Path(args.input)
    if not src.is_file():
        raise UsageError(f"input file not found: {src}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    written: list[Path] = []

    def emit(name, text):
        path = out_dir / name
        atomic_write_text(path, text)
        written.append(path)

    try:
        fill = settings["fill_gaps"]
        cs = ingest(src, fill_max_gap=None if fill is None else int(fill))
        obs = run_part1(cs, cfg, jobs=int(settings["jobs"]))
        emit(OBSERVATIONS_FILE, dumps_observations(obs))
        print(f"{len(obs)} observations from {obs.n_windows} windows ({cs.n_channels} channels)")
        if args.part1_only:
            return 0

        result = select_and_cluster(
            obs,
            k_min=int(settings["kmin"]),
            k_max=int(settings["kmax"]),
            seed=int(settings["seed"]),
            n_init=int(settings["n_init"]),
            scaling=settings["scaling"],
            min_silhouette=float(settings["min_silhouette"]),
        )
        merge = not settings["no_merge"]
        estimates = merge_replicates(result.estimates) if merge else list(result.estimates)
        doc = estimates_document(
            estimates,
            result,
            cs.channel_ids,
            len(obs),
            replicates_merged=merge,
            settings={k: settings[k] for k in sorted(settings) if k != "jobs"},  # jobs never changes results
            reproducible=args.reproducible,
        )
        pdoc = plot_data(obs, estimates, cs.channel_ids, cfg.band_hz, reproducible=args.reproducible)
        emit(ESTIMATES_FILE, dumps(doc))
        emit(PLOT_DATA_FILE, dumps(pdoc))
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise

    print(f"k = {result.k}{' (low confidence)' if result.low_confidence else ''}, {len(estimates)} modes")
    print(format_estimates_table(doc))
    return 0


def cmd_inspect(args) -> int:
    path = Path(args.file)
    if not path.is_file():
        raise UsageError(f"file not found: {path}")
    try:
        head = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError:
        head = None  # JSON lines, or corrupted; the observation reader reports which
    if isinstance(head, dict) and "format" in head:
        doc = read_estimates(path)
        print(f"{len(doc['modes'])} modes from {doc.get('n_observations', '?')} observations, "
              f"{len(doc['channel_ids'])} channels")
        print(format_estimates_table(doc))
    else:
        print(format_observations_table(read_observations(path), limit=args.limit))
    return 0


# -------------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="modeshape", description="Mode and mode-shape estimation from multichannel ringdowns.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="generate a synthetic ringdown from a scenario JSON file")
    s.add_argument("--spec", required=True, help="scenario JSON file")
    s.add_argument("--out", required=True, help="output CSV or JSON file")
    s.add_argument("--format", choices=("csv", "json"), help="output format (default: from the file suffix)")
    s.set_defaults(func=cmd_synth)

    a = sub.add_parser("analyze", help="estimate modes and mode shapes from a CSV/JSON recording")
    a.add_argument("--input", required=True)
    a.add_argument("--out-dir", required=True)
    a.add_argument("--config", help="JSON file with default settings (keys as the long options, underscores)")
    a.add_argument("--window", type=float, help="window length in s (5-10, default 10)")
    a.add_argument("--step", type=float, help="window step in s (default 1)")
    a.add_argument("--taper", type=float, help="fraction cut from each end after the Hilbert transform (default 0.10)")
    a.add_argument("--keep1", help="first-layer components: an integer count or a variance fraction (default 0.95)")
    a.add_argument("--keep2", help="second-layer components, as --keep1")
    a.add_argument("--band", help="accepted frequency band LO:HI in Hz (default 0.1:2.0)")
    a.add_argument("--mse-max", type=float, help="envelope-fit mse threshold (default 4e-3)")
    a.add_argument("--freq-range", help="spectrum range LO:HI in Hz for the mean frequency (default 0:5)")
    a.add_argument("--spectral-window", choices=sorted(SPECTRAL_WINDOWS), help="periodogram window (default kaiser)")
    a.add_argument("--lowpass", type=float, help="zero-phase low-pass corner in Hz applied before windowing (default off)")
    a.add_argument("--kmin", type=int, help="smallest k tried (default 2)")
    a.add_argument("--kmax", type=int, help="largest k tried (default 10)")
    a.add_argument("--n-init", type=int, help="k-Means restarts per k (default 10)")
    a.add_argument("--scaling", choices=("standardize", "none"), help="per-dimension scaling before k-Means")
    a.add_argument("--min-silhouette", type=float, help="below this, report a single low-confidence cluster")
    a.add_argument("--seed", type=int, help=f"random seed (default ${SEED_ENV} or 0)")
    a.add_argument("--no-merge", action="store_true", help="keep rotated replicate clusters separate")
    a.add_argument("--fill-gaps", type=int, metavar="N", help="interpolate gaps of up to N samples instead of failing")
    a.add_argument("--jobs", type=int, help="worker processes for the windowed stage (default 1)")
    a.add_argument("--part1-only", action="store_true", help="stop after writing the observations")
    a.add_argument("--reproducible", action="store_true", help="omit timestamps so reruns are byte-identical")
    a.set_defaults(func=cmd_analyze)

    i = sub.add_parser("inspect", help="summarise an observations or estimates file")
    i.add_argument("file")
    i.add_argument("--limit", type=int, default=20, help="observation rows to show")
    i.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"modeshape: error: {exc}", file=sys.stderr)
        return 2
    except (ModeshapeError, ValueError) as exc:
        print(f"modeshape: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
