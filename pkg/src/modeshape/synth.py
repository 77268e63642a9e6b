"""Synthetic ringdowns built from damped complex modes.

Each event at ``t_e`` adds, for ``t >= t_e``::

    x_i(t) += sum_j Re(shape_ij * excitation_j * multiplier_ej * exp(lambda_j (t - t_e)))

with ``lambda_j = sigma_j + 2j*pi*f_j``, followed by optional linear/step
trends and white Gaussian noise.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import InvalidScenario, SamplingTooSlow
from .timeseries import ChannelSet


@dataclass(frozen=True)
class ModeSpec:
    frequency_hz: float
    sigma: float
    shape: tuple
    excitation: complex = 1.0

    def __post_init__(self):
        shape = tuple(complex(g) for g in self.shape)
        if not self.frequency_hz > 0:
            raise InvalidScenario(f"mode frequency must be positive, got {self.frequency_hz}")
        if not shape or all(g == 0 for g in shape):
            raise InvalidScenario("mode shape needs at least one nonzero entry")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "excitation", complex(self.excitation))

    @property
    def eigenvalue(self) -> complex:
        return complex(self.sigma, 2 * math.pi * self.frequency_hz)


@dataclass(frozen=True)
class Event:
    time_s: float
    multipliers: tuple | None = None  # one per mode; None excites all with 1


@dataclass(frozen=True)
class Trend:
    slope: tuple | None = None  # per channel, units per second
    steps: tuple = ()  # (time_s, per-channel sizes)


@dataclass(frozen=True)
class ScenarioSpec:
    modes: tuple
    duration_s: float
    sample_rate_hz: float
    events: tuple = (Event(0.0),)
    noise_std: float = 0.0
    trend: Trend | None = None
    rng_seed: int = 0
    channel_ids: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "events", tuple(self.events))
        if not self.duration_s > 0:
            raise InvalidScenario("duration must be positive")
        if not self.sample_rate_hz > 0:
            raise InvalidScenario("sample rate must be positive")
        if self.noise_std < 0:
            raise InvalidScenario("noise_std must be nonnegative")
        sizes = {len(m.shape) for m in self.modes}
        if len(sizes) > 1:
            raise InvalidScenario("all mode shapes must have the same number of channels")
        for ev in self.events:
            if ev.multipliers is not None and len(ev.multipliers) != len(self.modes):
                raise InvalidScenario(f"event at {ev.time_s} s has {len(ev.multipliers)} multipliers for {len(self.modes)} modes")
        if self.channel_ids is not None and len(self.channel_ids) != self.n_channels:
            raise InvalidScenario("channel_ids length does not match the mode shapes")

    @property
    def n_channels(self) -> int:
        if self.modes:
            return len(self.modes[0].shape)
        if self.channel_ids is not None:
            return len(self.channel_ids)
        return 1

    def ids(self) -> tuple:
        if self.channel_ids is not None:
            return tuple(self.channel_ids)
        return tuple(f"ch{i + 1}" for i in range(self.n_channels))


def generate(spec: ScenarioSpec) -> ChannelSet:
    """Evaluate the scenario on ``t = k / fs`` for ``k = 0 .. round(duration*fs) - 1``."""
    fmax = max((m.frequency_hz for m in spec.modes), default=0.0)
    if not spec.sample_rate_hz > 2 * fmax:
        raise SamplingTooSlow(
            f"sample rate {spec.sample_rate_hz} Hz must exceed twice the highest mode frequency {fmax} Hz"
        )
    n = int(round(spec.duration_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    m = spec.n_channels
    x = np.zeros((m, n))
    for ev in spec.events:
        on = t >= ev.time_s
        tau = t[on] - ev.time_s
        for j, mode in enumerate(spec.modes):
            mult = 1.0 if ev.multipliers is None else complex(ev.multipliers[j])
            coeff = np.asarray(mode.shape) * (mode.excitation * mult)
            if not np.any(coeff):
                continue
            x[:, on] += (coeff[:, None] * np.exp(mode.eigenvalue * tau)[None, :]).real
    if spec.trend is not None:
        if spec.trend.slope is not None:
            x += np.asarray(spec.trend.slope, dtype=float)[:, None] * t[None, :]
        for time_s, sizes in spec.trend.steps:
            x[:, t >= time_s] += np.asarray(sizes, dtype=float)[:, None]
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.rng_seed)
        x += rng.normal(0.0, spec.noise_std, size=x.shape)
    return ChannelSet(spec.ids(), spec.sample_rate_hz, x, 0.0)


# ---------------------------------------------------------------------- JSON spec

_SCENARIO_KEYS = {
    "modes", "duration_s", "sample_rate_hz", "events", "noise_std", "trend", "rng_seed", "channel_ids",
}
_MODE_KEYS = {"frequency_hz", "sigma", "shape", "excitation"}
_EVENT_KEYS = {"time_s", "multipliers"}
_TREND_KEYS = {"slope", "steps"}


def _complex(v, where):
    """A JSON number, ``[re, im]`` pair or ``{"mag": .., "deg": ..}`` as a complex."""
    if isinstance(v, bool):
        raise InvalidScenario(f"{where}: expected a number, got {v!r}")
    if isinstance(v, (int, float)):
        return complex(v)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(a, (int, float)) for a in v):
        return complex(v[0], v[1])
    if isinstance(v, dict) and set(v) == {"mag", "deg"}:
        return v["mag"] * complex(math.cos(math.radians(v["deg"])), math.sin(math.radians(v["deg"])))
    raise InvalidScenario(f"{where}: cannot read {v!r} as a complex number")


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise InvalidScenario(f"{where}: expected an object")
    unknown = set(obj) - allowed
    if unknown:
        raise InvalidScenario(f"{where}: unknown keys {sorted(unknown)}")


def scenario_from_dict(d: dict) -> ScenarioSpec:
    _check_keys(d, _SCENARIO_KEYS, "scenario")
    for key in ("modes", "duration_s", "sample_rate_hz"):
        if key not in d:
            raise InvalidScenario(f"scenario: missing key {key!r}")
    modes = []
    for i, md in enumerate(d["modes"]):
        where = f"modes[{i}]"
        _check_keys(md, _MODE_KEYS, where)
        try:
            modes.append(
                ModeSpec(
                    float(md["frequency_hz"]),
                    float(md["sigma"]),
                    tuple(_complex(g, f"{where}.shape") for g in md["shape"]),
                    _complex(md.get("excitation", 1.0), f"{where}.excitation"),
                )
            )
        except KeyError as exc:
            raise InvalidScenario(f"{where}: missing key {exc}") from None
    events = []
    for i, ed in enumerate(d.get("events", [{"time_s": 0.0}])):
        _check_keys(ed, _EVENT_KEYS, f"events[{i}]")
        mult = ed.get("multipliers")
        if mult is not None:
            mult = tuple(_complex(v, f"events[{i}].multipliers") for v in mult)
        events.append(Event(float(ed.get("time_s", 0.0)), mult))
    trend = None
    if d.get("trend") is not None:
        td = d["trend"]
        _check_keys(td, _TREND_KEYS, "trend")
        slope = tuple(float(s) for s in td["slope"]) if td.get("slope") is not None else None
        steps = tuple((float(s["time_s"]), tuple(float(v) for v in s["sizes"])) for s in td.get("steps", []))
        trend = Trend(slope, steps)
    ids = d.get("channel_ids")
    return ScenarioSpec(
        modes=tuple(modes),
        duration_s=float(d["duration_s"]),
        sample_rate_hz=float(d["sample_rate_hz"]),
        events=tuple(events),
        noise_std=float(d.get("noise_std", 0.0)),
        trend=trend,
        rng_seed=int(d.get("rng_seed", 0)),
        channel_ids=tuple(str(c) for c in ids) if ids is not None else None,
    )


def load_scenario(path: str | os.PathLike) -> ScenarioSpec:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidScenario(f"{path}: invalid JSON ({exc})") from None
    return scenario_from_dict(d)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    def pair(c):
        return [c.real, c.imag]

    d = {
        "modes": [
            {
                "frequency_hz": m.frequency_hz,
                "sigma": m.sigma,
                "shape": [pair(g) for g in m.shape],
                "excitation": pair(m.excitation),
            }
            for m in spec.modes
        ],
        "duration_s": spec.duration_s,
        "sample_rate_hz": spec.sample_rate_hz,
        "events": [
            {"time_s": e.time_s, **({"multipliers": [pair(complex(v)) for v in e.multipliers]} if e.multipliers else {})}
            for e in spec.events
        ],
        "noise_std": spec.noise_std,
        "rng_seed": spec.rng_seed,
    }
    if spec.channel_ids is not None:
        d["channel_ids"] = list(spec.channel_ids)
    if spec.trend is not None:
        d["trend"] = {
            "slope": list(spec.trend.slope) if spec.trend.slope is not None else None,
            "steps": [{"time_s": ts, "sizes": list(sz)} for ts, sz in spec.trend.steps],
        }
    return d


def kundur_like(noise_std: float = 0.0, rng_seed: int = 0) -> ScenarioSpec:
    """Four generators, four short-circuit-like events 20 s apart.

    Interarea mode at 0.5 Hz (generators 1-2 against 3-4), two local modes
    near 0.7 Hz and a well-damped governor-band mode near 0.3 Hz. Each event
    excites the modes in proportions that depend on which area it is closest
    to: the first two mostly area 1, the third area 2, the last both.
    """
    modes = (
        ModeSpec(0.50, -0.30, (-0.4, -0.4, 0.7, 0.7)),
        ModeSpec(0.68, -0.35, (0.9, -0.7, 0.05, -0.05)),
        ModeSpec(0.74, -0.40, (0.05, -0.05, 0.8, -0.9)),
        ModeSpec(0.30, -0.90, (0.5, 0.5 * np.exp(0.2j), 0.45 * np.exp(0.4j), 0.45 * np.exp(0.5j))),
    )
    events = (
        Event(1.0, (1.0, 0.3, 0.1, 0.6)),
        Event(21.0, (0.3, 1.0, 0.1, 0.6)),
        Event(41.0, (0.3, 0.1, 1.0, 0.6)),
        Event(61.0, (1.0, 0.5, 0.5, 0.6)),
    )
    return ScenarioSpec(
        modes=modes,
        duration_s=81.0,
        sample_rate_hz=50.0,
        events=events,
        noise_std=noise_std,
        rng_seed=rng_seed,
        channel_ids=("G1", "G2", "G3", "G4"),
    )
