"""Drive-laser timing sequences and the input single-photon waveform.

Times are in seconds. ``t = 0`` is the start of the waveform's entry window;
scenario schedules are placed relative to the storage instant, the moment a
chosen fraction of the input energy has entered the medium.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Tuple

import numpy as np
from scipy.special import ndtr, ndtri

from .errors import ConfigError

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

SCENARIOS = ("slow_light", "eit_memory", "eit_plus_qslp")
CHANNELS = ("FWC", "BWC")


@dataclass(frozen=True)
class TimingSequence:
    channel: str
    intervals: Tuple[Tuple[float, float], ...] = ()
    ramp_time: float = 50e-9
    period: float = 12e-6

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ConfigError(f"unknown channel {self.channel!r}")
        if self.period <= 0:
            raise ConfigError("sequence.period: invariant violated (> 0)")
        if self.ramp_time < 0:
            raise ConfigError("sequence.ramp_time: invariant violated (>= 0)")
        ivs = tuple((float(a), float(b)) for a, b in self.intervals)
        object.__setattr__(self, "intervals", ivs)
        prev_end = -math.inf
        for a, b in ivs:
            if not (0.0 <= a < b <= self.period):
                raise ConfigError(
                    f"{self.channel} interval ({a}, {b}) not inside [0, period)"
                )
            if a < prev_end:
                raise ConfigError(f"{self.channel} intervals overlap or are unsorted")
            if self.ramp_time >= 0.5 * (b - a):
                raise ConfigError(
                    "sequence.ramp_time: invariant violated "
                    "(must be < half the shortest interval)"
                )
            prev_end = b

    @property
    def span(self) -> float:
        """Latest switching edge inside the period (0 if none)."""
        edges = [e for iv in self.intervals for e in iv if 0.0 < e < self.period]
        return max(edges, default=0.0)


@dataclass(frozen=True)
class SequenceParams:
    storage_threshold: float = 0.99
    memory_time: float = 2e-6
    hold_time: float = 1e-6
    ramp_time: float = 50e-9
    period: float = 12e-6

    def __post_init__(self):
        if not 0.0 < self.storage_threshold < 1.0:
            raise ConfigError("sequence.storage_threshold: invariant violated (0 < x < 1)")
        for name in ("memory_time", "hold_time", "period"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"sequence.{name}: invariant violated (> 0)")
        if self.ramp_time < 0:
            raise ConfigError("sequence.ramp_time: invariant violated (>= 0)")


@dataclass(frozen=True)
class InputWaveform:
    center: float = 1.25e-6
    fwhm: float = 0.57e-6
    energy: float = 1.0
    shape: str = "gaussian"

    def __post_init__(self):
        if self.fwhm <= 0:
            raise ConfigError("input.fwhm: invariant violated (> 0)")
        if self.energy < 0:
            raise ConfigError("input.energy: invariant violated (>= 0)")
        if self.shape != "gaussian":
            raise ConfigError(f"input.shape: unsupported shape {self.shape!r}")

    @property
    def sigma(self) -> float:
        """Standard deviation of the intensity profile."""
        return self.fwhm * FWHM_TO_SIGMA


def _rise(x, ramp):
    if ramp == 0.0:
        return (x >= 0.0).astype(float)
    u = np.clip(x / ramp + 0.5, 0.0, 1.0)
    return 0.5 - 0.5 * np.cos(np.pi * u)


def envelope(seq: TimingSequence, t):
    """Drive envelope in [0, 1]: raised-cosine edges centred on each switch time."""
    t = np.asarray(t, dtype=float)
    tm = np.mod(t, seq.period)
    total = np.zeros_like(tm)
    for a, b in seq.intervals:
        # neighbouring periods so an interval touching 0 joins one ending at period
        for shift in (-seq.period, 0.0, seq.period):
            x = tm + shift
            total += _rise(x - a, seq.ramp_time) * _rise(b - x, seq.ramp_time)
    out = np.clip(total, 0.0, 1.0)
    return out if out.ndim else float(out)


def waveform(w: InputWaveform, t):
    """Real Gaussian amplitude whose squared modulus integrates to ``w.energy``."""
    t = np.asarray(t, dtype=float)
    s = w.sigma
    amp = math.sqrt(w.energy) * (2.0 * math.pi * s * s) ** -0.25
    out = (amp * np.exp(-((t - w.center) ** 2) / (4.0 * s * s))).astype(complex)
    return out if out.ndim else complex(out)


def entered_fraction(w: InputWaveform, t):
    """Fraction of the input energy that has crossed z = 0 by time ``t``."""
    return ndtr((np.asarray(t, dtype=float) - w.center) / w.sigma)


def storage_instant(w: InputWaveform, threshold: float = 0.99) -> float:
    """Time at which ``threshold`` of the input energy has entered the medium."""
    if not 0.0 < threshold < 1.0:
        raise ConfigError("storage threshold must lie in (0, 1)")
    return float(w.center + w.sigma * ndtri(threshold))


def standard_sequence(
    scenario: str, storage_time: float, params: SequenceParams = SequenceParams()
) -> Dict[str, TimingSequence]:
    """Schedules for the named scenario.

    eit_memory switches FWC off at ``storage_time`` for ``memory_time``;
    eit_plus_qslp adds a BWC interval of ``hold_time`` starting when FWC
    comes back on.
    """
    p = params
    kw = dict(ramp_time=p.ramp_time, period=p.period)
    if scenario == "slow_light":
        return {
            "FWC": TimingSequence("FWC", ((0.0, p.period),), **kw),
            "BWC": TimingSequence("BWC", (), **kw),
        }
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}"
        )
    release = storage_time + p.memory_time
    if not (0.0 < storage_time and release < p.period):
        raise ConfigError("storage window does not fit inside the period")
    fwc = TimingSequence("FWC", ((0.0, storage_time), (release, p.period)), **kw)
    if scenario == "eit_memory":
        return {"FWC": fwc, "BWC": TimingSequence("BWC", (), **kw)}
    if release + p.hold_time >= p.period:
        raise ConfigError("QSLP hold does not fit inside the period")
    bwc = TimingSequence("BWC", ((release, release + p.hold_time),), **kw)
    return {"FWC": fwc, "BWC": bwc}


@dataclass(frozen=True)
class ScenarioTiming:
    """Switch times of a scenario; ``release`` is None for slow light."""

    scenario: str
    storage: float | None = None
    release: float | None = None
    hold_end: float | None = None


def scenario_timing(
    scenario: str, w: InputWaveform, params: SequenceParams = SequenceParams()
) -> ScenarioTiming:
    if scenario == "slow_light":
        return ScenarioTiming(scenario)
    ts = storage_instant(w, params.storage_threshold)
    tr = ts + params.memory_time
    hold_end = tr + params.hold_time if scenario == "eit_plus_qslp" else None
    return ScenarioTiming(scenario, ts, tr, hold_end)
