"""Photon-pair correlation statistics and TCSPC histogram analysis.

Closed forms for the two-mode squeezed pair source (geometric photon-number
law p(n) = (1 - eta) eta^n), a seeded Monte Carlo event synthesizer, and the
histogram / window estimators applied to measured or synthetic streams.

Event-based estimators count every detection as its own event, so herald
photon number enters as a weight: that is what makes the pair-count ratios
match the normal-ordered moment formulas rather than click statistics.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.special import ndtri

from . import kernels
from .errors import ConfigError, DegenerateStatisticsError, DomainError
from .sequence import InputWaveform


@dataclass(frozen=True)
class WindowSpec:
    t_start: float
    t_end: float

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise DomainError(f"window end {self.t_end} must exceed start {self.t_start}")

    @property
    def width(self) -> float:
        return self.t_end - self.t_start

    def shifted(self, dt: float) -> "WindowSpec":
        return WindowSpec(self.t_start + dt, self.t_end + dt)


FIRST_PEAK = WindowSpec(0.0, 3.5e-6)
EIT_RELEASE_WINDOW = WindowSpec(3.3e-6, 7.0e-6)
QSLP_RELEASE_WINDOW = WindowSpec(4.3e-6, 8.0e-6)
DEFAULT_BIN_WIDTH = 20e-9
DEFAULT_REFERENCE_LAG = 8


def reference_window(first: WindowSpec, period: float, lag: int = DEFAULT_REFERENCE_LAG) -> WindowSpec:
    """The first-peak window moved ``lag`` repetitions later."""
    return first.shifted(lag * period)


@dataclass(frozen=True)
class PairSourceModel:
    eta: float = 1.0 / (11.12 - 1.0)
    herald_efficiency: float = 1.0
    signal_efficiency: float = 1.0
    noise_floor: float = 0.0  # counts per bin per herald, bin of noise_bin_width
    repetition_period: float = 12e-6
    waveform: InputWaveform = InputWaveform()
    noise_bin_width: float = DEFAULT_BIN_WIDTH
    jitter: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.eta < 1.0:
            raise ConfigError("source.eta: invariant violated (0 <= eta < 1)")
        for name in ("herald_efficiency", "signal_efficiency"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigError(f"source.{name}: invariant violated (0 <= x <= 1)")
        if self.noise_floor < 0:
            raise ConfigError("source.noise_floor: invariant violated (>= 0)")
        if self.repetition_period <= 0:
            raise ConfigError("source.repetition_period: invariant violated (> 0)")
        if self.noise_bin_width <= 0:
            raise ConfigError("source.noise_bin_width: invariant violated (> 0)")
        if self.jitter < 0:
            raise ConfigError("source.jitter: invariant violated (>= 0)")

    @property
    def noise_rate(self) -> float:
        """Background signal events per second."""
        return self.noise_floor / self.noise_bin_width


@dataclass
class Histogram:
    bin_width: float
    origin: float
    counts: np.ndarray
    normalization: int
    block_counts: Optional[np.ndarray] = field(default=None, repr=False)
    block_heralds: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=float)
        if self.bin_width <= 0:
            raise DomainError("bin_width must be > 0")
        if np.any(self.counts < 0):
            raise DomainError("histogram counts must be >= 0")

    @property
    def starts(self) -> np.ndarray:
        return self.origin + self.bin_width * np.arange(self.counts.size)

    @property
    def centers(self) -> np.ndarray:
        return self.starts + 0.5 * self.bin_width

    @property
    def span(self) -> float:
        return self.bin_width * self.counts.size

    @property
    def raw_counts(self) -> np.ndarray:
        return self.counts * self.normalization

    def mask(self, window: WindowSpec) -> np.ndarray:
        c = self.centers
        return (c >= window.t_start) & (c < window.t_end)

    def to_csv(self, path=None, metadata=None) -> str:
        buf = io.StringIO()
        for key, value in (metadata or {}).items():
            buf.write(f"# {key} = {value}\n")
        buf.write(f"# histogram.bin_width = {self.bin_width!r}\n")
        buf.write(f"# histogram.heralds = {self.normalization}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("bin_start_s", "normalized_count"))
        for s, c in zip(self.starts, self.counts):
            w.writerow((repr(float(s)), repr(float(c))))
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float

    def deviation(self, target: float) -> float:
        """Distance from ``target`` in units of the standard error."""
        if self.stderr == 0:
            return math.inf if self.value != target else 0.0
        return abs(self.value - target) / self.stderr


# --------------------------------------------------------------------------
# closed forms
# --------------------------------------------------------------------------


def g2_cross(eta: float) -> float:
    """Heralding cross-correlation 1 + 1/eta of the pair source."""
    if eta <= 0:
        raise DomainError(f"g2_cross needs eta > 0, got {eta}")
    return 1.0 + 1.0 / eta


def eta_from_g2(g2: float) -> float:
    if g2 <= 1:
        raise DomainError(f"eta undefined for g2 <= 1, got {g2}")
    return 1.0 / (g2 - 1.0)


def g2_conditional(eta: float) -> float:
    """Heralded autocorrelation 2 eta (eta + 2) / (eta + 1)^2."""
    if eta < 0:
        raise DomainError(f"g2_conditional needs eta >= 0, got {eta}")
    return 2.0 * eta * (eta + 2.0) / (eta + 1.0) ** 2


def noise_fraction_from_g2(g2_raw: float, g2_subtracted: float) -> float:
    """Constant-floor counts per window, relative to the uncorrelated peak.

    With a floor B added to both the correlated sum S and the reference R,
    raw = (S + B) / (R + B) and subtracted = S / R.
    """
    if not g2_subtracted >= g2_raw > 1:
        raise DomainError("need subtracted >= raw > 1")
    return (g2_subtracted - g2_raw) / (g2_raw - 1.0)


def raw_g2_with_floor(g2_true: float, transmission: float, noise_fraction: float) -> float:
    """Raw cross-correlation after a flat loss that leaves the floor unchanged."""
    return (g2_true * transmission + noise_fraction) / (transmission + noise_fraction)


def decay_time(efficiency: float, hold_duration: float) -> float:
    """Exponential energy decay time matching ``efficiency`` after ``hold_duration``."""
    if not 0.0 < efficiency < 1.0:
        raise DomainError(f"efficiency must lie in (0, 1), got {efficiency}")
    if hold_duration <= 0:
        raise DomainError("hold_duration must be > 0")
    return -hold_duration / math.log(efficiency)


# --------------------------------------------------------------------------
# histograms and windows
# --------------------------------------------------------------------------


def _nbins(span: float, bin_width: float) -> int:
    x = span / bin_width
    n = round(x)
    return int(n) if abs(x - n) < 1e-9 * max(1.0, x) else int(math.ceil(x))


def build_histogram(
    herald_times,
    signal_times,
    bin_width: float = DEFAULT_BIN_WIDTH,
    span: float = 100e-6,
    n_blocks: int = 1,
    backend=None,
) -> Histogram:
    """Herald-normalized histogram of signal - herald delays over [0, span).

    ``n_blocks > 1`` also keeps per-block counts (heralds split into
    contiguous groups) for jackknife errors.
    """
    h = np.sort(np.asarray(herald_times, dtype=float))
    s = np.sort(np.asarray(signal_times, dtype=float))
    if h.size == 0:
        raise DomainError("histogram needs at least one herald")
    if bin_width <= 0 or span <= 0:
        raise DomainError("bin_width and span must be > 0")
    n_blocks = max(1, min(int(n_blocks), h.size))
    nb = _nbins(span, bin_width)
    blocks = (np.arange(h.size) * n_blocks) // h.size
    per_block = kernels.pair_histogram(h, s, bin_width, nb, blocks, n_blocks, backend)
    raw = per_block.sum(axis=0)
    return Histogram(
        bin_width=bin_width,
        origin=0.0,
        counts=raw / h.size,
        normalization=int(h.size),
        block_counts=per_block if n_blocks > 1 else None,
        block_heralds=np.bincount(blocks, minlength=n_blocks) if n_blocks > 1 else None,
    )


def dc_offset(h: Histogram, plateaus: Sequence[WindowSpec]) -> float:
    """Mean normalized count over all bins inside the plateau windows."""
    m = np.zeros(h.counts.size, dtype=bool)
    for w in plateaus:
        m |= h.mask(w)
    if not m.any():
        raise DomainError("plateau windows cover no histogram bins")
    return float(h.counts[m].mean())


def default_plateaus(period: float, n_periods: int, first: WindowSpec = FIRST_PEAK) -> list:
    """Gaps between successive peaks, each peak occupying ``first`` shifted."""
    gap = WindowSpec(first.t_end, first.t_start + period)
    return [gap.shifted(k * period) for k in range(n_periods)]


def _check_same_width(a: WindowSpec, b: WindowSpec):
    if abs(a.width - b.width) > 1e-9 * max(a.width, b.width):
        raise DomainError("first and reference windows must have the same width")


def g2_from_histogram(
    h: Histogram, first_peak: WindowSpec, reference_peak: WindowSpec, offset: float = 0.0
) -> float:
    """Ratio of offset-subtracted window sums; ``offset = 0`` gives the raw value."""
    _check_same_width(first_peak, reference_peak)
    m1, m2 = h.mask(first_peak), h.mask(reference_peak)
    num = float(np.sum(h.counts[m1] - offset))
    den = float(np.sum(h.counts[m2] - offset))
    if den <= 0:
        raise DegenerateStatisticsError("reference window sum is not positive")
    return num / den


def jackknife(stat: Callable[..., float], *block_sums: np.ndarray) -> Estimate:
    """Delete-one-block jackknife of ``stat`` evaluated on summed block values."""
    arrays = [np.asarray(b, dtype=float) for b in block_sums]
    k = arrays[0].size
    totals = [a.sum() for a in arrays]
    value = stat(*totals)
    if k < 2:
        return Estimate(float(value), math.nan)
    loo = np.array([stat(*(t - a[i] for t, a in zip(totals, arrays))) for i in range(k)])
    se = math.sqrt((k - 1) / k * float(np.sum((loo - loo.mean()) ** 2)))
    return Estimate(float(value), se)


def g2_histogram_estimate(
    h: Histogram, first_peak: WindowSpec, reference_peak: WindowSpec, offset: float = 0.0
) -> Estimate:
    """g2_from_histogram with a jackknife error from the per-block counts."""
    if h.block_counts is None:
        raise DomainError("histogram carries no block counts; build it with n_blocks > 1")
    _check_same_width(first_peak, reference_peak)
    m1, m2 = h.mask(first_peak), h.mask(reference_peak)
    off1 = offset * m1.sum() * h.block_heralds
    off2 = offset * m2.sum() * h.block_heralds
    a = h.block_counts[:, m1].sum(axis=1) - off1
    b = h.block_counts[:, m2].sum(axis=1) - off2
    if b.sum() <= 0:
        raise DegenerateStatisticsError("reference window sum is not positive")
    return jackknife(lambda x, y: x / y, a, b)


def _samples(trace):
    """(t, y, is_histogram) for a Histogram, SimulationRecord, or (t, y) pair."""
    if isinstance(trace, Histogram):
        return trace.centers, trace.counts, True
    if hasattr(trace, "output_intensity"):
        return trace.t, trace.output_intensity, False
    t, y = trace
    return np.asarray(t, dtype=float), np.asarray(y, dtype=float), False


def window_sum(trace, window: WindowSpec, offset: float = 0.0) -> float:
    """Offset-subtracted bin sum (histogram) or time integral (sampled trace)."""
    t, y, is_hist = _samples(trace)
    if is_hist:
        m = (t >= window.t_start) & (t < window.t_end)
        return float(np.sum(y[m] - offset))
    m = (t >= window.t_start) & (t <= window.t_end)
    if m.sum() < 2:
        return 0.0
    return float(np.trapezoid(y[m] - offset, t[m]))


def window_efficiency(trace_a, win_a: WindowSpec, trace_b, win_b: WindowSpec, offset: float = 0.0) -> float:
    den = window_sum(trace_b, win_b, offset)
    if den == 0:
        raise DegenerateStatisticsError("denominator window holds no counts")
    return window_sum(trace_a, win_a, offset) / den


# --------------------------------------------------------------------------
# Monte Carlo events
# --------------------------------------------------------------------------

MC_CHUNK = 100_000


def _chunk_events(model: PairSourceModel, first_rep: int, n_reps: int, rng: np.random.Generator):
    period = model.repetition_period
    n_pairs = rng.geometric(1.0 - model.eta, size=n_reps) - 1
    rep = np.repeat(np.arange(first_rep, first_rep + n_reps), n_pairs)
    herald_ok = rng.random(rep.size) < model.herald_efficiency
    signal_ok = rng.random(rep.size) < model.signal_efficiency
    u = rng.random(rep.size)
    w = model.waveform
    delay = w.center + w.sigma * ndtri(u)
    if model.jitter > 0:
        delay = delay + model.jitter * rng.standard_normal(rep.size)
    heralds = rep[herald_ok] * period
    signals = rep[signal_ok] * period + delay[signal_ok]
    n_noise = rng.poisson(model.noise_rate * n_reps * period)
    noise = first_rep * period + rng.random(n_noise) * (n_reps * period)
    return heralds, np.concatenate([signals, noise])


def monte_carlo_events(model: PairSourceModel, n_repetitions: int, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Sorted herald and signal timestamps for ``n_repetitions`` source runs.

    Repetitions are generated in fixed chunks, each with its own child seed
    of ``seed``, so the stream does not depend on how chunks are scheduled.
    """
    if n_repetitions < 1:
        raise DomainError("n_repetitions must be >= 1")
    n_chunks = -(-n_repetitions // MC_CHUNK)
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    hs, ss = [], []
    for c, child in enumerate(children):
        first = c * MC_CHUNK
        n = min(MC_CHUNK, n_repetitions - first)
        h, s = _chunk_events(model, first, n, np.random.Generator(np.random.PCG64(child)))
        hs.append(h)
        ss.append(s)
    return np.sort(np.concatenate(hs)), np.sort(np.concatenate(ss))


def _conditional_block_counts(herald_times, signal_times, splitter_seed, coincidence_window, n_blocks):
    h = np.sort(np.asarray(herald_times, dtype=float))
    s = np.sort(np.asarray(signal_times, dtype=float))
    if h.size == 0 or s.size == 0:
        raise DomainError("conditional g2 needs non-empty herald and signal streams")
    arm1 = np.random.Generator(np.random.PCG64(splitter_seed)).random(s.size) < 0.5
    s1, s2 = s[arm1], s[~arm1]
    c1 = np.searchsorted(s1, h + coincidence_window, "left") - np.searchsorted(s1, h, "left")
    c2 = np.searchsorted(s2, h + coincidence_window, "left") - np.searchsorted(s2, h, "left")
    n_blocks = max(1, min(int(n_blocks), h.size))
    blocks = (np.arange(h.size) * n_blocks) // h.size
    def per_block(x):
        return np.bincount(blocks, weights=x, minlength=n_blocks)
    return (
        per_block(np.ones(h.size)),
        per_block(c1.astype(float)),
        per_block(c2.astype(float)),
        per_block((c1 * c2).astype(float)),
    )


def _conditional_ratio(nh, n1, n2, n12):
    if n1 <= 0 or n2 <= 0:
        raise DegenerateStatisticsError("no heralded singles in one beam-splitter arm")
    return nh * n12 / (n1 * n2)


def g2_conditional_from_events(
    herald_times, signal_times, splitter_seed: int, coincidence_window: float
) -> float:
    """Heralded beam-splitter autocorrelation N_h N_h12 / (N_h1 N_h2).

    Each signal event goes to arm 1 or 2 with probability 1/2; counts are
    taken in [herald, herald + coincidence_window).
    """
    sums = _conditional_block_counts(herald_times, signal_times, splitter_seed, coincidence_window, 1)
    return _conditional_ratio(*(float(x.sum()) for x in sums))


def g2_conditional_estimate(
    herald_times, signal_times, splitter_seed: int, coincidence_window: float, n_blocks: int = 50
) -> Estimate:
    sums = _conditional_block_counts(herald_times, signal_times, splitter_seed, coincidence_window, n_blocks)
    return jackknife(_conditional_ratio, *sums)


# --------------------------------------------------------------------------
# event stream files
# --------------------------------------------------------------------------


def events_to_csv(herald_times, signal_times, path=None, metadata=None) -> str:
    buf = io.StringIO()
    for key, value in (metadata or {}).items():
        buf.write(f"# {key} = {value}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("channel", "time_s"))
    for name, arr in (("herald", herald_times), ("signal", signal_times)):
        for x in arr:
            w.writerow((name, repr(float(x))))
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def events_from_csv(source) -> Tuple[np.ndarray, np.ndarray]:
    text = source if isinstance(source, str) and "\n" in source else Path(source).read_text(encoding="utf-8")
    heralds, signals = [], []
    for line in text.splitlines():
        if not line or line.startswith("#") or line.startswith("channel"):
            continue
        name, _, value = line.partition(",")
        if name == "herald":
            heralds.append(float(value))
        elif name == "signal":
            signals.append(float(value))
        else:
            raise ConfigError(f"unknown event channel {name!r}")
    return np.sort(np.array(heralds)), np.sort(np.array(signals))


def calibrated_noise_floor(
    g2_raw: float,
    g2_subtracted: float,
    eta: float,
    window: WindowSpec = FIRST_PEAK,
    bin_width: float = DEFAULT_BIN_WIDTH,
    signal_efficiency: float = 1.0,
) -> float:
    """Per-bin, per-herald floor reproducing the raw/subtracted g2 pair.

    The uncorrelated reference window holds eta / (1 - eta) signal photons per
    herald (times the detection efficiency); the floor adds a fixed fraction of
    that, spread evenly over the window's bins.
    """
    frac = noise_fraction_from_g2(g2_raw, g2_subtracted)
    reference = signal_efficiency * eta / (1.0 - eta)
    return frac * reference * bin_width / window.width
