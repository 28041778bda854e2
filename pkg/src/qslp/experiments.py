"""Named reproductions, parameter sweeps and trace comparisons.

Each reproduction runs the solver (and for the statistics scenario the pair
source model) with the resolved configuration and returns a report whose
metrics all carry a unit and the windows they were computed over.
"""

from __future__ import annotations

import concurrent.futures
import itertools
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import statistics as st
from .config import SWEEP_AXES, ResolvedConfig, apply_point
from .errors import ConfigError, DegenerateStatisticsError, DomainError, NumericalError
from .solver import SimulationRecord, peak_time, run

SCENARIOS = ("fig3a_eit_memory", "fig3b_eit_qslp", "fig4_statistics")
SHORT_NAMES = {"fig3a": "fig3a_eit_memory", "fig3b": "fig3b_eit_qslp", "fig4": "fig4_statistics"}

# both measured release windows are 3.7 us long
RELEASE_WINDOW = 3.7e-6
# hold-decay fit skips the switch-on transient and the switch-off ramp
HOLD_FIT_SKIP = 0.2e-6
HOLD_FIT_TAIL = 0.1e-6

MEASURED_G2_RAW = 11.12
MEASURED_G2_SUBTRACTED = 11.67

FLAT_LOSS_NOTE = (
    "post-memory statistics use a flat transmission equal to the simulated retrieval "
    "efficiency; frequency-dependent loss is folded into that single number"
)


@dataclass(frozen=True)
class Metric:
    value: float
    unit: str
    windows: Tuple[Tuple[str, object], ...] = ()

    def describe(self) -> str:
        parts = []
        for name, w in self.windows:
            if isinstance(w, st.WindowSpec):
                parts.append(f"{name}=[{w.t_start!r}, {w.t_end!r}]")
            else:
                parts.append(f"{name}={w}")
        win = "; ".join(parts) if parts else "none"
        return f"{float(self.value)!r} ; unit={self.unit} ; windows={win}"


@dataclass
class ScenarioReport:
    scenario: str
    config: Dict[str, object]
    metrics: Dict[str, Metric] = field(default_factory=dict)
    artifacts: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    def value(self, name: str) -> float:
        return float(self.metrics[name].value)

    def to_text(self) -> str:
        lines = [f"# scenario = {self.scenario}"]
        lines += [f"# {k} = {v}" for k, v in self.config.items()]
        lines.append("[metrics]")
        lines += [f"{k} = {m.describe()}" for k, m in self.metrics.items()]
        lines.append("[notes]")
        lines += self.notes
        lines.append("[artifacts]")
        # bare names so the report does not depend on where it was written
        lines += [Path(a).name for a in self.artifacts]
        return "\n".join(lines) + "\n"


def canonical_scenario(name: str) -> str:
    name = SHORT_NAMES.get(name, name)
    if name not in SCENARIOS:
        raise ConfigError(f"unknown reproduction {name!r}; expected one of {', '.join(SHORT_NAMES)}")
    return name


# --------------------------------------------------------------------------
# trace metrics
# --------------------------------------------------------------------------


def _after(rec: SimulationRecord, t0: Optional[float]):
    t, y = rec.t, rec.output_intensity
    if t0 is None:
        return t, y
    m = t >= t0
    return t[m], y[m]


def compare_traces(
    a: SimulationRecord,
    b: SimulationRecord,
    window_a: Optional[st.WindowSpec] = None,
    window_b: Optional[st.WindowSpec] = None,
    after_a: Optional[float] = None,
    after_b: Optional[float] = None,
) -> Tuple[float, float]:
    """(peak delay of b relative to a, windowed output-energy ratio b / a).

    Peaks are searched from ``after_a`` / ``after_b`` onward; windows default
    to the whole record.
    """
    if a.t.size != b.t.size or not np.allclose(a.t, b.t, rtol=0, atol=1e-15):
        raise DomainError("traces are recorded on different time grids")
    delay = peak_time(*_after(b, after_b)) - peak_time(*_after(a, after_a))
    wa = window_a or st.WindowSpec(float(a.t[0]), float(a.t[-1]))
    wb = window_b or st.WindowSpec(float(b.t[0]), float(b.t[-1]))
    den = a.output_energy(wa.t_start, wa.t_end)
    if den == 0:
        raise DegenerateStatisticsError("reference trace carries no energy in its window")
    return delay, b.output_energy(wb.t_start, wb.t_end) / den


def hold_decay_time(rec: SimulationRecord) -> Tuple[float, st.WindowSpec]:
    """Exponential decay time of the stored (photonic + spin) energy during the hold."""
    tr, te = rec.metadata.get("timing.release"), rec.metadata.get("timing.hold_end")
    if tr is None or te is None:
        raise DomainError("record has no hold interval")
    win = st.WindowSpec(float(tr) + HOLD_FIT_SKIP, float(te) - HOLD_FIT_TAIL)
    m = (rec.t >= win.t_start) & (rec.t <= win.t_end)
    stored = rec.photonic_energy[m] + rec.spin_energy[m]
    if m.sum() < 3 or np.any(stored <= 0):
        raise DegenerateStatisticsError("not enough stored energy to fit a decay")
    slope = np.polyfit(rec.t[m], np.log(stored), 1)[0]
    if slope >= 0:
        raise DegenerateStatisticsError("stored energy does not decay during the hold")
    return -1.0 / slope, win


def _release_window(rec: SimulationRecord) -> st.WindowSpec:
    start = rec.metadata.get("timing.hold_end") or rec.metadata["timing.release"]
    return st.WindowSpec(float(start), float(start) + RELEASE_WINDOW)


# --------------------------------------------------------------------------
# reproductions
# --------------------------------------------------------------------------


def _runs(cfg: ResolvedConfig, names: Sequence[str]) -> Dict[str, SimulationRecord]:
    return {n: run(cfg.solver, n, backend=cfg.run.backend) for n in names}


def _memory_metrics(rep: ScenarioReport, rec: SimulationRecord, energy_in: float, prefix: str = ""):
    win = _release_window(rec)
    released = rec.output_energy(win.t_start, win.t_end)
    rep.metrics[prefix + "efficiency"] = Metric(released / energy_in, "1", (("release", win),))
    rep.metrics[prefix + "released_energy"] = Metric(released, "input-energy units", (("release", win),))
    tr = float(rec.metadata["timing.release"])
    rep.metrics[prefix + "release_peak_time"] = Metric(
        peak_time(*_after(rec, tr)), "s", (("search", f"t >= {tr!r}"),)
    )


def _fig3a(cfg: ResolvedConfig) -> Tuple[ScenarioReport, Dict[str, SimulationRecord]]:
    recs = _runs(cfg, ("slow_light", "eit_memory"))
    rep = ScenarioReport("fig3a_eit_memory", cfg.echo())
    e_in = cfg.solver.input.energy
    _memory_metrics(rep, recs["eit_memory"], e_in)
    full = st.WindowSpec(float(recs["slow_light"].t[0]), float(recs["slow_light"].t[-1]))
    slow = recs["slow_light"].output_energy()
    rep.metrics["slow_light_transmission"] = Metric(slow / e_in, "1", (("whole record", full),))
    rep.metrics["efficiency_vs_slow_light"] = Metric(
        rep.value("released_energy") / slow, "1",
        rep.metrics["efficiency"].windows + (("slow light", full),),
    )
    rep.metrics["slow_light_peak_delay"] = Metric(
        peak_time(recs["slow_light"].t, recs["slow_light"].output_intensity) - cfg.solver.input.center,
        "s", (("whole record", full),),
    )
    rep.notes.append("efficiency is released energy over input energy")
    return rep, recs


def _fig3b(cfg: ResolvedConfig) -> Tuple[ScenarioReport, Dict[str, SimulationRecord]]:
    recs = _runs(cfg, ("eit_memory", "eit_plus_qslp"))
    a, b = recs["eit_memory"], recs["eit_plus_qslp"]
    rep = ScenarioReport("fig3b_eit_qslp", cfg.echo())
    e_in = cfg.solver.input.energy
    _memory_metrics(rep, b, e_in)
    wa, wb = _release_window(a), _release_window(b)
    tr = float(a.metadata["timing.release"])
    delay, ratio = compare_traces(a, b, wa, wb, after_a=tr, after_b=tr)
    both = (("eit_memory release", wa), ("qslp release", wb))
    rep.metrics["relative_release"] = Metric(ratio, "1", both)
    rep.metrics["peak_delay"] = Metric(delay, "s", (("search", f"t >= {tr!r}"),))
    hold = st.WindowSpec(tr, float(b.metadata["timing.hold_end"]))
    mh = (b.t >= hold.t_start) & (b.t <= hold.t_end)
    ref_peak = float(np.max(a.output_intensity[a.t >= tr]))
    rep.metrics["suppression_ratio"] = Metric(
        float(np.max(b.output_intensity[mh])) / ref_peak, "1 (intensity)",
        (("hold", hold), ("eit_memory peak search", f"t >= {tr!r}")),
    )
    tau, fit = hold_decay_time(b)
    rep.metrics["hold_decay_time"] = Metric(tau, "s", (("fit", fit),))
    hold_len = cfg.solver.schedule.hold_time
    rep.metrics["decay_time_from_release"] = Metric(
        st.decay_time(ratio, hold_len) if 0 < ratio < 1 else math.nan, "s", both
    )
    rep.metrics["backward_leakage"] = Metric(
        b.backward_energy(hold.t_start, hold.t_end) / e_in, "1", (("hold", hold),)
    )
    rep.notes.append("suppression_ratio compares output intensities, i.e. counts per bin")
    return rep, recs


def _fig4(cfg: ResolvedConfig, seed: int) -> Tuple[ScenarioReport, Dict[str, SimulationRecord], Dict[str, st.Histogram]]:
    recs = _runs(cfg, ("eit_memory", "eit_plus_qslp"))
    rep = ScenarioReport("fig4_statistics", cfg.echo())
    src, an = cfg.source, cfg.analysis
    eta = src.eta
    e_in = cfg.solver.input.energy
    t_eit = recs["eit_memory"].output_energy(*_as_pair(_release_window(recs["eit_memory"]))) / e_in
    t_qslp = recs["eit_plus_qslp"].output_energy(*_as_pair(_release_window(recs["eit_plus_qslp"]))) / e_in
    frac = st.noise_fraction_from_g2(MEASURED_G2_RAW, MEASURED_G2_SUBTRACTED)
    g2s = st.g2_cross(eta) if eta > 0 else math.inf
    first = st.FIRST_PEAK
    ref = st.reference_window(first, src.repetition_period, an.reference_lag)
    rep.metrics["eta"] = Metric(eta, "1")
    rep.metrics["g2_cross_source"] = Metric(g2s, "1", (("first", first), ("reference", ref)))
    rep.metrics["g2_conditional_source"] = Metric(st.g2_conditional(eta), "1")
    rep.metrics["noise_fraction"] = Metric(frac, "floor / reference window counts")
    rep.metrics["transmission_eit"] = Metric(t_eit, "1", (("release", _release_window(recs["eit_memory"])),))
    rep.metrics["transmission_qslp"] = Metric(t_qslp, "1", (("release", _release_window(recs["eit_plus_qslp"])),))
    rep.metrics["g2_cross_raw_after_eit"] = Metric(st.raw_g2_with_floor(g2s, t_eit, frac), "1")
    rep.metrics["g2_cross_raw_after_qslp"] = Metric(st.raw_g2_with_floor(g2s, t_qslp, frac), "1")
    # flat loss thins both beam-splitter arms alike and leaves g_c unchanged
    rep.metrics["g2_conditional_after_memory"] = Metric(st.g2_conditional(eta), "1")
    rep.notes.append(FLAT_LOSS_NOTE)

    hists: Dict[str, st.Histogram] = {}
    plateaus = st.default_plateaus(src.repetition_period, int(an.span // src.repetition_period), first)
    clean = replace(src, noise_floor=0.0)
    floor = st.calibrated_noise_floor(
        MEASURED_G2_RAW, MEASURED_G2_SUBTRACTED, eta, first, src.noise_bin_width, src.signal_efficiency
    )
    noisy = replace(src, noise_floor=src.noise_floor or floor)
    seeds = np.random.SeedSequence(seed).spawn(3)
    for label, model, ss in (("clean", clean, seeds[0]), ("noisy", noisy, seeds[1])):
        h_t, s_t = st.monte_carlo_events(model, an.repetitions, int(ss.generate_state(1)[0]))
        hist = st.build_histogram(h_t, s_t, an.bin_width, an.span, an.n_blocks, cfg.run.backend)
        hists[label] = hist
        wins = (("first", first), ("reference", ref))
        raw = st.g2_histogram_estimate(hist, first, ref)
        rep.metrics[f"mc_{label}_g2_cross"] = Metric(raw.value, "1", wins)
        rep.metrics[f"mc_{label}_g2_cross_stderr"] = Metric(raw.stderr, "1", wins)
        if label == "noisy":
            off = st.dc_offset(hist, plateaus)
            sub = st.g2_histogram_estimate(hist, first, ref, off)
            pw = tuple((f"plateau{k}", p) for k, p in enumerate(plateaus))
            rep.metrics["mc_noisy_dc_offset"] = Metric(off, "counts per bin per herald", pw)
            rep.metrics["mc_noisy_g2_cross_subtracted"] = Metric(sub.value, "1", wins + pw)
            rep.metrics["mc_noisy_g2_cross_subtracted_stderr"] = Metric(sub.stderr, "1", wins + pw)
            continue
        split = int(seeds[2].generate_state(1)[0])
        gc = st.g2_conditional_estimate(h_t, s_t, split, an.coincidence_window, an.n_blocks)
        cw = (("coincidence", st.WindowSpec(0.0, an.coincidence_window)),)
        rep.metrics["mc_g2_conditional"] = Metric(gc.value, "1", cw)
        rep.metrics["mc_g2_conditional_stderr"] = Metric(gc.stderr, "1", cw)
    rep.metrics["mc_noise_floor"] = Metric(noisy.noise_floor, "counts per bin per herald")
    return rep, recs, hists


def _as_pair(w: st.WindowSpec) -> Tuple[float, float]:
    return w.t_start, w.t_end


def reproduce(
    scenario: str,
    cfg: Optional[ResolvedConfig] = None,
    out_dir=None,
    seed: Optional[int] = None,
) -> ScenarioReport:
    """Run a named reproduction; with ``out_dir`` set, write traces and the report."""
    scenario = canonical_scenario(scenario)
    cfg = cfg or ResolvedConfig()
    seed = cfg.run.seed if seed is None else seed
    hists: Dict[str, st.Histogram] = {}
    if scenario == "fig3a_eit_memory":
        rep, recs = _fig3a(cfg)
    elif scenario == "fig3b_eit_qslp":
        rep, recs = _fig3b(cfg)
    else:
        rep, recs, hists = _fig4(cfg, seed)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        header = {"report.scenario": scenario, "run.seed": seed, **cfg.echo()}
        for name, rec in recs.items():
            for k, v in header.items():
                rec.metadata.setdefault(k, v)
            p = out / f"{scenario}_{name}_trace.csv"
            rec.to_csv(p)
            rep.artifacts.append(str(p))
        for name, h in hists.items():
            p = out / f"{scenario}_{name}_histogram.csv"
            h.to_csv(p, header)
            rep.artifacts.append(str(p))
        p = out / f"{scenario}_report.txt"
        rep.artifacts.append(str(p))
        p.write_text(rep.to_text(), encoding="utf-8")
    return rep


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------

_RECOVERABLE = (ConfigError, DomainError, DegenerateStatisticsError, NumericalError, FloatingPointError)


@dataclass
class SweepTable:
    axes: Tuple[str, ...]
    metric_names: Tuple[str, ...]
    rows: List[Tuple[Tuple[float, ...], str, Tuple[float, ...]]]
    scenario: str

    def column(self, name: str) -> np.ndarray:
        if name in self.axes:
            i = self.axes.index(name)
            return np.array([r[0][i] for r in self.rows])
        i = self.metric_names.index(name)
        return np.array([r[2][i] for r in self.rows])

    @property
    def status(self) -> List[str]:
        return [r[1] for r in self.rows]

    def to_csv(self, path=None, metadata: Optional[Mapping[str, object]] = None) -> str:
        lines = [f"# {k} = {v}" for k, v in (metadata or {}).items()]
        lines.append(f"# sweep.scenario = {self.scenario}")
        lines.append(",".join(self.axes + ("status",) + self.metric_names))
        for point, status, vals in self.rows:
            cells = [repr(float(x)) for x in point] + [status.replace(",", ";")]
            cells += [repr(float(v)) for v in vals]
            lines.append(",".join(cells))
        text = "\n".join(lines) + "\n"
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text


def _grid(grid: Mapping[str, Sequence[float]]) -> Tuple[Tuple[str, ...], List[Tuple[float, ...]]]:
    axes = tuple(grid)
    for a in axes:
        if a not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {a!r}; expected one of {', '.join(SWEEP_AXES)}")
        if len(grid[a]) == 0:
            raise ConfigError(f"sweep axis {a!r} has no values")
    return axes, list(itertools.product(*(tuple(float(v) for v in grid[a]) for a in axes)))


def _sweep_point(args):
    cfg, scenario, axes, point, seed = args
    try:
        pcfg = apply_point(cfg, dict(zip(axes, point)))
        rep = reproduce(scenario, pcfg, seed=seed)
        return "ok", {k: float(m.value) for k, m in rep.metrics.items()}
    except _RECOVERABLE as exc:
        return f"failed: {type(exc).__name__}: {exc}", {}


def sweep(
    cfg: ResolvedConfig,
    scenario: str,
    grid: Optional[Mapping[str, Sequence[float]]] = None,
    workers: Optional[int] = None,
    seed: Optional[int] = None,
) -> SweepTable:
    """One row per grid point, in row-major grid order; failures are kept as rows."""
    scenario = canonical_scenario(scenario)
    axes, points = _grid(dict(cfg.sweep) if grid is None else grid)
    seed = cfg.run.seed if seed is None else seed
    jobs = [(cfg, scenario, axes, p, seed) for p in points]
    workers = cfg.run.workers if workers is None else workers
    if workers > 1 and len(jobs) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    names: List[str] = []
    for status, metrics in results:
        for k in metrics:
            if k not in names:
                names.append(k)
    rows = [
        (p, status, tuple(metrics.get(k, math.nan) for k in names))
        for p, (status, metrics) in zip(points, results)
    ]
    return SweepTable(axes, tuple(names), rows, scenario)
