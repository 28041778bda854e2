"""Acceptance criteria, one test per criterion.

Each test appends a ``PASS``/``FAIL`` line (value, target, runtime) to
``RESULTS``; the conftest hook prints them after the run. Running this file
directly prints the same lines without pytest.
"""

import math
import time
from dataclasses import replace

import numpy as np
import pytest

from qslp import cli
from qslp import statistics as st
from qslp.experiments import reproduce
from qslp.medium import DriveAmplitudes, group_velocity, mixing_angles, slow_light_delay
from qslp.sequence import standard_sequence
from qslp.solver import SolverConfig, SystemState, convergence_check, peak_time, run, step

RESULTS = []


def report(tag, ok, text, elapsed=None):
    t = "" if elapsed is None else f" [{elapsed:.1f} s]"
    RESULTS.append(f"{'PASS' if ok else 'FAIL'}  {tag}: {text}{t}")
    return ok


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


_cache = {}


def cached_reproduce(name):
    if name not in _cache:
        with Timer() as tm:
            rep = reproduce(name)
        _cache[name] = (rep, tm.elapsed)
    return _cache[name]


def test_c1_zero_group_velocity_at_balanced_drives():
    omega = 2 * math.pi * 6e6
    drives = DriveAmplitudes(omega, omega, coupling_strength=1e4 * omega**2)
    ok = True
    worst = 0.0
    for convention in ("linear", "squared"):
        c0 = 299792458.0
        v = group_velocity(mixing_angles(drives, convention), c0)
        worst = max(worst, abs(v) / c0)
        ok &= abs(v) < 1e-10 * c0
    assert report("C1 v_g at Omega_FWC = Omega_BWC", ok, f"|v_g|/c0 = {worst:.2e} (target < 1e-10)")


def test_c2_eit_limit_solver_oracle():
    cfg = SolverConfig()
    with Timer() as tm:
        rec = run(cfg, "slow_light")
        # stepwise state check of the backward sector over the whole input pulse
        seq_cfg = replace(cfg, sequences=standard_sequence("slow_light", 0.0), t_max=3e-6)
        s = SystemState.zeros(cfg.nz)
        fwd = bwd = 0.0
        for _ in range(3000):
            s = step(s, seq_cfg)
            fwd = max(fwd, np.abs(s.E_plus).max(), np.abs(s.rho_eg_plus).max() * cfg.medium.gamma)
            bwd = max(
                bwd,
                np.abs(s.E_minus).max(),
                cfg.medium.gamma * max(np.abs(getattr(s, f)).max() for f in ("rho_eg_minus", "rho_sg_pm", "rho_sg_mp")),
            )
    delay = peak_time(rec.t, rec.output_intensity) - cfg.input.center
    analytic = slow_light_delay(cfg.medium, cfg.drives.omega_fwc)
    rel = abs(delay - analytic) / analytic
    rec_bwd = max(np.abs(rec.e_minus_out).max(), rec.higher_coherence_energy.max())
    ratio = max(bwd / fwd, rec_bwd / np.abs(rec.e_plus_out).max())
    ok = rel < 0.10 and ratio < 1e-12
    assert report(
        "C2 EIT-limit delay oracle",
        ok,
        f"delay {delay * 1e6:.4f} us vs OD*Gamma/Omega^2 = {analytic * 1e6:.4f} us "
        f"(rel {rel:.3f}, target < 0.10); backward sector / peak = {ratio:.1e} (target < 1e-12)",
        tm.elapsed,
    )


def test_c3_fig3a_retrieval_efficiency():
    rep, elapsed = cached_reproduce("fig3a")
    eff = rep.value("efficiency")
    ok = abs(eff - 0.191) <= 0.04 and elapsed < 60
    report(
        "C3 fig3a retrieval efficiency (released / input)",
        ok,
        f"{eff:.4f} (target 0.191 +- 0.04); relative to slow-light transmission "
        f"{rep.value('efficiency_vs_slow_light'):.3f} [diagnostic only]",
        elapsed,
    )
    assert ok


def test_c4i_fig3b_relative_release():
    rep, elapsed = cached_reproduce("fig3b")
    r = rep.value("relative_release")
    ok = abs(r - 0.478) <= 0.05 and elapsed < 60
    report("C4(i) fig3b release relative to fig3a", ok, f"{r:.4f} (target 0.478 +- 0.05)", elapsed)
    assert ok


def test_c4ii_fig3b_peak_delay():
    rep, elapsed = cached_reproduce("fig3b")
    d = rep.value("peak_delay")
    ok = abs(d - 1.0e-6) <= 0.1e-6
    report("C4(ii) fig3b peak delay vs fig3a", ok, f"{d * 1e6:.4f} us (target 1.0 +- 0.1 us)", elapsed)
    assert ok


def test_c4iii_fig3b_hold_suppression():
    rep, elapsed = cached_reproduce("fig3b")
    s = rep.value("suppression_ratio")
    ok = s < 0.05
    report(
        "C4(iii) output during hold / fig3a release peak",
        ok,
        f"{s:.4f} in intensity, {math.sqrt(s):.4f} in amplitude (target < 0.05, counts)",
        elapsed,
    )
    assert ok


def test_c5i_decay_time_closed_form():
    tau = st.decay_time(0.478, 1e-6)
    ok = abs(tau - 1.354e-6) < 1e-9 and abs(tau - 1.35e-6) <= 0.01e-6
    assert report("C5(i) decay_time(0.478, 1 us)", ok, f"{tau * 1e6:.4f} us (target 1.354, within 0.01 of 1.35)")


def test_c5ii_solver_hold_decay():
    rep, elapsed = cached_reproduce("fig3b")
    tau = rep.value("hold_decay_time")
    ok = abs(tau - 1.35e-6) <= 0.25e-6
    report("C5(ii) fitted hold decay time", ok, f"{tau * 1e6:.4f} us (target 1.35 +- 0.25 us)", elapsed)
    assert ok


def test_c6_appendix_b_closed_loop():
    eta = 0.0988
    with Timer() as tm:
        h, s = st.monte_carlo_events(st.PairSourceModel(eta=eta), 1_000_000, seed=2024)
        hist = st.build_histogram(h, s, n_blocks=50)
        first = st.FIRST_PEAK
        g2 = st.g2_histogram_estimate(hist, first, st.reference_window(first, 12e-6))
        gc = st.g2_conditional_estimate(h, s, splitter_seed=7, coincidence_window=first.width)
    pred = st.g2_conditional(st.eta_from_g2(11.12))
    ok = (
        g2.deviation(11.12) < 3
        and gc.deviation(0.3435) < 3
        and 0.33 <= pred <= 0.35
        and tm.elapsed < 60
    )
    assert report(
        "C6 Monte Carlo closed loop (eta = 0.0988, 1e6 repetitions)",
        ok,
        f"g2 = {g2.value:.3f} +- {g2.stderr:.3f} ({g2.deviation(11.12):.2f} sigma from 11.12); "
        f"g_c = {gc.value:.4f} +- {gc.stderr:.4f} ({gc.deviation(0.3435):.2f} sigma from 0.3435); "
        f"prediction {pred:.4f} in [0.33, 0.35]",
        tm.elapsed,
    )


@pytest.mark.parametrize("scenario", ["eit_memory", "eit_plus_qslp"])
def test_c7_self_convergence(scenario):
    with Timer() as tm:
        rep = convergence_check(SolverConfig(), scenario)
    ok = rep.energy_change < 0.01 and rep.peak_shift < 20e-9
    assert report(
        f"C7 self-convergence {scenario}",
        ok,
        f"energy change {rep.energy_change:.2e} (target < 1e-2), peak shift {rep.peak_shift * 1e9:.3f} ns (target < 20)",
        tm.elapsed,
    )


def test_c8_linearity():
    cfg = SolverConfig()
    a = run(cfg, "eit_plus_qslp")
    b = run(replace(cfg, input=replace(cfg.input, energy=100.0)), "eit_plus_qslp")
    worst = 0.0
    for f in ("e_plus_out", "e_minus_out"):
        ref = 10 * getattr(a, f)
        worst = max(worst, np.abs(getattr(b, f) - ref).max() / np.abs(ref).max())
    ok = worst < 1e-13
    assert report("C8 linearity x10", ok, f"max deviation / peak = {worst:.1e} (target machine precision, < 1e-13)")


def test_c9_determinism(tmp_path):
    digests = []
    for d in ("a", "b"):
        out = tmp_path / d
        code = cli.main(["reproduce", "fig4", "--out", str(out), "--seed", "77", "--set", "analysis.repetitions=200000"])
        assert code == 0
        digests.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
    ok = digests[0] == digests[1] and len(digests[0]) >= 4
    assert report("C9 byte-identical outputs", ok, f"{len(digests[0])} files compared")


if __name__ == "__main__":
    import tempfile
    from pathlib import Path

    for name, fn in list(globals().items()):
        if not name.startswith("test_c"):
            continue
        args = []
        if name == "test_c7_self_convergence":
            for sc in ("eit_memory", "eit_plus_qslp"):
                try:
                    fn(sc)
                except AssertionError:
                    pass
            continue
        if name == "test_c9_determinism":
            args = [Path(tempfile.mkdtemp())]
        try:
            fn(*args)
        except AssertionError:
            pass
    print("\n".join(RESULTS))
