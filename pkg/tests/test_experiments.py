import numpy as np
import pytest

from qslp import experiments as ex
from qslp.config import ResolvedConfig, parse_config
from qslp.errors import ConfigError, DomainError
from qslp.solver import SimulationRecord


def shifted_record(shift_samples, scale=1.0):
    t = np.arange(0, 10e-6, 10e-9)
    e = scale * np.exp(-((t - 3e-6 - shift_samples * 10e-9) / 0.3e-6) ** 2).astype(complex)
    z = np.zeros_like(t)
    return SimulationRecord(t, e, 0 * e, z, z, z)


def test_compare_identical_traces():
    a = shifted_record(0)
    assert ex.compare_traces(a, a) == (0.0, 1.0)


def test_compare_shifted_trace():
    a, b = shifted_record(0), shifted_record(100, scale=0.5)
    delay, ratio = ex.compare_traces(a, b)
    assert delay == pytest.approx(1e-6, abs=1e-12)
    assert ratio == pytest.approx(0.25, rel=1e-6)


def test_compare_flat_trace():
    a = shifted_record(0)
    flat = shifted_record(0, scale=0.0)
    with pytest.raises(DomainError):
        ex.compare_traces(a, flat)


def test_compare_incompatible_grids():
    a = shifted_record(0)
    b = SimulationRecord(a.t[:-1], a.e_plus_out[:-1], a.e_minus_out[:-1], a.t[:-1], a.t[:-1], a.t[:-1])
    with pytest.raises(DomainError):
        ex.compare_traces(a, b)


def test_unknown_scenario():
    with pytest.raises(ConfigError):
        ex.reproduce("fig5")


@pytest.fixture(scope="module")
def fig3b():
    return ex.reproduce("fig3b")


def test_metrics_carry_units_and_windows(fig3b):
    for name, m in fig3b.metrics.items():
        assert m.unit
    assert fig3b.metrics["relative_release"].windows
    text = fig3b.to_text()
    assert "# medium.optical_depth = 100.0" in text
    assert "relative_release = " in text and "unit=1" in text


def test_fig3b_qualitative(fig3b):
    assert fig3b.value("suppression_ratio") < 0.05
    assert fig3b.value("peak_delay") > 0
    assert 0 < fig3b.value("relative_release") < 1
    assert fig3b.value("hold_decay_time") > 0


def test_reproduce_deterministic(tmp_path):
    a = ex.reproduce("fig3a", out_dir=tmp_path / "a")
    b = ex.reproduce("fig3a", out_dir=tmp_path / "b")
    for pa, pb in zip(a.artifacts, b.artifacts):
        assert open(pa, "rb").read() == open(pb, "rb").read()
    assert a.to_text() == b.to_text()


def test_reproduce_writes_traces_and_report(tmp_path):
    rep = ex.reproduce("fig3a", out_dir=tmp_path)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "fig3a_eit_memory_report.txt" in names
    assert "fig3a_eit_memory_eit_memory_trace.csv" in names
    rec = SimulationRecord.from_csv(tmp_path / "fig3a_eit_memory_eit_memory_trace.csv")
    assert rec.metadata["run.seed"] == "0"
    assert rep.value("efficiency") > 0


def test_fig4_prediction_in_measured_band():
    rep = ex.reproduce("fig4", parse_config("analysis.repetitions = 200000"), seed=3)
    assert 0.33 <= rep.value("g2_conditional_source") <= 0.35
    assert rep.value("mc_noisy_g2_cross") < rep.value("mc_noisy_g2_cross_subtracted")
    assert rep.value("g2_cross_raw_after_qslp") < rep.value("g2_cross_raw_after_eit") < rep.value("g2_cross_source")
    assert any("flat transmission" in n for n in rep.notes)


def test_sweep_size_one_equals_reproduce(fig3b):
    cfg = ResolvedConfig()
    table = ex.sweep(cfg, "fig3b", {"omega_bwc": [cfg.solver.drives.omega_bwc]})
    assert table.status == ["ok"]
    for name in fig3b.metrics:
        assert table.column(name)[0] == fig3b.value(name)


def test_sweep_marks_failures_and_keeps_order():
    grid = {"od": [100.0, -5.0, 50.0]}
    table = ex.sweep(ResolvedConfig(), "fig3a", grid)
    assert len(table.rows) == 3
    assert table.status[0] == "ok" and table.status[2] == "ok"
    assert table.status[1].startswith("failed: ConfigError")
    assert np.isnan(table.column("efficiency")[1])
    np.testing.assert_array_equal(table.column("od"), [100.0, -5.0, 50.0])
    text = table.to_csv(metadata={"x": 1})
    assert text.splitlines()[2].startswith("od,status,")


def test_sweep_parallel_matches_serial():
    grid = {"omega_bwc": [2 * np.pi * 3e6, 2 * np.pi * 5e6]}
    serial = ex.sweep(ResolvedConfig(), "fig3b", grid, workers=1)
    parallel = ex.sweep(ResolvedConfig(), "fig3b", grid, workers=2)
    assert serial.to_csv() == parallel.to_csv()


def test_bwc_sweep_slows_release():
    # a stronger backward drive lowers the net forward velocity during the hold
    grid = {"omega_bwc": [2 * np.pi * f for f in (0.0, 2e6, 4.2e6, 6e6)]}
    table = ex.sweep(ResolvedConfig(), "fig3b", grid)
    delay = table.column("peak_delay")
    assert np.all(np.diff(delay) > 0)
    assert table.column("suppression_ratio")[2] < table.column("suppression_ratio")[0]


def test_dephasing_free_hold_lasts_longer():
    cfg = ResolvedConfig()
    table = ex.sweep(cfg, "fig3b", {"gamma_gs": [0.0, cfg.solver.medium.gamma_gs]})
    tau = table.column("hold_decay_time")
    assert tau[0] > tau[1]


def test_sweep_unknown_axis():
    with pytest.raises(ConfigError):
        ex.sweep(ResolvedConfig(), "fig3a", {"length": [1.0]})
