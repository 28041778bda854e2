"""Finite-difference Maxwell-Bloch solver for forward/backward probe fields.

Five atomic coherences are stepped with classical RK4 at every grid point.
The two probe envelopes are slaved to the coherences: the 1/c0 d/dt terms of
the wave equations are dropped (L/c0 is tens of ps against ns-us dynamics),
so at every RK stage E+ is integrated forward from the input boundary at
z = 0 and E- backward from E-(L) = 0, both with the trapezoidal rule.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, Mapping, Optional

import numpy as np

from . import kernels
from .errors import ConfigError, DomainError, NumericalError
from .medium import DriveAmplitudes, MediumParams
from .sequence import (
    InputWaveform,
    SequenceParams,
    TimingSequence,
    envelope,
    scenario_timing,
    standard_sequence,
    waveform,
)

CSV_COLUMNS = (
    "t_s",
    "re_Eplus_out",
    "im_Eplus_out",
    "re_Eminus_out",
    "im_Eminus_out",
    "photonic_energy",
    "spin_energy",
    "higher_coherence_energy",
)

FIELD_MODEL = "quasi-static fields (1/c0 d/dt dropped), RK4 atoms, trapezoidal z sweeps"


@dataclass(frozen=True)
class SolverConfig:
    medium: MediumParams = MediumParams()
    drives: DriveAmplitudes = DriveAmplitudes()
    input: InputWaveform = InputWaveform()
    nz: int = 200
    dt: float = 1e-9
    t_max: float = 12e-6
    dt_record: float = 10e-9
    schedule: SequenceParams = SequenceParams()
    sequences: Optional[Mapping[str, TimingSequence]] = None

    def __post_init__(self):
        if int(self.nz) != self.nz or self.nz < 50:
            raise ConfigError("grid.nz: invariant violated (integer >= 50)")
        if not self.dt > 0:
            raise ConfigError("grid.dt: invariant violated (> 0)")
        if not self.t_max > 0:
            raise ConfigError("grid.t_max: invariant violated (> 0)")
        if self.dt > self.max_stable_dt * (1 + 1e-12):
            raise ConfigError(
                f"grid.dt: stiffness guard violated (dt={self.dt:.3e} s > "
                f"1/(10 max(Gamma, Omega_FWC, Omega_BWC, |delta|)) = {self.max_stable_dt:.3e} s)"
            )
        ratio = self.dt_record / self.dt
        if ratio < 1 - 1e-9 or abs(ratio - round(ratio)) > 1e-6:
            raise ConfigError("grid.dt_record: must be a positive integer multiple of grid.dt")

    @property
    def max_stable_dt(self) -> float:
        m, d = self.medium, self.drives
        fastest = max(m.gamma, d.omega_fwc, d.omega_bwc, abs(m.two_photon_detuning))
        return 1.0 / (10.0 * fastest)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_max / self.dt))

    @property
    def record_every(self) -> int:
        return int(round(self.dt_record / self.dt))

    @property
    def dz(self) -> float:
        return self.medium.length / (self.nz - 1)

    def refined(self) -> "SolverConfig":
        """Same run with dt and dz halved."""
        return replace(self, nz=2 * (self.nz - 1) + 1, dt=self.dt / 2)

    def echo(self) -> Dict[str, object]:
        """Flat ``section.key -> value`` view of every setting, SI units."""
        out: Dict[str, object] = {}
        for section, obj in (
            ("medium", self.medium),
            ("drives", self.drives),
            ("input", self.input),
            ("sequence", self.schedule),
        ):
            for f in fields(obj):
                out[f"{section}.{f.name}"] = getattr(obj, f.name)
        for key in ("nz", "dt", "t_max", "dt_record"):
            out[f"grid.{key}"] = getattr(self, key)
        if self.sequences is not None:
            for ch, seq in sorted(self.sequences.items()):
                out[f"sequences.{ch}"] = seq.intervals
        return out


@dataclass
class SystemState:
    """Fields and coherences on the z grid at time ``t`` (fields in rad/s)."""

    E_plus: np.ndarray
    E_minus: np.ndarray
    rho_eg_plus: np.ndarray
    rho_eg_minus: np.ndarray
    rho_sg_pm: np.ndarray
    rho_sg_mp: np.ndarray
    rho_sg_0: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        n = len(self.E_plus)
        for f in fields(self):
            if f.name != "t":
                arr = np.asarray(getattr(self, f.name), dtype=np.complex128)
                if arr.shape != (n,):
                    raise ValueError(f"{f.name} has shape {arr.shape}, expected ({n},)")
                setattr(self, f.name, arr)

    @classmethod
    def zeros(cls, nz: int, t: float = 0.0) -> "SystemState":
        return cls(*(np.zeros(nz, np.complex128) for _ in range(7)), t=t)

    @property
    def nz(self) -> int:
        return len(self.E_plus)

    def atomic_array(self) -> np.ndarray:
        return np.array(
            [self.rho_eg_plus, self.rho_eg_minus, self.rho_sg_pm, self.rho_sg_mp, self.rho_sg_0]
        )


@dataclass
class SimulationRecord:
    t: np.ndarray
    e_plus_out: np.ndarray
    e_minus_out: np.ndarray
    photonic_energy: np.ndarray
    spin_energy: np.ndarray
    higher_coherence_energy: np.ndarray
    metadata: Dict[str, object] = field(default_factory=dict)

    @property
    def output_intensity(self) -> np.ndarray:
        return np.abs(self.e_plus_out) ** 2

    @property
    def backward_intensity(self) -> np.ndarray:
        return np.abs(self.e_minus_out) ** 2

    @property
    def dt_record(self) -> float:
        return float(self.t[1] - self.t[0])

    def output_energy(self, t_start: float = -math.inf, t_end: float = math.inf) -> float:
        """Trapezoid integral of |E+(L,t)|^2 over [t_start, t_end]."""
        return _window_integral(self.t, self.output_intensity, t_start, t_end)

    def backward_energy(self, t_start: float = -math.inf, t_end: float = math.inf) -> float:
        return _window_integral(self.t, self.backward_intensity, t_start, t_end)

    def released_energy(self) -> float:
        """Output energy after the release instant (all of it for slow light)."""
        release = self.metadata.get("timing.release")
        return self.output_energy(release if release is not None else -math.inf)

    def to_csv(self, path=None) -> str:
        """Serialize; returns the text and writes it when ``path`` is given."""
        buf = io.StringIO()
        for key, value in self.metadata.items():
            buf.write(f"# {key} = {_fmt_value(value)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for k in range(len(self.t)):
            w.writerow(
                [
                    repr(float(x))
                    for x in (
                        self.t[k],
                        self.e_plus_out[k].real,
                        self.e_plus_out[k].imag,
                        self.e_minus_out[k].real,
                        self.e_minus_out[k].imag,
                        self.photonic_energy[k],
                        self.spin_energy[k],
                        self.higher_coherence_energy[k],
                    )
                ]
            )
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text, encoding="utf-8")
        return text

    @classmethod
    def from_csv(cls, source) -> "SimulationRecord":
        text = Path(source).read_text(encoding="utf-8") if not _is_text(source) else source
        meta: Dict[str, object] = {}
        rows = []
        for line in text.splitlines():
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                meta[key.strip()] = value.strip()
            elif line and not line.startswith("t_s"):
                rows.append([float(x) for x in line.split(",")])
        a = np.array(rows, dtype=float).reshape(-1, len(CSV_COLUMNS))
        for key in ("timing.storage", "timing.release", "timing.hold_end"):
            if meta.get(key) not in (None, "None"):
                meta[key] = float(meta[key])
            elif key in meta:
                meta[key] = None
        return cls(
            t=a[:, 0],
            e_plus_out=a[:, 1] + 1j * a[:, 2],
            e_minus_out=a[:, 3] + 1j * a[:, 4],
            photonic_energy=a[:, 5],
            spin_energy=a[:, 6],
            higher_coherence_energy=a[:, 7],
            metadata=meta,
        )


def _is_text(source) -> bool:
    return isinstance(source, str) and "\n" in source


def _fmt_value(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _window_integral(t, y, t_start, t_end) -> float:
    m = (t >= t_start) & (t <= t_end)
    if m.sum() < 2:
        return 0.0
    return float(np.trapezoid(y[m], t[m]))


def resolve_sequences(cfg: SolverConfig, scenario: Optional[str] = None):
    if scenario is not None:
        timing = scenario_timing(scenario, cfg.input, cfg.schedule)
        storage = timing.storage if timing.storage is not None else 0.0
        return standard_sequence(scenario, storage, cfg.schedule), timing
    if cfg.sequences is None:
        raise ConfigError("no scenario given and the config carries no sequences")
    return dict(cfg.sequences), None


def _dimensionless_params(cfg: SolverConfig):
    m, d = cfg.medium, cfg.drives
    g = m.gamma
    dzeta = 1.0 / (cfg.nz - 1)
    ph = complex(np.exp(-1j * m.delta_k * m.length * dzeta))
    return (
        0.5 * m.optical_depth,
        dzeta,
        ph.real,
        ph.imag,
        d.omega_fwc / g,
        d.omega_bwc / g,
        m.gamma_gs / g,
        m.gamma_gs_prime / g,
        m.two_photon_detuning / g,
        cfg.dt * g,
    )


def _drive_samples(cfg, sequences, t0, n_steps):
    th = t0 + 0.5 * cfg.dt * np.arange(2 * n_steps + 1)
    e_in = np.asarray(waveform(cfg.input, th)) / cfg.medium.gamma
    qf = _channel_envelope(sequences, "FWC", th)
    qb = _channel_envelope(sequences, "BWC", th)
    return e_in, qf, qb


def _channel_envelope(sequences, channel, t):
    seq = sequences.get(channel)
    if seq is None:
        return np.zeros_like(t)
    return np.asarray(envelope(seq, t), dtype=float)


def _state_from_y(y, cfg, e_in_nd, t, backend):
    p = _dimensionless_params(cfg)
    ep, em = kernels.solve_fields(y, e_in_nd, p[0], p[1], complex(p[2], p[3]), backend)
    g = cfg.medium.gamma
    # the dumped state may itself hold the offending non-finite value
    with np.errstate(invalid="ignore", over="ignore"):
        return SystemState(ep * g, em * g, *[row.copy() for row in y], t=t)


def _integrate(cfg, sequences, y, t0, n_steps, rec_every, backend):
    e_in, qf, qb = _drive_samples(cfg, sequences, t0, n_steps)
    n_rec = n_steps // rec_every + 1
    rec = np.zeros((n_rec, 5), np.complex128)
    fail = np.zeros(3, np.int64)
    done = kernels.integrate(
        y, e_in, qf, qb, _dimensionless_params(cfg), n_steps, rec_every, rec, fail, backend
    )
    if done < n_steps:
        s, v, j = (int(x) for x in fail)
        t_bad = t0 + (s + 1) * cfg.dt
        last = _state_from_y(y, cfg, e_in[2 * s], t0 + s * cfg.dt, backend)
        raise NumericalError(t_bad, j, kernels.VARIABLES[v], last_state=last)
    return rec, e_in


def step(state: SystemState, cfg: SolverConfig, backend=None) -> SystemState:
    """Advance one time step ``cfg.dt``; needs ``cfg.sequences``."""
    sequences, _ = resolve_sequences(cfg)
    if state.nz != cfg.nz:
        raise ConfigError(f"state has {state.nz} grid points, config expects {cfg.nz}")
    y = state.atomic_array()
    _, e_in = _integrate(cfg, sequences, y, state.t, 1, 1, backend)
    return _state_from_y(y, cfg, e_in[2], state.t + cfg.dt, backend)


def run(
    cfg: SolverConfig,
    scenario: Optional[str] = None,
    initial: Optional[SystemState] = None,
    backend=None,
) -> SimulationRecord:
    """Integrate from t = 0 to ``cfg.t_max`` recording boundary outputs.

    ``scenario`` picks a standard schedule; without it ``cfg.sequences`` is
    used. The medium starts empty unless ``initial`` is given.
    """
    sequences, timing = resolve_sequences(cfg, scenario)
    span = max((s.span for s in sequences.values()), default=0.0)
    if timing is not None and timing.hold_end is not None:
        span = max(span, timing.hold_end)
    if cfg.t_max < span:
        raise ConfigError(
            f"grid.t_max={cfg.t_max:.3e} s is shorter than the sequence span {span:.3e} s"
        )
    t0 = 0.0 if initial is None else initial.t
    y = np.zeros((5, cfg.nz), np.complex128) if initial is None else initial.atomic_array()
    rec, _ = _integrate(cfg, sequences, y, t0, cfg.n_steps, cfg.record_every, backend)

    g, L = cfg.medium.gamma, cfg.medium.length
    n_rec = rec.shape[0]
    meta: Dict[str, object] = {"scenario": scenario or "custom", "field_model": FIELD_MODEL}
    meta.update(
        {
            "timing.storage": None if timing is None else timing.storage,
            "timing.release": None if timing is None else timing.release,
            "timing.hold_end": None if timing is None else timing.hold_end,
        }
    )
    meta.update(cfg.echo())
    if scenario is not None:
        for ch, seq in sorted(sequences.items()):
            meta[f"sequences.{ch}"] = seq.intervals
    return SimulationRecord(
        t=t0 + cfg.dt_record * np.arange(n_rec),
        e_plus_out=rec[:, 0] * g,
        e_minus_out=rec[:, 1] * g,
        photonic_energy=rec[:, 2].real * g * g * L,
        spin_energy=rec[:, 3].real * L,
        higher_coherence_energy=rec[:, 4].real * L,
        metadata=meta,
    )


def energies(state: SystemState, dz: float):
    """(photonic, spin, higher-coherence) sums over the grid times ``dz``."""
    photonic = float(np.sum(np.abs(state.E_plus) ** 2 + np.abs(state.E_minus) ** 2) * dz)
    spin = float(np.sum(np.abs(state.rho_sg_0) ** 2) * dz)
    higher = float(np.sum(np.abs(state.rho_sg_pm) ** 2 + np.abs(state.rho_sg_mp) ** 2) * dz)
    return photonic, spin, higher


def peak_time(t, intensity) -> float:
    """Arrival time of the maximum, refined by a parabola through three samples."""
    intensity = np.asarray(intensity, dtype=float)
    if intensity.size == 0 or not np.any(intensity > 0) or np.ptp(intensity) == 0:
        raise DomainError("trace is flat; peak arrival time undefined")
    k = int(np.argmax(intensity))
    if 0 < k < intensity.size - 1:
        a, b, c = intensity[k - 1 : k + 2]
        denom = a - 2 * b + c
        if denom < 0:
            return float(t[k] + 0.5 * (a - c) / denom * (t[k + 1] - t[k]))
    return float(t[k])


@dataclass(frozen=True)
class ConvergenceReport:
    scenario: str
    energy_base: float
    energy_refined: float
    peak_base: Optional[float]
    peak_refined: Optional[float]
    energy_tolerance: float
    peak_tolerance: float

    @property
    def energy_change(self) -> float:
        if self.energy_base == 0.0 and self.energy_refined == 0.0:
            return 0.0
        return abs(self.energy_refined - self.energy_base) / max(
            abs(self.energy_base), abs(self.energy_refined)
        )

    @property
    def peak_shift(self) -> float:
        if self.peak_base is None or self.peak_refined is None:
            return 0.0
        return abs(self.peak_refined - self.peak_base)

    @property
    def converged(self) -> bool:
        return self.energy_change < self.energy_tolerance and self.peak_shift < self.peak_tolerance


def _released_peak(rec: SimulationRecord) -> Optional[float]:
    release = rec.metadata.get("timing.release")
    m = rec.t >= (release if release is not None else -math.inf)
    inten = rec.output_intensity[m]
    if not np.any(inten > 0):
        return None
    return peak_time(rec.t[m], inten)


def convergence_check(
    cfg: SolverConfig,
    scenario: str,
    energy_tolerance: float = 1e-2,
    peak_tolerance: float = 20e-9,
    backend=None,
) -> ConvergenceReport:
    """Compare released energy and peak time against a run with dt, dz halved."""
    base = run(cfg, scenario, backend=backend)
    fine = run(cfg.refined(), scenario, backend=backend)
    return ConvergenceReport(
        scenario=scenario,
        energy_base=base.released_energy(),
        energy_refined=fine.released_energy(),
        peak_base=_released_peak(base),
        peak_refined=_released_peak(fine),
        energy_tolerance=energy_tolerance,
        peak_tolerance=peak_tolerance,
    )
