"""Line-based configuration files.

Format::

    # comment
    [medium]
    od = 50
    gamma_gs = 2pi * 60 kHz

    drives.omega_bwc = 2pi*4.2 MHz

Keys inside a ``[section]`` are prefixed with the section name; dotted keys
may also be written out in full anywhere. Rates are angular: a bare number is
rad/s, ``2pi*6e6`` is 2 pi x 6e6 rad/s, and a Hz-family unit (``6 MHz`` or the
same with a ``2pi *`` prefix) is a cyclic frequency converted to rad/s. Times
accept s/ms/us/ns, lengths m/mm/um/nm. Omitted keys keep the built-in defaults.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields, replace
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

from .errors import ConfigError
from .solver import SolverConfig
from .statistics import DEFAULT_BIN_WIDTH, FIRST_PEAK, PairSourceModel

UNITS = {
    "rate": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9, "rad/s": 1.0},
    "time": {"s": 1.0, "ms": 1e-3, "us": 1e-6, "µs": 1e-6, "μs": 1e-6, "ns": 1e-9},
    "length": {"m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9},
    "wavenumber": {"1/m": 1.0, "m^-1": 1.0, "rad/m": 1.0},
}


@dataclass(frozen=True)
class AnalysisParams:
    bin_width: float = DEFAULT_BIN_WIDTH
    span: float = 100e-6
    n_blocks: int = 50
    repetitions: int = 1_000_000
    coincidence_window: float = FIRST_PEAK.width
    reference_lag: int = 8

    def __post_init__(self):
        for name in ("bin_width", "span", "coincidence_window"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"analysis.{name}: invariant violated (> 0)")
        for name in ("n_blocks", "repetitions", "reference_lag"):
            if getattr(self, name) < 1:
                raise ConfigError(f"analysis.{name}: invariant violated (>= 1)")


@dataclass(frozen=True)
class RunSettings:
    scenario: str = "eit_memory"
    seed: int = 0
    backend: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.seed < 0 or self.seed >= 2**64:
            raise ConfigError("run.seed: invariant violated (unsigned 64-bit)")
        if self.backend not in (None, "numba", "numpy"):
            raise ConfigError("run.backend: must be numba or numpy")
        if self.workers < 1:
            raise ConfigError("run.workers: invariant violated (>= 1)")


@dataclass(frozen=True)
class ResolvedConfig:
    solver: SolverConfig = SolverConfig()
    source: PairSourceModel = PairSourceModel()
    analysis: AnalysisParams = AnalysisParams()
    run: RunSettings = RunSettings()
    sweep: Tuple[Tuple[str, Tuple[float, ...]], ...] = ()

    def echo(self) -> Dict[str, object]:
        out = dict(self.solver.echo())
        for section, obj in (("source", self.source), ("analysis", self.analysis), ("run", self.run)):
            for f in fields(obj):
                if f.name == "waveform":
                    continue
                out[f"{section}.{f.name}"] = getattr(obj, f.name)
        for name, values in self.sweep:
            out[f"sweep.{name}"] = values
        return out


@dataclass(frozen=True)
class RunConfig:
    """What the command line asked for, before the config file is read."""

    command: str
    config_path: Optional[str] = None
    out_dir: str = "."
    seed: Optional[int] = None
    overrides: Tuple[str, ...] = ()
    target: Optional[str] = None


# key -> (kind, owner, attribute)
_KEYS: Dict[str, Tuple[str, str, str]] = {
    "medium.optical_depth": ("float", "medium", "optical_depth"),
    "medium.gamma": ("rate", "medium", "gamma"),
    "medium.gamma_gs": ("rate", "medium", "gamma_gs"),
    "medium.gamma_gs_prime": ("rate", "medium", "gamma_gs_prime"),
    "medium.length": ("length", "medium", "length"),
    "medium.two_photon_detuning": ("rate", "medium", "two_photon_detuning"),
    "medium.delta_k": ("wavenumber", "medium", "delta_k"),
    "medium.light_speed": ("float", "medium", "light_speed"),
    "drives.omega_fwc": ("rate", "drives", "omega_fwc"),
    "drives.omega_bwc": ("rate", "drives", "omega_bwc"),
    "drives.coupling_strength": ("float", "drives", "coupling_strength"),
    "input.center": ("time", "input", "center"),
    "input.fwhm": ("time", "input", "fwhm"),
    "input.energy": ("float", "input", "energy"),
    "input.shape": ("str", "input", "shape"),
    "sequence.storage_threshold": ("float", "schedule", "storage_threshold"),
    "sequence.memory_time": ("time", "schedule", "memory_time"),
    "sequence.hold_time": ("time", "schedule", "hold_time"),
    "sequence.ramp_time": ("time", "schedule", "ramp_time"),
    "sequence.period": ("time", "schedule", "period"),
    "grid.nz": ("int", "grid", "nz"),
    "grid.dt": ("time", "grid", "dt"),
    "grid.t_max": ("time", "grid", "t_max"),
    "grid.dt_record": ("time", "grid", "dt_record"),
    "source.eta": ("float", "source", "eta"),
    "source.herald_efficiency": ("float", "source", "herald_efficiency"),
    "source.signal_efficiency": ("float", "source", "signal_efficiency"),
    "source.noise_floor": ("float", "source", "noise_floor"),
    "source.noise_bin_width": ("time", "source", "noise_bin_width"),
    "source.repetition_period": ("time", "source", "repetition_period"),
    "source.jitter": ("time", "source", "jitter"),
    "analysis.bin_width": ("time", "analysis", "bin_width"),
    "analysis.span": ("time", "analysis", "span"),
    "analysis.n_blocks": ("int", "analysis", "n_blocks"),
    "analysis.repetitions": ("int", "analysis", "repetitions"),
    "analysis.coincidence_window": ("time", "analysis", "coincidence_window"),
    "analysis.reference_lag": ("int", "analysis", "reference_lag"),
    "run.scenario": ("str", "run", "scenario"),
    "run.seed": ("int", "run", "seed"),
    "run.backend": ("str", "run", "backend"),
    "run.workers": ("int", "run", "workers"),
}

_ALIASES = {
    "medium.od": "medium.optical_depth",
    "medium.delta": "medium.two_photon_detuning",
    "medium.gamma_gs_p": "medium.gamma_gs_prime",
    "drives.g2n": "drives.coupling_strength",
}

SECTIONS = ("medium", "drives", "input", "sequence", "grid", "source", "analysis", "run", "sweep")

# short names accepted as sweep axes
SWEEP_AXES = {
    "omega_fwc": "drives.omega_fwc",
    "omega_bwc": "drives.omega_bwc",
    "od": "medium.optical_depth",
    "delta": "medium.two_photon_detuning",
    "delta_k": "medium.delta_k",
    "gamma_gs": "medium.gamma_gs",
}

_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_VALUE_RE = re.compile(
    rf"^(?:(?P<twopi>2\s*pi|2π)\s*[*x×]?\s*)?(?P<num>{_NUMBER})\s*(?P<unit>\S+)?$", re.IGNORECASE
)


def canonical_key(key: str) -> str:
    key = key.strip()
    key = _ALIASES.get(key, key)
    if key not in _KEYS:
        raise ConfigError(f"unknown configuration key {key!r}")
    return key


def parse_value(key: str, text: str):
    """Convert ``text`` to the SI value of ``key``."""
    kind = _KEYS[key][0]
    text = text.strip()
    if kind == "str":
        if key == "run.backend" and text.lower() in ("", "auto", "none"):
            return None
        return text
    if key == "drives.coupling_strength" and text.lower() in ("", "none"):
        return None
    m = _VALUE_RE.match(text)
    if m is None:
        raise ConfigError(f"{key}: cannot parse value {text!r}")
    unit = m.group("unit")
    if kind == "int":
        if unit or m.group("twopi"):
            raise ConfigError(f"{key}: expected a plain integer, got {text!r}")
        value = float(m.group("num"))
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(value)
    value = float(m.group("num"))
    if m.group("twopi"):
        if kind != "rate":
            raise ConfigError(f"{key}: a 2pi factor only applies to rates")
        value *= 2.0 * math.pi
    if unit:
        table = UNITS.get(kind, {})
        scale = table.get(unit) or table.get(unit.lower())
        if scale is None:
            raise ConfigError(f"{key}: unit {unit!r} not valid here")
        if kind == "rate" and unit.lower() != "rad/s" and not m.group("twopi"):
            # a frequency in Hz is an angular rate of 2 pi f
            value *= 2.0 * math.pi
        value *= scale
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite")
    return value


def _split_list(key: str, text: str) -> Tuple[float, ...]:
    # a unit written once after the list applies to every entry
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError(f"{key}: empty sweep list")
    tail = _VALUE_RE.match(parts[-1])
    unit = tail.group("unit") if tail else None
    prefix = tail.group("twopi") if tail else None
    vals = []
    for p in parts:
        m = _VALUE_RE.match(p)
        if m and not m.group("unit") and unit:
            p = f"{p} {unit}"
        if m and not m.group("twopi") and prefix:
            p = f"2pi*{p}"
        vals.append(parse_value(key, p))
    return tuple(vals)


def parse_lines(text: str) -> List[Tuple[int, str, str]]:
    """(line number, dotted key, raw value) for every assignment."""
    out = []
    section = ""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError(f"line {lineno}: malformed section header {raw.strip()!r}")
            section = line[1:-1].strip()
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if not key:
            raise ConfigError(f"line {lineno}: missing key")
        if section and key.split(".", 1)[0] not in SECTIONS:
            key = f"{section}.{key}"
        out.append((lineno, key, value.strip()))
    return out


def resolve(assignments: Iterable[Tuple[Optional[int], str, str]]) -> ResolvedConfig:
    groups: Dict[str, Dict[str, object]] = {
        k: {} for k in ("medium", "drives", "input", "schedule", "grid", "source", "analysis", "run")
    }
    sweep: Dict[str, Tuple[float, ...]] = {}
    for lineno, key, text in assignments:
        where = f"line {lineno}: " if lineno else ""
        try:
            if key.startswith("sweep."):
                axis = key[len("sweep."):]
                if axis not in SWEEP_AXES:
                    raise ConfigError(
                        f"unknown sweep axis {axis!r}; expected one of {', '.join(SWEEP_AXES)}"
                    )
                sweep[axis] = _split_list(SWEEP_AXES[axis], text)
                continue
            ck = canonical_key(key)
            _, owner, attr = _KEYS[ck]
            groups[owner][attr] = parse_value(ck, text)
        except ConfigError as exc:
            raise ConfigError(f"{where}{exc}") from None

    base = SolverConfig()
    medium = replace(base.medium, **groups["medium"])
    drives = replace(base.drives, **groups["drives"])
    wave = replace(base.input, **groups["input"])
    schedule = replace(base.schedule, **groups["schedule"])
    solver = replace(base, medium=medium, drives=drives, input=wave, schedule=schedule, **groups["grid"])
    source_kw = dict(groups["source"])
    source_kw.setdefault("repetition_period", schedule.period)
    source = replace(PairSourceModel(waveform=wave), **source_kw)
    analysis = replace(AnalysisParams(), **groups["analysis"])
    run = replace(RunSettings(), **groups["run"])
    return ResolvedConfig(solver, source, analysis, run, tuple(sweep.items()))


def parse_config(text: str, overrides: Iterable[str] = ()) -> ResolvedConfig:
    """Parse a config file, then apply ``key=value`` overrides in order."""
    items: List[Tuple[Optional[int], str, str]] = list(parse_lines(text))
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} is not key=value")
        k, _, v = ov.partition("=")
        items.append((None, k.strip(), v.strip()))
    return resolve(items)


def apply_point(cfg: ResolvedConfig, point: Mapping[str, float]) -> ResolvedConfig:
    """Copy of ``cfg`` with sweep-axis values (SI) substituted."""
    groups: Dict[str, Dict[str, float]] = {"medium": {}, "drives": {}}
    for axis, value in point.items():
        _, owner, attr = _KEYS[SWEEP_AXES[axis]]
        groups[owner][attr] = value
    s = cfg.solver
    solver = replace(
        s,
        medium=replace(s.medium, **groups["medium"]),
        drives=replace(s.drives, **groups["drives"]),
    )
    return replace(cfg, solver=solver)
