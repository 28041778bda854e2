"""Command-line front end.

    qslp simulate  [--config F] [--out D] [--set k=v ...]
    qslp reproduce fig3a|fig3b|fig4
    qslp sweep     [fig3a|fig3b|fig4]     (grid from [sweep] keys)
    qslp events                           (Monte Carlo herald/signal stream)
    qslp analyze   EVENTS.csv

Exit status: 0 success, 1 configuration error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import List, Optional, Sequence

from . import experiments
from . import statistics as st
from .config import ResolvedConfig, RunConfig, parse_config
from .errors import ConfigError, DegenerateStatisticsError, DomainError, NumericalError
from .solver import run

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _seed(value: str) -> int:
    n = int(value, 0)
    if not 0 <= n < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return n


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="configuration file (key = value lines)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=_seed, help="random seed, overrides run.seed")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    p = argparse.ArgumentParser(prog="qslp", description="stationary light pulse simulator")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run one solver scenario")
    r = sub.add_parser("reproduce", parents=[common], help="named reproduction")
    r.add_argument("target", choices=sorted(experiments.SHORT_NAMES))
    s = sub.add_parser("sweep", parents=[common], help="parameter sweep")
    s.add_argument("target", nargs="?", default="fig3b", choices=sorted(experiments.SHORT_NAMES))
    sub.add_parser("events", parents=[common], help="synthesize a herald/signal event stream")
    a = sub.add_parser("analyze", parents=[common], help="correlation analysis of an event stream")
    a.add_argument("target", metavar="EVENTS_CSV")
    return p


def _resolve(rc: RunConfig) -> ResolvedConfig:
    text = ""
    if rc.config_path is not None:
        try:
            text = Path(rc.config_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {rc.config_path}: {exc.strerror}") from None
    cfg = parse_config(text, rc.overrides)
    if rc.seed is not None:
        cfg = replace(cfg, run=replace(cfg.run, seed=rc.seed))
    return cfg


def _header(cfg: ResolvedConfig, command: str):
    return {"command": command, **cfg.echo()}


def _emit(path: Path, out: List[str]):
    out.append(str(path))
    print(path)


def dispatch(rc: RunConfig) -> int:
    cfg = _resolve(rc)
    out_dir = Path(rc.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: List[str] = []
    if rc.command == "simulate":
        rec = run(cfg.solver, cfg.run.scenario, backend=cfg.run.backend)
        for k, v in _header(cfg, "simulate").items():
            rec.metadata.setdefault(k, v)
        path = out_dir / f"simulate_{cfg.run.scenario}.csv"
        rec.to_csv(path)
        _emit(path, written)
    elif rc.command == "reproduce":
        rep = experiments.reproduce(rc.target, cfg, out_dir=out_dir)
        for p in rep.artifacts:
            _emit(Path(p), written)
    elif rc.command == "sweep":
        if not cfg.sweep:
            raise ConfigError("sweep needs at least one sweep.<axis> = v1, v2, ... entry")
        table = experiments.sweep(cfg, rc.target)
        path = out_dir / f"sweep_{table.scenario}.csv"
        table.to_csv(path, _header(cfg, "sweep"))
        _emit(path, written)
        failed = sum(1 for s in table.status if s != "ok")
        if failed:
            print(f"{failed} of {len(table.rows)} sweep points failed", file=sys.stderr)
    elif rc.command == "events":
        h, s = st.monte_carlo_events(cfg.source, cfg.analysis.repetitions, cfg.run.seed)
        path = out_dir / "events.csv"
        st.events_to_csv(h, s, path, _header(cfg, "events"))
        _emit(path, written)
    elif rc.command == "analyze":
        _analyze(cfg, Path(rc.target), out_dir, written)
    else:
        raise ConfigError(f"unknown command {rc.command!r}")
    return EXIT_OK


def _analyze(cfg: ResolvedConfig, events: Path, out_dir: Path, written: List[str]):
    try:
        h, s = st.events_from_csv(events)
    except OSError as exc:
        raise ConfigError(f"cannot read events {events}: {exc.strerror}") from None
    an, src = cfg.analysis, cfg.source
    hist = st.build_histogram(h, s, an.bin_width, an.span, an.n_blocks, cfg.run.backend)
    first = st.FIRST_PEAK
    ref = st.reference_window(first, src.repetition_period, an.reference_lag)
    plateaus = st.default_plateaus(src.repetition_period, int(an.span // src.repetition_period), first)
    offset = st.dc_offset(hist, plateaus)
    raw = st.g2_histogram_estimate(hist, first, ref)
    sub = st.g2_histogram_estimate(hist, first, ref, offset)
    gc = st.g2_conditional_estimate(h, s, cfg.run.seed, an.coincidence_window, an.n_blocks)
    header = {**_header(cfg, "analyze"), "analyze.events": events.name}
    hpath = out_dir / "histogram.csv"
    hist.to_csv(hpath, header)
    _emit(hpath, written)
    lines = [f"# {k} = {v}" for k, v in header.items()]
    lines += [
        f"heralds = {hist.normalization}",
        f"dc_offset = {offset!r}",
        f"g2_cross_raw = {raw.value!r} +- {raw.stderr!r}",
        f"g2_cross_subtracted = {sub.value!r} +- {sub.stderr!r}",
        f"g2_conditional = {gc.value!r} +- {gc.stderr!r}",
        f"window.first = [{first.t_start!r}, {first.t_end!r}]",
        f"window.reference = [{ref.t_start!r}, {ref.t_end!r}]",
    ]
    rpath = out_dir / "analysis.txt"
    rpath.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _emit(rpath, written)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    rc = RunConfig(
        command=args.command,
        config_path=args.config,
        out_dir=args.out,
        seed=args.seed,
        overrides=tuple(args.overrides),
        target=getattr(args, "target", None),
    )
    try:
        return dispatch(rc)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, DegenerateStatisticsError) as exc:
        print(f"analysis error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
