"""Command-line surface: fit, run, predict, synth, bench.

State files hold every fitted series of a deployment in one snapshot.
``run`` can shard series across worker processes (TSMON_WORKERS or
--workers); output order always matches input order, so results are
identical at any worker count.

Exit codes: 0 ok, 1 runtime error, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
import zlib

import numpy as np

from . import bench as bench_mod
from . import snapshot, synth, textio
from .alarms import Thresholds
from .config import Config
from .engine import IngestEvent, SeriesModel, fit
from .errors import (ConfigError, DecodeError, InputError, InsufficientDataError,
                     RejectedEventError, TsmonError)
from .identify import TrainingWindow


def _load_settings(path: str | None):
    """Split a JSON config file into global fields and per-series overrides."""
    if path is None:
        return {}, {}
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError("config file must hold a JSON object")
    per_series = raw.pop("series", {})
    return raw, per_series


_THRESHOLD_KEYS = ("warning", "critical")


def _split_thresholds(fields: dict) -> tuple[dict, dict]:
    thresholds = {k: fields.pop(k) for k in _THRESHOLD_KEYS if k in fields}
    return fields, thresholds


def _resolve_series(global_fields: dict, per_series: dict, series_id: str,
                    args) -> tuple[Config, Thresholds | None]:
    fields = dict(global_fields)
    fields.update(per_series.get(series_id, {}))
    fields, th = _split_thresholds(fields)
    if args.warning is not None:
        th.setdefault("warning", args.warning)
    if args.critical is not None:
        th.setdefault("critical", args.critical)
    config = Config.from_dict(fields)
    thresholds = None
    if th:
        if set(th) != set(_THRESHOLD_KEYS):
            raise ConfigError(
                f"series {series_id!r}: warning and critical must be set together")
        thresholds = Thresholds(th["warning"], th["critical"])
    return config, thresholds


def _read_events(path: str) -> list[IngestEvent]:
    events = []
    stream = sys.stdin if path == "-" else open(path, "r", encoding="utf-8")
    try:
        for line in stream:
            line = line.strip()
            if line:
                events.append(textio.parse_ingest(line))
    finally:
        if stream is not sys.stdin:
            stream.close()
    return events


def _training_windows(events: list[IngestEvent],
                      step_override: int | None) -> dict[str, TrainingWindow]:
    """Group ingest events into per-series uniformly indexed windows."""
    grouped: dict[str, list[IngestEvent]] = {}
    for ev in events:
        grouped.setdefault(ev.series_id, []).append(ev)
    windows = {}
    for sid, evs in grouped.items():
        ts = np.array([e.timestamp for e in evs])
        if ts.size < 2 and step_override is None:
            raise InputError(f"series {sid!r}: cannot infer step from one sample")
        step = step_override or int(round(float(np.median(np.diff(ts)))))
        if step <= 0:
            raise InputError(f"series {sid!r}: non-positive inferred step {step}")
        start = float(ts[0])
        length = int(round((float(ts[-1]) - start) / step)) + 1
        values = np.full(length, np.nan)
        for ev in evs:
            idx = int(round((ev.timestamp - start) / step))
            if ev.value is not None:
                values[idx] = ev.value
        windows[sid] = TrainingWindow(values, step, start)
    return windows


def _load_models(path: str) -> dict[str, SeriesModel]:
    with open(path, "rb") as fh:
        payload = snapshot.loads(fh.read())
    if not isinstance(payload, dict) or "models" not in payload:
        raise DecodeError("state file does not hold a model collection")
    return {sid: SeriesModel.from_dict(state)
            for sid, state in payload["models"].items()}


def _save_models(path: str, models: dict[str, SeriesModel]) -> None:
    payload = {"models": {sid: m.to_dict() for sid, m in models.items()}}
    with open(path, "wb") as fh:
        fh.write(snapshot.dumps(payload))


# -- subcommands -------------------------------------------------------------

def _cmd_fit(args) -> int:
    global_fields, per_series = _load_settings(args.config)
    events = _read_events(args.input)
    if not events:
        raise InputError("no ingest events in input")
    windows = _training_windows(events, args.step_seconds)
    models = {}
    for sid in sorted(windows):
        config, thresholds = _resolve_series(
            dict(global_fields), per_series, sid, args)
        model = fit(sid, windows[sid], thresholds, config)
        models[sid] = model
        print(_describe(model))
    _save_models(args.state_out, models)
    return 0


def _describe(model: SeriesModel) -> str:
    bp = model.blueprint
    if bp.kind == "discrete":
        shape = f"markov(states={bp.num_states})"
    else:
        parts = ["trend"]
        if bp.seasonal_period is not None:
            parts.append(f"seasonal({bp.seasonal_period})")
        for slot in bp.outburst_slots:
            parts.append(f"outburst(period={slot.period},offset={slot.offset})")
        shape = "+".join(parts)
    return (f"fitted series={model.series_id} kind={bp.kind} model={shape} "
            f"steps={model.step_index + 1}")


def _worker_run(payload: tuple[dict, list[tuple[int, str]]]) -> tuple[dict, list]:
    states, lines = payload
    models = {sid: SeriesModel.from_dict(state) for sid, state in states.items()}
    out = []
    for index, line in lines:
        event = textio.parse_ingest(line)
        model = models.get(event.series_id)
        if model is None:
            out.append((index, None, f"unknown series {event.series_id!r}"))
            continue
        try:
            out.append((index, textio.format_record(model.update(event)), None))
        except RejectedEventError as exc:
            out.append((index, None, str(exc)))
    return {sid: m.to_dict() for sid, m in models.items()}, out


def _cmd_run(args) -> int:
    models = _load_models(args.state)
    out = sys.stdout if args.output == "-" else open(args.output, "w",
                                                     encoding="utf-8")
    workers = args.workers or int(os.environ.get("TSMON_WORKERS", "1"))
    try:
        if workers <= 1:
            _run_serial(models, args.input, out)
        else:
            _run_sharded(models, args.input, out, workers)
    finally:
        if out is not sys.stdout:
            out.close()
    _save_models(args.state_out or args.state, models)
    return 0


def _run_serial(models, input_path, out) -> None:
    stream = sys.stdin if input_path == "-" else open(input_path, "r",
                                                      encoding="utf-8")
    try:
        for line in stream:
            line = line.strip()
            if not line:
                continue
            event = textio.parse_ingest(line)
            model = models.get(event.series_id)
            if model is None:
                print(f"skipped: unknown series {event.series_id!r}",
                      file=sys.stderr)
                continue
            try:
                record = model.update(event)
            except RejectedEventError as exc:
                print(f"skipped: {exc}", file=sys.stderr)
                continue
            out.write(textio.format_record(record))
            out.write("\n")
    finally:
        if stream is not sys.stdin:
            stream.close()


def _run_sharded(models, input_path, out, workers: int) -> None:
    """Shard series across processes; merge output back in input order."""
    lines = []
    stream = sys.stdin if input_path == "-" else open(input_path, "r",
                                                      encoding="utf-8")
    try:
        for raw in stream:
            raw = raw.strip()
            if raw:
                lines.append(raw)
    finally:
        if stream is not sys.stdin:
            stream.close()

    shard_of = {sid: zlib.crc32(sid.encode()) % workers for sid in models}
    shard_lines: list[list[tuple[int, str]]] = [[] for _ in range(workers)]
    for index, line in enumerate(lines):
        sid = line.split(",", 1)[0]
        shard_lines[shard_of.get(sid, 0)].append((index, line))
    payloads = []
    for shard in range(workers):
        states = {sid: m.to_dict() for sid, m in models.items()
                  if shard_of[sid] == shard}
        payloads.append((states, shard_lines[shard]))

    merged: list[tuple[int, str | None, str | None]] = []
    with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
        for states, results in pool.map(_worker_run, payloads):
            for sid, state in states.items():
                models[sid] = SeriesModel.from_dict(state)
            merged.extend(results)
    for _, line, reason in sorted(merged, key=lambda item: item[0]):
        if reason is not None:
            print(f"skipped: {reason}", file=sys.stderr)
        elif line is not None:
            out.write(line)
            out.write("\n")


def _cmd_predict(args) -> int:
    models = _load_models(args.state)
    if args.series is not None:
        if args.series not in models:
            raise InputError(f"series {args.series!r} not in state file")
        models = {args.series: models[args.series]}
    for sid in sorted(models):
        record = models[sid].predict_ahead(args.horizon)
        print(textio.format_record(record))
    return 0


def _cmd_synth(args) -> int:
    timestamps, values = synth.generate(
        args.kind, args.length, args.seed, step_seconds=args.step_seconds,
        level=args.level, slope=args.slope, noise=args.noise,
        seasonal_period=args.period, seasonal_amplitude=args.amplitude,
        outburst_offset=args.offset, outburst_size=args.size,
        num_states=args.states)
    synth.write_csv(args.out, args.series_id, timestamps, values)
    print(f"wrote {args.length} samples of {args.kind} to {args.out}")
    return 0


def _cmd_bench(args) -> int:
    results = bench_mod.run(n=args.points)
    report = bench_mod.format_report(results)
    print(report)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(report + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsmon",
        description="Streaming Bayesian forecasting and alarms for telemetry series")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="identify and fit models from training data")
    p.add_argument("--input", required=True, help="ingest CSV (or - for stdin)")
    p.add_argument("--state-out", required=True, help="snapshot file to write")
    p.add_argument("--config", help="JSON config (global fields + per-series)")
    p.add_argument("--warning", type=float, help="default warning level")
    p.add_argument("--critical", type=float, help="default critical level")
    p.add_argument("--step-seconds", type=int, help="override inferred step")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("run", help="stream events through fitted models")
    p.add_argument("--state", required=True)
    p.add_argument("--input", default="-")
    p.add_argument("--output", default="-")
    p.add_argument("--state-out", help="snapshot to write on shutdown "
                                       "(default: overwrite --state)")
    p.add_argument("--workers", type=int,
                   help="worker processes (default $TSMON_WORKERS or 1)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("predict", help="one-shot forecasts from a snapshot")
    p.add_argument("--state", required=True)
    p.add_argument("--series", help="restrict to one series")
    p.add_argument("--horizon", type=int, help="forecast steps (default config k)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("synth", help="generate a deterministic synthetic series")
    p.add_argument("--kind", required=True, choices=synth.KINDS)
    p.add_argument("--length", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--series-id", default="synth")
    p.add_argument("--step-seconds", type=int, default=600)
    p.add_argument("--level", type=float, default=50.0)
    p.add_argument("--slope", type=float, default=0.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--period", type=int, default=144)
    p.add_argument("--amplitude", type=float, default=8.0)
    p.add_argument("--offset", type=int, default=30)
    p.add_argument("--size", type=float, default=40.0)
    p.add_argument("--states", type=int, default=50)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("bench", help="stress bench over the four model shapes")
    p.add_argument("--points", type=int, default=15000)
    p.add_argument("--out", help="also write the report here")
    p.set_defaults(func=_cmd_bench)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ConfigError, InsufficientDataError, DecodeError,
            FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except TsmonError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
