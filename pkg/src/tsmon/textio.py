"""Plain-text wire formats for ingest events and output records.

Ingest lines are ``series_id,timestamp,value`` with an empty value for a
missing sample.  Output records are one ``key=value`` line per event;
floats are printed with ``repr`` so parsing a printed record recovers it
bit-for-bit.  Absent optional fields are written as ``-``.
"""

from __future__ import annotations

import re

from .alarms import Alarm, AlarmKind
from .dlm import Forecast
from .engine import IngestEvent, OutputRecord
from .errors import InputError

_SERIES_ID = re.compile(r"^[A-Za-z0-9._-]+$")


def _check_series_id(series_id: str) -> str:
    if not _SERIES_ID.match(series_id):
        raise InputError(
            f"series id must match [A-Za-z0-9._-]+, got {series_id!r}")
    return series_id


def format_ingest(event: IngestEvent) -> str:
    value = "" if event.value is None else repr(event.value)
    return f"{_check_series_id(event.series_id)},{repr(event.timestamp)},{value}"


def parse_ingest(line: str) -> IngestEvent:
    parts = line.strip().split(",")
    if len(parts) != 3:
        raise InputError(f"ingest line needs 3 comma-separated fields: {line!r}")
    sid, ts, value = parts
    try:
        return IngestEvent(_check_series_id(sid), float(ts),
                           None if value == "" else float(value))
    except ValueError as exc:
        raise InputError(f"bad ingest line {line!r}: {exc}") from exc


def _fmt_opt(value) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _fmt_forecast(fc: Forecast) -> str:
    return ":".join(repr(x) for x in
                    (fc.point, fc.variance, fc.lower, fc.upper, fc.coverage))


def _parse_forecast(horizon: int, text: str) -> Forecast:
    point, variance, lower, upper, coverage = (float(x) for x in text.split(":"))
    return Forecast(horizon, point, variance, lower, upper, coverage)


def format_record(record: OutputRecord) -> str:
    fields = [
        f"series={_check_series_id(record.series_id)}",
        f"step={record.step}",
        f"value={_fmt_opt(record.value)}",
        f"flags={';'.join(record.flags) if record.flags else '-'}",
        f"pred={_fmt_forecast(record.forecast) if record.forecast else '-'}",
    ]
    if record.horizon_forecasts:
        ks = ",".join(f"{fc.horizon}:{_fmt_forecast(fc)}"
                      for fc in record.horizon_forecasts)
    else:
        ks = "-"
    fields.append(f"k={ks}")
    if record.alarms:
        alarms = ",".join(
            f"{a.kind.value}:{_fmt_opt(a.horizon)}:{a.intensity}"
            for a in record.alarms)
    else:
        alarms = "-"
    fields.append(f"alarms={alarms}")
    fields.append(f"xw={_fmt_opt(record.crossing_warning)}")
    fields.append(f"xc={_fmt_opt(record.crossing_critical)}")
    fields.append(f"tw={_fmt_opt(record.tail_warning)}")
    fields.append(f"tc={_fmt_opt(record.tail_critical)}")
    return " ".join(fields)


def parse_record(line: str) -> OutputRecord:
    data = {}
    for token in line.strip().split(" "):
        if "=" not in token:
            raise InputError(f"bad record token {token!r}")
        key, _, value = token.partition("=")
        data[key] = value
    try:
        record = OutputRecord(
            series_id=data["series"],
            step=int(data["step"]),
            value=None if data["value"] == "-" else float(data["value"]),
            flags=[] if data["flags"] == "-" else data["flags"].split(";"),
        )
        if data["pred"] != "-":
            record.forecast = _parse_forecast(1, data["pred"])
        if data["k"] != "-":
            for item in data["k"].split(","):
                horizon, _, rest = item.partition(":")
                record.horizon_forecasts.append(_parse_forecast(int(horizon), rest))
        if data["alarms"] != "-":
            for item in data["alarms"].split(","):
                kind, horizon, intensity = item.split(":")
                record.alarms.append(Alarm(
                    AlarmKind(kind), record.series_id, record.step,
                    None if horizon == "-" else int(horizon), int(intensity)))
        record.crossing_warning = None if data["xw"] == "-" else int(data["xw"])
        record.crossing_critical = None if data["xc"] == "-" else int(data["xc"])
        record.tail_warning = None if data["tw"] == "-" else float(data["tw"])
        record.tail_critical = None if data["tc"] == "-" else float(data["tc"])
        return record
    except (KeyError, ValueError) as exc:
        raise InputError(f"bad record line {line!r}: {exc}") from exc
