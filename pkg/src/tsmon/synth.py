"""Seeded synthetic series for tests, demos, and the stress bench.

Generators cover the telemetry archetypes the engine is built for: a
drifting level, optional daily-style seasonality, optional scheduled
peaks, plus a sticky integer chain for discrete series.  Everything is
driven by an explicit seed so repeated calls are byte-identical.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError

KINDS = ("trend", "trend+seasonal", "trend+outburst", "trend+seasonal+outburst",
         "discrete")


def generate(kind: str, length: int, seed: int, *, step_seconds: int = 600,
             level: float = 50.0, slope: float = 0.0, noise: float = 1.0,
             seasonal_period: int = 144, seasonal_amplitude: float = 8.0,
             outburst_offset: int = 30, outburst_size: float = 40.0,
             num_states: int = 50, start_time: float = 0.0,
             ) -> tuple[np.ndarray, np.ndarray]:
    """Return (timestamps, values) for one synthetic series."""
    if kind not in KINDS:
        raise InputError(f"kind must be one of {KINDS}, got {kind!r}")
    if length < 1:
        raise InputError(f"length must be >= 1, got {length}")
    rng = np.random.default_rng(seed)
    t = np.arange(length, dtype=float)
    timestamps = start_time + t * step_seconds

    if kind == "discrete":
        values = _sticky_chain(rng, length, num_states)
        return timestamps, values.astype(float)

    values = level + slope * t + rng.normal(0.0, noise, size=length)
    if "seasonal" in kind:
        values += seasonal_amplitude * np.sin(2 * np.pi * t / seasonal_period)
    if "outburst" in kind:
        day = max(2, 86400 // step_seconds)
        slots = np.nonzero((np.arange(length) % day) == outburst_offset % day)[0]
        values[slots] += outburst_size * (1.0 + 0.05 * rng.standard_normal(slots.size))
    return timestamps, values


def _sticky_chain(rng: np.random.Generator, length: int, num_states: int) -> np.ndarray:
    """Integer walk in 1..num_states that mostly stays put or moves one step."""
    out = np.empty(length, dtype=int)
    state = max(1, num_states // 3)
    for i in range(length):
        u = rng.random()
        if u < 0.70:
            pass
        elif u < 0.85:
            state += 1
        elif u < 0.97:
            state -= 1
        else:
            state += int(rng.integers(-3, 4))
        state = min(max(state, 1), num_states)
        out[i] = state
    return out


def write_csv(path: str, series_id: str, timestamps: np.ndarray,
              values: np.ndarray) -> None:
    from .engine import IngestEvent
    from .textio import format_ingest

    with open(path, "w", encoding="utf-8") as fh:
        for ts, value in zip(timestamps, values):
            fh.write(format_ingest(IngestEvent(series_id, float(ts), float(value))))
            fh.write("\n")
