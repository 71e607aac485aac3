"""Stress bench: per-point cost of update + short + long prediction.

Four model shapes are timed over a long synthetic stream: bare trend,
trend with a period-144 seasonal block, trend with a daily peak process,
and a 50-state chain.  Each iteration performs one update, a short-term
prediction (30 minutes of steps) and a long-term prediction (5 hours),
mirroring how the streaming engine exercises the models.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .dlm import DlmModel, make_seasonal_block, make_trend_block
from .markov import MarkovModel, credible_interval, stationary_distribution
from .outburst import OutburstProcess, SlotSpec
from . import synth

STEP_SECONDS = 600
SHORT_STEPS = 30 * 60 // STEP_SECONDS   # 30 minutes
LONG_STEPS = 5 * 3600 // STEP_SECONDS   # 5 hours
WARMUP_STEPS = 300

CONFIG_NAMES = ("linear", "linear+seasonal", "linear+outburst", "markov")


@dataclass
class BenchResult:
    name: str
    iterations: int
    mean: float
    median: float
    min: float
    max: float

    def as_dict(self) -> dict:
        return {"name": self.name, "iterations": self.iterations,
                "mean": self.mean, "median": self.median,
                "min": self.min, "max": self.max}


def _summarize(name: str, times: np.ndarray) -> BenchResult:
    return BenchResult(name, times.size, float(times.mean()),
                       float(np.median(times)), float(times.min()),
                       float(times.max()))


def _time_iterations(values: np.ndarray, op) -> np.ndarray:
    times = np.empty(values.size)
    for i, x in enumerate(values):
        start = time.perf_counter()
        op(x)
        times[i] = time.perf_counter() - start
    return times


def _bench_dlm(name: str, seasonal: bool, n: int, seed: int) -> BenchResult:
    kind = "trend+seasonal" if seasonal else "trend"
    _, values = synth.generate(kind, WARMUP_STEPS + n, seed,
                               step_seconds=STEP_SECONDS, slope=0.001)
    blocks = [make_trend_block()]
    if seasonal:
        blocks.append(make_seasonal_block(144))
    model = DlmModel(blocks)
    for x in values[:WARMUP_STEPS]:
        model.update(x)

    def op(x: float) -> None:
        model.update(x)
        model.predict(SHORT_STEPS)
        model.predict(LONG_STEPS)

    return _summarize(name, _time_iterations(values[WARMUP_STEPS:], op))


def _bench_outburst(name: str, n: int, seed: int) -> BenchResult:
    day = 86400 // STEP_SECONDS
    offset = 30
    _, values = synth.generate("trend+outburst", WARMUP_STEPS + n, seed,
                               step_seconds=STEP_SECONDS, slope=0.001,
                               outburst_offset=offset)
    model = DlmModel([make_trend_block()])
    proc = OutburstProcess(SlotSpec(day, offset, 0))
    step = 0

    def advance(x: float, predict: bool) -> None:
        nonlocal step
        if proc.matches_step(step):
            proc.observe(x)
            model.update_missing()
        else:
            model.update(x)
        if predict:
            for horizon in (SHORT_STEPS, LONG_STEPS):
                model.predict(horizon)
                if proc.count >= 2 and any(proc.matches_step(step + j)
                                           for j in range(1, horizon + 1)):
                    proc.predict()
        step += 1

    for x in values[:WARMUP_STEPS]:
        advance(x, predict=False)
    return _summarize(name, _time_iterations(values[WARMUP_STEPS:],
                                             lambda x: advance(x, predict=True)))


def _bench_markov(name: str, n: int, seed: int) -> BenchResult:
    num_states = 50
    _, values = synth.generate("discrete", WARMUP_STEPS + n, seed,
                               num_states=num_states)
    chain = MarkovModel(num_states)
    for x in values[:WARMUP_STEPS]:
        chain.observe(int(x))

    def op(x: float) -> None:
        chain.observe(int(x))
        P = chain.expected_matrix()
        dist = P[chain.last_state - 1].copy()
        for j in range(SHORT_STEPS):
            if j:
                dist = dist @ P
            credible_interval(dist, chain.last_state, 0.95)
        stationary_distribution(P)

    return _summarize(name, _time_iterations(values[WARMUP_STEPS:], op))


def run(n: int = 15000, seed: int = 7) -> list[BenchResult]:
    """Run all four configurations and return their timing summaries."""
    return [
        _bench_dlm("linear", seasonal=False, n=n, seed=seed),
        _bench_dlm("linear+seasonal", seasonal=True, n=n, seed=seed + 1),
        _bench_outburst("linear+outburst", n=n, seed=seed + 2),
        _bench_markov("markov", n=n, seed=seed + 3),
    ]


def format_report(results: list[BenchResult]) -> str:
    lines = [f"{'model':<20} {'mean':>12} {'median':>12} {'min':>12} {'max':>12}"]
    for r in results:
        lines.append(f"{r.name:<20} {r.mean:>12.3e} {r.median:>12.3e} "
                     f"{r.min:>12.3e} {r.max:>12.3e}")
    for r in results:
        lines.append(f"bench name={r.name} n={r.iterations} mean={r.mean!r} "
                     f"median={r.median!r} min={r.min!r} max={r.max!r}")
    return "\n".join(lines)
