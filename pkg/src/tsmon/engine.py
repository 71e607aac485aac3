"""Per-series lifecycle: fit, streaming update/predict, alarms, persistence.

A fitted series carries only sufficient statistics (filter moments, peak
moments, transition counts), so its serialized size is fixed no matter
how long the stream runs.  Updates are strictly sequential per series;
different series are independent values and can be driven in parallel.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np

from . import snapshot
from .alarms import (Alarm, AlarmKind, Thresholds, ViolationWindow, check_anomaly,
                     check_long_term_continuous, check_long_term_discrete,
                     check_threshold_short)
from .config import Config
from .dlm import DlmModel, Forecast, make_seasonal_block, make_trend_block
from .errors import DecodeError, InputError, RejectedEventError
from .identify import Blueprint, TrainingWindow, build_blueprint
from .markov import MarkovModel, credible_interval
from .outburst import OutburstProcess, SlotSpec


@dataclass
class IngestEvent:
    series_id: str
    timestamp: float
    value: float | None  # None = missing sample


@dataclass
class OutputRecord:
    """One emitted line per live ingest event."""

    series_id: str
    step: int
    value: float | None
    flags: list[str] = field(default_factory=list)
    forecast: Forecast | None = None          # predictive the value was checked against
    horizon_forecasts: list[Forecast] = field(default_factory=list)
    alarms: list[Alarm] = field(default_factory=list)
    crossing_warning: int | None = None       # continuous long-term report
    crossing_critical: int | None = None
    tail_warning: float | None = None         # discrete long-term report
    tail_critical: float | None = None


class SeriesModel:
    """Fitted state and streaming logic for a single monitored series."""

    def __init__(self, series_id: str, blueprint: Blueprint, config: Config,
                 thresholds: Thresholds | None, step_seconds: int,
                 start_time: float):
        self.series_id = series_id
        self.blueprint = blueprint
        self.config = config
        self.thresholds = thresholds
        self.step_seconds = step_seconds
        self.start_time = start_time
        self.step_index = -1
        self.muted_until = -1
        self.max_horizon = config.resolved_max_horizon(step_seconds)
        self.violations = ViolationWindow(config.window_len, config.min_violations)

        self.dlm: DlmModel | None = None
        self.outbursts: list[OutburstProcess] = []
        self.markov: MarkovModel | None = None
        if blueprint.kind == "continuous":
            blocks = [make_trend_block(config.discount)]
            if blueprint.seasonal_period is not None:
                blocks.append(make_seasonal_block(blueprint.seasonal_period,
                                                  config.prior_scale, config.discount))
            self.dlm = DlmModel(blocks)
            self.outbursts = [OutburstProcess(slot) for slot in blueprint.outburst_slots]
        else:
            self.markov = MarkovModel(blueprint.num_states)

    # -- time mapping --------------------------------------------------------

    def _to_step(self, timestamp: float) -> tuple[int, bool]:
        offset = (timestamp - self.start_time) / self.step_seconds
        step = int(round(offset))
        drifted = abs(timestamp - (self.start_time + step * self.step_seconds)) \
            > self.step_seconds / 2
        return step, drifted

    # -- streaming -----------------------------------------------------------

    def update(self, event: IngestEvent) -> OutputRecord:
        """Consume one live event; fills timestamp gaps with missing steps."""
        if event.series_id != self.series_id:
            raise InputError(
                f"event for {event.series_id!r} sent to model {self.series_id!r}")
        step, drifted = self._to_step(event.timestamp)
        if step <= self.step_index:
            raise RejectedEventError(
                f"{self.series_id}: step {step} not after last processed step "
                f"{self.step_index}")
        gap = step - self.step_index - 1
        if gap > self.config.max_gap:
            raise RejectedEventError(
                f"{self.series_id}: gap of {gap} steps exceeds max_gap "
                f"{self.config.max_gap}; refit advised")
        flags: list[str] = []
        if drifted:
            flags.append("clock_drift")
        value = event.value
        if value is not None and not math.isfinite(value):
            value = None
            flags.append("non_finite")
        for missing_step in range(self.step_index + 1, step):
            self._ingest(missing_step, None, emit=False)
        record = self._ingest(step, value, emit=True)
        record.flags = flags + record.flags
        return record

    def _ingest(self, step: int, value: float | None, emit: bool) -> OutputRecord | None:
        if self.dlm is not None:
            record = self._ingest_continuous(step, value, emit)
        else:
            record = self._ingest_discrete(step, value, emit)
        self.step_index = step
        return record

    # -- continuous path -------------------------------------------------

    def _slot_process(self, step: int) -> OutburstProcess | None:
        for proc in self.outbursts:
            if proc.matches_step(step):
                return proc
        return None

    def _ingest_continuous(self, step: int, value: float | None,
                           emit: bool) -> OutputRecord | None:
        coverage = self.config.coverage
        proc = self._slot_process(step)
        forecast: Forecast | None = None
        checked = False
        if value is None:
            self.dlm.update_missing()
        elif proc is not None:
            # The filter is switched off on peak slots; the observation
            # belongs to the peak process, which also supplies the
            # predictive once it has enough history.
            if proc.count >= 2:
                forecast = proc.predict(coverage)
                checked = True
            proc.observe(value)
            self.dlm.update_missing()
        else:
            forecast = self.dlm.update(value, coverage)
            checked = True
        if not emit:
            return None

        record = OutputRecord(self.series_id, step, value, forecast=forecast)
        muted = step <= self.muted_until
        if checked and value is not None:
            alarm = check_anomaly(value, forecast, self.violations,
                                  self.series_id, step)
            if alarm is not None and not muted:
                record.alarms.append(alarm)

        record.horizon_forecasts = self._spliced_forecasts(step)
        if self.thresholds is not None:
            short = check_threshold_short(record.horizon_forecasts, self.thresholds,
                                          self.series_id, step)
            jw, jc, long_alarms = check_long_term_continuous(
                *self.dlm.trend_state(), self.dlm.seasonal_cycle(),
                self.thresholds, self.max_horizon, self.series_id, step)
            record.crossing_warning = jw
            record.crossing_critical = jc
            if not muted:
                record.alarms.extend(short)
                record.alarms.extend(long_alarms)
        return record

    def _spliced_forecasts(self, step: int) -> list[Forecast]:
        """Short-horizon forecasts with peak-slot entries swapped in.

        Horizons landing on a slot use the peak predictive; slots whose
        process has fewer than two peaks are omitted entirely.
        """
        coverage = self.config.coverage
        base = self.dlm.predict(self.config.horizon, coverage)
        out: list[Forecast] = []
        for fc in base:
            proc = self._slot_process(step + fc.horizon)
            if proc is None:
                out.append(fc)
            elif proc.count >= 2:
                out.append(dataclasses.replace(proc.predict(coverage),
                                               horizon=fc.horizon))
        return out

    # -- discrete path ------------------------------------------------------

    def _ingest_discrete(self, step: int, value: float | None,
                         emit: bool) -> OutputRecord | None:
        chain = self.markov
        coverage = self.config.coverage
        forecast: Forecast | None = None
        if value is not None and chain.last_state is not None:
            forecast = self._interval_forecast(chain.predict_next()[0], 1, coverage)
        if value is not None:
            state = min(max(int(round(value)), 1), chain.K)
            chain.observe(state)
        if not emit:
            return None

        record = OutputRecord(self.series_id, step, value, forecast=forecast)
        muted = step <= self.muted_until
        if forecast is not None:
            alarm = check_anomaly(value, forecast, self.violations,
                                  self.series_id, step)
            if alarm is not None and not muted:
                record.alarms.append(alarm)

        if chain.last_state is not None:
            P = chain.expected_matrix()
            dist = P[chain.last_state - 1].copy()
            for j in range(1, self.config.horizon + 1):
                if j > 1:
                    dist = dist @ P
                record.horizon_forecasts.append(
                    self._interval_forecast(dist, j, coverage))
            if self.thresholds is not None:
                record.alarms.extend([] if muted else check_threshold_short(
                    record.horizon_forecasts, self.thresholds, self.series_id, step))
                if step % self.config.stationary_every == 0:
                    tail_w, tail_c, long_alarms = check_long_term_discrete(
                        chain.stationary(), self.thresholds,
                        self.config.mass_threshold, self.series_id, step)
                    record.tail_warning = tail_w
                    record.tail_critical = tail_c
                    if not muted:
                        record.alarms.extend(long_alarms)
        return record

    def _interval_forecast(self, dist: np.ndarray, horizon: int,
                           coverage: float) -> Forecast:
        states = np.arange(1, self.markov.K + 1)
        point = float(states @ dist)
        variance = float(((states - point) ** 2) @ dist)
        lo, hi = credible_interval(dist, self.markov.last_state, coverage)
        return Forecast(horizon, point, variance, float(lo), float(hi), coverage)

    # -- one-shot prediction ----------------------------------------------

    def predict_ahead(self, k: int | None = None) -> OutputRecord:
        """Forecast report from the current state without consuming data."""
        k = k or self.config.horizon
        coverage = self.config.coverage
        record = OutputRecord(self.series_id, self.step_index, None)
        if self.dlm is not None:
            for fc in self.dlm.predict(k, coverage):
                proc = self._slot_process(self.step_index + fc.horizon)
                if proc is None:
                    record.horizon_forecasts.append(fc)
                elif proc.count >= 2:
                    record.horizon_forecasts.append(
                        dataclasses.replace(proc.predict(coverage),
                                            horizon=fc.horizon))
            if self.thresholds is not None:
                record.crossing_warning, record.crossing_critical, _ = \
                    check_long_term_continuous(
                        *self.dlm.trend_state(), self.dlm.seasonal_cycle(),
                        self.thresholds, self.max_horizon, self.series_id,
                        self.step_index)
        elif self.markov.last_state is not None:
            P = self.markov.expected_matrix()
            dist = P[self.markov.last_state - 1].copy()
            for j in range(1, k + 1):
                if j > 1:
                    dist = dist @ P
                record.horizon_forecasts.append(
                    self._interval_forecast(dist, j, coverage))
            if self.thresholds is not None:
                record.tail_warning, record.tail_critical, _ = \
                    check_long_term_discrete(
                        self.markov.stationary(), self.thresholds,
                        self.config.mass_threshold, self.series_id,
                        self.step_index)
        return record

    # -- persistence ----------------------------------------------------------

    def to_dict(self) -> dict:
        cfg = self.config
        state: dict = {
            "sid": self.series_id,
            "h": self.step_seconds,
            "t0": float(self.start_time),
            "step": self.step_index,
            "muted": self.muted_until,
            "maxj": self.max_horizon,
            "cfg": {
                "coverage": cfg.coverage,
                "horizon": cfg.horizon,
                "window_len": cfg.window_len,
                "min_violations": cfg.min_violations,
                "mass_threshold": cfg.mass_threshold,
                "stationary_every": cfg.stationary_every,
                "max_gap": cfg.max_gap,
            },
            "th": None if self.thresholds is None else
                {"w": self.thresholds.warning, "c": self.thresholds.critical},
            "bp": {
                "kind": self.blueprint.kind,
                "period": self.blueprint.seasonal_period,
                "slots": [[s.period, s.offset, s.tolerance]
                          for s in self.blueprint.outburst_slots],
                "states": self.blueprint.num_states,
            },
            "viol": {"len": self.violations.window_len,
                     "min": self.violations.min_violations,
                     "flags": list(self.violations.flags)},
        }
        if self.dlm is not None:
            dlm = self.dlm
            evolved = dlm.G @ dlm.C @ dlm.G.T
            state["dlm"] = {
                "blocks": [{"kind": b.kind, "period": b.period, "delta": b.delta}
                           for b in dlm.blocks],
                "F": dlm.F,
                "G": dlm.G,
                "m": dlm.m.copy(),
                "C": dlm.C.copy(),
                # System covariance implied by the discounts at this state;
                # informational only (load rebuilds it from C and the discounts).
                "W": evolved * dlm._discount_scale - evolved,
                "V": dlm.V,
                "n": dlm.last_update_index,
            }
            state["peaks"] = [{"period": p.slot.period, "offset": p.slot.offset,
                               "tol": p.slot.tolerance, "count": p.count,
                               "mean": p.mean, "m2": p._m2}
                              for p in self.outbursts]
        if self.markov is not None:
            mk = self.markov
            state["markov"] = {
                "states": mk.K,
                "prior": list(mk.prior),
                "conc": mk.conc.copy(),
                "last": mk.last_state,
            }
        return state

    def serialize(self) -> bytes:
        return snapshot.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, state: dict) -> "SeriesModel":
        try:
            bp = Blueprint(
                kind=state["bp"]["kind"],
                seasonal_period=state["bp"]["period"],
                outburst_slots=[SlotSpec(*row) for row in state["bp"]["slots"]],
                num_states=state["bp"]["states"],
            )
            thresholds = None
            if state["th"] is not None:
                thresholds = Thresholds(state["th"]["w"], state["th"]["c"])
            config = Config(**state["cfg"])
            model = cls(state["sid"], bp, config, thresholds, state["h"], state["t0"])
            model.step_index = state["step"]
            model.muted_until = state["muted"]
            model.max_horizon = state["maxj"]
            for flag in state["viol"]["flags"]:
                model.violations.flags.append(flag)
            if "dlm" in state:
                model.dlm._m[:] = state["dlm"]["m"]
                model.dlm._C[:] = state["dlm"]["C"]
                model.dlm.last_update_index = state["dlm"]["n"]
                model.outbursts = []
                for peak in state["peaks"]:
                    proc = OutburstProcess(SlotSpec(peak["period"], peak["offset"],
                                                    peak["tol"]))
                    proc.count = peak["count"]
                    proc.mean = peak["mean"]
                    proc._m2 = peak["m2"]
                    model.outbursts.append(proc)
            if "markov" in state:
                mk = state["markov"]
                model.markov = MarkovModel(mk["states"], *mk["prior"])
                model.markov.conc[:] = mk["conc"]
                model.markov.last_state = mk["last"]
            return model
        except (KeyError, TypeError, IndexError) as exc:
            raise DecodeError(f"malformed snapshot payload: {exc}") from exc

    @classmethod
    def deserialize(cls, blob: bytes) -> "SeriesModel":
        return cls.from_dict(snapshot.loads(blob))


def fit(series_id: str, window: TrainingWindow, thresholds: Thresholds | None,
        config: Config | None = None) -> SeriesModel:
    """Identify, build, and warm a model on the training window.

    The whole window is replayed through the regular update path (with
    alarms suppressed), so the returned model's posteriors already reflect
    the training data.  Alarms stay suppressed for one further seasonal
    period after fit while the block priors settle.
    """
    config = config or Config()
    blueprint = build_blueprint(
        window,
        distinct_cap=config.distinct_cap,
        ratio_threshold=config.acf_ratio,
        sigma=config.spike_sigma,
        repetition=config.repetition,
        candidate_period=config.resolved_candidate_period(window.step_seconds),
        extra_states=config.extra_states,
        critical=None if thresholds is None else thresholds.critical,
        kind=config.kind,
    )
    model = SeriesModel(series_id, blueprint, config, thresholds,
                        window.step_seconds, window.start_time)
    for index, raw in enumerate(window.values):
        value = None if math.isnan(raw) else float(raw)
        model._ingest(index, value, emit=False)
    model.muted_until = model.step_index + (blueprint.seasonal_period or 0)
    return model


def step(model: SeriesModel, event: IngestEvent) -> tuple[SeriesModel, OutputRecord]:
    """Functional-style wrapper over :meth:`SeriesModel.update`."""
    record = model.update(event)
    return model, record


def run_stream(models: dict[str, SeriesModel],
               events) -> list[tuple[int, OutputRecord | None, str | None]]:
    """Drive many series through one interleaved event stream.

    Returns (input index, record, rejection reason) per event, preserving
    input order; unknown series and rejected events carry a reason instead
    of a record.
    """
    out = []
    for index, event in enumerate(events):
        model = models.get(event.series_id)
        if model is None:
            out.append((index, None, f"unknown series {event.series_id!r}"))
            continue
        try:
            out.append((index, model.update(event), None))
        except RejectedEventError as exc:
            out.append((index, None, str(exc)))
    return out
