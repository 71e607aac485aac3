"""Alarm logic: anomaly stream, short-term threshold checks, long-term crossings.

Two configured observation levels (warning below critical) drive a
two-intensity alarm scheme.  Anomalies are out-of-interval observations,
rate-limited by a moving window so isolated misses stay quiet.
Long-term checks work on point forecasts only: closed-form crossing
horizons for trend/seasonal states, stationary tail mass for chains.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .dlm import Forecast
from .errors import InputError


class AlarmKind(str, enum.Enum):
    ANOMALY = "anomaly"
    WARNING_SHORT = "warning_short"
    CRITICAL_SHORT = "critical_short"
    WARNING_LONG = "warning_long"
    CRITICAL_LONG = "critical_long"


@dataclass
class Thresholds:
    warning: float
    critical: float

    def __post_init__(self):
        if not self.warning < self.critical:
            raise InputError(
                f"warning must be below critical, got {self.warning} >= {self.critical}")


@dataclass
class Alarm:
    kind: AlarmKind
    series_id: str
    at_step: int
    horizon: int | None
    intensity: int


@dataclass
class ViolationWindow:
    """Ring of the most recent in/out-of-interval outcomes."""

    window_len: int = 10
    min_violations: int = 3
    flags: deque = field(default_factory=deque)

    def __post_init__(self):
        if self.window_len < 1:
            raise InputError(f"window_len must be >= 1, got {self.window_len}")
        if not 1 <= self.min_violations <= self.window_len:
            raise InputError(
                f"min_violations must be in 1..{self.window_len}, got {self.min_violations}")
        self.flags = deque(self.flags, maxlen=self.window_len)

    def push(self, violated: bool) -> int:
        self.flags.append(bool(violated))
        return sum(self.flags)


def check_anomaly(x: float, forecast: Forecast, window: ViolationWindow,
                  series_id: str = "", at_step: int = 0) -> Alarm | None:
    """Push the interval outcome for ``x`` and alarm when misses pile up.

    ``forecast`` must be the one-step predictive issued before ``x`` was
    observed.  The window is advanced in place; an alarm fires once the
    violation count inside it reaches the configured minimum, with the
    count as intensity.
    """
    violated = x < forecast.lower or x > forecast.upper
    count = window.push(violated)
    if violated and count >= window.min_violations:
        return Alarm(AlarmKind.ANOMALY, series_id, at_step, None, count)
    return None


def check_threshold_short(forecasts: list[Forecast], thresholds: Thresholds,
                          series_id: str = "", at_step: int = 0) -> list[Alarm]:
    """Short-horizon safety check against the warning/critical levels.

    A horizon supports a level when its interval covers the level or sits
    entirely above it (upper bound at or beyond the level).  Intensity is
    the number of supporting horizons; the reported horizon is the first.
    """
    alarms: list[Alarm] = []
    for kind, level in ((AlarmKind.WARNING_SHORT, thresholds.warning),
                        (AlarmKind.CRITICAL_SHORT, thresholds.critical)):
        hits = [fc.horizon for fc in forecasts if fc.upper >= level]
        if hits:
            alarms.append(Alarm(kind, series_id, at_step, min(hits), len(hits)))
    return alarms


def crossing_time_linear(a0: float, a1: float, level: float,
                         max_horizon: int) -> int | None:
    """First horizon where the trend point forecast a0 + a1*j exceeds level.

    Already at or above the level counts as horizon 1; a non-increasing
    trend below the level never crosses.
    """
    if a0 >= level:
        return 1 if max_horizon >= 1 else None
    if a1 <= 0:
        return None
    if (level - a0) / a1 > max_horizon + 1:
        return None
    j = math.floor((level - a0) / a1) + 1
    # Guard the closed form against rounding at the boundary: the result
    # must agree with a literal scan of the forecasts.
    while j > 1 and a0 + a1 * (j - 1) > level:
        j -= 1
    while a0 + a1 * j <= level:
        j += 1
    return j if j <= max_horizon else None


def crossing_time_seasonal(cycle: np.ndarray, level: float,
                           max_horizon: int) -> int | None:
    """First horizon whose seasonal factor exceeds level, scanning the cycle."""
    cycle = np.asarray(cycle, dtype=float)
    s = cycle.size
    for j in range(1, max_horizon + 1):
        if cycle[j % s] > level:
            return j
    return None


def crossing_time_combined(a0: float, a1: float, cycle: np.ndarray, level: float,
                           max_horizon: int) -> int | None:
    """First horizon where trend plus seasonal reaches the level (>=)."""
    cycle = np.asarray(cycle, dtype=float)
    s = cycle.size
    for j in range(1, max_horizon + 1):
        if a0 + a1 * j + cycle[j % s] >= level:
            return j
    return None


def check_long_term_continuous(a0: float, a1: float, cycle: np.ndarray | None,
                               thresholds: Thresholds, max_horizon: int,
                               series_id: str = "", at_step: int = 0,
                               ) -> tuple[int | None, int | None, list[Alarm]]:
    """Crossing horizons for both levels plus the alarms they imply."""
    def crossing(level: float) -> int | None:
        if cycle is None:
            return crossing_time_linear(a0, a1, level, max_horizon)
        return crossing_time_combined(a0, a1, cycle, level, max_horizon)

    jw = crossing(thresholds.warning)
    jc = crossing(thresholds.critical)
    alarms = []
    if jw is not None:
        alarms.append(Alarm(AlarmKind.WARNING_LONG, series_id, at_step, jw, 1))
    if jc is not None:
        alarms.append(Alarm(AlarmKind.CRITICAL_LONG, series_id, at_step, jc, 1))
    return jw, jc, alarms


def check_long_term_discrete(pi: np.ndarray, thresholds: Thresholds,
                             mass_threshold: float = 0.05, series_id: str = "",
                             at_step: int = 0) -> tuple[float, float, list[Alarm]]:
    """Stationary tail masses above each level, alarming past the threshold.

    Returns (tail above warning, tail above critical, alarms); an alarm
    fires only when the tail mass strictly exceeds ``mass_threshold``.
    """
    pi = np.asarray(pi, dtype=float)
    states = np.arange(1, pi.size + 1)
    tail_w = float(pi[states > thresholds.warning].sum())
    tail_c = float(pi[states > thresholds.critical].sum())
    alarms = []
    if tail_w > mass_threshold:
        alarms.append(Alarm(AlarmKind.WARNING_LONG, series_id, at_step, None, 1))
    if tail_c > mass_threshold:
        alarms.append(Alarm(AlarmKind.CRITICAL_LONG, series_id, at_step, None, 1))
    return tail_w, tail_c, alarms
