"""Scheduled-peak processes: slot bookkeeping and normal-model forecasts.

A process owns one regular peak schedule (e.g. a nightly backup spike).
While a step falls on its slot the main filter is switched off and the
observation feeds this process instead.  Under a noninformative prior the
predictive for the next peak is Student-t around the running sample mean,
so only the count and the first two moments are kept.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy.stats import t as student_t

from .dlm import Forecast
from .errors import InputError, InsufficientDataError


@dataclass
class SlotSpec:
    """Schedule descriptor: offset within a period, with matching slack."""

    period: int
    offset: int
    tolerance: int = 1

    def matches(self, step_index: int) -> bool:
        d = (step_index - self.offset) % self.period
        return min(d, self.period - d) <= self.tolerance


@dataclass
class OutburstProcess:
    """Running peak statistics for one slot.

    ``mean`` is undefined until the first peak and the variance until the
    second; the streaming recursion (Welford) keeps both exactly equal to
    their batch counterparts.
    """

    slot: SlotSpec
    count: int = 0
    mean: float = 0.0
    _m2: float = field(default=0.0, repr=False)  # sum of squared deviations

    @property
    def variance(self) -> float:
        """Sample variance (denominator count-1); undefined below 2 peaks."""
        if self.count < 2:
            raise InsufficientDataError("variance needs at least 2 peaks")
        return self._m2 / (self.count - 1)

    def matches_step(self, step_index: int) -> bool:
        return self.slot.matches(step_index)

    def observe(self, x: float) -> None:
        if not math.isfinite(x):
            raise InputError(f"peak observation must be finite, got {x}")
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self._m2 += d * (x - self.mean)

    def predict(self, coverage: float = 0.95) -> Forecast:
        """Student-t predictive for the next peak (needs >= 2 peaks).

        Centered on the sample mean with scale sqrt((1 + 1/count) * s2) and
        count-1 degrees of freedom.
        """
        if self.count < 2:
            raise InsufficientDataError(
                f"peak forecast needs at least 2 observations, have {self.count}")
        if not 0.0 <= coverage < 1.0:
            raise InputError(f"coverage must be in [0, 1), got {coverage}")
        scale2 = (1.0 + 1.0 / self.count) * self.variance
        tq = student_t.ppf(0.5 + coverage / 2.0, df=self.count - 1)
        half = tq * math.sqrt(scale2)
        return Forecast(1, self.mean, scale2, self.mean - half, self.mean + half,
                        coverage)


def is_outburst_time(proc: OutburstProcess, step_index: int) -> bool:
    return proc.matches_step(step_index)
