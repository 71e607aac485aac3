"""Runtime configuration, with per-field validation.

Every knob has a sensible default and can be overridden globally or per
series.  Horizon-like fields expressed in wall time (the long-term
relevance window, the outburst candidate period) default from the
monitoring period when left unset.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .errors import ConfigError


@dataclass
class Config:
    coverage: float = 0.95          # predictive interval probability
    horizon: int = 3                # short-term forecast steps (k)
    acf_ratio: float = 0.1          # seasonality dispersion/mean acceptance ratio
    spike_sigma: float = 3.0        # outlier distance for peak flagging
    repetition: float = 0.8         # required peak recurrence fraction
    extra_states: int = 5           # chain headroom above the critical level
    window_len: int = 10            # anomaly moving window length
    min_violations: int = 3         # violations in window before alarming
    max_horizon: int | None = None  # long-term relevance window (steps); default 5 h
    mass_threshold: float = 0.05    # stationary tail mass trigger
    prior_scale: float = 1e7        # diffuse prior variance for DLM states
    discount: float = 0.95          # evolution discount factor
    candidate_period: int | None = None  # peak slot grid (steps); default 1 day
    distinct_cap: int = 100         # max distinct values for a discrete series
    stationary_every: int = 100     # steps between stationary solves
    slot_tolerance: int = 1         # default slot slack for hand-built processes
    max_gap: int = 10080            # largest timestamp gap filled as missing (steps)
    kind: str | None = None         # force "continuous" / "discrete"

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        def require(ok: bool, message: str) -> None:
            if not ok:
                raise ConfigError(message)

        require(0.0 < self.coverage < 1.0,
                f"coverage must be in (0, 1), got {self.coverage}")
        require(self.horizon >= 1, f"horizon must be >= 1, got {self.horizon}")
        require(self.acf_ratio > 0, f"acf_ratio must be positive, got {self.acf_ratio}")
        require(self.spike_sigma > 0,
                f"spike_sigma must be positive, got {self.spike_sigma}")
        require(0.0 < self.repetition <= 1.0,
                f"repetition must be in (0, 1], got {self.repetition}")
        require(self.extra_states >= 1,
                f"extra_states must be >= 1, got {self.extra_states}")
        require(self.window_len >= 1,
                f"window_len must be >= 1, got {self.window_len}")
        require(1 <= self.min_violations <= self.window_len,
                f"min_violations must be in 1..{self.window_len}, "
                f"got {self.min_violations}")
        require(self.max_horizon is None or self.max_horizon >= 1,
                f"max_horizon must be >= 1, got {self.max_horizon}")
        require(0.0 <= self.mass_threshold < 1.0,
                f"mass_threshold must be in [0, 1), got {self.mass_threshold}")
        require(self.prior_scale > 0,
                f"prior_scale must be positive, got {self.prior_scale}")
        require(0.0 < self.discount <= 1.0,
                f"discount must be in (0, 1], got {self.discount}")
        require(self.candidate_period is None or self.candidate_period >= 2,
                f"candidate_period must be >= 2, got {self.candidate_period}")
        require(self.distinct_cap >= 1,
                f"distinct_cap must be >= 1, got {self.distinct_cap}")
        require(self.stationary_every >= 1,
                f"stationary_every must be >= 1, got {self.stationary_every}")
        require(self.slot_tolerance >= 0,
                f"slot_tolerance must be >= 0, got {self.slot_tolerance}")
        require(self.max_gap >= 1, f"max_gap must be >= 1, got {self.max_gap}")
        require(self.kind in (None, "continuous", "discrete"),
                f"kind must be continuous or discrete, got {self.kind!r}")

    def resolved_max_horizon(self, step_seconds: int) -> int:
        if self.max_horizon is not None:
            return self.max_horizon
        return max(1, 5 * 3600 // step_seconds)

    def resolved_candidate_period(self, step_seconds: int) -> int:
        if self.candidate_period is not None:
            return self.candidate_period
        return max(2, 86400 // step_seconds)

    def replace(self, **overrides) -> "Config":
        return dataclasses.replace(self, **overrides)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "Config":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**data)
