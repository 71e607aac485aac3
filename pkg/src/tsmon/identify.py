"""Automatic model identification from a training window.

Pipeline: decide continuous vs discrete, then (continuous only) look for
a seasonal period via regularity of sign changes in the sample ACF and
for regular peak slots via a repetition test over candidate periods.
The result is a blueprint the engine turns into a fitted model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.fft import next_fast_len, rfft, irfft

from .errors import InputError, InsufficientDataError
from .outburst import SlotSpec

MIN_TRAINING_POINTS = 100
WEEK_SECONDS = 7 * 86400


@dataclass
class TrainingWindow:
    """Uniformly spaced training values; NaN marks a missing sample."""

    values: np.ndarray
    step_seconds: int
    start_time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size == 0:
            raise InputError("training window is empty")
        if self.step_seconds <= 0:
            raise InputError(f"step_seconds must be positive, got {self.step_seconds}")

    @property
    def observed(self) -> np.ndarray:
        return self.values[~np.isnan(self.values)]


@dataclass
class Blueprint:
    """What to build for one series."""

    kind: str  # "continuous" | "discrete"
    seasonal_period: int | None = None
    outburst_slots: list[SlotSpec] = field(default_factory=list)
    num_states: int | None = None  # discrete only


def classify(window: TrainingWindow, distinct_cap: int = 100) -> str:
    """Discrete iff all observed values are nonnegative integers and few distinct."""
    obs = window.observed
    if obs.size < MIN_TRAINING_POINTS:
        raise InsufficientDataError(
            f"classification needs >= {MIN_TRAINING_POINTS} observations, have {obs.size}")
    integral = bool(np.all(obs >= 0) and np.all(obs == np.floor(obs)))
    if integral and np.unique(obs).size <= distinct_cap:
        return "discrete"
    return "continuous"


def sample_acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased sample autocorrelation for lags 0..max_lag (FFT-based)."""
    x = np.asarray(x, dtype=float)
    centered = x - x.mean()
    n = x.size
    nfft = next_fast_len(2 * n)
    fx = rfft(centered, nfft)
    acov = irfft(fx * np.conj(fx), nfft)[:max_lag + 1]
    if acov[0] <= 0:
        raise InputError("series has zero variance")
    return acov / acov[0]


def _fill_missing(values: np.ndarray) -> np.ndarray:
    """Linear interpolation over gaps (edges hold the nearest value)."""
    out = values.copy()
    nan = np.isnan(out)
    if nan.any():
        idx = np.arange(out.size)
        out[nan] = np.interp(idx[nan], idx[~nan], out[~nan])
    return out


def _detrended(values: np.ndarray) -> np.ndarray:
    t = np.arange(values.size, dtype=float)
    slope, intercept = np.polyfit(t, values, 1)
    return values - (intercept + slope * t)


def detect_seasonality(window: TrainingWindow, ratio_threshold: float = 0.1,
                       max_lag: int | None = None,
                       clip_sigma: float = 3.0) -> int | None:
    """Seasonal period from the spacing of ACF sign changes, if regular.

    Collects the lags where the sample ACF changes sign and measures the
    skip-one differences between them (each spans a full period).  When
    their dispersion-to-mean ratio stays under ``ratio_threshold`` the
    rounded mean is returned as the period.

    The series is detrended first, and values beyond ``clip_sigma``
    standard deviations are clipped so that regular peaks cannot imprint a
    fake period on the ACF.  Both transforms leave the ACF of genuinely
    seasonal signals essentially untouched.
    """
    values = _fill_missing(window.values)
    n = values.size
    if n < 8:
        return None
    resid = _detrended(values)
    sd = resid.std()
    if sd < 1e-12 * (1.0 + abs(values.mean())):
        return None  # constant (or exactly linear) series
    resid = np.clip(resid, -clip_sigma * sd, clip_sigma * sd)

    if max_lag is None:
        weekly = WEEK_SECONDS // window.step_seconds
        max_lag = min(n // 3, 2 * weekly)
    max_lag = max(3, min(max_lag, n - 2))
    acf = sample_acf(resid, max_lag)

    signs = np.sign(acf[1:])  # lag 0 is trivially 1
    # An exact zero belongs with the lag that follows it.
    for i in range(signs.size - 2, -1, -1):
        if signs[i] == 0:
            signs[i] = signs[i + 1]
    change = np.nonzero(signs[:-1] * signs[1:] < 0)[0] + 2  # lag where new sign starts
    if change.size < 3:
        return None
    diffs = (change[2:] - change[:-2]).astype(float)
    mean = diffs.mean()
    if mean <= 0:
        return None
    spread = diffs.std()
    if spread / mean >= ratio_threshold:
        return None
    period = int(round(mean))
    return period if period >= 3 else None


def _flag_outliers(values: np.ndarray, sigma: float) -> np.ndarray:
    """Two-pass flags: estimate, drop flagged, re-estimate, re-flag once."""
    ok = ~np.isnan(values)
    mean = values[ok].mean()
    std = values[ok].std()
    flagged = ok & (np.abs(values - mean) > sigma * std)
    keep = ok & ~flagged
    if keep.any() and flagged.any():
        mean = values[keep].mean()
        std = values[keep].std()
        flagged = ok & (np.abs(values - mean) > sigma * std)
    return flagged


def _remove_seasonal_average(values: np.ndarray, period: int) -> np.ndarray:
    out = values.copy()
    for phase in range(period):
        col = out[phase::period]
        ok = ~np.isnan(col)
        if ok.any():
            col[ok] -= col[ok].mean()
    return out


def detect_outbursts(window: TrainingWindow, sigma: float = 3.0,
                     repetition: float = 0.8, candidate_period: int | None = None,
                     seasonal_period: int | None = None) -> list[SlotSpec]:
    """Regular peak slots: outliers recurring in more than ``repetition``
    of the candidate periods.

    Args:
        sigma: flag a sample when it sits more than this many standard
            deviations from the (robustly re-estimated) mean.
        repetition: required fraction of periods showing the peak,
            exclusive (a slot present in exactly this fraction is dropped).
        candidate_period: slot grid in steps; defaults to one day.
        seasonal_period: when set, a per-phase average is subtracted first
            so seasonal crests are not mistaken for peaks.
    """
    if candidate_period is None:
        candidate_period = max(1, 86400 // window.step_seconds)
    period = candidate_period
    n_periods = window.values.size // period
    if n_periods < 2:
        raise InsufficientDataError(
            f"outburst detection needs >= 2 periods of {period} steps, "
            f"have {window.values.size} samples")
    values = window.values[:n_periods * period]
    if seasonal_period is not None:
        values = _remove_seasonal_average(values, seasonal_period)

    flagged = np.nonzero(_flag_outliers(values, sigma))[0]
    if flagged.size == 0:
        return []

    offsets = flagged % period
    # Cluster offsets that sit within one slot of each other (circularly).
    uniq = np.unique(offsets)
    clusters: list[list[int]] = [[int(uniq[0])]]
    for off in uniq[1:]:
        if off - clusters[-1][-1] <= 1:
            clusters[-1].append(int(off))
        else:
            clusters.append([int(off)])
    if len(clusters) > 1 and (period - clusters[-1][-1] + clusters[0][0]) <= 1:
        clusters[0] = clusters.pop() + clusters[0]

    slots: list[SlotSpec] = []
    counts = np.bincount(offsets, minlength=period)
    for members in clusters:
        rep = max(members, key=lambda off: (counts[off], -off))
        tol = max(min(abs(off - rep), period - abs(off - rep)) for off in members)
        member_set = set(members)
        hit_periods = {int(i // period) for i in flagged if int(i % period) in member_set}
        if len(hit_periods) / n_periods > repetition:
            slots.append(SlotSpec(period, int(rep), int(tol)))
    slots.sort(key=lambda s: s.offset)
    return slots


def build_blueprint(window: TrainingWindow, *, distinct_cap: int = 100,
                    ratio_threshold: float = 0.1, sigma: float = 3.0,
                    repetition: float = 0.8, candidate_period: int | None = None,
                    extra_states: int = 5, critical: float | None = None,
                    kind: str | None = None) -> Blueprint:
    """Classify and identify blocks; ``kind`` forces the classification."""
    if kind is None:
        kind = classify(window, distinct_cap)
    elif kind not in ("continuous", "discrete"):
        raise InputError(f"kind must be continuous or discrete, got {kind!r}")
    if kind == "discrete":
        if critical is None:
            raise InputError("discrete series need a critical level to size the chain")
        return Blueprint("discrete", num_states=int(math.ceil(critical)) + extra_states)

    period = detect_seasonality(window, ratio_threshold, clip_sigma=sigma)
    try:
        slots = detect_outbursts(window, sigma, repetition, candidate_period,
                                 seasonal_period=period)
    except InsufficientDataError:
        slots = []  # window shorter than two candidate periods: no peak evidence
    return Blueprint("continuous", seasonal_period=period, outburst_slots=slots)
