import numpy as np
import pytest

from tsmon import InputError, InsufficientDataError, TrainingWindow, \
    build_blueprint, classify, detect_outbursts, detect_seasonality
from tsmon.outburst import SlotSpec
from tsmon import synth


def window(values, h=600):
    return TrainingWindow(np.asarray(values, dtype=float), h)


class TestClassify:
    def test_bounded_integers_are_discrete(self, rng):
        values = rng.integers(0, 41, size=500).astype(float)
        assert classify(window(values)) == "discrete"

    def test_fractional_values_are_continuous(self, rng):
        values = rng.integers(0, 41, size=500) + 0.25
        assert classify(window(values)) == "continuous"

    def test_distinct_cap(self, rng):
        values = rng.permutation(5000).astype(float)
        assert classify(window(values), distinct_cap=100) == "continuous"
        small = rng.integers(0, 50, size=5000).astype(float)
        assert classify(window(small), distinct_cap=100) == "discrete"

    def test_negative_integers_are_continuous(self, rng):
        values = rng.integers(-5, 5, size=500).astype(float)
        assert classify(window(values)) == "continuous"

    def test_too_few_points(self):
        with pytest.raises(InsufficientDataError):
            classify(window(np.ones(99)))

    def test_missing_values_ignored(self, rng):
        values = rng.integers(0, 10, size=300).astype(float)
        values[::5] = np.nan
        assert classify(window(values)) == "discrete"


class TestSeasonality:
    def test_sinusoid_recovered(self, rng):
        t = np.arange(120)
        values = 10 * np.sin(2 * np.pi * t / 12) + rng.normal(0, 0.5, 120)
        period = detect_seasonality(window(values))
        assert period in (11, 12, 13)

    def test_white_noise_rejected(self, rng):
        values = rng.normal(0, 1, size=2000)
        assert detect_seasonality(window(values)) is None

    def test_linear_ramp_rejected(self, rng):
        t = np.arange(1000, dtype=float)
        assert detect_seasonality(window(0.3 * t)) is None
        assert detect_seasonality(window(0.3 * t + rng.normal(0, 1, 1000))) is None

    def test_constant_rejected(self):
        assert detect_seasonality(window(np.full(500, 42.0))) is None

    def test_affine_invariance(self, rng):
        t = np.arange(600)
        base = np.sin(2 * np.pi * t / 24) + rng.normal(0, 0.2, 600)
        p1 = detect_seasonality(window(base))
        p2 = detect_seasonality(window(1000.0 * base + 5e6))
        assert p1 is not None
        assert p1 == p2

    def test_survives_trend_and_spikes(self, rng):
        """A drifting level and a regular daily spike must neither mask nor
        fake a period."""
        t = np.arange(7 * 144)
        seasonal = 8 * np.sin(2 * np.pi * t / 144)
        values = 100 + 0.01 * t + seasonal + rng.normal(0, 1.5, t.size)
        values[(t % 144) == 40] += 60.0
        assert detect_seasonality(window(values)) in (143, 144, 145)

        spike_only = 100 + 0.01 * t + rng.normal(0, 1.5, t.size)
        spike_only[(t % 144) == 40] += 60.0
        assert detect_seasonality(window(spike_only)) is None


def spike_fixture(rng, days_with_spike, n_days=5, period=144, offset=30,
                  size=40.0):
    values = 10.0 + rng.normal(0, 0.5, n_days * period)
    for day in days_with_spike:
        values[day * period + offset] += size
    return window(values)


class TestOutbursts:
    def test_spike_every_day_detected(self, rng):
        slots = detect_outbursts(spike_fixture(rng, range(5)), 3.0, 0.8, 144)
        assert [s.offset for s in slots] == [30]
        assert slots[0].period == 144
        assert slots[0].tolerance == 0

    def test_three_of_five_days_rejected(self, rng):
        slots = detect_outbursts(spike_fixture(rng, (0, 2, 4)), 3.0, 0.8, 144)
        assert slots == []

    def test_exactly_at_threshold_rejected(self, rng):
        # 4/5 == 0.8 is not strictly above the threshold.
        slots = detect_outbursts(spike_fixture(rng, (0, 1, 2, 3)), 3.0, 0.8, 144)
        assert slots == []

    def test_zero_threshold_accepts_any_recurrence(self, rng):
        # Every slot with at least one flagged period comes back, including
        # chance noise excursions; the single-day spike must be among them.
        fixture = spike_fixture(rng, (1,))
        offsets = [s.offset for s in detect_outbursts(fixture, 3.0, 0.0, 144)]
        assert 30 in offsets

    def test_monotone_in_repetition_threshold(self, rng):
        fixture = spike_fixture(rng, (0, 1, 2, 4))
        detected = [len(detect_outbursts(fixture, 3.0, q, 144))
                    for q in (0.0, 0.5, 0.79, 0.8, 0.95)]
        assert detected == sorted(detected, reverse=True)

    def test_jittered_slot_gets_tolerance(self, rng):
        values = 10.0 + rng.normal(0, 0.5, 5 * 144)
        for day, wobble in zip(range(5), (0, 1, 0, -1, 0)):
            values[day * 144 + 30 + wobble] += 40.0
        slots = detect_outbursts(window(values), 3.0, 0.8, 144)
        assert [s.offset for s in slots] == [30]
        assert slots[0].tolerance == 1

    def test_two_distinct_slots(self, rng):
        values = 10.0 + rng.normal(0, 0.5, 5 * 144)
        for day in range(5):
            values[day * 144 + 30] += 40.0
            values[day * 144 + 100] += 40.0
        slots = detect_outbursts(window(values), 3.0, 0.8, 144)
        assert [s.offset for s in slots] == [30, 100]

    def test_needs_two_periods(self, rng):
        with pytest.raises(InsufficientDataError):
            detect_outbursts(window(rng.normal(0, 1, 200)), 3.0, 0.8, 144)

    def test_matches_brute_force_recount(self, rng):
        """Eq.-style check: emitted slots are exactly those whose flagged
        periods outnumber q*b, recounted from the flag set directly."""
        fixture = spike_fixture(rng, (0, 1, 3, 4))
        values = fixture.values
        mean, std = values.mean(), values.std()
        first = np.abs(values - mean) > 3.0 * std
        keep = ~first
        mean2, std2 = values[keep].mean(), values[keep].std()
        flagged = np.nonzero(np.abs(values - mean2) > 3.0 * std2)[0]
        per_slot_periods = {}
        for idx in flagged:
            per_slot_periods.setdefault(idx % 144, set()).add(idx // 144)
        for q in (0.0, 0.5, 0.8):
            want = sorted(off for off, periods in per_slot_periods.items()
                          if len(periods) / 5 > q)
            got = [s.offset for s in detect_outbursts(fixture, 3.0, q, 144)]
            assert got == want


class TestBlueprint:
    def test_trend_plus_outburst_archetype(self, rng):
        _, values = synth.generate("trend+outburst", 5 * 144, seed=42,
                                   slope=0.002)
        bp = build_blueprint(window(values))
        assert bp.kind == "continuous"
        assert bp.seasonal_period is None
        assert [s.offset for s in bp.outburst_slots] == [30]

    def test_seasonal_archetype(self):
        _, values = synth.generate("trend+seasonal", 5 * 7 * 144, seed=43,
                                   slope=0.0005)
        bp = build_blueprint(window(values))
        assert bp.kind == "continuous"
        assert bp.seasonal_period in (143, 144, 145)
        assert bp.outburst_slots == []

    def test_constant_series_is_trend_only(self, rng):
        values = 5.0 + rng.normal(0, 0.01, 400)
        bp = build_blueprint(window(values))
        assert bp.kind == "continuous"
        assert bp.seasonal_period is None
        assert bp.outburst_slots == []

    def test_discrete_sizes_chain_from_critical(self, rng):
        values = rng.integers(1, 30, size=500).astype(float)
        bp = build_blueprint(window(values), critical=40, extra_states=5)
        assert bp.kind == "discrete"
        assert bp.num_states == 45
        assert bp.outburst_slots == []
        assert bp.seasonal_period is None

    def test_discrete_requires_critical(self, rng):
        values = rng.integers(1, 30, size=500).astype(float)
        with pytest.raises(InputError):
            build_blueprint(window(values))

    def test_kind_override(self, rng):
        values = rng.integers(1, 30, size=500).astype(float)
        bp = build_blueprint(window(values), kind="continuous")
        assert bp.kind == "continuous"

    def test_determinism(self):
        _, values = synth.generate("trend+seasonal+outburst", 5 * 7 * 144,
                                   seed=44)
        w = window(values)
        assert build_blueprint(w) == build_blueprint(w)
