import math

import numpy as np
import pytest

from tsmon import DlmModel, InputError, make_seasonal_block, make_trend_block
from tsmon.dlm import gaussian_forecast

from oracles import DenseDlmOracle, seasonal_spec, trend_spec


def stream_for(kind: str, rng, n: int, period: int = 12) -> np.ndarray:
    """Random data matching a model's structure.

    A seasonal-only model cannot represent a nonzero level (its factors
    sum to zero), so feeding it one makes the state diverge; every model
    gets data its blocks can actually track.
    """
    t = np.arange(n)
    noise = rng.normal(0.0, 1.0, size=n)
    if kind == "trend":
        return 50.0 + 0.05 * t + np.cumsum(rng.normal(0.0, 0.2, size=n)) + noise
    if kind == "seasonal":
        return 6.0 * np.sin(2 * np.pi * t / 9) + noise
    return 30.0 + 0.02 * t + 5.0 * np.sin(2 * np.pi * t / period) + noise


class TestTrendBlock:
    def test_structure(self):
        b = make_trend_block()
        assert b.F.tolist() == [1.0, 0.0]
        assert b.G.tolist() == [[1.0, 1.0], [0.0, 1.0]]

    def test_prior(self):
        b = make_trend_block()
        assert b.m.tolist() == [0.0, 0.0]
        assert b.C.tolist() == [[1e7, 0.0], [0.0, 1e7]]

    def test_noise_defaults(self):
        b = make_trend_block()
        assert b.V == 1.0
        assert b.delta == 0.95


class TestSeasonalBlock:
    def test_structure_s4(self):
        b = make_seasonal_block(4)
        assert b.F.tolist() == [1.0, 0.0, 0.0]
        assert b.G.tolist() == [[-1.0, -1.0, -1.0],
                                [1.0, 0.0, 0.0],
                                [0.0, 1.0, 0.0]]

    def test_prior_zero_row_sums(self):
        b = make_seasonal_block(4, prior_scale=3.0)
        assert b.C.tolist() == [[3.0, -1.5, -1.5],
                                [-1.5, 3.0, -1.5],
                                [-1.5, -1.5, 3.0]]
        assert np.allclose(b.C.sum(axis=0), 0.0)
        assert np.allclose(b.C.sum(axis=1), 0.0)

    def test_period_2_rejected(self):
        with pytest.raises(InputError):
            make_seasonal_block(2)

    def test_rotation_has_full_period(self):
        b = make_seasonal_block(7)
        assert np.allclose(np.linalg.matrix_power(b.G, 7), np.eye(6))


class TestModelConstruction:
    def test_duplicate_blocks_rejected(self):
        with pytest.raises(InputError):
            DlmModel([make_trend_block(), make_trend_block()])

    def test_empty_rejected(self):
        with pytest.raises(InputError):
            DlmModel([])


class TestFilterUpdate:
    def test_first_observation_dominates_diffuse_prior(self):
        m = DlmModel([make_trend_block()])
        m.update(5.0)
        assert abs(m.block("trend").m[0] - 5.0) < 1e-3

    def test_constant_series_convergence(self):
        for c in (12.0, -40.0, 0.3):
            m = DlmModel([make_trend_block(), make_seasonal_block(4)])
            fc = None
            for _ in range(200):
                fc = m.update(c)
            assert abs(fc.point - c) <= 0.05 * abs(c) + 0.05

    def test_no_discount_shrinks_forecast_variance(self):
        m = DlmModel([make_trend_block(delta=1.0)])
        variances = [m.update(3.0).variance for _ in range(30)]
        assert all(a > b for a, b in zip(variances, variances[1:]))

    def test_non_finite_rejected(self):
        m = DlmModel([make_trend_block()])
        for bad in (float("nan"), float("inf")):
            with pytest.raises(InputError):
                m.update(bad)

    def test_forecast_is_pre_update(self):
        m = DlmModel([make_trend_block()])
        for x in (1.0, 2.0, 3.0):
            m.update(x)
        before = m.one_step()
        returned = m.update(10.0)
        assert returned.point == before.point
        assert returned.variance == before.variance

    def test_covariance_stays_symmetric(self, rng):
        m = DlmModel([make_trend_block(), make_seasonal_block(6)])
        for x in rng.normal(size=300):
            m.update(float(x))
            gap = np.abs(m.C - m.C.T).max()
            assert gap <= 1e-8 * (1.0 + np.abs(m.C).max())


class TestMissingUpdate:
    def test_mean_evolves_exactly(self):
        m = DlmModel([make_trend_block()])
        for x in (1.0, 2.0, 3.5):
            m.update(x)
        expected = m.G @ m.m
        m.update_missing()
        assert m.m.tolist() == expected.tolist()

    def test_matches_oracle_gap_handling(self, rng):
        m = DlmModel([make_trend_block(), make_seasonal_block(5)])
        oracle = DenseDlmOracle([trend_spec(), seasonal_spec(5)])
        xs = rng.normal(10.0, 2.0, size=120)
        for i, x in enumerate(xs):
            value = None if i % 7 == 3 else float(x)
            if value is None:
                m.update_missing()
            else:
                m.update(value)
            oracle.step(value)
        assert np.allclose(m.m, oracle.m, rtol=1e-9, atol=1e-12)
        assert np.allclose(m.C, oracle.C, rtol=1e-9, atol=1e-12)

    def test_uncertainty_grows_without_data(self):
        m = DlmModel([make_trend_block()])
        for x in (5.0, 5.1, 4.9, 5.0):
            m.update(x)
        traces = []
        for _ in range(5):
            m.update_missing()
            traces.append(float(np.trace(m.C)))
        assert all(a < b for a, b in zip(traces, traces[1:]))


class TestPredict:
    def test_trend_points_extend_the_line(self):
        m = DlmModel([make_trend_block()])
        m.block("trend").m[:] = (2.0, 0.5)
        points = [fc.point for fc in m.predict(3)]
        assert points == pytest.approx([2.5, 3.0, 3.5], abs=1e-12)

    def test_seasonal_cycle_repeats(self):
        m = DlmModel([make_seasonal_block(3)])
        m.block("seasonal").m[:] = (4.0, -3.0)
        assert m.seasonal_cycle().tolist() == pytest.approx([4.0, -1.0, -3.0])
        points = [fc.point for fc in m.predict(4)]
        assert points == pytest.approx([-1.0, -3.0, 4.0, -1.0])

    def test_k1_matches_one_step(self, rng):
        m = DlmModel([make_trend_block(), make_seasonal_block(4)])
        for x in rng.normal(20.0, 3.0, size=50):
            m.update(float(x))
        one = m.one_step()
        k1 = m.predict(1)[0]
        assert k1.point == pytest.approx(one.point, rel=1e-10)
        assert k1.variance == pytest.approx(one.variance, rel=1e-10)

    def test_bad_horizon(self):
        m = DlmModel([make_trend_block()])
        with pytest.raises(InputError):
            m.predict(0)


class TestIntervals:
    def test_symmetry_and_width(self):
        fc = gaussian_forecast(1, 3.0, 4.0, 0.95)
        assert fc.upper - fc.point == pytest.approx(fc.point - fc.lower)
        assert fc.upper - fc.lower == pytest.approx(2 * 1.959963984540054 * 2.0)

    def test_width_increases_with_coverage(self):
        widths = [gaussian_forecast(1, 0.0, 1.0, c).upper for c in
                  (0.5, 0.8, 0.9, 0.95, 0.99)]
        assert all(a < b for a, b in zip(widths, widths[1:]))

    def test_bad_coverage(self):
        with pytest.raises(InputError):
            gaussian_forecast(1, 0.0, 1.0, 1.0)


class TestOracleEquivalence:
    """The filter and its forecasts must track the dense-matrix reference."""

    @pytest.mark.parametrize("specs,blocks,kind", [
        ([trend_spec()], [make_trend_block()], "trend"),
        ([seasonal_spec(9)], [make_seasonal_block(9)], "seasonal"),
        ([trend_spec(), seasonal_spec(12)],
         [make_trend_block(), make_seasonal_block(12)], "combined"),
    ])
    def test_filter_and_predict_match(self, rng, specs, blocks, kind):
        model = DlmModel(blocks)
        oracle = DenseDlmOracle(specs)
        xs = stream_for(kind, rng, 400)
        for x in xs:
            got = model.update(float(x))
            want_f, want_q = oracle.step(float(x))
            assert got.point == pytest.approx(want_f, rel=1e-9, abs=1e-9)
            assert got.variance == pytest.approx(want_q, rel=1e-9, abs=1e-9)
        predictions = model.predict(10)
        for fc, (want_f, want_q) in zip(predictions, oracle.predict(10)):
            assert fc.point == pytest.approx(want_f, rel=1e-9, abs=1e-9)
            assert fc.variance == pytest.approx(want_q, rel=1e-9, abs=1e-9)

    def test_superposition_sums_block_contributions(self, rng):
        """The joint one-step point forecast decomposes into the blocks'
        own observation contributions."""
        model = DlmModel([make_trend_block(), make_seasonal_block(6)])
        for x in rng.normal(5.0, 1.0, size=200):
            model.update(float(x))
        trend, seasonal = model.blocks
        a = model.G @ model.m
        joint = float(model.F @ a)
        parts = float(trend.F @ a[:2]) + float(seasonal.F @ a[2:])
        assert joint == pytest.approx(parts, rel=1e-12)
