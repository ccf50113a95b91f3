import math
from datetime import date, timedelta

import numpy as np
import pytest

from mpindex.forecast import (
    ForecastConfig,
    ForecastError,
    ForecastModel,
    decompose,
    fit,
    predict,
    select_regressors,
)

START = date(2020, 1, 6)


def weeks(n, start=START):
    return [start + timedelta(weeks=i) for i in range(n)]


class TestFit:
    def test_constant_series_recovers_intercept(self):
        n = 120
        model = fit(weeks(n), np.full(n, 3.0))
        assert model.intercept == pytest.approx(3.0, abs=1e-6)
        assert abs(model.base_slope) < 1e-6
        assert max(abs(d) for d in model.deltas) < 1e-6
        assert max(abs(c) for c in model.fourier_coef) < 1e-6
        assert model.residual_sigma < 1e-9

    def test_linear_trend_recovery(self):
        n = 160
        y = 0.1 + 0.02 * np.arange(n)
        model = fit(weeks(n), y)
        assert model.final_weekly_slope() == pytest.approx(0.02, abs=1e-4)
        assert max(abs(d) for d in model.deltas) < 1e-4

    def test_seasonal_recovery(self):
        n = 200
        t = np.arange(n)
        true_seasonal = 0.2 * np.sin(2 * math.pi * t / 52.18)
        model = fit(weeks(n), 0.5 + true_seasonal)
        fitted = model.seasonal_at(t.astype(float))
        r = np.corrcoef(fitted, true_seasonal)[0, 1]
        assert r > 0.99

    def test_too_short_series_rejected(self):
        n = 2 * (25 + 2) - 1
        with pytest.raises(ForecastError):
            fit(weeks(n), np.zeros(n))

    def test_misaligned_regressors_rejected(self):
        n = 80
        with pytest.raises(ForecastError):
            fit(weeks(n), np.zeros(n), regressors={"aod": np.zeros(n - 1)})

    def test_non_weekly_dates_rejected(self):
        days = weeks(80)
        days[3] += timedelta(days=1)
        with pytest.raises(ForecastError):
            fit(days, np.zeros(80))

    def test_in_sample_r2_nonnegative(self):
        rng = np.random.default_rng(0)
        n = 150
        t = np.arange(n)
        y = 0.4 + 0.001 * t + 0.1 * np.sin(2 * math.pi * t / 52.18) + rng.normal(0, 0.05, n)
        model = fit(weeks(n), y)
        yhat = model.trend_at(t.astype(float)) + model.seasonal_at(t.astype(float))
        assert np.mean((y - yhat) ** 2) <= np.var(y) + 1e-12

    def test_time_shift_equivariance(self):
        n = 120
        rng = np.random.default_rng(4)
        y = 0.3 + 0.002 * np.arange(n) + rng.normal(0, 0.02, n)
        a = fit(weeks(n), y)
        b = fit(weeks(n, start=START + timedelta(weeks=500)), y)
        fa = predict(a, 12)
        fb = predict(b, 12)
        assert np.allclose(fa.yhat, fb.yhat, atol=1e-9)
        assert [d - timedelta(weeks=500) for d in fb.week_starts] == list(fa.week_starts)

    def test_model_json_round_trip(self):
        n = 100
        rng = np.random.default_rng(1)
        model = fit(weeks(n), rng.uniform(0, 1, n), regressors={"aod": rng.uniform(0, 1, n)})
        again = ForecastModel.from_json(model.to_json())
        assert again == model


class TestPredict:
    def test_horizon_lengths_and_dates(self):
        n = 120
        model = fit(weeks(n), np.full(n, 0.4))
        for horizon in (4, 12, 52):
            result = predict(model, horizon)
            assert len(result) == horizon
            diffs = {result.week_starts[i + 1] - result.week_starts[i] for i in range(horizon - 1)}
            assert diffs <= {timedelta(weeks=1)}
            assert result.week_starts[0] == START + timedelta(weeks=n)

    def test_constant_model_flat_forecast(self):
        n = 120
        model = fit(weeks(n), np.full(n, 3.0))
        result = predict(model, 8)
        assert np.allclose(result.yhat, 3.0, atol=1e-6)
        assert np.all(result.upper - result.lower < 1e-6)

    def test_linear_extrapolation_error_bound(self):
        n = 160
        y = 0.1 + 0.02 * np.arange(n)
        model = fit(weeks(n), y)
        result = predict(model, 12)
        truth = 0.1 + 0.02 * np.arange(n, n + 12)
        per_week_err = np.abs(result.yhat - truth) / np.arange(1, 13)
        assert per_week_err.max() <= 1e-3

    def test_nonpositive_horizon_rejected(self):
        model = fit(weeks(80), np.zeros(80))
        for h in (0, -3):
            with pytest.raises(ForecastError):
                predict(model, h)

    def test_components_sum_to_point_forecast(self):
        n = 150
        rng = np.random.default_rng(2)
        y = rng.uniform(0, 1, n)
        regs = {"aod": rng.uniform(0, 1, n), "wind_speed": rng.uniform(0, 5, n)}
        model = fit(weeks(n), y, regressors=regs)
        result = predict(model, 26)
        recon = result.trend + result.seasonal + result.regressors
        assert np.abs(recon - result.yhat).max() <= 1e-9

    def test_interval_monotonicity(self):
        n = 120
        rng = np.random.default_rng(3)
        y = rng.uniform(0, 1, n)
        widths = []
        for level in (0.5, 0.8, 0.95):
            model = fit(weeks(n), y, config=ForecastConfig(interval_level=level))
            result = predict(model, 5)
            widths.append(float((result.upper - result.lower).mean()))
        assert widths[0] <= widths[1] <= widths[2]

    def test_forward_fill_uses_last_observed_regressors(self):
        n = 100
        rng = np.random.default_rng(5)
        reg = rng.uniform(0, 1, n)
        y = 0.5 + 0.3 * reg
        model = fit(weeks(n), y, regressors={"x": reg})
        result = predict(model, 6)
        expected = model.beta[0] * reg[-1]
        assert np.allclose(result.regressors, expected, atol=1e-9)

    def test_scenario_regressor_override(self):
        n = 100
        rng = np.random.default_rng(6)
        reg = rng.uniform(0, 1, n)
        y = 0.5 + 0.3 * reg
        model = fit(weeks(n), y, regressors={"x": reg})
        scenario = np.linspace(0, 1, 6)
        result = predict(model, 6, regressor_values={"x": scenario})
        assert np.allclose(result.regressors, model.beta[0] * scenario, atol=1e-12)
        with pytest.raises(ForecastError):
            predict(model, 6, regressor_values={"unknown": scenario})

    def test_csv_export_shape(self):
        model = fit(weeks(80), np.full(80, 0.4))
        text = predict(model, 4).to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == "week_start,yhat,lower,upper,trend,seasonal,regressors"
        assert len(lines) == 5


class TestSelectRegressors:
    RANKING = [
        ("humidity_rolling_3d_mean", 0.30),
        ("humidity", 0.28),
        ("temperature_lag_1d", 0.22),
        ("month", 0.21),
        ("aod_rolling_7d_std", 0.18),
        ("temperature", 0.15),
        ("wind_speed", 0.05),
        ("solar_irradiance", 0.01),
    ]

    def test_top_k_collapses_variants(self):
        picked = select_regressors(self.RANKING, 4)
        assert picked == ["humidity_rolling_3d_mean", "temperature_lag_1d", "aod_rolling_7d_std", "wind_speed"]

    def test_k_zero_empty(self):
        assert select_regressors(self.RANKING, 0) == []

    def test_k_beyond_available_clamps(self):
        picked = select_regressors(self.RANKING, 99)
        assert len(picked) == 5  # five base variables, no duplicates, month excluded
        bases = {name.split("_rolling_")[0].split("_lag_")[0] for name in picked}
        assert len(bases) == 5


class TestDecompose:
    def test_sinusoid_reconstruction(self):
        t = np.arange(300)
        y = 5.0 + np.sin(2 * math.pi * t / 30.0)
        trend, seasonal, residual = decompose(y, period=30)
        interior = ~np.isnan(trend)
        assert np.abs(trend[interior] - 5.0).max() <= 0.05
        assert math.sqrt(np.nanmean(residual**2)) < 0.05

    def test_constant_series(self):
        y = np.full(90, 2.5)
        trend, seasonal, residual = decompose(y, period=30)
        assert np.allclose(seasonal, 0.0, atol=1e-12)
        assert np.allclose(residual[~np.isnan(residual)], 0.0, atol=1e-12)

    def test_identity_at_interior_points(self):
        rng = np.random.default_rng(8)
        y = rng.uniform(1, 2, 200)
        trend, seasonal, residual = decompose(y, period=30)
        interior = ~np.isnan(trend)
        recon = (trend[interior] + seasonal[interior]) + residual[interior]
        assert not np.isnan(recon).any()
        assert np.abs(recon - y[interior]).max() == 0.0

    def test_trend_undefined_within_half_window(self):
        y = np.arange(100, dtype=float)
        trend, _, _ = decompose(y, period=30)
        assert np.isnan(trend[:15]).all() and np.isnan(trend[-15:]).all()
        assert not np.isnan(trend[15:-15]).any()

    def test_short_series_rejected(self):
        with pytest.raises(ForecastError):
            decompose(np.zeros(59), period=30)

    def test_odd_period(self):
        t = np.arange(210)
        y = 1.0 + np.cos(2 * math.pi * t / 7.0)
        trend, seasonal, residual = decompose(y, period=7)
        interior = ~np.isnan(trend)
        assert np.abs(trend[interior] - 1.0).max() < 0.01
