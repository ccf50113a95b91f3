"""Additive weekly forecaster and classical daily decomposition.

The weekly model is trend + seasonality + exogenous regressors fit by
L2-regularised least squares over an explicit basis: a changepointed linear
trend (hinge columns over scaled time), yearly Fourier terms on the weekly
grid, and raw regressor columns. Uncertainty comes from Gaussian residual
quantiles around the point forecast. Holiday effects are structurally
supported by the additive form but fixed to zero here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from datetime import date, timedelta
from statistics import NormalDist
from typing import Mapping, Sequence

import numpy as np

WEEK = timedelta(days=7)
YEARLY_PERIOD_WEEKS = 365.25 / 7.0


class ForecastError(Exception):
    pass


@dataclass(frozen=True)
class ForecastConfig:
    n_changepoints: int = 25
    changepoint_range: float = 0.8  # changepoints live in the first 80% of history
    yearly_order: int = 10
    period_weeks: float = YEARLY_PERIOD_WEEKS
    trend_l2: float = 10.0  # on changepoint slope deltas
    regressor_l2: float = 1.0
    fourier_l2: float = 0.0
    base_l2: float = 0.0  # on intercept and base slope
    interval_level: float = 0.80
    holidays: tuple = ()  # retained slot; always empty

    def __post_init__(self):
        if self.yearly_order < 1:
            raise ForecastError("yearly_order must be >= 1")
        if min(self.trend_l2, self.regressor_l2, self.fourier_l2, self.base_l2) < 0:
            raise ForecastError("penalties must be >= 0")
        if not 0.0 < self.interval_level < 1.0:
            raise ForecastError("interval_level must be in (0, 1)")
        if self.holidays:
            raise ForecastError("holiday effects are fixed to zero")

    def to_dict(self) -> dict:
        return {
            "n_changepoints": self.n_changepoints,
            "changepoint_range": self.changepoint_range,
            "yearly_order": self.yearly_order,
            "period_weeks": self.period_weeks,
            "trend_l2": self.trend_l2,
            "regressor_l2": self.regressor_l2,
            "fourier_l2": self.fourier_l2,
            "base_l2": self.base_l2,
            "interval_level": self.interval_level,
        }

    @staticmethod
    def from_dict(raw: dict) -> "ForecastConfig":
        return ForecastConfig(**{k: raw[k] for k in raw if k != "holidays"})


@dataclass(frozen=True)
class ForecastModel:
    config: ForecastConfig
    origin: date  # first training week start
    n_train: int
    intercept: float
    base_slope: float  # per unit of scaled time
    changepoints: tuple[float, ...]  # scaled-time positions
    deltas: tuple[float, ...]
    fourier_coef: tuple[float, ...]  # sin1, cos1, sin2, ...
    regressor_names: tuple[str, ...]
    beta: tuple[float, ...]
    last_regressors: tuple[float, ...]  # forward-fill source
    residual_sigma: float

    def _time_scale(self) -> float:
        return float(max(self.n_train - 1, 1))

    def final_weekly_slope(self) -> float:
        """Trend slope per week once all changepoints are active."""
        return (self.base_slope + math.fsum(self.deltas)) / self._time_scale()

    def trend_at(self, t: np.ndarray) -> np.ndarray:
        s = np.asarray(t, dtype=np.float64) / self._time_scale()
        cps = np.asarray(self.changepoints)
        hinges = np.maximum(0.0, s[:, None] - cps[None, :]) if len(cps) else np.zeros((len(s), 0))
        return self.intercept + self.base_slope * s + hinges @ np.asarray(self.deltas)

    def seasonal_at(self, t: np.ndarray) -> np.ndarray:
        basis = fourier_basis(np.asarray(t, dtype=np.float64), self.config.period_weeks, self.config.yearly_order)
        return basis @ np.asarray(self.fourier_coef)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": "mpindex-forecast/1",
                "config": self.config.to_dict(),
                "origin": self.origin.isoformat(),
                "n_train": self.n_train,
                "intercept": self.intercept,
                "base_slope": self.base_slope,
                "changepoints": list(self.changepoints),
                "deltas": list(self.deltas),
                "fourier_coef": list(self.fourier_coef),
                "regressor_names": list(self.regressor_names),
                "beta": list(self.beta),
                "last_regressors": list(self.last_regressors),
                "residual_sigma": self.residual_sigma,
            }
        )

    @staticmethod
    def from_json(text: str) -> "ForecastModel":
        raw = json.loads(text)
        if raw.get("format") != "mpindex-forecast/1":
            raise ForecastError(f"unsupported forecast model format {raw.get('format')!r}")
        return ForecastModel(
            config=ForecastConfig.from_dict(raw["config"]),
            origin=date.fromisoformat(raw["origin"]),
            n_train=int(raw["n_train"]),
            intercept=float(raw["intercept"]),
            base_slope=float(raw["base_slope"]),
            changepoints=tuple(raw["changepoints"]),
            deltas=tuple(raw["deltas"]),
            fourier_coef=tuple(raw["fourier_coef"]),
            regressor_names=tuple(raw["regressor_names"]),
            beta=tuple(raw["beta"]),
            last_regressors=tuple(raw["last_regressors"]),
            residual_sigma=float(raw["residual_sigma"]),
        )


@dataclass(frozen=True)
class ForecastResult:
    week_starts: tuple[date, ...]
    yhat: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    trend: np.ndarray
    seasonal: np.ndarray
    regressors: np.ndarray  # summed regressor contribution
    interval_level: float

    def __len__(self) -> int:
        return len(self.week_starts)

    def to_dict(self) -> dict:
        return {
            "interval_level": self.interval_level,
            "weeks": [
                {
                    "week_start": self.week_starts[i].isoformat(),
                    "yhat": float(self.yhat[i]),
                    "lower": float(self.lower[i]),
                    "upper": float(self.upper[i]),
                    "trend": float(self.trend[i]),
                    "seasonal": float(self.seasonal[i]),
                    "regressors": float(self.regressors[i]),
                }
                for i in range(len(self.week_starts))
            ],
        }

    def to_csv(self) -> str:
        lines = ["week_start,yhat,lower,upper,trend,seasonal,regressors"]
        for i in range(len(self.week_starts)):
            cells = [self.week_starts[i].isoformat()] + [
                repr(float(col[i]))
                for col in (self.yhat, self.lower, self.upper, self.trend, self.seasonal, self.regressors)
            ]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def fourier_basis(t: np.ndarray, period: float, order: int) -> np.ndarray:
    cols = np.empty((len(t), 2 * order))
    for i in range(order):
        arg = 2.0 * math.pi * (i + 1) * t / period
        cols[:, 2 * i] = np.sin(arg)
        cols[:, 2 * i + 1] = np.cos(arg)
    return cols


def _changepoint_positions(n: int, config: ForecastConfig) -> np.ndarray:
    """Scaled-time changepoints placed uniformly over the first part of history."""
    if config.n_changepoints == 0:
        return np.empty(0)
    hist = int(math.floor(n * config.changepoint_range))
    idx = np.linspace(0, max(hist - 1, 1), config.n_changepoints + 1).round().astype(int)[1:]
    idx = np.unique(idx)
    return idx.astype(np.float64) / max(n - 1, 1)


def fit(
    week_starts: Sequence[date],
    y: Sequence[float],
    regressors: Mapping[str, Sequence[float]] | None = None,
    config: ForecastConfig = ForecastConfig(),
) -> ForecastModel:
    """Fit the additive model by ridge least squares over the explicit basis.

    Requires at least ``2 * (n_changepoints + 2)`` weeks and regressors
    aligned with ``y``. Deterministic: no random initialisation anywhere.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    if len(week_starts) != n:
        raise ForecastError("week_starts and y must align")
    minimum = 2 * (config.n_changepoints + 2)
    if n < minimum:
        raise ForecastError(f"need >= {minimum} weeks to fit, got {n}")
    for i in range(1, n):
        if week_starts[i] - week_starts[i - 1] != WEEK:
            raise ForecastError("week starts must be consecutive 7-day steps")
    regressors = dict(regressors or {})
    for name, series in regressors.items():
        if len(series) != n:
            raise ForecastError(f"regressor {name!r} has {len(series)} rows, expected {n}")

    t = np.arange(n, dtype=np.float64)
    s = t / max(n - 1, 1)
    cps = _changepoint_positions(n, config)
    hinges = np.maximum(0.0, s[:, None] - cps[None, :]) if len(cps) else np.zeros((n, 0))
    fourier = fourier_basis(t, config.period_weeks, config.yearly_order)
    reg_names = tuple(sorted(regressors))
    reg_matrix = (
        np.column_stack([np.asarray(regressors[name], dtype=np.float64) for name in reg_names])
        if reg_names
        else np.zeros((n, 0))
    )

    design = np.column_stack([np.ones(n), s, hinges, fourier, reg_matrix])
    penalties = np.concatenate(
        [
            np.full(2, config.base_l2),
            np.full(hinges.shape[1], config.trend_l2),
            np.full(fourier.shape[1], config.fourier_l2),
            np.full(reg_matrix.shape[1], config.regressor_l2),
        ]
    )
    # ridge via augmented least squares: rows sqrt(lambda) * e_j pull coefficients to 0
    aug = np.vstack([design, np.diag(np.sqrt(penalties))])
    target = np.concatenate([y, np.zeros(design.shape[1])])
    coef, *_ = np.linalg.lstsq(aug, target, rcond=None)

    j = 2
    deltas = coef[j: j + hinges.shape[1]]
    j += hinges.shape[1]
    fourier_coef = coef[j: j + fourier.shape[1]]
    j += fourier.shape[1]
    beta = coef[j:]

    residuals = y - design @ coef
    sigma = float(np.sqrt(np.mean(residuals**2)))
    if not np.isfinite(coef).all():
        raise ForecastError("fit produced non-finite coefficients")

    return ForecastModel(
        config=config,
        origin=week_starts[0],
        n_train=n,
        intercept=float(coef[0]),
        base_slope=float(coef[1]),
        changepoints=tuple(float(c) for c in cps),
        deltas=tuple(float(d) for d in deltas),
        fourier_coef=tuple(float(c) for c in fourier_coef),
        regressor_names=reg_names,
        beta=tuple(float(b) for b in beta),
        last_regressors=tuple(float(reg_matrix[-1, j]) for j in range(reg_matrix.shape[1])),
        residual_sigma=sigma,
    )


def predict(
    model: ForecastModel,
    horizon: int,
    regressor_values: Mapping[str, Sequence[float]] | None = None,
) -> ForecastResult:
    """Forecast ``horizon`` future weeks.

    Regressors are forward-filled with their last observed values unless
    explicit per-week scenario series are supplied. Interval bounds are
    yhat +/- z(level) * residual_sigma.
    """
    if horizon <= 0:
        raise ForecastError(f"horizon must be positive, got {horizon}")
    n = model.n_train
    t = np.arange(n, n + horizon, dtype=np.float64)

    trend = model.trend_at(t)
    seasonal = model.seasonal_at(t)

    if model.regressor_names:
        reg_matrix = np.tile(np.asarray(model.last_regressors), (horizon, 1))
        if regressor_values:
            for name, series in regressor_values.items():
                if name not in model.regressor_names:
                    raise ForecastError(f"unknown regressor {name!r}")
                series = np.asarray(series, dtype=np.float64)
                if len(series) != horizon:
                    raise ForecastError(f"scenario regressor {name!r} must have {horizon} rows")
                reg_matrix[:, model.regressor_names.index(name)] = series
        reg_contrib = reg_matrix @ np.asarray(model.beta)
    else:
        reg_contrib = np.zeros(horizon)

    yhat = trend + seasonal + reg_contrib
    z = NormalDist().inv_cdf(0.5 + model.config.interval_level / 2.0)
    half = z * model.residual_sigma
    week_starts = tuple(model.origin + WEEK * (n + i) for i in range(horizon))
    return ForecastResult(
        week_starts=week_starts,
        yhat=yhat,
        lower=yhat - half,
        upper=yhat + half,
        trend=trend,
        seasonal=seasonal,
        regressors=reg_contrib,
        interval_level=model.config.interval_level,
    )


def select_regressors(ranking: Sequence[tuple[str, float]] | "GlobalImportance", k: int) -> list[str]:
    """Top-k ranked features collapsed to one variant per base meteorological variable.

    Lagged/rolling variants of the same variable count once, keeping the
    highest-ranked variant. The month feature is never a regressor.
    """
    entries = getattr(ranking, "entries", ranking)
    if k < 0:
        raise ForecastError("k must be >= 0")
    base_vars = ("aod", "temperature", "humidity", "wind_speed", "solar_irradiance")
    picked: dict[str, str] = {}
    for name, _ in entries:
        base = name.split("_rolling_")[0].split("_lag_")[0]
        if base not in base_vars or base in picked:
            continue
        picked[base] = name
        if len(picked) == k:
            break
    return list(picked.values())[:k]


def decompose(values: Sequence[float], period: int = 30) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Classical additive decomposition into (trend, seasonal, residual).

    Trend is a centred moving average (half-weight endpoints for an even
    window), undefined (NaN) within half a window of each end. Seasonal is
    the period-position mean of the detrended series, re-centred to zero
    mean. Residual is what remains, so trend + seasonal + residual
    reconstructs the input exactly at every interior point.
    """
    y = np.asarray(values, dtype=np.float64)
    n = len(y)
    if period < 2:
        raise ForecastError("period must be >= 2")
    if n < 2 * period:
        raise ForecastError(f"need >= {2 * period} points for period {period}, got {n}")

    half = period // 2
    trend = np.full(n, np.nan)
    if period % 2 == 0:
        weights = np.ones(period + 1)
        weights[0] = weights[-1] = 0.5
        weights /= period
    else:
        weights = np.full(period, 1.0 / period)
        half = (period - 1) // 2
    span = len(weights)
    for i in range(half, n - half):
        trend[i] = float(np.dot(weights, y[i - half: i - half + span]))

    detrended = y - trend
    positions = np.arange(n) % period
    seasonal_profile = np.zeros(period)
    for p in range(period):
        vals = detrended[(positions == p) & ~np.isnan(detrended)]
        seasonal_profile[p] = vals.mean() if len(vals) else 0.0
    seasonal_profile -= seasonal_profile.mean()
    seasonal = seasonal_profile[positions]

    # grouped so that (trend + seasonal) + residual reconstructs y exactly
    residual = y - (trend + seasonal)
    return trend, seasonal, residual
