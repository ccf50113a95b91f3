"""Min-max scaling and rolling/lagged feature construction.

Feature matrices are built in two stages so scaler fitting can be confined
to a training range: :func:`build_raw_feature_matrix` produces unscaled
columns, :func:`fit_scaler` learns per-column bounds on whatever row slice
it is given, and :func:`build_feature_matrix` applies them. Rolling windows
are trailing (causal); rows with incomplete windows or lags are dropped,
never padded.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .ingest import VARIABLES, EnvSeries, validate

MONTH_FEATURE = "month"


class FeatureError(Exception):
    pass


@dataclass(frozen=True)
class RollingSpec:
    variable: str
    window: int
    stat: str  # "mean" | "std"

    def __post_init__(self):
        if self.window < 2:
            raise FeatureError("rolling window must be >= 2")
        if self.stat not in ("mean", "std"):
            raise FeatureError(f"unknown rolling stat {self.stat!r}")
        if self.variable not in VARIABLES:
            raise FeatureError(f"unknown variable {self.variable!r}")

    @property
    def name(self) -> str:
        return f"{self.variable}_rolling_{self.window}d_{self.stat}"


@dataclass(frozen=True)
class LagSpec:
    variable: str
    lag: int

    def __post_init__(self):
        if self.lag < 1:
            raise FeatureError("lag must be >= 1")
        if self.variable not in VARIABLES:
            raise FeatureError(f"unknown variable {self.variable!r}")

    @property
    def name(self) -> str:
        return f"{self.variable}_lag_{self.lag}d"


@dataclass(frozen=True)
class FeatureSpec:
    immediate: tuple[str, ...] = ("aod", "solar_irradiance", "temperature", "humidity", "wind_speed")
    rolling: tuple[RollingSpec, ...] = ()
    lags: tuple[LagSpec, ...] = ()
    directional: tuple[str, ...] = ()  # immediate columns flipped to 1 - scaled
    include_month: bool = True

    @staticmethod
    def default() -> "FeatureSpec":
        rolling = tuple(
            RollingSpec(var, window, stat)
            for stat in ("mean", "std")
            for var in ("aod", "solar_irradiance")
            for window in (3, 7)
        )
        return FeatureSpec(
            immediate=("aod", "solar_irradiance", "temperature", "humidity", "wind_speed"),
            rolling=rolling,
        )

    @property
    def feature_names(self) -> list[str]:
        names = list(self.immediate)
        names += [r.name for r in self.rolling]
        names += [lag.name for lag in self.lags]
        if self.include_month:
            names.append(MONTH_FEATURE)
        return names

    @property
    def warmup_rows(self) -> int:
        """Leading rows dropped for incomplete windows/lags."""
        spans = [r.window - 1 for r in self.rolling] + [lag.lag for lag in self.lags]
        return max(spans, default=0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "immediate": list(self.immediate),
                "rolling": [[r.variable, r.window, r.stat] for r in self.rolling],
                "lags": [[lag.variable, lag.lag] for lag in self.lags],
                "directional": list(self.directional),
                "include_month": self.include_month,
            }
        )

    @staticmethod
    def from_json(text: str) -> "FeatureSpec":
        raw = json.loads(text)
        return FeatureSpec(
            immediate=tuple(raw["immediate"]),
            rolling=tuple(RollingSpec(v, w, s) for v, w, s in raw["rolling"]),
            lags=tuple(LagSpec(v, k) for v, k in raw["lags"]),
            directional=tuple(raw.get("directional", ())),
            include_month=bool(raw["include_month"]),
        )


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature min/max observed on the fitted (training) rows."""

    feature_names: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.feature_names) == len(self.mins) == len(self.maxs)):
            raise FeatureError("scaler arrays must align")
        for name, lo, hi in zip(self.feature_names, self.mins, self.maxs):
            if hi < lo:
                raise FeatureError(f"{name}: max < min")

    def bounds(self, name: str) -> tuple[float, float]:
        try:
            i = self.feature_names.index(name)
        except ValueError:
            raise FeatureError(f"no scaler bounds for feature {name!r}") from None
        return self.mins[i], self.maxs[i]

    def to_json(self) -> str:
        return json.dumps(
            {
                "feature_names": list(self.feature_names),
                "mins": list(self.mins),
                "maxs": list(self.maxs),
            }
        )

    @staticmethod
    def from_json(text: str) -> "ScalerParams":
        raw = json.loads(text)
        return ScalerParams(
            tuple(raw["feature_names"]),
            tuple(float(x) for x in raw["mins"]),
            tuple(float(x) for x in raw["maxs"]),
        )


class FeatureMatrix:
    """Dense date-aligned feature matrix; immutable after construction."""

    def __init__(self, dates: Sequence[date], feature_names: Sequence[str], values: np.ndarray):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2:
            raise FeatureError("values must be 2-D")
        if values.shape != (len(dates), len(feature_names)):
            raise FeatureError(
                f"shape {values.shape} does not match {len(dates)} dates x {len(feature_names)} features"
            )
        if np.isnan(values).any():
            raise FeatureError("feature matrix contains NaN")
        self.dates: tuple[date, ...] = tuple(dates)
        self.feature_names: tuple[str, ...] = tuple(feature_names)
        self.values = values
        self.values.flags.writeable = False

    def column(self, name: str) -> np.ndarray:
        return self.values[:, self.feature_names.index(name)]

    def slice_rows(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx)
        sub = self.values[idx].copy()
        dates = [self.dates[i] for i in np.arange(len(self.dates))[idx]]
        return FeatureMatrix(dates, self.feature_names, sub)

    def __len__(self) -> int:
        return len(self.dates)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(("date",) + self.feature_names)
        for i, day in enumerate(self.dates):
            writer.writerow([day.isoformat()] + [repr(float(v)) for v in self.values[i]])
        return out.getvalue()

    @staticmethod
    def from_csv(text: str) -> "FeatureMatrix":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        if header[0] != "date":
            raise FeatureError("first column must be date")
        names = header[1:]
        dates, rows = [], []
        for row in reader:
            if not row:
                continue
            dates.append(date.fromisoformat(row[0]))
            rows.append([float(x) for x in row[1:]])
        return FeatureMatrix(dates, names, np.array(rows, dtype=np.float64).reshape(len(dates), len(names)))


def minmax_fit(values: Sequence[float], name: str = "value") -> ScalerParams:
    """Fit bounds for a single series; errors on empty or all-NaN input."""
    arr = np.asarray(values, dtype=np.float64)
    finite = arr[np.isfinite(arr)]
    if finite.size == 0:
        raise FeatureError("cannot fit scaler on empty input")
    return ScalerParams((name,), (float(finite.min()),), (float(finite.max()),))


def minmax_apply(params: ScalerParams, x, name: str | None = None):
    """(x - min) / (max - min); degenerate bounds map to 0.

    Values outside the fitted range scale outside [0, 1] unclipped - only
    training-range inputs are guaranteed to land inside the unit interval.
    """
    if name is None:
        if len(params.feature_names) != 1:
            raise FeatureError("name required for multi-feature params")
        name = params.feature_names[0]
    lo, hi = params.bounds(name)
    arr = np.asarray(x, dtype=np.float64)
    if hi == lo:
        scaled = np.zeros_like(arr)
    else:
        scaled = (arr - lo) / (hi - lo)
    return float(scaled) if np.isscalar(x) else scaled


def rolling_stat(values: Sequence[float], window: int, stat: str) -> np.ndarray:
    """Trailing-window statistic, emitted only where the full window exists.

    ``std`` is the sample standard deviation (n-1 denominator). A series
    shorter than the window yields an empty result.
    """
    if window < 2:
        raise FeatureError("window must be >= 2")
    if stat not in ("mean", "std"):
        raise FeatureError(f"unknown stat {stat!r}")
    arr = np.asarray(values, dtype=np.float64)
    if arr.size < window:
        return np.empty(0, dtype=np.float64)
    sliding = np.lib.stride_tricks.sliding_window_view(arr, window)
    if stat == "mean":
        return sliding.mean(axis=1)
    return sliding.std(axis=1, ddof=1)


def build_raw_feature_matrix(series: EnvSeries, spec: FeatureSpec) -> FeatureMatrix:
    """Engineer unscaled columns; month is already encoded as (m-1)/11."""
    report = validate(series)
    if report.verdict != "pass":
        raise FeatureError(
            f"series must validate clean before feature building (verdict={report.verdict}); "
            "fill gaps and fix out-of-range values first"
        )
    warmup = spec.warmup_rows
    n = len(series)
    if n <= warmup:
        raise FeatureError(f"need more than {warmup} days, got {n}")
    dates = series.dates[warmup:]
    cols: list[np.ndarray] = []
    for var in spec.immediate:
        cols.append(np.asarray(series.column(var), dtype=np.float64)[warmup:])
    for r in spec.rolling:
        rolled = rolling_stat(series.column(r.variable), r.window, r.stat)
        cols.append(rolled[warmup - (r.window - 1):])
    for lag in spec.lags:
        full = np.asarray(series.column(lag.variable), dtype=np.float64)
        cols.append(full[warmup - lag.lag: n - lag.lag])
    if spec.include_month:
        cols.append(np.array([(d.month - 1) / 11.0 for d in dates], dtype=np.float64))
    return FeatureMatrix(dates, spec.feature_names, np.column_stack(cols))


def fit_scaler(matrix: FeatureMatrix) -> ScalerParams:
    """Fit per-column bounds on the given rows (slice to the training range first).

    The month column is pinned to (0, 1): it is produced pre-scaled and must
    not be re-stretched by whatever months the training slice happens to cover.
    """
    if len(matrix) == 0:
        raise FeatureError("cannot fit scaler on empty matrix")
    mins, maxs = [], []
    for j, name in enumerate(matrix.feature_names):
        if name == MONTH_FEATURE:
            mins.append(0.0)
            maxs.append(1.0)
        else:
            mins.append(float(matrix.values[:, j].min()))
            maxs.append(float(matrix.values[:, j].max()))
    return ScalerParams(matrix.feature_names, tuple(mins), tuple(maxs))


def apply_scaler(matrix: FeatureMatrix, params: ScalerParams, directional: Sequence[str] = ()) -> FeatureMatrix:
    """Scale every column by its fitted bounds, then flip directional columns to 1 - scaled."""
    scaled = np.empty_like(matrix.values)
    for j, name in enumerate(matrix.feature_names):
        lo, hi = params.bounds(name)
        if hi == lo:
            scaled[:, j] = 0.0
        else:
            scaled[:, j] = (matrix.values[:, j] - lo) / (hi - lo)
    for var in directional:
        j = matrix.feature_names.index(var)
        scaled[:, j] = 1.0 - scaled[:, j]
    return FeatureMatrix(matrix.dates, matrix.feature_names, scaled)


def build_feature_matrix(series: EnvSeries, spec: FeatureSpec, params: ScalerParams) -> FeatureMatrix:
    """Engineered, scaled feature matrix aligned to dates (warmup rows dropped)."""
    raw = build_raw_feature_matrix(series, spec)
    return apply_scaler(raw, params, spec.directional)
