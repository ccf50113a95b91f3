"""Maintenance pressure index: triggers, occurrence-frequency weights, bands.

The index is a weighted sum of five binary exceedance triggers (AOD,
temperature, humidity, wind speed, and 3-day irradiance variability). Each
trigger fires on strict exceedance of its threshold; weights are
non-negative and sum to one, so the score lives in [0, 1] and maps to
Low/Medium/High bands.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from datetime import date, timedelta
from typing import Sequence

import numpy as np

from .features import rolling_stat
from .ingest import EnvRecord, EnvSeries, validate

TRIGGER_NAMES = ("aod", "temperature", "humidity", "wind_speed", "irr_var")

LABELS = ("Low", "Medium", "High")

WEIGHT_SUM_TOL = 1e-9


class MpiError(Exception):
    pass


class DegenerateWeightsError(MpiError):
    """A risk condition never fires, so occurrence weights are undefined."""

    def __init__(self, conditions: list[str]):
        super().__init__(f"conditions never observed: {', '.join(conditions)}")
        self.conditions = conditions


def _default_thresholds() -> dict[str, float]:
    return {"aod": 0.9, "temperature": 35.0, "humidity": 70.0, "wind_speed": 5.0}


def _default_weights() -> dict[str, float]:
    return {
        "aod": 0.35,
        "temperature": 0.25,
        "humidity": 0.20,
        "wind_speed": 0.15,
        "irr_var": 0.05,
    }


@dataclass(frozen=True)
class MpiConfig:
    """Thresholds, weights and band edges for the composite index.

    ``thresholds`` carries absolute cuts for the four directly observed
    variables; irradiance variability is thresholded at a percentile rank of
    its training distribution (``irr_var_percentile``), resolved to an
    absolute value by :func:`resolve_irr_threshold`.
    """

    thresholds: dict[str, float] = field(default_factory=_default_thresholds)
    irr_var_percentile: float = 90.0
    weights: dict[str, float] = field(default_factory=_default_weights)
    band_edges: tuple[float, float] = (0.3, 0.6)  # (low_upper, high_lower)
    band_mode: str = "fixed"  # "fixed" | "percentile"

    def __post_init__(self):
        if set(self.weights) != set(TRIGGER_NAMES):
            raise MpiError(f"weights must cover exactly {TRIGGER_NAMES}")
        if set(self.thresholds) != set(TRIGGER_NAMES[:4]):
            raise MpiError(f"thresholds must cover exactly {TRIGGER_NAMES[:4]}")
        for name, w in self.weights.items():
            if w < 0:
                raise MpiError(f"weight {name} is negative")
        total = math.fsum(self.weights[n] for n in TRIGGER_NAMES)
        if abs(total - 1.0) > WEIGHT_SUM_TOL:
            raise MpiError(f"weights sum to {total!r}, expected 1")
        for name, t in self.thresholds.items():
            if not math.isfinite(t):
                raise MpiError(f"threshold {name} not finite")
        if not 0.0 < self.irr_var_percentile < 100.0:
            raise MpiError("irr_var_percentile must be in (0, 100)")
        low, high = self.band_edges
        if not (0.0 < low <= high < 1.0):
            raise MpiError("band edges must satisfy 0 < low_upper <= high_lower < 1")
        if self.band_mode not in ("fixed", "percentile"):
            raise MpiError(f"unknown band_mode {self.band_mode!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "thresholds": self.thresholds,
                "irr_var_percentile": self.irr_var_percentile,
                "weights": self.weights,
                "band_edges": list(self.band_edges),
                "band_mode": self.band_mode,
            },
            indent=2,
        )

    @staticmethod
    def from_json(text: str) -> "MpiConfig":
        raw = json.loads(text)
        return MpiConfig(
            thresholds={k: float(v) for k, v in raw["thresholds"].items()},
            irr_var_percentile=float(raw.get("irr_var_percentile", 90.0)),
            weights={k: float(v) for k, v in raw["weights"].items()},
            band_edges=tuple(float(x) for x in raw.get("band_edges", (0.3, 0.6))),
            band_mode=raw.get("band_mode", "fixed"),
        )


@dataclass(frozen=True)
class TriggerVector:
    aod_high: bool
    temp_high: bool
    humidity_high: bool
    wind_high: bool
    irr_var_high: bool
    values: dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def flags(self) -> tuple[bool, bool, bool, bool, bool]:
        return (self.aod_high, self.temp_high, self.humidity_high, self.wind_high, self.irr_var_high)


@dataclass(frozen=True)
class MpiScore:
    date: date
    score: float
    label: str
    triggers: TriggerVector


def _require_scoreable(series: EnvSeries):
    """Module boundary: refuse series that fail validation (out-of-range values)."""
    report = validate(series)
    if report.verdict == "fail":
        first = report.out_of_range[0]
        raise MpiError(
            f"series fails validation ({len(report.out_of_range)} out-of-range values, "
            f"first: {first[1]}={first[2]} on {first[0].isoformat()})"
        )


def irr_variability(series: EnvSeries) -> np.ndarray:
    """Trailing 3-day sample std of irradiance; first two days dropped."""
    if len(series) < 3:
        raise MpiError(f"need >= 3 days for irradiance variability, got {len(series)}")
    return rolling_stat(series.column("solar_irradiance"), 3, "std")


def resolve_irr_threshold(values: Sequence[float], percentile: float) -> float:
    """Empirical percentile by linear interpolation between order statistics."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        raise MpiError("cannot take a percentile of an empty sample")
    if not 0.0 < percentile < 100.0:
        raise MpiError("percentile rank must be in (0, 100)")
    return float(np.percentile(arr, percentile, method="linear"))


def compute_triggers(record: EnvRecord, irr_var: float, config: MpiConfig, irr_threshold: float) -> TriggerVector:
    """Strict exceedance per variable: a value equal to its threshold does not fire."""
    t = config.thresholds
    return TriggerVector(
        aod_high=record.aod > t["aod"],
        temp_high=record.temperature > t["temperature"],
        humidity_high=record.humidity > t["humidity"],
        wind_high=record.wind_speed > t["wind_speed"],
        irr_var_high=irr_var > irr_threshold,
        values={
            "aod": record.aod,
            "temperature": record.temperature,
            "humidity": record.humidity,
            "wind_speed": record.wind_speed,
            "irr_var": irr_var,
        },
    )


def compute_mpi(triggers: TriggerVector, config: MpiConfig) -> float:
    """Weighted sum of fired triggers, correctly rounded via fsum."""
    w = config.weights
    return math.fsum(
        w[name] for name, fired in zip(TRIGGER_NAMES, triggers.flags) if fired
    )


def derive_eof_weights(series: EnvSeries, config: MpiConfig) -> dict[str, float]:
    """Weights proportional to how often each risk condition is observed.

    Requires at least 30 days and every condition observed at least once;
    output sums to 1.
    """
    if len(series) < 30:
        raise MpiError(f"need >= 30 days to derive occurrence weights, got {len(series)}")
    _require_scoreable(series)
    irr = irr_variability(series)
    irr_threshold = resolve_irr_threshold(irr, config.irr_var_percentile)
    counts = dict.fromkeys(TRIGGER_NAMES, 0)
    records = series.records[2:]  # align with the 3-day variability window
    for rec, iv in zip(records, irr):
        trig = compute_triggers(rec, float(iv), config, irr_threshold)
        for name, fired in zip(TRIGGER_NAMES, trig.flags):
            counts[name] += int(fired)
    never = [name for name, c in counts.items() if c == 0]
    if never:
        raise DegenerateWeightsError(never)
    n = len(records)
    freqs = {name: counts[name] / n for name in TRIGGER_NAMES}
    return normalize_frequencies([freqs[name] for name in TRIGGER_NAMES])


def normalize_frequencies(freqs: Sequence[float]) -> dict[str, float]:
    """Divide exceedance frequencies by their sum; errors on a zero entry."""
    if len(freqs) != len(TRIGGER_NAMES):
        raise MpiError(f"expected {len(TRIGGER_NAMES)} frequencies")
    zero = [name for name, f in zip(TRIGGER_NAMES, freqs) if f <= 0.0]
    if zero:
        raise DegenerateWeightsError(zero)
    total = math.fsum(freqs)
    return {name: f / total for name, f in zip(TRIGGER_NAMES, freqs)}


def label_risk(score: float, config: MpiConfig) -> str:
    """High iff score >= high edge, Medium iff low edge <= score < high edge, else Low."""
    low_upper, high_lower = config.band_edges
    if score >= high_lower:
        return "High"
    if score >= low_upper:
        return "Medium"
    return "Low"


def resolve_band_edges(scores: Sequence[float], config: MpiConfig) -> MpiConfig:
    """Percentile banding: edges from the 25th/75th percentiles of training scores.

    Returns a config whose fixed edges are the resolved quartiles, so
    labelling downstream is identical in both modes. No-op in fixed mode.
    """
    if config.band_mode == "fixed":
        return config
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size == 0:
        raise MpiError("cannot resolve percentile bands on an empty score sample")
    low = float(np.percentile(arr, 25.0, method="linear"))
    high = float(np.percentile(arr, 75.0, method="linear"))
    eps = 1e-9
    low = min(max(low, eps), 1.0 - eps)
    high = min(max(high, low), 1.0 - eps)
    return replace(config, band_edges=(low, high), band_mode="fixed")


def score_series(series: EnvSeries, config: MpiConfig, irr_threshold: float | None = None) -> list[MpiScore]:
    """Daily index for a whole series; the first two days are dropped.

    ``irr_threshold`` resolves the variability percentile against this
    series when not supplied; pass a stored value to score new data against
    a training-time threshold.
    """
    _require_scoreable(series)
    irr = irr_variability(series)
    if irr_threshold is None:
        irr_threshold = resolve_irr_threshold(irr, config.irr_var_percentile)
    scores = []
    for rec, iv in zip(series.records[2:], irr):
        trig = compute_triggers(rec, float(iv), config, irr_threshold)
        s = compute_mpi(trig, config)
        scores.append(MpiScore(rec.date, s, label_risk(s, config), trig))
    return scores


def weekly_resample(dates: Sequence[date], scores: Sequence[float]) -> tuple[list[date], np.ndarray]:
    """Mean score over consecutive 7-day blocks anchored at the first date.

    A trailing partial block is dropped; fewer than 7 days yields an empty
    result. Input days must be consecutive.
    """
    if len(dates) != len(scores):
        raise MpiError("dates and scores must align")
    n = len(dates)
    if n < 7:
        return [], np.empty(0, dtype=np.float64)
    for i in range(1, n):
        if dates[i] - dates[i - 1] != timedelta(days=1):
            raise MpiError(f"days must be consecutive, gap before {dates[i].isoformat()}")
    n_weeks = n // 7
    arr = np.asarray(scores, dtype=np.float64)[: n_weeks * 7].reshape(n_weeks, 7)
    week_starts = [dates[i * 7] for i in range(n_weeks)]
    # fsum keeps block means correctly rounded (a constant week averages to
    # exactly that constant)
    means = np.array([math.fsum(block) / 7.0 for block in arr], dtype=np.float64)
    return week_starts, means


def scores_to_csv(scores: Sequence[MpiScore]) -> str:
    """Daily index export: ``date,score,label`` rows."""
    lines = ["date,score,label"]
    for s in scores:
        lines.append(f"{s.date.isoformat()},{s.score!r},{s.label}")
    return "\n".join(lines) + "\n"


def weekly_scores_to_csv(week_starts: Sequence[date], means: Sequence[float], config: MpiConfig) -> str:
    """Weekly export in the same ``date,score,label`` format as the daily one."""
    lines = ["date,score,label"]
    for day, score in zip(week_starts, means):
        lines.append(f"{day.isoformat()},{float(score)!r},{label_risk(float(score), config)}")
    return "\n".join(lines) + "\n"


def scores_from_csv(text: str) -> tuple[list[date], list[float], list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0] != "date,score,label":
        raise MpiError("expected header date,score,label")
    dates, values, labels = [], [], []
    for ln in lines[1:]:
        d, s, lab = ln.split(",")
        dates.append(date.fromisoformat(d))
        values.append(float(s))
        labels.append(lab)
    return dates, values, labels
