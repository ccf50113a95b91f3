"""HTTP/JSON facade: scoring, what-if forecasting, and explanations.

Stateless across requests apart from immutable loaded artifacts and a
bounded cache of what-if forecaster fits keyed by the override payload.
Scenario overrides re-score the stored history with a modified index
configuration and re-fit only the fast additive forecaster; the tree
classifier is never retrained online.

All endpoints live under ``/v1``; payload schemas are published as JSON
Schema documents under ``schemas/`` in the repository.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import forecast as fc
from .artifacts import Artifacts, ServiceConfig
from .features import build_feature_matrix
from .ingest import DuplicateDateError, EnvRecord, EnvSeries
from .mpi import (
    LABELS,
    TRIGGER_NAMES,
    MpiConfig,
    MpiError,
    irr_variability,
    label_risk,
    resolve_irr_threshold,
    score_series,
    weekly_resample,
)

MAX_HORIZON = 520
CACHE_LIMIT = 32


class ScoreRecordIn(BaseModel):
    date: date
    aod: float
    temperature: float
    humidity: float
    wind_speed: float
    solar_irradiance: float


class OverridesIn(BaseModel):
    weights: dict[str, float] | None = None
    thresholds: dict[str, float] | None = None
    band_edges: tuple[float, float] | None = None


class ForecastRequestIn(BaseModel):
    horizon: int
    overrides: OverridesIn | None = None


class ExplainSampleIn(BaseModel):
    features: list[float] | None = None
    records: list[ScoreRecordIn] | None = None
    week_start: date | None = None  # resolve against the stored history


def _error(status: int, code: str, message: str, detail=None) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "detail": detail},
    )


@dataclass(frozen=True)
class _ScenarioEntry:
    """One fully built what-if scenario; replaced atomically in the cache."""

    config: MpiConfig
    week_starts: tuple[date, ...]
    weekly_scores: tuple[float, ...]
    model: fc.ForecastModel


class _ScenarioCache:
    def __init__(self, limit: int = CACHE_LIMIT):
        self._entries: dict[str, _ScenarioEntry] = {}
        self._lock = threading.Lock()
        self._limit = limit

    def get(self, key: str) -> _ScenarioEntry | None:
        return self._entries.get(key)

    def put(self, key: str, entry: _ScenarioEntry):
        with self._lock:
            if key not in self._entries and len(self._entries) >= self._limit:
                self._entries.pop(next(iter(self._entries)))
            self._entries[key] = entry


class _Engine:
    """Immutable artifacts plus the precomputed weekly regressor matrix."""

    def __init__(self, artifacts: Artifacts):
        self.artifacts = artifacts
        a = artifacts
        self.matrix = build_feature_matrix(a.history, a.feature_spec, a.scaler)
        scores = score_series(a.history, a.mpi_config, irr_threshold=a.irr_threshold)
        by_date = {s.date: s.score for s in scores}
        self.feature_dates = list(self.matrix.dates)
        daily_aligned = [by_date[d] for d in self.feature_dates]
        self.weekly_regressors: dict[str, np.ndarray] = {}
        self.week_starts, self.weekly_y = weekly_resample(self.feature_dates, daily_aligned)
        for name in a.regressor_names:
            _, means = weekly_resample(self.feature_dates, self.matrix.column(name))
            self.weekly_regressors[name] = means
        self.cache = _ScenarioCache()
        self._global_importance: str | None = None
        self._gi_lock = threading.Lock()

    def apply_overrides(self, overrides: OverridesIn | None) -> tuple[str, MpiConfig, float | None]:
        """Returns a cache key, the effective config, and an absolute
        irradiance-variability threshold when the override supplies one
        (``thresholds.irr_var``; ``thresholds.irr_var_percentile`` re-ranks
        instead)."""
        base = self.artifacts.mpi_config
        if overrides is None:
            payload = {}
        else:
            payload = overrides.model_dump(exclude_none=True)
        key = hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()
        if not payload:
            return key, base, None
        weights = dict(base.weights)
        if overrides.weights:
            unknown = set(overrides.weights) - set(TRIGGER_NAMES)
            if unknown:
                raise HTTPException(422, f"unknown weight names: {sorted(unknown)}")
            weights.update(overrides.weights)
            total = sum(weights.values())
            if total <= 0 or any(w < 0 for w in weights.values()):
                raise HTTPException(422, "weights must be non-negative with a positive sum")
            weights = {k: v / total for k, v in weights.items()}
        thresholds = dict(base.thresholds)
        irr_pct = base.irr_var_percentile
        irr_abs: float | None = None
        if overrides.thresholds:
            for name, value in overrides.thresholds.items():
                if name == "irr_var_percentile":
                    irr_pct = value
                elif name == "irr_var":
                    irr_abs = value
                elif name in thresholds:
                    thresholds[name] = value
                else:
                    raise HTTPException(422, f"unknown threshold name: {name}")
        band_edges = overrides.band_edges or base.band_edges
        try:
            config = MpiConfig(
                thresholds=thresholds,
                irr_var_percentile=irr_pct,
                weights=weights,
                band_edges=tuple(band_edges),
                band_mode="fixed",
            )
        except MpiError as exc:
            raise HTTPException(422, str(exc)) from exc
        return key, config, irr_abs

    def scenario(self, overrides: OverridesIn | None) -> _ScenarioEntry:
        key, config, irr_abs = self.apply_overrides(overrides)
        cached = self.cache.get(key)
        if cached is not None:
            return cached
        a = self.artifacts
        if config is a.mpi_config:
            weekly_y, week_starts = self.weekly_y, self.week_starts
        else:
            if irr_abs is not None:
                irr_threshold = irr_abs
            elif config.irr_var_percentile != a.mpi_config.irr_var_percentile:
                irr_threshold = resolve_irr_threshold(
                    irr_variability(a.history), config.irr_var_percentile
                )
            else:
                irr_threshold = a.irr_threshold
            scores = score_series(a.history, config, irr_threshold=irr_threshold)
            by_date = {s.date: s.score for s in scores}
            daily = [by_date[d] for d in self.feature_dates]
            week_starts, weekly_y = weekly_resample(self.feature_dates, daily)
        model = fc.fit(week_starts, weekly_y, regressors=self.weekly_regressors, config=a.forecast_config)
        entry = _ScenarioEntry(config, tuple(week_starts), tuple(float(v) for v in weekly_y), model)
        self.cache.put(key, entry)
        return entry

    def global_importance_json(self) -> str:
        if self._global_importance is None:
            with self._gi_lock:
                if self._global_importance is None:
                    from .explain import global_importance

                    stride = max(1, len(self.matrix) // 365)
                    sample = self.matrix.values[::stride]
                    gi = global_importance(
                        self.artifacts.classifier, sample, feature_names=self.matrix.feature_names
                    )
                    self._global_importance = gi.to_json()
        return self._global_importance


def create_app(artifacts: Artifacts, static_dir=None) -> FastAPI:
    engine = _Engine(artifacts)
    app = FastAPI(title="mpindex service", version="1")

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/app", StaticFiles(directory=static_dir, html=True), name="dashboard")

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        errors = exc.errors()
        if any(e.get("type") == "json_invalid" for e in errors):
            return _error(400, "bad_json", "request body is not valid JSON",
                          [str(e.get("ctx", {}).get("error", "")) for e in errors])
        safe = [
            {"loc": [str(p) for p in e.get("loc", [])], "type": e.get("type"), "msg": e.get("msg")}
            for e in errors
        ]
        return _error(422, "invalid_request", "request failed validation", safe)

    @app.exception_handler(HTTPException)
    async def http_handler(request: Request, exc: HTTPException):
        code = {400: "bad_request", 404: "not_found", 413: "body_too_large", 422: "invalid_request"}.get(
            exc.status_code, "error"
        )
        return _error(exc.status_code, code, str(exc.detail), None)

    @app.middleware("http")
    async def body_limit(request: Request, call_next):
        length = request.headers.get("content-length")
        if length and int(length) > artifacts.max_body_bytes:
            return _error(413, "body_too_large", f"request body exceeds {artifacts.max_body_bytes} bytes")
        return await call_next(request)

    @app.get("/health")
    @app.get("/v1/health")
    async def health():
        return {"status": "ok"}

    @app.post("/v1/score")
    async def score(records: list[ScoreRecordIn]):
        if len(records) < 3:
            raise HTTPException(422, "need at least 3 consecutive days to evaluate irradiance variability")
        try:
            series = EnvSeries(
                [
                    EnvRecord(r.date, r.aod, r.temperature, r.humidity, r.wind_speed, r.solar_irradiance)
                    for r in records
                ]
            )
        except DuplicateDateError as exc:
            raise HTTPException(422, str(exc)) from exc
        try:
            scores = score_series(series, artifacts.mpi_config, irr_threshold=artifacts.irr_threshold)
        except MpiError as exc:
            raise HTTPException(422, str(exc)) from exc
        return [
            {
                "date": s.date.isoformat(),
                "mpi": s.score,
                "label": s.label,
                "triggers": dict(zip(TRIGGER_NAMES, [bool(f) for f in s.triggers.flags])),
            }
            for s in scores
        ]

    @app.post("/v1/forecast")
    async def forecast_endpoint(request: ForecastRequestIn):
        if not 1 <= request.horizon <= MAX_HORIZON:
            raise HTTPException(422, f"horizon must be in [1, {MAX_HORIZON}]")
        entry = engine.scenario(request.overrides)
        result = fc.predict(entry.model, request.horizon)
        payload = result.to_dict()
        payload.update(
            {
                "horizon": request.horizon,
                "band_edges": list(entry.config.band_edges),
                "history": [
                    {
                        "week_start": entry.week_starts[i].isoformat(),
                        "score": entry.weekly_scores[i],
                        "label": label_risk(entry.weekly_scores[i], entry.config),
                    }
                    for i in range(len(entry.week_starts))
                ],
            }
        )
        return payload

    @app.get("/v1/explain/global")
    async def explain_global():
        return JSONResponse(content=json.loads(engine.global_importance_json()))

    @app.post("/v1/explain/sample")
    async def explain_sample(request: ExplainSampleIn):
        from .explain import tree_shap, waterfall_to_dict

        spec = artifacts.feature_spec
        provided = [p for p in (request.features, request.records, request.week_start) if p is not None]
        if len(provided) != 1:
            raise HTTPException(422, "provide exactly one of 'features', 'records', or 'week_start'")
        if request.features is not None:
            x = np.asarray(request.features, dtype=np.float64)
            width = len(spec.feature_names)
            if x.shape != (width,):
                raise HTTPException(422, f"expected {width} features, got {len(request.features)}")
        elif request.week_start is not None:
            # representative day: last feature row inside that stored history week
            rows = [
                i for i, d in enumerate(engine.feature_dates)
                if request.week_start <= d < request.week_start + timedelta(days=7)
            ]
            if not rows:
                raise HTTPException(404, f"no history week starting {request.week_start.isoformat()}")
            x = engine.matrix.values[rows[-1]]
        else:
            needed = spec.warmup_rows + 1
            if len(request.records) < needed:
                raise HTTPException(422, f"need at least {needed} consecutive records")
            try:
                series = EnvSeries(
                    [
                        EnvRecord(r.date, r.aod, r.temperature, r.humidity, r.wind_speed, r.solar_irradiance)
                        for r in request.records
                    ]
                )
                matrix = build_feature_matrix(series, spec, artifacts.scaler)
            except Exception as exc:
                raise HTTPException(422, str(exc)) from exc
            x = matrix.values[-1]
        attr = tree_shap(artifacts.classifier, x)
        predicted = int(np.argmax(attr.margin))
        return {
            "feature_values": x.tolist(),
            "base_values": attr.base_values.tolist(),
            "features": [
                {"name": name, "phi_per_class": attr.phi[j].tolist()}
                for j, name in enumerate(attr.feature_names)
            ],
            "margins": attr.margin.tolist(),
            "predicted_class": predicted,
            "predicted_label": LABELS[predicted] if predicted < len(LABELS) else str(predicted),
            "waterfall": waterfall_to_dict(attr, predicted),
        }

    return app


def serve(config: ServiceConfig):
    """Load artifacts (failing fast on skew) and run the service."""
    import uvicorn

    artifacts = Artifacts.load(config)
    artifacts.max_body_bytes = config.max_body_bytes
    app = create_app(artifacts, static_dir=config.static_dir)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")
