"""Artifact bundle shared by the HTTP service and the CLI.

A bundle is a directory of plain JSON/CSV files referenced from a
``service.json``: the fitted classifier (with embedded preprocessing), the
index configuration, the scored history, and the forecaster settings.
Everything the service needs at runtime loads once from here; a feature-name
mismatch between classifier, scaler, and feature spec is a startup error.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .features import FeatureSpec, ScalerParams, build_feature_matrix, build_raw_feature_matrix, fit_scaler
from .forecast import ForecastConfig
from .gbdt import TrainParams, TreeEnsemble, train
from .ingest import EnvSeries, parse_env_csv, serialize_env_csv
from .mpi import LABELS, MpiConfig, irr_variability, resolve_band_edges, resolve_irr_threshold, score_series

SERVICE_CONFIG_VERSION = "mpindex-service/1"
FORECASTER_VERSION = "mpindex-forecaster-artifact/1"


class ArtifactError(Exception):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    host: str
    port: int
    max_body_bytes: int
    classifier: Path
    forecaster: Path
    mpi_config: Path
    scaler: Path
    static_dir: Path | None = None  # built dashboard, served when present

    @staticmethod
    def load(path: Path) -> "ServiceConfig":
        path = Path(path)
        raw = json.loads(path.read_text())
        if raw.get("format") != SERVICE_CONFIG_VERSION:
            raise ArtifactError(f"unsupported service config format {raw.get('format')!r}")
        base = path.parent
        return ServiceConfig(
            host=raw.get("host", "127.0.0.1"),
            port=int(raw.get("port", 8800)),
            max_body_bytes=int(raw.get("max_body_bytes", 4_000_000)),
            classifier=base / raw["classifier"],
            forecaster=base / raw["forecaster"],
            mpi_config=base / raw["mpi_config"],
            scaler=base / raw["scaler"],
            static_dir=(base / raw["static_dir"]) if raw.get("static_dir") else None,
        )


@dataclass
class Artifacts:
    """Everything the service serves from, loaded and cross-checked."""

    classifier: TreeEnsemble
    mpi_config: MpiConfig
    scaler: ScalerParams
    feature_spec: FeatureSpec
    history: EnvSeries
    forecast_config: ForecastConfig
    regressor_names: tuple[str, ...]
    irr_threshold: float
    max_body_bytes: int = 4_000_000

    @staticmethod
    def load(config: ServiceConfig) -> "Artifacts":
        classifier = TreeEnsemble.from_json(config.classifier.read_text())

        scaler_raw = json.loads(config.scaler.read_text())
        if "meta" in scaler_raw:  # the scaler may live inside the model file
            scaler = ScalerParams.from_json(json.dumps(scaler_raw["meta"]["scaler"]))
            feature_spec = FeatureSpec.from_json(json.dumps(scaler_raw["meta"]["feature_spec"]))
        else:
            scaler = ScalerParams.from_json(json.dumps(scaler_raw))
            feature_spec = FeatureSpec.default()

        mpi_config = MpiConfig.from_json(config.mpi_config.read_text())

        fc_raw = json.loads(config.forecaster.read_text())
        if fc_raw.get("format") != FORECASTER_VERSION:
            raise ArtifactError(f"unsupported forecaster artifact format {fc_raw.get('format')!r}")
        forecast_config = ForecastConfig.from_dict(fc_raw["config"])
        history = parse_env_csv((config.forecaster.parent / fc_raw["history_csv"]).read_text())

        artifacts = Artifacts(
            classifier=classifier,
            mpi_config=mpi_config,
            scaler=scaler,
            feature_spec=feature_spec,
            history=history,
            forecast_config=forecast_config,
            regressor_names=tuple(fc_raw["regressor_names"]),
            irr_threshold=float(fc_raw["irr_threshold"]),
        )
        artifacts.check_feature_skew()
        return artifacts

    def check_feature_skew(self):
        """Train/serve skew guard: all three feature-name lists must agree."""
        spec_names = tuple(self.feature_spec.feature_names)
        if self.classifier.feature_names is not None and tuple(self.classifier.feature_names) != spec_names:
            raise ArtifactError(
                "feature-name skew: classifier "
                f"{list(self.classifier.feature_names)} vs spec {list(spec_names)}"
            )
        if tuple(self.scaler.feature_names) != spec_names:
            raise ArtifactError(
                f"feature-name skew: scaler {list(self.scaler.feature_names)} vs spec {list(spec_names)}"
            )
        for name in self.regressor_names:
            if name not in spec_names:
                raise ArtifactError(f"regressor {name!r} is not a known feature")


def build_bundle(
    series: EnvSeries,
    out_dir: Path,
    mpi_config: MpiConfig | None = None,
    feature_spec: FeatureSpec | None = None,
    train_params: TrainParams | None = None,
    forecast_config: ForecastConfig | None = None,
    regressor_k: int = 4,
    host: str = "127.0.0.1",
    port: int = 8800,
) -> Path:
    """Train on ``series`` and write a complete service bundle; returns the config path.

    Regressors are chosen by global attribution ranking over a training
    subsample (top ``regressor_k`` base variables).
    """
    from .explain import global_importance
    from .forecast import select_regressors

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    mpi_config = mpi_config or MpiConfig()
    feature_spec = feature_spec or FeatureSpec.default()
    train_params = train_params or TrainParams()
    forecast_config = forecast_config or ForecastConfig()

    scores = score_series(series, mpi_config)
    mpi_config = resolve_band_edges([s.score for s in scores], mpi_config)
    irr_threshold = resolve_irr_threshold(irr_variability(series), mpi_config.irr_var_percentile)

    raw = build_raw_feature_matrix(series, feature_spec)
    scaler = fit_scaler(raw)
    matrix = build_feature_matrix(series, feature_spec, scaler)
    by_date = {s.date: s for s in scores}
    rows = [i for i, d in enumerate(matrix.dates) if d in by_date]
    X = matrix.values[rows]
    y = np.array([LABELS.index(by_date[matrix.dates[i]].label) for i in rows])

    model = train(X, y, train_params, feature_names=matrix.feature_names)
    model.meta = {
        "scaler": json.loads(scaler.to_json()),
        "feature_spec": json.loads(feature_spec.to_json()),
        "labels": list(LABELS),
        "irr_threshold": irr_threshold,
    }

    sample = X[:: max(1, len(X) // 200)]
    ranking = global_importance(model, sample, feature_names=matrix.feature_names)
    regressors = select_regressors(ranking, regressor_k)

    (out_dir / "model.json").write_text(model.to_json())
    (out_dir / "mpi_config.json").write_text(mpi_config.to_json())
    (out_dir / "history.csv").write_text(serialize_env_csv(series))
    (out_dir / "forecaster.json").write_text(
        json.dumps(
            {
                "format": FORECASTER_VERSION,
                "config": forecast_config.to_dict(),
                "regressor_names": regressors,
                "irr_threshold": irr_threshold,
                "history_csv": "history.csv",
            },
            indent=2,
        )
    )
    config_path = out_dir / "service.json"
    config_path.write_text(
        json.dumps(
            {
                "format": SERVICE_CONFIG_VERSION,
                "host": host,
                "port": port,
                "max_body_bytes": 4_000_000,
                "classifier": "model.json",
                "forecaster": "forecaster.json",
                "mpi_config": "mpi_config.json",
                "scaler": "model.json",
            },
            indent=2,
        )
    )
    return config_path
