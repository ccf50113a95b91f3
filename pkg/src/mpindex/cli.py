"""Batch driver: synth -> ingest -> index -> train -> explain -> forecast -> serve.

Stages exchange plain CSV/JSON files so any one of them can be swapped out
while debugging. Every subcommand writes through a temp file and renames, so
a failed run leaves no partial output behind. Exit codes: 2 for usage
errors, 1 for file problems, 3 for validation/domain failures.

``MPI_LOG`` (error|info|debug) controls logging verbosity.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path

import numpy as np

log = logging.getLogger("mpindex")

EXIT_OK = 0
EXIT_FILE = 1
EXIT_USAGE = 2
EXIT_INVALID = 3

ENV_HEADER = "date,aod,temperature,humidity,wind_speed,solar_irradiance"


class CliError(Exception):
    def __init__(self, message: str, exit_code: int = EXIT_INVALID):
        super().__init__(message)
        self.exit_code = exit_code


def write_text_atomic(path: Path, text: str):
    tmp = path.with_name(path.name + ".partial")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def read_text(path: Path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_FILE) from exc


def _sniff_header(text: str) -> str:
    return text.splitlines()[0].strip() if text.strip() else ""


# ---------------------------------------------------------------- subcommands


def cmd_synth(args) -> int:
    from .ingest import serialize_env_csv
    from .synth import ScenarioSpec, generate

    spec = ScenarioSpec(seed=args.seed, days=args.days)
    series = generate(spec)
    write_text_atomic(Path(args.out), serialize_env_csv(series))
    log.info("synth: wrote %d days to %s", len(series), args.out)
    return EXIT_OK


def cmd_ingest(args) -> int:
    from .ingest import merge_aod, parse_aod_csv, parse_env_csv, serialize_env_csv, validate
    from .power import fetch_power

    text = read_text(args.input)
    if args.power:
        try:
            lat_s, lon_s, start_s, end_s = args.power.split(",")
            lat, lon = float(lat_s), float(lon_s)
            start, end = date.fromisoformat(start_s), date.fromisoformat(end_s)
        except ValueError as exc:
            raise CliError(f"--power expects lat,lon,start,end: {exc}", EXIT_USAGE) from exc
        series = fetch_power(lat, lon, start, end)
        series = merge_aod(series, parse_aod_csv(text))
    else:
        series = parse_env_csv(text)
    report = validate(series)
    if report.verdict == "fail":
        first = report.out_of_range[0]
        raise CliError(
            f"validation failed: {len(report.out_of_range)} out-of-range values "
            f"(first: {first[1]}={first[2]} on {first[0].isoformat()})"
        )
    if report.gap_dates:
        log.info("ingest: %d gap days inside span (kept; fill is opt-in)", len(report.gap_dates))
    write_text_atomic(Path(args.out), serialize_env_csv(series))
    log.info("ingest: wrote %d rows to %s", len(series), args.out)
    return EXIT_OK


def cmd_index(args) -> int:
    from .ingest import parse_env_csv, validate
    from .mpi import MpiConfig, derive_eof_weights, resolve_band_edges, score_series, scores_to_csv
    from dataclasses import replace

    series = parse_env_csv(read_text(args.input))
    if validate(series).verdict == "fail":
        raise CliError("input series fails validation; run ingest first")
    config = MpiConfig.from_json(read_text(args.config))
    if args.derive_eof:
        weights = derive_eof_weights(series, config)
        config = replace(config, weights=weights)
        log.info("index: derived occurrence weights %s", {k: round(v, 4) for k, v in weights.items()})
    scores = score_series(series, config)
    if config.band_mode == "percentile":
        config = resolve_band_edges([s.score for s in scores], config)
        scores = score_series(series, config)
    write_text_atomic(Path(args.out), scores_to_csv(scores))
    log.info("index: wrote %d daily scores to %s", len(scores), args.out)
    return EXIT_OK


def _load_features(path: Path, model_meta: dict | None = None):
    """Read a feature file: either the raw env schema or an exported matrix.

    Env input is featurized with the default spec (or the spec/scaler stored
    in a model's metadata, when given); returns (matrix, scaler, spec) where
    scaler/spec are None for prebuilt matrices.
    """
    from .features import (
        FeatureMatrix,
        FeatureSpec,
        ScalerParams,
        build_feature_matrix,
        build_raw_feature_matrix,
        fit_scaler,
    )
    from .ingest import parse_env_csv

    text = read_text(path)
    header = _sniff_header(text)
    if header == ENV_HEADER:
        series = parse_env_csv(text)
        if model_meta and "scaler" in model_meta:
            spec = FeatureSpec.from_json(json.dumps(model_meta["feature_spec"]))
            scaler = ScalerParams.from_json(json.dumps(model_meta["scaler"]))
        else:
            spec = FeatureSpec.default()
            scaler = fit_scaler(build_raw_feature_matrix(series, spec))
        return build_feature_matrix(series, spec, scaler), scaler, spec
    return FeatureMatrix.from_csv(text), None, None


def _load_labels(path: Path) -> dict[date, int]:
    from .mpi import LABELS, scores_from_csv

    text = read_text(path)
    header = _sniff_header(text)
    if header == "date,score,label":
        dates, _, labels = scores_from_csv(text)
    elif header == "date,label":
        dates, labels = [], []
        for line in text.splitlines()[1:]:
            if not line.strip():
                continue
            d, lab = line.split(",")
            dates.append(date.fromisoformat(d))
            labels.append(lab)
    else:
        raise CliError(f"unrecognised labels header {header!r}")
    try:
        return {d: LABELS.index(lab) for d, lab in zip(dates, labels)}
    except ValueError as exc:
        raise CliError(f"unknown label in {path}: {exc}") from exc


def cmd_train(args) -> int:
    from .gbdt import TrainParams, train
    from .mpi import LABELS

    params_raw = json.loads(read_text(args.params))
    params = TrainParams(**params_raw)
    matrix, scaler, spec = _load_features(Path(args.features))
    labels_by_date = _load_labels(Path(args.labels))
    rows = [i for i, d in enumerate(matrix.dates) if d in labels_by_date]
    if not rows:
        raise CliError("no overlapping dates between features and labels")
    X = matrix.values[rows]
    y = np.array([labels_by_date[matrix.dates[i]] for i in rows])
    model = train(X, y, params, feature_names=matrix.feature_names)
    model.meta = {"labels": list(LABELS)}
    if scaler is not None:
        model.meta["scaler"] = json.loads(scaler.to_json())
        model.meta["feature_spec"] = json.loads(spec.to_json())
    write_text_atomic(Path(args.out), model.to_json())
    acc = float((model.predict_class(X) == y).mean())
    log.info("train: %d rows, training accuracy %.4f, wrote %s", len(rows), acc, args.out)
    return EXIT_OK


def cmd_explain(args) -> int:
    from .explain import global_importance, tree_shap
    from .gbdt import TreeEnsemble

    model = TreeEnsemble.from_json(read_text(args.model))
    matrix, _, _ = _load_features(Path(args.data), model_meta=model.meta)
    if model.feature_names is not None and tuple(matrix.feature_names) != tuple(model.feature_names):
        raise CliError(
            f"feature skew between model and data: {list(model.feature_names)} vs {list(matrix.feature_names)}"
        )
    labels = model.meta.get("labels") if model.meta else None
    samples = []
    for i in range(len(matrix)):
        attr = tree_shap(model, matrix.values[i])
        k = int(np.argmax(attr.margin))
        samples.append(
            {
                "date": matrix.dates[i].isoformat(),
                "margins": attr.margin.tolist(),
                "predicted_class": k,
                "predicted_label": labels[k] if labels else str(k),
            }
        )
    gi = global_importance(model, matrix.values, feature_names=matrix.feature_names)
    payload = {"ranking": json.loads(gi.to_json())["ranking"], "samples": samples}
    write_text_atomic(Path(args.out), json.dumps(payload, indent=2))
    log.info("explain: ranked %d features over %d samples, wrote %s", len(gi.entries), len(samples), args.out)
    return EXIT_OK


def _weekly_regressors(text: str, score_dates: list[date]):
    """Weekly-mean regressors aligned to the scored weeks.

    Env-schema input contributes the four default base variables, min-max
    scaled over the file; any other CSV contributes all its numeric columns
    as-is. Rows are aligned to the score dates before weekly resampling.
    """
    from .features import minmax_apply, minmax_fit
    from .ingest import parse_env_csv
    from .mpi import weekly_resample

    header = _sniff_header(text)
    columns: dict[str, dict[date, float]] = {}
    if header == ENV_HEADER:
        series = parse_env_csv(text)
        for var in ("aod", "temperature", "humidity", "wind_speed"):
            values = series.column(var)
            params = minmax_fit(values, name=var)
            scaled = [float(minmax_apply(params, v, name=var)) for v in values]
            columns[var] = dict(zip(series.dates, scaled))
    else:
        lines = [ln for ln in text.splitlines() if ln.strip()]
        names = lines[0].split(",")
        if names[0] != "date":
            raise CliError(f"unrecognised regressors header {header!r}")
        for name in names[1:]:
            columns[name] = {}
        for ln in lines[1:]:
            cells = ln.split(",")
            d = date.fromisoformat(cells[0])
            for name, cell in zip(names[1:], cells[1:]):
                columns[name][d] = float(cell)
    out = {}
    for name, by_date in columns.items():
        missing = [d for d in score_dates if d not in by_date]
        if missing:
            raise CliError(f"regressor {name!r} missing {len(missing)} score dates, first {missing[0]}")
        _, means = weekly_resample(score_dates, [by_date[d] for d in score_dates])
        out[name] = means
    return out


def cmd_forecast(args) -> int:
    from .forecast import ForecastConfig, fit, predict
    from .mpi import scores_from_csv, weekly_resample

    dates, values, _ = scores_from_csv(read_text(args.scores))
    week_starts, weekly_y = weekly_resample(dates, values)
    if not week_starts:
        raise CliError("need at least 7 scored days to build weekly series")
    regressors = {}
    if args.regressors:
        regressors = _weekly_regressors(read_text(args.regressors), dates)
    n = len(week_starts)
    config = ForecastConfig()
    if n < 2 * (config.n_changepoints + 2):
        # short histories get proportionally fewer changepoints
        config = ForecastConfig(n_changepoints=max(0, n // 2 - 2))
    model = fit(week_starts, weekly_y, regressors=regressors, config=config)
    result = predict(model, args.horizon)
    write_text_atomic(Path(args.out), result.to_csv())
    if args.save_model:
        write_text_atomic(Path(args.save_model), model.to_json())
    log.info("forecast: %d weeks of history, %d-week horizon, wrote %s", n, args.horizon, args.out)
    return EXIT_OK


def cmd_serve(args) -> int:
    from .artifacts import ServiceConfig
    from .service import serve

    config = ServiceConfig.load(Path(args.config))
    serve(config)
    return EXIT_OK


def _load_predictions(path: Path):
    text = read_text(path)
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        raw = json.loads(text)
        samples = raw.get("samples", [])
        return {date.fromisoformat(s["date"]): s["predicted_label"] for s in samples}, None
    header = _sniff_header(text)
    if header in ("date,score,label", "date,label"):
        labels = {}
        for ln in text.splitlines()[1:]:
            if not ln.strip():
                continue
            cells = ln.split(",")
            labels[date.fromisoformat(cells[0])] = cells[-1]
        return labels, None
    if header.startswith("date,") and "score" in header:
        values = {}
        for ln in text.splitlines()[1:]:
            if not ln.strip():
                continue
            cells = ln.split(",")
            values[date.fromisoformat(cells[0])] = float(cells[1])
        return None, values
    raise CliError(f"unrecognised predictions header {header!r}")


def cmd_eval(args) -> int:
    from .evaluate import confusion, regression, report
    from .mpi import LABELS

    pred_labels, pred_values = _load_predictions(Path(args.pred))
    true_labels, true_values = _load_predictions(Path(args.true))
    if pred_labels is not None and true_labels is not None:
        common = sorted(set(pred_labels) & set(true_labels))
        if not common:
            raise CliError("no overlapping dates between predictions and truth")
        y_pred = [LABELS.index(pred_labels[d]) for d in common]
        y_true = [LABELS.index(true_labels[d]) for d in common]
        cm = confusion(y_true, y_pred, len(LABELS), labels=LABELS)
        rep = report(cm)
        payload = {"n": len(common), "confusion": cm.to_dict(), "report": rep.to_dict()}
        log.info("eval: accuracy %.4f over %d samples", rep.accuracy, len(common))
    else:
        if pred_values is None or true_values is None:
            raise CliError("prediction and truth files must both be labels or both be numeric")
        common = sorted(set(pred_values) & set(true_values))
        metrics = regression([true_values[d] for d in common], [pred_values[d] for d in common])
        payload = {"n": len(common), "regression": metrics.to_dict()}
        log.info("eval: mae %.4f rmse %.4f over %d samples", metrics.mae, metrics.rmse, len(common))
    write_text_atomic(Path(args.out), json.dumps(payload, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mpindex", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a deterministic synthetic daily series")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--days", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("ingest", help="parse/validate a series CSV, optionally fetching POWER data")
    p.add_argument("--input", required=True, help="series CSV, or the AOD source when --power is used")
    p.add_argument("--power", help="lat,lon,start,end: fetch these days and merge AOD from --input")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("index", help="score daily maintenance pressure")
    p.add_argument("--input", required=True)
    p.add_argument("--config", required=True, help="index configuration JSON")
    p.add_argument("--derive-eof", action="store_true", help="derive weights from observed exceedance rates")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("train", help="fit the boosted-tree classifier")
    p.add_argument("--features", required=True, help="env CSV (featurized internally) or exported matrix CSV")
    p.add_argument("--labels", required=True, help="daily scores CSV or date,label CSV")
    p.add_argument("--params", required=True, help="training parameters JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("explain", help="global ranking and per-sample predictions")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("forecast", help="fit the weekly additive model and forecast")
    p.add_argument("--scores", required=True)
    p.add_argument("--regressors", help="env CSV or date,<name>,... CSV of exogenous drivers")
    p.add_argument("--horizon", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--save-model", help="also write the fitted model JSON here")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="compare predictions against truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--true", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("MPI_LOG", "error").lower()
    logging.basicConfig(
        level={"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}.get(level, logging.ERROR),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"mpindex {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"mpindex {args.command}: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_FILE
    except Exception as exc:  # domain/validation errors from library modules
        print(f"mpindex {args.command}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
