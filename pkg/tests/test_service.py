import json
from datetime import date, timedelta
from pathlib import Path

import pytest
from fastapi.responses import JSONResponse
from jsonschema import Draft202012Validator

from mpindex.mpi import TRIGGER_NAMES, score_series
from mpindex.ingest import EnvRecord, EnvSeries

SCHEMAS = Path(__file__).parent.parent / "schemas"


def check_schema(name, payload):
    schema = json.loads((SCHEMAS / f"{name}.schema.json").read_text())
    Draft202012Validator(schema).validate(payload)


def day_payload(i, **overrides):
    base = {
        "date": (date(2023, 1, 1) + timedelta(days=i)).isoformat(),
        "aod": 0.4,
        "temperature": 30.0,
        "humidity": 55.0,
        "wind_speed": 4.0,
        "solar_irradiance": 250.0,
    }
    base.update(overrides)
    return base


class TestHealth:
    def test_health(self, client):
        for path in ("/health", "/v1/health"):
            resp = client.get(path)
            assert resp.status_code == 200
            assert resp.json() == {"status": "ok"}


class TestScore:
    def test_matches_library_byte_for_byte(self, client, service_artifacts):
        payload = [day_payload(i, aod=0.3 + 0.2 * i, solar_irradiance=250 - 40 * i) for i in range(5)]
        resp = client.post("/v1/score", json=payload)
        assert resp.status_code == 200

        series = EnvSeries(
            [
                EnvRecord(date.fromisoformat(r["date"]), r["aod"], r["temperature"],
                          r["humidity"], r["wind_speed"], r["solar_irradiance"])
                for r in payload
            ]
        )
        scores = score_series(series, service_artifacts.mpi_config,
                              irr_threshold=service_artifacts.irr_threshold)
        expected = [
            {
                "date": s.date.isoformat(),
                "mpi": s.score,
                "label": s.label,
                "triggers": dict(zip(TRIGGER_NAMES, [bool(f) for f in s.triggers.flags])),
            }
            for s in scores
        ]
        assert resp.content == JSONResponse(content=expected).body
        check_schema("score_response", resp.json())

    def test_all_triggers_score_one(self, client):
        payload = [
            day_payload(0, solar_irradiance=250.0),
            day_payload(1, solar_irradiance=250.0),
            day_payload(2, aod=5.0, temperature=48.0, humidity=95.0, wind_speed=15.0,
                        solar_irradiance=2000.0),
        ]
        resp = client.post("/v1/score", json=payload)
        assert resp.status_code == 200
        last = resp.json()[-1]
        assert last["mpi"] == 1.0
        assert last["label"] == "High"
        assert all(last["triggers"].values())

    def test_under_three_days_rejected(self, client):
        resp = client.post("/v1/score", json=[day_payload(0), day_payload(1)])
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "invalid_request"
        check_schema("error", body)

    def test_duplicate_dates_rejected(self, client):
        resp = client.post("/v1/score", json=[day_payload(0), day_payload(0), day_payload(1)])
        assert resp.status_code == 422

    def test_out_of_range_values_rejected(self, client):
        payload = [day_payload(0), day_payload(1), day_payload(2, humidity=130.0)]
        resp = client.post("/v1/score", json=payload)
        assert resp.status_code == 422

    def test_malformed_json_is_400_with_code(self, client):
        resp = client.post("/v1/score", content=b"{nope", headers={"content-type": "application/json"})
        assert resp.status_code == 400
        assert resp.json()["code"] == "bad_json"

    def test_identical_requests_identical_bodies(self, client):
        payload = [day_payload(i) for i in range(4)]
        bodies = {client.post("/v1/score", json=payload).content for _ in range(3)}
        assert len(bodies) == 1

    def test_concurrent_identical_requests_identical_bodies(self, client):
        from concurrent.futures import ThreadPoolExecutor

        payload = [day_payload(i, aod=0.5 + 0.1 * i) for i in range(5)]
        with ThreadPoolExecutor(max_workers=8) as pool:
            futures = [pool.submit(client.post, "/v1/score", json=payload) for _ in range(16)]
            bodies = {f.result().content for f in futures}
        assert len(bodies) == 1


class TestForecast:
    def test_horizon_contract(self, client):
        resp = client.post("/v1/forecast", json={"horizon": 52})
        assert resp.status_code == 200
        body = resp.json()
        assert body["horizon"] == 52
        assert len(body["weeks"]) == 52
        starts = [w["week_start"] for w in body["weeks"]]
        assert starts == sorted(starts) and len(set(starts)) == 52
        check_schema("forecast_response", body)

    def test_horizon_bounds(self, client):
        for horizon in (0, -1, 521):
            resp = client.post("/v1/forecast", json={"horizon": horizon})
            assert resp.status_code == 422
        assert client.post("/v1/forecast", json={"horizon": 520}).status_code == 200

    def test_components_sum_to_yhat(self, client):
        body = client.post("/v1/forecast", json={"horizon": 12}).json()
        for week in body["weeks"]:
            assert abs(week["trend"] + week["seasonal"] + week["regressors"] - week["yhat"]) <= 1e-9

    def test_interval_ordering(self, client):
        body = client.post("/v1/forecast", json={"horizon": 8}).json()
        for week in body["weeks"]:
            assert week["lower"] <= week["yhat"] <= week["upper"]

    def test_thresholds_above_maxima_flatten_history(self, client):
        overrides = {
            "thresholds": {"aod": 99.0, "temperature": 99.0, "humidity": 101.0, "wind_speed": 99.0,
                           "irr_var": 1e9}
        }
        body = client.post("/v1/forecast", json={"horizon": 4, "overrides": overrides}).json()
        scores = [h["score"] for h in body["history"]]
        assert scores and all(s == 0.0 for s in scores)
        assert all(h["label"] == "Low" for h in body["history"])

    def test_weight_overrides_rescale_history(self, client):
        # all weight on AOD: weekly scores become the AOD exceedance rate
        overrides = {"weights": {"aod": 1.0, "temperature": 0.0, "humidity": 0.0,
                                 "wind_speed": 0.0, "irr_var": 0.0}}
        body = client.post("/v1/forecast", json={"horizon": 4, "overrides": overrides}).json()
        base = client.post("/v1/forecast", json={"horizon": 4}).json()
        assert body["history"] != base["history"]
        for h in body["history"]:
            assert 0.0 <= h["score"] <= 1.0

    def test_unnormalized_weights_accepted_and_renormalized(self, client):
        overrides = {"weights": {"aod": 2.0, "temperature": 2.0, "humidity": 2.0,
                                 "wind_speed": 2.0, "irr_var": 2.0}}
        resp = client.post("/v1/forecast", json={"horizon": 4, "overrides": overrides})
        assert resp.status_code == 200

    def test_negative_weight_rejected(self, client):
        overrides = {"weights": {"aod": -1.0}}
        assert client.post("/v1/forecast", json={"horizon": 4, "overrides": overrides}).status_code == 422

    def test_band_edge_override_relabels(self, client):
        body = client.post(
            "/v1/forecast",
            json={"horizon": 4, "overrides": {"band_edges": [0.01, 0.02]}},
        ).json()
        assert body["band_edges"] == [0.01, 0.02]
        assert any(h["label"] == "High" for h in body["history"])

    def test_scenario_cache_returns_identical_bodies(self, client):
        req = {"horizon": 6, "overrides": {"band_edges": [0.2, 0.5]}}
        first = client.post("/v1/forecast", json=req)
        second = client.post("/v1/forecast", json=req)
        assert first.content == second.content

    def test_request_schema_mirrors_validation(self, client):
        check_schema("forecast_request", {"horizon": 52})
        check_schema("forecast_request", {"horizon": 4, "overrides": {"weights": {"aod": 0.5}}})


class TestExplain:
    def test_global_ranking(self, client, service_artifacts):
        resp = client.get("/v1/explain/global")
        assert resp.status_code == 200
        body = resp.json()
        check_schema("explain_global_response", body)
        values = [e["mean_abs_phi"] for e in body["ranking"]]
        assert values == sorted(values, reverse=True)
        names = {e["name"] for e in body["ranking"]}
        assert names == set(service_artifacts.feature_spec.feature_names)

    def test_sample_by_feature_vector(self, client, service_artifacts):
        width = len(service_artifacts.feature_spec.feature_names)
        resp = client.post("/v1/explain/sample", json={"features": [0.5] * width})
        assert resp.status_code == 200
        body = resp.json()
        check_schema("explain_sample_response", body)
        wf = body["waterfall"]
        total = wf["base_value"] + sum(r["contribution"] for r in wf["rows"])
        assert abs(total - wf["margin"]) <= 1e-6

    def test_sample_by_record_window(self, client, service_artifacts):
        needed = service_artifacts.feature_spec.warmup_rows + 1
        records = [day_payload(i, aod=0.3 + 0.05 * i) for i in range(needed)]
        resp = client.post("/v1/explain/sample", json={"records": records})
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["feature_values"]) == len(service_artifacts.feature_spec.feature_names)

    def test_sample_by_history_week(self, client):
        history = client.post("/v1/forecast", json={"horizon": 4}).json()["history"]
        week = history[3]["week_start"]
        resp = client.post("/v1/explain/sample", json={"week_start": week})
        assert resp.status_code == 200
        check_schema("explain_sample_response", resp.json())

    def test_unknown_history_week_is_404(self, client):
        resp = client.post("/v1/explain/sample", json={"week_start": "1999-01-04"})
        assert resp.status_code == 404

    def test_wrong_width_rejected(self, client):
        assert client.post("/v1/explain/sample", json={"features": [0.1, 0.2]}).status_code == 422

    def test_exactly_one_input_required(self, client, service_artifacts):
        width = len(service_artifacts.feature_spec.feature_names)
        assert client.post("/v1/explain/sample", json={}).status_code == 422
        both = {"features": [0.0] * width, "records": [day_payload(0)]}
        assert client.post("/v1/explain/sample", json=both).status_code == 422

    def test_short_record_window_rejected(self, client):
        resp = client.post("/v1/explain/sample", json={"records": [day_payload(0)]})
        assert resp.status_code == 422


class TestLimitsAndSkew:
    def test_oversized_body_rejected(self, client, service_artifacts):
        blob = b"[" + b"0" * (service_artifacts.max_body_bytes + 10) + b"]"
        resp = client.post("/v1/score", content=blob, headers={"content-type": "application/json"})
        assert resp.status_code == 413
        assert resp.json()["code"] == "body_too_large"

    def test_feature_skew_fails_at_load(self, bundle_dir, tmp_path):
        import shutil

        from mpindex.artifacts import ArtifactError, Artifacts, ServiceConfig

        broken = tmp_path / "broken"
        shutil.copytree(bundle_dir, broken)
        model = json.loads((broken / "model.json").read_text())
        model["feature_names"][0] = "renamed_feature"
        (broken / "model.json").write_text(json.dumps(model))
        with pytest.raises(ArtifactError):
            Artifacts.load(ServiceConfig.load(broken / "service.json"))
