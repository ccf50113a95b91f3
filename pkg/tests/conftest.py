import pytest

from mpindex.artifacts import Artifacts, ServiceConfig, build_bundle
from mpindex.forecast import ForecastConfig
from mpindex.gbdt import TrainParams
from mpindex.synth import ScenarioSpec, generate


@pytest.fixture(scope="session")
def bundle_dir(tmp_path_factory):
    """A complete trained service bundle on two years of synthetic weather."""
    series = generate(ScenarioSpec(seed=42, days=730))
    out = tmp_path_factory.mktemp("bundle")
    build_bundle(
        series,
        out,
        train_params=TrainParams(n_rounds=40, max_depth=3, seed=7),
        forecast_config=ForecastConfig(n_changepoints=12),
    )
    return out


@pytest.fixture(scope="session")
def service_artifacts(bundle_dir):
    return Artifacts.load(ServiceConfig.load(bundle_dir / "service.json"))


@pytest.fixture(scope="session")
def client(service_artifacts):
    from fastapi.testclient import TestClient

    from mpindex.service import create_app

    with TestClient(create_app(service_artifacts)) as c:
        yield c
