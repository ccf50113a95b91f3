import numpy as np
import pytest

from mpindex.ingest import serialize_env_csv, validate
from mpindex.synth import ScenarioSpec, VariableBaseline, generate


class TestGenerate:
    def test_same_spec_byte_identical(self):
        spec = ScenarioSpec(seed=42, days=400)
        assert serialize_env_csv(generate(spec)) == serialize_env_csv(generate(spec))

    def test_length_contract(self):
        assert len(generate(ScenarioSpec(seed=1, days=1826))) == 1826

    def test_storms_raise_aod_exceedances(self):
        base = dict(seed=5, days=1461)
        stormy = generate(ScenarioSpec(storm_rate=12.0, **base))
        calm = generate(ScenarioSpec(storm_rate=0.0, **base))
        count = lambda s: sum(r.aod > 0.9 for r in s.records)
        assert count(stormy) > count(calm)

    def test_output_always_satisfies_invariants(self):
        # noisy spec pushing against every bound
        baseline = {
            "aod": VariableBaseline(0.1, 0.3, 0.5),
            "temperature": VariableBaseline(30.0, 10.0, 8.0),
            "humidity": VariableBaseline(90.0, 30.0, 25.0),
            "wind_speed": VariableBaseline(1.0, 2.0, 3.0),
            "solar_irradiance": VariableBaseline(50.0, 100.0, 80.0),
        }
        series = generate(ScenarioSpec(seed=3, days=800, baseline=baseline, storm_rate=40.0))
        assert validate(series).verdict == "pass"

    def test_distinct_seeds_share_seasonal_skeleton(self):
        days = 1096
        a = generate(ScenarioSpec(seed=11, days=days))
        b = generate(ScenarioSpec(seed=99, days=days))
        spec = ScenarioSpec()
        window = 365
        for var in ("temperature", "humidity", "solar_irradiance"):
            xa = np.convolve(a.column(var), np.ones(window) / window, mode="valid")
            xb = np.convolve(b.column(var), np.ones(window) / window, mode="valid")
            tol = 2.0 * spec.baseline[var].sigma / np.sqrt(window)
            assert np.abs(xa - xb).max() < 2 * tol

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            ScenarioSpec(days=0)
        with pytest.raises(ValueError):
            ScenarioSpec(storm_rate=-1.0)
        with pytest.raises(ValueError):
            ScenarioSpec(baseline={**ScenarioSpec().baseline, "aod": VariableBaseline(0.5, 0.1, -0.2)})
