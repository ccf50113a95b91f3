import numpy as np
import pytest

from helpers import leaf_tree, manual_ensemble, random_ensemble, stump
from mpindex.explain import (
    ExplainError,
    brute_force_shap,
    global_importance,
    tree_shap,
    waterfall,
    waterfall_to_dict,
)
from mpindex.gbdt import TrainParams, train


def stump_model():
    tree = stump(feature=0, threshold=0.5, left_value=-1.0, right_value=3.0,
                 left_cover=50, right_cover=50)
    return manual_ensemble([[tree, leaf_tree(0.0)]], base=[0.0, 0.0])


class TestStumpFixture:
    def test_tree_shap_analytic(self):
        model = stump_model()
        x = np.array([0.9, 0.0])
        attr = tree_shap(model, x)
        assert attr.base_values[0] == pytest.approx(1.0, abs=1e-12)
        assert attr.phi[0, 0] == pytest.approx(2.0, abs=1e-12)
        assert attr.phi[1, 0] == 0.0

    def test_brute_force_matches_analytic(self):
        model = stump_model()
        attr = brute_force_shap(model, np.array([0.9, 0.0]))
        assert attr.phi[0, 0] == pytest.approx(2.0, abs=1e-12)
        assert attr.base_values[0] == pytest.approx(1.0, abs=1e-12)

    def test_other_leaf(self):
        model = stump_model()
        attr = tree_shap(model, np.array([0.1, 0.0]))
        assert attr.phi[0, 0] == pytest.approx(-2.0, abs=1e-12)


class TestAxioms:
    def test_local_accuracy_on_trained_model(self):
        rng = np.random.default_rng(0)
        X = rng.uniform(0, 1, size=(120, 6))
        y = (X[:, 0] + X[:, 3] > 1.0).astype(int)
        model = train(X, y, TrainParams(n_rounds=12, max_depth=3))
        for i in range(0, 120, 7):
            attr = tree_shap(model, X[i])
            assert attr.check_local_accuracy(1e-6) <= 1e-6

    def test_dummy_feature_gets_exact_zero(self):
        model = stump_model()  # never uses feature 1
        for x0 in (0.2, 0.8):
            attr = tree_shap(model, np.array([x0, 123.0]))
            brute = brute_force_shap(model, np.array([x0, 123.0]))
            assert attr.phi[1, 0] == 0.0
            assert brute.phi[1, 0] == 0.0

    def test_symmetry_between_mirrored_trees(self):
        # two copies of the same split logic on different features
        a = stump(feature=0, threshold=0.0, left_value=-1.0, right_value=1.0,
                  left_cover=30, right_cover=30)
        b = stump(feature=1, threshold=0.0, left_value=-1.0, right_value=1.0,
                  left_cover=30, right_cover=30)
        model = manual_ensemble([[a, leaf_tree(0.0)], [b, leaf_tree(0.0)]], base=[0.0, 0.0])
        attr = tree_shap(model, np.array([0.5, 0.5]))
        assert attr.phi[0, 0] == pytest.approx(attr.phi[1, 0], abs=1e-9)

    def test_additivity_across_trees(self):
        rng = np.random.default_rng(5)
        model = random_ensemble(rng, n_features=4, total_trees=4, max_depth=3)
        x = rng.uniform(-1, 1, size=4)
        whole = tree_shap(model, x)
        parts = np.zeros_like(whole.phi)
        for trees in model.rounds:
            single = manual_ensemble([trees], n_classes=model.n_classes,
                                     base=np.zeros(model.n_classes))
            parts += tree_shap(single, x).phi
        assert np.allclose(whole.phi, parts, atol=1e-10)


class TestOracleEquivalence:
    def test_random_small_ensembles(self):
        rng = np.random.default_rng(42)
        worst = 0.0
        for _ in range(40):
            d = int(rng.integers(2, 8))
            model = random_ensemble(rng, n_features=d, total_trees=int(rng.integers(2, 6)),
                                    max_depth=3, n_classes=int(rng.integers(2, 4)))
            for _ in range(4):
                x = rng.uniform(-1.2, 1.2, size=d)
                fast = tree_shap(model, x)
                slow = brute_force_shap(model, x)
                worst = max(worst, float(np.abs(fast.phi - slow.phi).max()))
                assert np.allclose(fast.base_values, slow.base_values, atol=1e-9)
        assert worst <= 1e-8

    def test_brute_force_feature_guard(self):
        rng = np.random.default_rng(1)
        model = random_ensemble(rng, n_features=16, total_trees=2, max_depth=2)
        with pytest.raises(ExplainError):
            brute_force_shap(model, np.zeros(16))

    def test_missing_covers_rejected(self):
        tree = stump(0, 0.5, -1.0, 1.0, left_cover=0, right_cover=0)
        model = manual_ensemble([[tree, leaf_tree(0.0)]])
        with pytest.raises(ExplainError):
            tree_shap(model, np.zeros(2))


class TestGlobalImportance:
    def test_single_sample_ranking(self):
        model = stump_model()
        X = np.array([[0.9, 5.0]])
        gi = global_importance(model, X)
        attr = tree_shap(model, X[0])
        expected = np.abs(attr.phi).mean(axis=1)
        assert gi.entries[0] == ("f0", pytest.approx(float(expected[0])))
        assert gi.entries[1] == ("f1", 0.0)

    def test_dummy_ranks_last_with_zero(self):
        rng = np.random.default_rng(9)
        X = rng.uniform(0, 1, size=(80, 4))
        y = (X[:, 1] > 0.5).astype(int)
        model = train(X, y, TrainParams(n_rounds=6, max_depth=2),
                      feature_names=["a", "b", "c", "d"])
        # feature "a" used nowhere if label depends only on b; retrain with b only split
        gi = global_importance(model, X[:30])
        assert gi.entries[0][0] == "b"

    def test_constructed_signal_features_rank_top_two(self):
        rng = np.random.default_rng(11)
        X = rng.uniform(0, 1, size=(240, 5))
        score = 0.6 * (X[:, 2] > 0.5) + 0.4 * (X[:, 4] > 0.4)
        y = np.digitize(score, [0.3, 0.7])
        model = train(X, y, TrainParams(n_rounds=25, max_depth=3),
                      feature_names=["v0", "v1", "sig_a", "v3", "sig_b"])
        gi = global_importance(model, X[:100], feature_names=model.feature_names)
        assert set(gi.names[:2]) == {"sig_a", "sig_b"}


class TestWaterfall:
    def test_telescopes_to_margin(self):
        rng = np.random.default_rng(3)
        model = random_ensemble(rng, n_features=5, total_trees=4, max_depth=3)
        x = rng.uniform(-1, 1, size=5)
        attr = tree_shap(model, x)
        for k in range(model.n_classes):
            rows = waterfall(attr, k)
            assert rows[0].feature is None
            assert rows[-1].running_total == pytest.approx(float(attr.margin[k]), abs=1e-6)

    def test_all_zero_phi_single_base_row(self):
        model = manual_ensemble([], n_classes=2, base=[0.3, -0.3])
        attr = tree_shap(model, np.zeros(3))
        rows = waterfall(attr, 0)
        assert len(rows) == 1
        assert rows[0].running_total == pytest.approx(0.3)

    def test_stump_has_one_nonzero_row(self):
        attr = tree_shap(stump_model(), np.array([0.9, 0.0]))
        rows = waterfall(attr, 0)
        assert len(rows) == 2
        assert rows[1].feature == "f0"
        assert rows[1].contribution == pytest.approx(2.0, abs=1e-12)

    def test_dict_export(self):
        attr = tree_shap(stump_model(), np.array([0.9, 0.0]))
        raw = waterfall_to_dict(attr, 0)
        assert raw["base_value"] == pytest.approx(1.0)
        assert raw["margin"] == pytest.approx(3.0)
        assert raw["rows"][0]["feature"] == "f0"

    def test_attribution_json_schema(self):
        import json

        attr = tree_shap(stump_model(), np.array([0.9, 0.0]))
        raw = json.loads(attr.to_json())
        assert set(raw) == {"base_values", "features", "margins"}
        assert raw["features"][0]["name"] == "f0"
        assert len(raw["features"][0]["phi_per_class"]) == 2
