import math

import numpy as np
import pytest

from mpindex.evaluate import EvaluateError, confusion, regression, report


class TestConfusion:
    def test_identical_labels_diagonal(self):
        cm = confusion([0, 1, 2, 0, 1, 2], [0, 1, 2, 0, 1, 2], 3)
        assert np.array_equal(cm.counts, np.diag([2, 2, 2]))
        assert cm.accuracy == 1.0

    def test_high_class_recall_fixture(self):
        # 22 of 25 true High predicted correctly -> recall 0.88
        y_true = [2] * 25 + [0] * 10
        y_pred = [2] * 22 + [1] * 3 + [0] * 10
        cm = confusion(y_true, y_pred, 3)
        rep = report(cm)
        assert rep.per_class[2].recall == 22 / 25
        assert abs(rep.per_class[2].recall - 0.88) < 1e-12

    def test_empty_errors(self):
        with pytest.raises(EvaluateError):
            confusion([], [], 3)

    def test_length_mismatch_errors(self):
        with pytest.raises(EvaluateError):
            confusion([0, 1], [0], 2)

    def test_out_of_range_label_errors(self):
        with pytest.raises(EvaluateError):
            confusion([0, 3], [0, 1], 3)


class TestReport:
    def test_hand_computed_three_class(self):
        counts = np.array([[2, 0, 0], [0, 1, 1], [0, 0, 2]])
        cm = confusion(
            [0, 0, 1, 1, 2, 2],
            [0, 0, 1, 2, 2, 2],
            3,
        )
        assert np.array_equal(cm.counts, counts)
        rep = report(cm)
        assert [m.precision for m in rep.per_class] == [1.0, 1.0, 2 / 3]
        assert [m.recall for m in rep.per_class] == [1.0, 0.5, 1.0]
        assert [round(m.f1, 12) for m in rep.per_class] == [1.0, round(2 / 3, 12), 0.8]
        assert rep.accuracy == 5 / 6
        assert abs(rep.macro_precision - (1 + 1 + 2 / 3) / 3) < 1e-12
        assert abs(rep.macro_precision - 0.8889) < 5e-5

    def test_perfect_diagonal_all_ones(self):
        cm = confusion([0, 1, 2], [0, 1, 2], 3)
        rep = report(cm)
        assert all(m.precision == m.recall == m.f1 == 1.0 for m in rep.per_class)
        assert rep.accuracy == 1.0

    def test_zero_support_class_flagged_and_weightless(self):
        cm = confusion([0, 0, 2, 2], [0, 0, 2, 2], 3)
        rep = report(cm)
        middle = rep.per_class[1]
        assert middle.support == 0
        assert middle.zero_division
        assert middle.precision == middle.recall == middle.f1 == 0.0
        assert rep.weighted_precision == 1.0  # zero-support class carries no weight

    def test_identity_report_property(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            y = rng.integers(0, 3, size=30)
            if len(np.unique(y)) < 3:
                continue
            rep = report(confusion(y, y, 3))
            assert rep.accuracy == 1.0
            assert all(m.f1 == 1.0 for m in rep.per_class)

    def test_text_table_layout(self):
        cm = confusion([0, 1, 2], [0, 1, 2], 3, labels=("Low", "Medium", "High"))
        text = report(cm).to_text()
        lines = text.splitlines()
        assert "Precision" in lines[0] and "Recall" in lines[0] and "F1-score" in lines[0]
        assert lines[1].startswith("Low")
        assert any(ln.startswith("Accuracy") for ln in lines)
        assert any(ln.startswith("Macro Average") for ln in lines)
        assert any(ln.startswith("Weighted Average") for ln in lines)

    def test_json_round_trip(self):
        import json

        cm = confusion([0, 1, 1], [0, 1, 0], 2)
        raw = json.loads(report(cm).to_json())
        assert raw["accuracy"] == 2 / 3


class TestRegression:
    def test_perfect_prediction(self):
        m = regression([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert (m.mae, m.rmse, m.r2) == (0.0, 0.0, 1.0)

    def test_hand_computed(self):
        m = regression([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
        assert abs(m.mae - 1 / 3) < 1e-15
        assert abs(m.rmse - 1 / math.sqrt(3)) < 1e-15
        assert abs(m.r2 - 0.5) < 1e-15

    def test_mean_predictor_r2_zero(self):
        y = [1.0, 2.0, 3.0, 10.0]
        mean = sum(y) / len(y)
        m = regression(y, [mean] * 4)
        assert abs(m.r2) < 1e-15

    def test_constant_truth_r2_flagged(self):
        m = regression([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
        assert m.r2 is None
        assert not m.r2_defined

    def test_length_mismatch(self):
        with pytest.raises(EvaluateError):
            regression([1.0], [1.0, 2.0])

    def test_mae_le_rmse_over_random_vectors(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            n = rng.integers(2, 40)
            y = rng.normal(size=n)
            p = rng.normal(size=n)
            m = regression(y, p)
            assert m.mae <= m.rmse + 1e-15

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=25)
        p = rng.normal(size=25)
        m1 = regression(y, p)
        perm = rng.permutation(25)
        m2 = regression(y[perm], p[perm])
        assert np.isclose(m1.mae, m2.mae) and np.isclose(m1.rmse, m2.rmse) and np.isclose(m1.r2, m2.r2)
