import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from memetriage.errors import CrossValidationError, DataValidationError
from memetriage.metrics import (
    auroc,
    classification_metrics,
    cross_validate,
    evaluate_scores,
)

from oracles import pairwise_auroc


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.9, 0.8, 0.1], [1, 1, 0]) == 1.0

    def test_all_ties(self):
        assert auroc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == 0.5

    def test_worst_case(self):
        assert auroc([0.1, 0.9], [1, 0]) == 0.0

    def test_matches_pairwise_oracle_random(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            n = int(rng.integers(4, 40))
            labels = rng.integers(0, 2, size=n)
            if labels.sum() in (0, n):
                labels[0] = 1 - labels[0]
            scores = rng.choice([0.1, 0.25, 0.5, 0.75, 0.9], size=n)
            assert auroc(scores, labels) == pytest.approx(
                pairwise_auroc(scores.tolist(), labels.tolist()), abs=1e-12
            )

    def test_single_class_rejected(self):
        with pytest.raises(DataValidationError):
            auroc([0.1, 0.9], [1, 1])

    @given(st.data())
    def test_invariant_under_monotone_transform(self, data):
        n = data.draw(st.integers(4, 20))
        # 6-decimal grid keeps distinct scores distinct after the transforms
        scores = data.draw(
            st.lists(
                st.floats(-5, 5, allow_nan=False).map(lambda x: round(x, 6)),
                min_size=n,
                max_size=n,
            )
        )
        labels = data.draw(st.lists(st.integers(0, 1), min_size=n, max_size=n))
        if sum(labels) in (0, n):
            labels[0] = 1 - labels[0]
        base = auroc(scores, labels)
        transformed = [3.0 * s + 1.0 for s in scores]
        assert auroc(transformed, labels) == pytest.approx(base, abs=1e-12)
        exped = np.exp(np.asarray(scores) / 5.0)
        assert auroc(exped, labels) == pytest.approx(base, abs=1e-9)

    def test_negation_complement_for_tie_free_scores(self):
        rng = np.random.default_rng(9)
        scores = rng.permutation(np.linspace(0.01, 0.99, 12))
        labels = rng.integers(0, 2, size=12)
        labels[0], labels[1] = 0, 1
        total = auroc(scores, labels) + auroc(-scores, labels)
        assert total == pytest.approx(1.0, abs=1e-12)


class TestClassificationMetrics:
    def test_perfect_scores(self):
        acc, prec, rec = classification_metrics([0.9, 0.8, 0.1, 0.2], [1, 1, 0, 0], 0.5)
        assert (acc, prec, rec) == (1.0, 1.0, 1.0)

    def test_all_predicted_negative_conventions(self):
        acc, prec, rec = classification_metrics([0.1, 0.2, 0.3], [1, 0, 0], 0.5)
        assert prec == 0.0
        assert rec == 0.0
        assert acc == pytest.approx(2 / 3)

    def test_hand_tallied_ten_sample_case(self):
        scores = [0.9, 0.8, 0.7, 0.6, 0.55, 0.45, 0.4, 0.3, 0.2, 0.1]
        labels = [1, 1, 0, 1, 0, 1, 0, 0, 1, 0]
        # threshold 0.5: predicted positive = first five
        # tp=3 (0.9,0.8,0.6), fp=2 (0.7,0.55), fn=2 (0.45,0.2), tn=3
        acc, prec, rec = classification_metrics(scores, labels, 0.5)
        assert acc == pytest.approx(6 / 10)
        assert prec == pytest.approx(3 / 5)
        assert rec == pytest.approx(3 / 5)

    def test_threshold_boundary_is_inclusive(self):
        acc, prec, rec = classification_metrics([0.5, 0.4], [1, 0], 0.5)
        assert (acc, prec, rec) == (1.0, 1.0, 1.0)

    def test_recall_non_increasing_in_threshold(self):
        rng = np.random.default_rng(2)
        scores = rng.random(30)
        labels = rng.integers(0, 2, size=30)
        labels[0], labels[1] = 0, 1
        prev = 1.1
        for threshold in np.linspace(0.05, 0.95, 19):
            _, _, rec = classification_metrics(scores, labels, float(threshold))
            assert rec <= prev + 1e-12
            prev = rec

    def test_invalid_threshold(self):
        with pytest.raises(DataValidationError):
            classification_metrics([0.5], [1], 0.0)


class TestCrossValidate:
    def test_constant_classifier_mean_half(self):
        folds = [([f"t{i}"], [f"h{i}a", f"h{i}b"]) for i in range(4)]
        labels = {}
        for i in range(4):
            labels[f"h{i}a"] = 1
            labels[f"h{i}b"] = 0
            labels[f"t{i}"] = i % 2

        def trainer(train_ids, holdout_ids):
            return [0.5] * len(holdout_ids)

        report = cross_validate(trainer, folds, labels)
        assert len(report.folds) == 4
        assert all(f.auroc == 0.5 for f in report.folds)
        assert report.mean["auroc"] == 0.5
        assert report.std["auroc"] == 0.0

    def test_k_rows_in_report(self):
        folds = [([], ["a", "b"])] * 5
        labels = {"a": 1, "b": 0}
        report = cross_validate(lambda t, h: [0.9, 0.1], folds, labels)
        assert len(report.folds) == 5
        assert report.mean["auroc"] == 1.0

    def test_trainer_error_names_fold(self):
        folds = [([], ["a", "b"]), ([], ["a", "b"])]
        labels = {"a": 1, "b": 0}

        def trainer(train_ids, holdout_ids):
            raise RuntimeError("boom")

        with pytest.raises(CrossValidationError, match="fold 0"):
            cross_validate(trainer, folds, labels)

    def test_needs_two_folds(self):
        with pytest.raises(DataValidationError):
            cross_validate(lambda t, h: [], [([], [])], {})


class TestEvalReport:
    def test_report_fields_and_lines(self):
        report = evaluate_scores([0.9, 0.2, 0.8, 0.1], [1, 0, 1, 0], 0.5)
        assert report.auroc == 1.0
        assert report.n_pos == 2 and report.n_neg == 2
        lines = report.lines()
        assert any(line.startswith("auroc 1.0") for line in lines)
        payload = report.to_dict()
        assert payload["accuracy"] == 1.0
