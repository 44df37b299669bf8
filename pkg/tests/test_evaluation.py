import numpy as np
import pytest

from ssllab.core import Dataset
from ssllab.datagen import generate_two_class_gaussian
from ssllab.evaluation import (
    TrialPlan,
    add_missing_labels_mar,
    cross_validation_ssl,
    learning_curve_ssl,
    measure_error,
    measure_loss_all,
    measure_loss_test,
    split_dataset_ssl,
    supervised_trainer,
    true_labels,
)
from ssllab.supervised import train_least_squares, train_nearest_mean


def toy_dataset(n=60, seed=0):
    return generate_two_class_gaussian(n, 2, expected=True, seed=seed)


class TestAddMissingLabelsMAR:
    def test_prob_zero_unchanged(self):
        d = toy_dataset()
        out = add_missing_labels_mar(d, 0.0, seed=1)
        assert out.labels == d.labels

    def test_prob_one_all_missing(self):
        d = toy_dataset()
        out = add_missing_labels_mar(d, 1.0, seed=1)
        assert all(y is None for y in out.labels)

    def test_binomial_mean(self):
        d = toy_dataset(n=1000, seed=2)
        counts = [
            add_missing_labels_mar(d, 0.995, seed=s).n_labeled for s in range(1000)
        ]
        assert np.mean(counts) == pytest.approx(5.0, abs=0.7)

    def test_prob_out_of_range(self):
        with pytest.raises(ValueError):
            add_missing_labels_mar(toy_dataset(), 1.5, seed=0)

    def test_features_untouched(self):
        d = toy_dataset()
        out = add_missing_labels_mar(d, 0.5, seed=3)
        assert np.array_equal(out.features, d.features)


class TestTrueLabels:
    def test_none_removed(self):
        d = toy_dataset()
        assert true_labels(d, d) == []

    def test_all_removed(self):
        d = toy_dataset()
        masked = add_missing_labels_mar(d, 1.0, seed=1)
        assert true_labels(masked, d) == d.labels

    def test_positional_lookup(self):
        original = Dataset([[0.0], [1.0], [2.0]], ["A", "B", "B"])
        masked = Dataset([[0.0], [1.0], [2.0]], ["A", None, "B"], class_order=("A", "B"))
        assert true_labels(masked, original) == ["B"]

    def test_row_mismatch_error(self):
        original = Dataset([[0.0], [1.0]], ["A", "B"])
        other = Dataset([[0.0], [5.0]], ["A", None], class_order=("A", "B"))
        with pytest.raises(ValueError):
            true_labels(other, original)


class TestSplitDatasetSSL:
    def test_full_partition(self):
        d = toy_dataset(n=50)
        split = split_dataset_ssl(d, n_l=10, n_u=0, n_test=40, seed=1)
        assert split.labeled.n == 10 and split.unlabeled.n == 0 and split.test.n == 40

    def test_forced_composition(self):
        d = toy_dataset(n=40)
        split = split_dataset_ssl(d, n_l=2, n_u=10, n_test=10, seed=2)
        assert sorted({y for y in split.labeled.labels}) == ["A", "B"]

    def test_infeasible_counts(self):
        d = toy_dataset(n=20)
        with pytest.raises(ValueError):
            split_dataset_ssl(d, n_l=10, n_u=10, n_test=10, seed=0)

    def test_hidden_labels_recoverable(self):
        d = toy_dataset(n=30)
        split = split_dataset_ssl(d, n_l=4, n_u=10, n_test=5, seed=3)
        assert all(y is None for y in split.unlabeled.labels)
        assert len(split.unlabeled_true_labels) == 10
        assert set(split.unlabeled_true_labels) <= {"A", "B"}


class TestMeasures:
    def test_perfect_predictions(self):
        X = [[0.0], [1.0]]
        y = ["A", "B"]
        m = train_least_squares(X, y, 0.0)
        assert measure_error(m, X, y) == 0.0

    def test_constant_predictor_on_balanced_set(self):
        m = train_least_squares([[0.0], [0.0]], ["A", "A"], 1e9, class_order=("A", "B"))
        X = [[0.0]] * 10
        y = ["A"] * 5 + ["B"] * 5
        assert measure_error(m, X, y) == 0.5

    def test_loss_all_uses_true_labels(self):
        d = toy_dataset(n=40)
        masked = add_missing_labels_mar(d, 0.5, seed=5)
        X_l = masked.features[masked.labeled_mask]
        y_l = [y for y in masked.labels if y is not None]
        m = train_least_squares(X_l, y_l, 0.1, class_order=d.class_order)
        val = measure_loss_all(m, masked, d)
        assert val == pytest.approx(float(np.mean(m.loss(d.features, d.labels))))

    def test_empty_set_rejected(self):
        m = train_least_squares([[0.0], [1.0]], ["A", "B"], 0.0)
        with pytest.raises(ValueError):
            measure_error(m, np.empty((0, 1)), [])


def simple_classifiers():
    def supervised(X_l, y_l, X_u):
        return train_least_squares(X_l, y_l, 0.0)

    def semi(X_l, y_l, X_u):
        # uses X_u only through its size, enough to exercise the sweep
        return train_least_squares(X_l, y_l, 1.0 / (1 + len(X_u)))

    return {"sup": supervised_trainer(supervised), "semi": semi}


class TestLearningCurve:
    def test_record_count(self):
        d = toy_dataset(n=80)
        plan = TrialPlan(
            base_seed=1, repeats=3, n_l=6, sizes=[2, 4, 8],
            classifiers=simple_classifiers(),
            measures={"Error": measure_error, "Loss": measure_loss_test},
        )
        result = learning_curve_ssl(d, plan)
        assert len(result.records) == 2 * 3 * 3 * 2

    def test_single_trial_matches_hand_rolled_oracle(self):
        from ssllab.evaluation import _draw_learning_curve_split, _trial_rng

        d = toy_dataset(n=50)
        plan = TrialPlan(
            base_seed=7, repeats=1, n_l=6, sizes=[2],
            classifiers={"sup": supervised_trainer(
                lambda X_l, y_l, X_u: train_least_squares(X_l, y_l, 0.0)
            )},
            measures={"Error": measure_error},
        )
        result = learning_curve_ssl(d, plan)
        # oracle: redo the single trial exactly
        rng = _trial_rng(7, 0, 0)
        labeled_idx, pool_idx, test_idx = _draw_learning_curve_split(d, plan, rng)
        m = train_least_squares(
            d.features[labeled_idx], [d.labels[i] for i in labeled_idx], 0.0
        )
        expected = measure_error(
            m, d.features[test_idx], [d.labels[i] for i in test_idx]
        )
        assert result.records[0].value == pytest.approx(expected)

    def test_supervised_constant_across_sizes(self):
        d = toy_dataset(n=80)
        plan = TrialPlan(
            base_seed=2, repeats=2, n_l=6, sizes=[2, 8, 16],
            classifiers=simple_classifiers(),
            measures={"Error": measure_error},
        )
        result = learning_curve_ssl(d, plan)
        for r in range(2):
            vals = [
                rec.value
                for rec in result.records
                if rec.classifier == "sup" and rec.repeat == r
            ]
            assert len(set(vals)) == 1

    def test_jobs_determinism(self):
        d = toy_dataset(n=100)
        plan = TrialPlan(
            base_seed=3, repeats=6, n_l=6, sizes=[2, 4],
            classifiers=simple_classifiers(),
            measures={"Error": measure_error, "Loss": measure_loss_test},
        )
        serial = learning_curve_ssl(d, plan, jobs=1).to_csv_text()
        parallel = learning_curve_ssl(d, plan, jobs=4).to_csv_text()
        assert serial == parallel

    def test_trainer_failure_recorded_as_missing(self):
        from ssllab.exceptions import MissingClassError

        def failing(X_l, y_l, X_u):
            raise MissingClassError("boom")

        d = toy_dataset(n=40)
        plan = TrialPlan(
            base_seed=4, repeats=1, n_l=4, sizes=[2],
            classifiers={"bad": failing},
            measures={"Error": measure_error},
        )
        result = learning_curve_ssl(d, plan)
        assert result.error_tally == 1
        assert np.isnan(result.records[0].value)
        assert ",Error,\n" in result.to_csv_text()

    def test_paper_plan_arithmetic(self):
        # n=2000, n_l=10, sizes up to 1024 leaves 966 test points
        d = toy_dataset(n=2000, seed=9)
        plan = TrialPlan(
            base_seed=5, repeats=1, n_l=10, sizes=[2**k for k in range(1, 11)],
            classifiers={}, measures={},
        )
        from ssllab.evaluation import _draw_learning_curve_split, _trial_rng

        _, pool, test = _draw_learning_curve_split(d, plan, _trial_rng(5, 0, 0))
        assert len(pool) == 1024
        assert len(test) == 2000 - 10 - 1024 == 966

    def test_sizes_must_increase(self):
        with pytest.raises(ValueError):
            TrialPlan(base_seed=0, repeats=1, n_l=4, sizes=[4, 2],
                      classifiers={}, measures={})


class TestCrossValidation:
    def test_record_count_and_fold_sizes(self):
        d = toy_dataset(n=23)
        result = cross_validation_ssl(
            d, k_folds=4, n_labeled=4, repeats=2,
            classifiers=simple_classifiers(),
            measures={"Error": measure_error},
            seed=1,
        )
        assert len(result.records) == 4 * 2 * 2 * 1
        sizes = [r.size for r in result.records]
        assert set(sizes) == {0, 1, 2, 3}

    def test_loo_matches_brute_force(self):
        X = np.array([[0.0], [0.2], [0.4], [1.0], [1.2], [1.4]])
        y = ["A", "A", "A", "B", "B", "B"]
        d = Dataset(X, y)

        def trainer(X_l, y_l, X_u):
            return train_nearest_mean(X_l, y_l, class_order=("A", "B"))

        result = cross_validation_ssl(
            d, k_folds=6, n_labeled=5, repeats=1,
            classifiers={"nmc": supervised_trainer(trainer)},
            measures={"Error": measure_error},
            seed=0,
        )
        # brute-force LOO: with 5 of 6 points labeled, training folds contain
        # every remaining point, so the fit equals NMC on the other 5 points
        from ssllab.evaluation import _trial_rng

        rng = _trial_rng(0, 0, 0)
        perm = rng.permutation(6)
        folds = np.array_split(perm, 6)
        expected = []
        for fold_id, test_idx in enumerate(folds):
            train_idx = np.concatenate([folds[j] for j in range(6) if j != fold_id])
            rng.permutation(train_idx.size)  # labeled draw consumes one permutation
            m = train_nearest_mean(
                X[train_idx], [y[i] for i in train_idx], class_order=("A", "B")
            )
            expected.append(
                measure_error(m, X[test_idx], [y[i] for i in test_idx])
            )
        got = [r.value for r in result.sorted().records]
        assert np.mean(got) == pytest.approx(np.mean(expected))


class TestCSVFormat:
    def test_header_and_layout(self):
        d = toy_dataset(n=40)
        plan = TrialPlan(
            base_seed=1, repeats=1, n_l=4, sizes=[2],
            classifiers=simple_classifiers(),
            measures={"Error": measure_error},
        )
        text = learning_curve_ssl(d, plan).to_csv_text()
        lines = text.strip().split("\n")
        assert lines[0] == "dataset,classifier,repeat,size,measure,value"
        assert len(lines) == 3
        assert text.endswith("\n")
