"""Experiment protocols: label removal, splits, learning curves, CV, measures.

Every trial derives its RNG from (base_seed, dataset index, repeat index)
through a SeedSequence, so results are identical regardless of how many
worker threads execute the sweep.  Results are long-format records that
serialize to CSV as `dataset,classifier,repeat,size,measure,value`.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, Mapping, Optional, Sequence

import numpy as np

from .core import Dataset, TrainedModel, split_labeled_unlabeled
from .exceptions import SSLabError, ShapeError

Trainer = Callable[[np.ndarray, Sequence[str], np.ndarray], TrainedModel]
Measure = Callable[[TrainedModel, np.ndarray, Sequence[str]], float]


def supervised_trainer(fn: Trainer) -> Trainer:
    """Mark a trainer as ignoring X_u so sweeps evaluate it once per repeat."""
    fn.ignores_unlabeled = True
    return fn


def _trial_rng(base_seed: int, dataset_index: int, repeat: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=base_seed, spawn_key=(dataset_index, repeat))
    return np.random.Generator(np.random.PCG64(seq))


def add_missing_labels_mar(d: Dataset, prob: float, seed: int = 0) -> Dataset:
    """Remove each label independently with probability prob (missing at random)."""
    if not 0.0 <= prob <= 1.0:
        raise ValueError("prob must lie in [0, 1]")
    if any(y is None for y in d.labels):
        raise ValueError("dataset already has missing labels")
    rng = np.random.Generator(np.random.PCG64(seed))
    remove = rng.random(d.n) < prob
    labels = [None if remove[i] else d.labels[i] for i in range(d.n)]
    return Dataset(d.features, labels, class_order=d.class_order)


def true_labels(d_missing: Dataset, d_original: Dataset) -> list:
    """Original labels of the unlabeled rows, in unlabeled-row order."""
    if d_missing.n != d_original.n or not np.array_equal(
        d_missing.features, d_original.features
    ):
        raise ValueError("datasets do not share the same rows")
    return [
        d_original.labels[i]
        for i in range(d_missing.n)
        if d_missing.labels[i] is None
    ]


@dataclass
class SSLSplit:
    """Result of split_dataset_ssl; the unlabeled block's hidden labels stay
    recoverable through unlabeled_true_labels."""

    labeled: Dataset
    unlabeled: Dataset
    test: Dataset
    unlabeled_true_labels: list


def split_dataset_ssl(
    d: Dataset,
    n_l: int,
    n_u: int,
    n_test: int,
    min_per_class: int = 1,
    seed: int = 0,
) -> SSLSplit:
    """Random (labeled, unlabeled, test) split without replacement.

    The labeled block is redrawn (up to 1000 attempts) until it contains at
    least min_per_class examples of each class.  The unlabeled block keeps
    its feature rows but hides the labels.
    """
    if n_l + n_u + n_test > d.n:
        raise ValueError(
            f"requested {n_l}+{n_u}+{n_test} rows from an n={d.n} dataset"
        )
    if min_per_class * 2 > n_l:
        raise ValueError("n_l too small for min_per_class")
    rng = np.random.Generator(np.random.PCG64(seed))
    for _ in range(1000):
        perm = rng.permutation(d.n)
        labeled_idx = perm[:n_l]
        counts = {c: 0 for c in d.class_order}
        for i in labeled_idx:
            counts[d.labels[i]] += 1
        if all(v >= min_per_class for v in counts.values()):
            unlabeled_idx = perm[n_l : n_l + n_u]
            test_idx = perm[n_l + n_u : n_l + n_u + n_test]
            hidden = [d.labels[i] for i in unlabeled_idx]
            unlabeled = Dataset(
                d.features[unlabeled_idx],
                [None] * n_u,
                class_order=d.class_order,
            )
            return SSLSplit(
                d.subset(labeled_idx), unlabeled, d.subset(test_idx), hidden
            )
    raise SSLabError(
        "could not satisfy the labeled class-composition guarantee in 1000 attempts"
    )


def measure_error(model: TrainedModel, X, y) -> float:
    """Misclassification fraction."""
    y = list(y)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    pred = model.predict(X)
    return float(np.mean([p != t for p, t in zip(pred, y)]))


def measure_loss_test(model: TrainedModel, X, y) -> float:
    """Mean surrogate loss on an evaluation set."""
    y = list(y)
    if len(y) == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(model.loss(X, y)))


def measure_loss_all(model: TrainedModel, d_missing: Dataset, d_original: Dataset) -> float:
    """Mean surrogate loss over ALL training rows, using the true labels."""
    if d_original.n == 0:
        raise ValueError("empty evaluation set")
    return float(np.mean(model.loss(d_original.features, d_original.labels)))


@dataclass(frozen=True)
class Record:
    dataset: str
    classifier: str
    repeat: int
    size: int
    measure: str
    value: float


@dataclass
class ExperimentResult:
    """Long-format experiment records plus a tally of trainer failures."""

    records: list = field(default_factory=list)
    error_tally: int = 0

    def sorted(self) -> "ExperimentResult":
        ordered = sorted(
            self.records,
            key=lambda r: (r.dataset, r.classifier, r.repeat, r.size, r.measure),
        )
        return ExperimentResult(ordered, self.error_tally)

    def extend(self, other: "ExperimentResult") -> None:
        self.records.extend(other.records)
        self.error_tally += other.error_tally

    def values(self, classifier: str, measure: str, size: Optional[int] = None) -> np.ndarray:
        vals = [
            r.value
            for r in self.records
            if r.classifier == classifier
            and r.measure == measure
            and (size is None or r.size == size)
        ]
        return np.asarray(vals, dtype=float)

    def mean(self, classifier: str, measure: str, size: Optional[int] = None) -> float:
        vals = self.values(classifier, measure, size)
        vals = vals[np.isfinite(vals)]
        return float(vals.mean()) if vals.size else math.nan

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_csv_text())

    def to_csv_text(self) -> str:
        lines = ["dataset,classifier,repeat,size,measure,value"]
        for r in self.sorted().records:
            value = "" if not math.isfinite(r.value) else repr(r.value)
            lines.append(f"{r.dataset},{r.classifier},{r.repeat},{r.size},{r.measure},{value}")
        return "\n".join(lines) + "\n"


@dataclass
class TrialPlan:
    """One learning-curve sweep: repeats x unlabeled-pool sizes."""

    base_seed: int
    repeats: int
    n_l: int
    sizes: Sequence[int]
    classifiers: Mapping[str, Trainer]
    measures: Mapping[str, Measure]

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be positive")
        if self.n_l < 2:
            raise ValueError("n_l must be at least 2")
        sizes = list(self.sizes)
        if any(s <= 0 for s in sizes) or any(
            b <= a for a, b in zip(sizes, sizes[1:])
        ):
            raise ValueError("sizes must be strictly increasing positive integers")


def _draw_learning_curve_split(d: Dataset, plan: TrialPlan, rng) -> tuple:
    max_size = max(plan.sizes)
    if plan.n_l + max_size > d.n:
        raise ValueError("plan infeasible: n_l + max(sizes) exceeds dataset size")
    for _ in range(1000):
        perm = rng.permutation(d.n)
        labeled_idx = perm[: plan.n_l]
        present = {d.labels[i] for i in labeled_idx}
        if len(present) == 2:
            break
    else:
        raise SSLabError("could not draw a labeled set containing both classes")
    pool_idx = perm[plan.n_l : plan.n_l + max_size]
    test_idx = perm[plan.n_l + max_size :]
    return labeled_idx, pool_idx, test_idx


def _learning_curve_repeat(
    d: Dataset, plan: TrialPlan, dataset_name: str, dataset_index: int, repeat: int
) -> ExperimentResult:
    rng = _trial_rng(plan.base_seed, dataset_index, repeat)
    labeled_idx, pool_idx, test_idx = _draw_learning_curve_split(d, plan, rng)
    X_l = d.features[labeled_idx]
    y_l = [d.labels[i] for i in labeled_idx]
    X_test = d.features[test_idx]
    y_test = [d.labels[i] for i in test_idx]

    out = ExperimentResult()
    for name, trainer in plan.classifiers.items():
        supervised_only = getattr(trainer, "ignores_unlabeled", False)
        cached: Dict[str, float] = {}
        cached_ok = False
        for size in plan.sizes:
            if supervised_only and cached_ok:
                for mname in plan.measures:
                    out.records.append(
                        Record(dataset_name, name, repeat, size, mname, cached[mname])
                    )
                continue
            X_u = d.features[pool_idx[:size]]
            try:
                model = trainer(X_l, y_l, X_u)
                values = {
                    mname: float(measure(model, X_test, y_test))
                    for mname, measure in plan.measures.items()
                }
            except SSLabError:
                out.error_tally += 1
                values = {mname: math.nan for mname in plan.measures}
            for mname, value in values.items():
                out.records.append(
                    Record(dataset_name, name, repeat, size, mname, value)
                )
            if supervised_only:
                cached, cached_ok = values, True
    return out


def learning_curve_ssl(
    d: Dataset,
    plan: TrialPlan,
    dataset_name: str = "dataset",
    dataset_index: int = 0,
    jobs: int = 1,
) -> ExperimentResult:
    """Performance for increasing unlabeled-pool sizes.

    Within one repeat the labeled and test sets are fixed and the unlabeled
    pools are nested prefixes of one shuffled pool, so curves vary only
    through the unlabeled count.  Trainer failures are recorded as missing
    values and tallied, never aborting the sweep.
    """
    repeats = range(plan.repeats)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(
                pool.map(
                    lambda r: _learning_curve_repeat(d, plan, dataset_name, dataset_index, r),
                    repeats,
                )
            )
    else:
        parts = [
            _learning_curve_repeat(d, plan, dataset_name, dataset_index, r)
            for r in repeats
        ]
    out = ExperimentResult()
    for part in parts:
        out.extend(part)
    return out.sorted()


def cross_validation_ssl(
    d: Dataset,
    k_folds: int,
    n_labeled: int,
    repeats: int,
    classifiers: Mapping[str, Trainer],
    measures: Mapping[str, Measure],
    seed: int = 0,
    dataset_name: str = "dataset",
    dataset_index: int = 0,
) -> ExperimentResult:
    """Semi-supervised k-fold CV: training folds are split into a labeled
    portion (at least one per class) and an unlabeled remainder."""
    if k_folds < 2:
        raise ValueError("k_folds must be at least 2")
    out = ExperimentResult()
    for repeat in range(repeats):
        rng = _trial_rng(seed, dataset_index, repeat)
        perm = rng.permutation(d.n)
        folds = np.array_split(perm, k_folds)
        for fold_id, test_idx in enumerate(folds):
            train_idx = np.concatenate(
                [folds[j] for j in range(k_folds) if j != fold_id]
            )
            if n_labeled > train_idx.size - 1:
                raise ValueError("n_labeled exceeds training-fold size - 1")
            for _ in range(1000):
                order = rng.permutation(train_idx.size)
                lab = train_idx[order[:n_labeled]]
                present = {d.labels[i] for i in lab}
                if len(present) == 2:
                    break
            else:
                raise SSLabError("could not draw labeled points from both classes")
            unl = train_idx[order[n_labeled:]]
            X_l = d.features[lab]
            y_l = [d.labels[i] for i in lab]
            X_u = d.features[unl]
            X_test = d.features[test_idx]
            y_test = [d.labels[i] for i in test_idx]
            for name, trainer in classifiers.items():
                try:
                    model = trainer(X_l, y_l, X_u)
                    values = {
                        mname: float(measure(model, X_test, y_test))
                        for mname, measure in measures.items()
                    }
                except SSLabError:
                    out.error_tally += 1
                    values = {mname: math.nan for mname in measures}
                for mname, value in values.items():
                    out.records.append(
                        Record(dataset_name, name, repeat, fold_id, mname, value)
                    )
    return out.sorted()
