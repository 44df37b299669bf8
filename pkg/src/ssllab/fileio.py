"""Data and model files.

DataFile: CSV with a header, one designated label column (default "Class",
empty string = missing label), every other column a numeric feature.
ModelFile: JSON with schema, family tag, class order and numeric parameter
arrays; loading reproduces decision values exactly (floats round-trip
through repr).  All writes are atomic (temp file + rename).
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from typing import Optional

import numpy as np

from .core import (
    Dataset,
    GaussianModel,
    KernelModel,
    KernelSpec,
    LinearModel,
    TrainedModel,
)
from .exceptions import DataFormatError

LABEL_COLUMN = "Class"


def _atomic_write(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _format_float(x: float) -> str:
    return format(float(x), ".17g")


def dataset_to_csv_text(d: Dataset, label_col: str = LABEL_COLUMN) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"X{j + 1}" for j in range(d.d)] + [label_col])
    for i in range(d.n):
        row = [_format_float(v) for v in d.features[i]]
        row.append(d.labels[i] if d.labels[i] is not None else "")
        writer.writerow(row)
    return buf.getvalue()


def write_data_csv(d: Dataset, path, label_col: str = LABEL_COLUMN) -> None:
    _atomic_write(path, dataset_to_csv_text(d, label_col))


def read_data_csv(path, label_col: str = LABEL_COLUMN, class_order=None) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_data_csv(fh.read(), label_col, class_order)


def parse_data_csv(
    text: str,
    label_col: str = LABEL_COLUMN,
    class_order=None,
    allow_empty: bool = False,
) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataFormatError("empty data file") from None
    if label_col not in header:
        raise DataFormatError(f"missing label column {label_col!r}")
    label_pos = header.index(label_col)
    feature_pos = [j for j in range(len(header)) if j != label_pos]
    rows, labels = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise DataFormatError(f"line {lineno}: expected {len(header)} fields")
        try:
            rows.append([float(row[j]) for j in feature_pos])
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: non-numeric feature") from exc
        labels.append(row[label_pos] if row[label_pos] != "" else None)
    if not rows:
        if allow_empty and class_order is not None:
            return Dataset(
                np.empty((0, len(feature_pos))), [], class_order=class_order
            )
        raise DataFormatError("data file has no rows")
    return Dataset(np.asarray(rows, dtype=float), labels, class_order=class_order)


def _training_meta(model: TrainedModel, seed: Optional[int]) -> dict:
    return {
        "seed": seed,
        "converged": bool(getattr(model, "converged", True)),
        "iterations": getattr(model, "iterations", None),
    }


def model_to_dict(model: TrainedModel, seed: Optional[int] = None) -> dict:
    doc = {
        "schema": 1,
        "tag": model.tag,
        "class_order": list(model.class_order),
        "kernel": None,
        "training_meta": _training_meta(model, seed),
    }
    if isinstance(model, LinearModel):
        doc["params"] = {
            "weights": model.weights.tolist(),
            "intercept": model.intercept,
            "link": model.link,
        }
    elif isinstance(model, KernelModel):
        doc["params"] = {
            "alpha": model.alpha.tolist(),
            "bias": model.bias,
            "support_points": model.support_points.tolist(),
            "target_scale": model.target_scale,
        }
        doc["kernel"] = {"family": model.kernel.family, "sigma": model.kernel.sigma}
    elif isinstance(model, GaussianModel):
        doc["params"] = {
            "priors": model.priors.tolist(),
            "means": model.means.tolist(),
            "covariance": model.covariance.tolist(),
            "spherical": model.spherical,
        }
    else:
        raise DataFormatError(f"cannot serialize model family {model.tag!r}")
    if model.responsibilities is not None:
        doc["responsibilities"] = np.asarray(model.responsibilities).tolist()
    return doc


def model_from_dict(doc: dict) -> TrainedModel:
    if doc.get("schema") != 1:
        raise DataFormatError(f"unsupported model schema {doc.get('schema')!r}")
    tag = doc["tag"]
    order = tuple(doc["class_order"])
    params = doc["params"]
    responsibilities = doc.get("responsibilities")
    if tag in ("least_squares", "logistic"):
        model: TrainedModel = LinearModel(
            params["weights"],
            params["intercept"],
            order,
            link=params["link"],
            converged=doc["training_meta"]["converged"],
        )
    elif tag in ("kernel_least_squares", "svm", "laplacian_rls", "laplacian_svm", "kernel_model"):
        kernel = KernelSpec(doc["kernel"]["family"], doc["kernel"]["sigma"])
        model = KernelModel(
            params["alpha"],
            params["bias"],
            params["support_points"],
            kernel,
            order,
            target_scale=params["target_scale"],
            converged=doc["training_meta"]["converged"],
            tag=tag,
        )
    elif tag in ("nearest_mean", "lda"):
        model = GaussianModel(
            params["priors"],
            params["means"],
            params["covariance"],
            order,
            spherical=params["spherical"],
        )
    else:
        raise DataFormatError(f"unknown model tag {tag!r}")
    if responsibilities is not None:
        model.responsibilities = np.asarray(responsibilities, dtype=float)
    return model


def save_model(model: TrainedModel, path, seed: Optional[int] = None) -> None:
    _atomic_write(path, json.dumps(model_to_dict(model, seed), indent=2) + "\n")


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"invalid model file: {exc}") from exc
    return model_from_dict(doc)
