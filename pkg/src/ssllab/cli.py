"""Command-line front end.

Subcommands: generate, train, predict, boundary, learning-curve, replicate.
Exit codes: 0 success, 2 usage or config errors, 3 runtime or data errors.
The environment variable SSLLAB_SEED serves as the base-seed fallback when
--seed is not given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional

import numpy as np

from .core import Dataset, KernelSpec, split_labeled_unlabeled
from .datagen import GENERATORS
from .evaluation import (
    ExperimentResult,
    TrialPlan,
    learning_curve_ssl,
    measure_error,
    measure_loss_test,
    supervised_trainer,
)
from .exceptions import DataFormatError, SSLabError
from .fileio import (
    LABEL_COLUMN,
    _atomic_write,
    _format_float,
    load_model,
    parse_data_csv,
    read_data_csv,
    save_model,
    write_data_csv,
)
from .graph import GraphConfig, median_heuristic_sigma
from .plotting import boundary_figure, decision_grid, save_figure
from .replicate import TARGETS
from .semi import (
    LapParams,
    self_learning,
    train_em_generative,
    train_erlr,
    train_icls,
    train_icls_projection,
    train_laplacian_rls,
    train_laplacian_svm,
    train_moment_constrained_nmc,
    train_usm_least_squares,
)
from .supervised import (
    train_kernel_least_squares,
    train_lda,
    train_least_squares,
    train_logistic,
    train_nearest_mean,
    train_svm,
)

USAGE_ERROR = 2
RUNTIME_ERROR = 3


def _default_seed(value: Optional[int]) -> int:
    if value is not None:
        return value
    env = os.environ.get("SSLLAB_SEED")
    return int(env) if env else 1


def _kernel_from_args(args) -> KernelSpec:
    return KernelSpec(args.kernel, args.sigma)


def _graph_cfg_from_args(args, X_all) -> GraphConfig:
    sigma = args.weight_sigma
    if sigma is None:
        sigma = median_heuristic_sigma(X_all)
    return GraphConfig(
        adjacency="knn" if args.graph == "knn" else "full_rbf",
        k=args.knn_k,
        weight_sigma=sigma,
    )


MODEL_NAMES = (
    "ls",
    "klsc",
    "nmc",
    "lda",
    "logistic",
    "svm",
    "self",
    "em-nmc",
    "em-lda",
    "mc-nmc",
    "usm",
    "icls",
    "icls-proj",
    "erlr",
    "laprls",
    "lapsvm",
)

SUPERVISED_BASES = {
    "ls": lambda args: (lambda X, y: train_least_squares(X, y, args.lam)),
    "nmc": lambda args: (lambda X, y: train_nearest_mean(X, y)),
    "lda": lambda args: (lambda X, y: train_lda(X, y, args.reg)),
    "logistic": lambda args: (lambda X, y: train_logistic(X, y, args.lam)),
    "svm": lambda args: (
        lambda X, y: train_svm(X, y, _kernel_from_args(args), args.svm_c)
    ),
    "klsc": lambda args: (
        lambda X, y: train_kernel_least_squares(X, y, _kernel_from_args(args), args.lam)
    ),
}


def build_trainer(args):
    """Trainer closure (X_l, y_l, X_u) -> model for the chosen --model."""
    name = args.model
    if name == "ls":
        return supervised_trainer(
            lambda X_l, y_l, X_u: train_least_squares(X_l, y_l, args.lam)
        )
    if name == "klsc":
        return supervised_trainer(
            lambda X_l, y_l, X_u: train_kernel_least_squares(
                X_l, y_l, _kernel_from_args(args), args.lam
            )
        )
    if name == "nmc":
        return supervised_trainer(lambda X_l, y_l, X_u: train_nearest_mean(X_l, y_l))
    if name == "lda":
        return supervised_trainer(lambda X_l, y_l, X_u: train_lda(X_l, y_l, args.reg))
    if name == "logistic":
        return supervised_trainer(
            lambda X_l, y_l, X_u: train_logistic(X_l, y_l, args.lam)
        )
    if name == "svm":
        return supervised_trainer(
            lambda X_l, y_l, X_u: train_svm(
                X_l, y_l, _kernel_from_args(args), args.svm_c
            )
        )
    if name == "self":
        base = SUPERVISED_BASES[args.base](args)
        return lambda X_l, y_l, X_u: self_learning(base, X_l, y_l, X_u)
    if name == "em-nmc":
        return lambda X_l, y_l, X_u: train_em_generative("nmc", X_l, y_l, X_u)
    if name == "em-lda":
        return lambda X_l, y_l, X_u: train_em_generative("lda", X_l, y_l, X_u)
    if name == "mc-nmc":
        return lambda X_l, y_l, X_u: train_moment_constrained_nmc(X_l, y_l, X_u)
    if name == "usm":
        return lambda X_l, y_l, X_u: train_usm_least_squares(X_l, y_l, X_u, args.lam)
    if name == "icls":
        return lambda X_l, y_l, X_u: train_icls(X_l, y_l, X_u, args.lam)
    if name == "icls-proj":
        return lambda X_l, y_l, X_u: train_icls_projection(X_l, y_l, X_u, args.lam)
    if name == "erlr":
        return lambda X_l, y_l, X_u: train_erlr(
            X_l, y_l, X_u, args.entropy, args.lam
        )
    if name == "laprls":
        return lambda X_l, y_l, X_u: train_laplacian_rls(
            X_l,
            y_l,
            X_u,
            _kernel_from_args(args),
            LapParams(args.lam, args.gamma),
            _graph_cfg_from_args(args, np.vstack([X_l, X_u]) if len(X_u) else X_l),
        )
    if name == "lapsvm":
        return lambda X_l, y_l, X_u: train_laplacian_svm(
            X_l,
            y_l,
            X_u,
            _kernel_from_args(args),
            LapParams(args.lam, args.gamma),
            _graph_cfg_from_args(args, np.vstack([X_l, X_u]) if len(X_u) else X_l),
        )
    raise ValueError(f"unknown model {name!r}")


def cmd_generate(args) -> int:
    seed = _default_seed(args.seed)
    name = args.dataset
    gen = GENERATORS[name]
    if name == "two-gaussian":
        d = gen(args.n, args.d, args.variance, args.expected == "true", seed)
    elif name == "spirals":
        d = gen(args.n_per_class, args.gen_sigma, args.turns, seed)
    else:
        d = gen(args.n_per_class, args.gen_sigma, seed)
    write_data_csv(d, args.output, args.label_col)
    counts = {c: sum(1 for y in d.labels if y == c) for c in d.class_order}
    print(f"wrote {d.n} rows x {d.d} features to {args.output}")
    print("classes: " + ", ".join(f"{c}={n}" for c, n in counts.items()))
    return 0


def cmd_train(args) -> int:
    data = read_data_csv(args.input, args.label_col)
    trainer = build_trainer(args)
    X_l, y_l, X_u, _ = split_labeled_unlabeled(data)
    model = trainer(X_l, y_l, X_u)
    save_model(model, args.output, seed=args.seed)
    mean_loss = float(np.mean(model.loss(X_l, y_l)))
    print(f"trained {model.tag} on {len(y_l)} labeled / {X_u.shape[0]} unlabeled rows")
    print(f"mean training loss: {mean_loss:.6f}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model_file)
    with open(args.input, "r", encoding="utf-8") as fh:
        data = parse_data_csv(
            fh.read(),
            args.label_col,
            class_order=model.class_order,
            allow_empty=True,
        )
    lines = ["row,predicted_class,decision_value"]
    if data.n:
        values = model.decision_values(data.features)
        preds = model.predict(data.features)
        for i, (p, v) in enumerate(zip(preds, values)):
            lines.append(f"{i},{p},{_format_float(v)}")
    _atomic_write(args.output, "\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} predictions to {args.output}")
    return 0


def cmd_boundary(args) -> int:
    model = load_model(args.model_file)
    data = read_data_csv(args.input, args.label_col)
    if data.d != 2:
        raise SSLabError(f"boundary grids need 2 feature columns, got {data.d}")
    xs, ys, Z = decision_grid(model, data.features, grid=args.grid)
    lines = ["x1,x2,decision_value"]
    for i, yv in enumerate(ys):
        for j, xv in enumerate(xs):
            lines.append(f"{_format_float(xv)},{_format_float(yv)},{_format_float(Z[i, j])}")
    _atomic_write(args.output, "\n".join(lines) + "\n")
    print(f"wrote {args.grid}x{args.grid} decision grid to {args.output}")
    if args.svg:
        fig = boundary_figure(model, data, grid=args.grid)
        save_figure(fig, args.svg)
        print(f"wrote figure to {args.svg}")
    return 0


class ConfigError(ValueError):
    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer}: {message}")
        self.pointer = pointer


def _config_require(cfg: dict, key: str, pointer: str):
    if key not in cfg:
        raise ConfigError(f"{pointer}/{key}", "missing required field")
    return cfg[key]


_CONFIG_MEASURES = {"Error": measure_error, "Loss": measure_loss_test}


def _trainer_from_config(entry: dict, pointer: str):
    model = _config_require(entry, "model", pointer)
    params = entry.get("params", {})
    ns = argparse.Namespace(
        model=model,
        lam=params.get("lambda", 0.0),
        reg=params.get("reg", 0.0),
        svm_c=params.get("C", 1.0),
        kernel=params.get("kernel", "linear"),
        sigma=params.get("sigma", 1.0),
        entropy=params.get("entropy", 1.0),
        gamma=params.get("gamma", 1.0),
        base=params.get("base", "ls"),
        graph=params.get("graph", "knn"),
        knn_k=params.get("knn_k", 10),
        weight_sigma=params.get("weight_sigma"),
    )
    if model not in MODEL_NAMES:
        raise ConfigError(f"{pointer}/model", f"unknown model {model!r}")
    return build_trainer(ns)


def cmd_learning_curve(args) -> int:
    with open(args.config, "r", encoding="utf-8") as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("/", f"invalid JSON: {exc}")
    base_seed = _default_seed(cfg.get("base_seed"))
    n_l = _config_require(cfg, "n_l", "")
    sizes = _config_require(cfg, "sizes", "")
    repeats = _config_require(cfg, "repeats", "")
    datasets_cfg = _config_require(cfg, "datasets", "")
    classifiers_cfg = _config_require(cfg, "classifiers", "")
    measures_cfg = cfg.get("measures", ["Error"])
    jobs = args.jobs if args.jobs else int(cfg.get("parallelism", 1))

    measures = {}
    for i, m in enumerate(measures_cfg):
        if m not in _CONFIG_MEASURES:
            raise ConfigError(f"/measures/{i}", f"unknown measure {m!r}")
        measures[m] = _CONFIG_MEASURES[m]
    classifiers = {}
    for i, entry in enumerate(classifiers_cfg):
        cname = _config_require(entry, "name", f"/classifiers/{i}")
        classifiers[cname] = _trainer_from_config(entry, f"/classifiers/{i}")

    combined = ExperimentResult()
    for index, entry in enumerate(datasets_cfg):
        dname = _config_require(entry, "name", f"/datasets/{index}")
        generator = _config_require(entry, "generator", f"/datasets/{index}")
        if generator not in GENERATORS:
            raise ConfigError(
                f"/datasets/{index}/generator", f"unknown generator {generator!r}"
            )
        params = dict(entry.get("params", {}))
        params.setdefault("seed", base_seed + index)
        try:
            data = GENERATORS[generator](**params)
        except TypeError as exc:
            raise ConfigError(f"/datasets/{index}/params", str(exc))
        plan = TrialPlan(
            base_seed=base_seed,
            repeats=repeats,
            n_l=n_l,
            sizes=sizes,
            classifiers=classifiers,
            measures=measures,
        )
        combined.extend(
            learning_curve_ssl(data, plan, dataset_name=dname, dataset_index=index, jobs=jobs)
        )
    combined = combined.sorted()
    combined.to_csv(args.output)
    print(f"wrote {len(combined.records)} records to {args.output}")
    largest = max(sizes)
    for cname in classifiers:
        for mname in measures:
            mean = combined.mean(cname, mname, largest)
            print(f"{cname} {mname} at size {largest}: {mean:.4f}")
    if combined.error_tally:
        print(f"trainer failures recorded as missing values: {combined.error_tally}")
    return 0


def cmd_replicate(args) -> int:
    seed = _default_seed(args.seed)
    runner = TARGETS[args.target]
    kwargs = {"out_dir": args.out_dir, "seed": seed}
    if args.repeats is not None:
        if args.target == "fig2":
            kwargs["repeats"] = args.repeats
        elif args.target in ("fig3", "fig4", "losses"):
            kwargs["n_seeds"] = args.repeats
    if args.target == "fig2" and args.jobs:
        kwargs["jobs"] = args.jobs
    summary = runner(**kwargs)
    print(summary.render())
    for path in summary.files:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssllab",
        description="Semi-supervised classifiers, dataset generators and replications",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a generated dataset as CSV")
    p.add_argument("--dataset", required=True, choices=sorted(GENERATORS))
    p.add_argument("--n", type=int, default=1000, help="total points (two-gaussian)")
    p.add_argument("--d", type=int, default=2, help="dimensions (two-gaussian)")
    p.add_argument("--variance", type=float, default=1.0)
    p.add_argument("--expected", choices=("true", "false"), default="true")
    p.add_argument("--n-per-class", dest="n_per_class", type=int, default=100)
    p.add_argument("--sigma", dest="gen_sigma", type=float, default=0.1,
                   help="noise sigma (shape datasets)")
    p.add_argument("--turns", type=float, default=1.5, help="spiral turns")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--label-col", default=LABEL_COLUMN)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("train", help="train a model on a CSV dataset")
    p.add_argument("--model", required=True, choices=MODEL_NAMES)
    p.add_argument("--base", choices=sorted(SUPERVISED_BASES), default="ls",
                   help="base model for self-learning")
    p.add_argument("--lambda", dest="lam", type=float, default=0.0)
    p.add_argument("--reg", type=float, default=0.0, help="LDA covariance ridge")
    p.add_argument("--c", dest="svm_c", type=float, default=1.0, help="SVM cost")
    p.add_argument("--gamma", type=float, default=1.0, help="manifold weight")
    p.add_argument("--entropy", type=float, default=1.0, help="ERLR entropy weight")
    p.add_argument("--kernel", choices=("linear", "rbf"), default="linear")
    p.add_argument("--sigma", type=float, default=1.0, help="rbf bandwidth")
    p.add_argument("--graph", choices=("knn", "full-rbf"), default="knn")
    p.add_argument("--knn-k", dest="knn_k", type=int, default=10)
    p.add_argument("--weight-sigma", dest="weight_sigma", type=float, default=None,
                   help="graph weight bandwidth (default: median heuristic)")
    p.add_argument("--input", required=True)
    p.add_argument("--label-col", default=LABEL_COLUMN)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels for a CSV dataset")
    p.add_argument("--model", dest="model_file", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--label-col", default=LABEL_COLUMN)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("boundary", help="evaluate the decision function on a grid")
    p.add_argument("--model", dest="model_file", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--label-col", default=LABEL_COLUMN)
    p.add_argument("--grid", type=int, default=100)
    p.add_argument("--svg", default=None, help="also render an SVG figure")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_boundary)

    p = sub.add_parser("learning-curve", help="run a learning-curve sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--jobs", type=int, default=0, help="worker threads")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_learning_curve)

    p = sub.add_parser("replicate", help="run a reference replication target")
    p.add_argument("target", choices=sorted(TARGETS))
    p.add_argument("--out-dir", default="replication")
    p.add_argument("--repeats", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=0)
    p.set_defaults(func=cmd_replicate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except SSLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
