"""ssllab: semi-supervised classifiers, generators and replication tooling.

The package provides supervised baselines, the semi-supervised estimators
built around them (self-learning, EM, moment and implicit constraints,
entropy regularization, Laplacian regularization, harmonic label
propagation), simulated dataset generators, and an experiment harness with
a CLI able to reproduce the reference figures and loss tables.
"""

from .core import (
    BoundaryLine,
    ClassEncoding,
    Dataset,
    GaussianModel,
    KernelModel,
    KernelSpec,
    LinearModel,
    TrainedModel,
    encode_labels,
    gram_matrix,
    split_labeled_unlabeled,
)
from .datagen import (
    GENERATORS,
    generate_crescent_moon,
    generate_parallel_planes,
    generate_spirals,
    generate_two_circles,
    generate_two_class_gaussian,
)
from .evaluation import (
    ExperimentResult,
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
from .graph import Graph, GraphConfig, build_graph, harmonic_energy_min, median_heuristic_sigma
from .optim import (
    MinimizeResult,
    OptimSettings,
    check_gradient,
    minimize,
    minimize_box,
    solve_linear,
)
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

__version__ = "0.1.0"
