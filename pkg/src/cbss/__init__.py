"""Christoffel-score sample selection and blind source separation.

Classify multivariate samples as diffuse (ICA-compatible) versus clustered
on an unknown algebraic set by thresholding empirical inverse Christoffel
scores, then recover the linear mixing by running fixed-point ICA on the
retained samples only.
"""

from .christoffel import (
    ChristoffelClassifier,
    ConditioningWarning,
    FirstOrderStats,
    MomentMatrix,
    ScoreReport,
    christoffel_value,
    classify,
    first_order_stats,
    kernel,
    moment_matrix,
    score_threshold,
    scores,
    variational_christoffel_value,
)
from .evaluation import Alignment, EvaluationReport, align, label_accuracy, mse, trimmed_mean
from .experiment import ExperimentConfig, ExperimentReport, run_experiment
from .ica import (
    KurtosisICA,
    MixtureSourceSeparator,
    SeparationResult,
    UnmixingEstimate,
    WhiteningTransform,
    run_ica,
    separate,
    separate_supervised,
    whiten,
)
from .polybasis import MonomialBasis, basis_size, enumerate_basis
from .synthdata import (
    GeneratedData,
    MixtureSpec,
    cubic_curve_sources,
    generate_mixture,
    uniform_sources,
    vanishing_pair_sources,
)

__version__ = "0.1.0"

__all__ = [
    "ChristoffelClassifier",
    "ConditioningWarning",
    "FirstOrderStats",
    "MomentMatrix",
    "ScoreReport",
    "christoffel_value",
    "classify",
    "first_order_stats",
    "kernel",
    "moment_matrix",
    "score_threshold",
    "scores",
    "variational_christoffel_value",
    "Alignment",
    "EvaluationReport",
    "align",
    "label_accuracy",
    "mse",
    "trimmed_mean",
    "ExperimentConfig",
    "ExperimentReport",
    "run_experiment",
    "KurtosisICA",
    "MixtureSourceSeparator",
    "SeparationResult",
    "UnmixingEstimate",
    "WhiteningTransform",
    "run_ica",
    "separate",
    "separate_supervised",
    "whiten",
    "MonomialBasis",
    "basis_size",
    "enumerate_basis",
    "GeneratedData",
    "MixtureSpec",
    "cubic_curve_sources",
    "generate_mixture",
    "uniform_sources",
    "vanishing_pair_sources",
    "__version__",
]
