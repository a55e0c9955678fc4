"""Ambiguity-resolved source recovery error and classification accuracy.

Blind unmixing can only recover sources up to permutation, sign, and scale.
``align`` resolves those against a known ground truth (optimal assignment on
absolute correlations, then per-component least-squares scaling), after
which ``mse`` is a faithful recovery error.  ``trimmed_mean`` aggregates
Monte-Carlo trials with the extreme fraction discarded at each end.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.optimize import linear_sum_assignment

from .validation import check_observations

__all__ = [
    "Alignment",
    "EvaluationReport",
    "align",
    "mse",
    "label_accuracy",
    "trimmed_mean",
]


@dataclass(frozen=True)
class Alignment:
    """Matching of estimated to true components.

    ``permutation[i]`` is the estimated-component column matched to true
    component i; ``scales[i]`` multiplies that column to best fit the truth
    in the least-squares sense (carrying sign).
    """

    permutation: np.ndarray
    scales: np.ndarray


class Aggregate(str, Enum):
    single = "single"
    trimmed_mean = "trimmed_mean"


@dataclass(frozen=True)
class EvaluationReport:
    """One evaluation cell: recovery error, label accuracy, and how it was aggregated."""

    mse: float
    accuracy: float
    trials: int
    aggregate: Aggregate = Aggregate.single


def _abs_correlations(S_true: np.ndarray, S_hat: np.ndarray) -> np.ndarray:
    """|corr| matrix, rows = true components, cols = estimated; zero-variance -> 0."""
    Tc = S_true - S_true.mean(axis=0)
    Hc = S_hat - S_hat.mean(axis=0)
    tn = np.sqrt((Tc**2).sum(axis=0))
    hn = np.sqrt((Hc**2).sum(axis=0))
    with np.errstate(invalid="ignore", divide="ignore"):
        C = np.abs(Tc.T @ Hc) / np.outer(tn, hn)
    C[~np.isfinite(C)] = 0.0
    return C


def align(S_hat, S_true) -> Alignment:
    """Resolve permutation, sign, and scale of estimated sources against the truth.

    The permutation maximizes the total absolute correlation (optimal
    assignment); each scale is the least-squares coefficient of the true
    component onto its matched estimate.
    """
    S_hat = check_observations(S_hat, name="S_hat")
    S_true = check_observations(S_true, name="S_true")
    if S_hat.shape != S_true.shape:
        raise ValueError(f"shape mismatch: {S_hat.shape} vs {S_true.shape}")
    if np.any((S_true - S_true.mean(axis=0) == 0.0).all(axis=0)):
        raise ValueError("every true component must have nonzero variance")
    C = _abs_correlations(S_true, S_hat)
    rows, cols = linear_sum_assignment(-C)
    perm = np.empty(S_true.shape[1], dtype=np.intp)
    perm[rows] = cols
    scales = np.empty(S_true.shape[1])
    for i in range(S_true.shape[1]):
        est = S_hat[:, perm[i]]
        den = float(est @ est)
        scales[i] = float(est @ S_true[:, i]) / den if den > 0 else 0.0
    return Alignment(permutation=perm, scales=scales)


def mse(S_hat, S_true, alignment: Alignment) -> float:
    """Mean squared recovery error over all components and samples after alignment."""
    S_hat = check_observations(S_hat, name="S_hat")
    S_true = check_observations(S_true, name="S_true")
    aligned = S_hat[:, alignment.permutation] * alignment.scales
    return float(((aligned - S_true) ** 2).mean())


def label_accuracy(labels_hat, labels_true) -> float:
    """Fraction of matching entries between two equal-length label vectors."""
    a = np.asarray(labels_hat).ravel()
    b = np.asarray(labels_true).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size == 0:
        raise ValueError("empty label vectors")
    return float(np.mean(a == b))


def trimmed_mean(values, trim_frac: float = 0.01) -> float:
    """Mean after discarding floor(trim_frac * N) values at each end."""
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("trimmed_mean of an empty sequence")
    if not 0.0 <= trim_frac < 0.5:
        raise ValueError(f"trim_frac must lie in [0, 0.5), got {trim_frac}")
    k = int(trim_frac * v.size)
    v = np.sort(v)
    return float(v[k : v.size - k].mean())
