"""Whitening, symmetric fixed-point ICA, and the full separation pipeline.

The pipeline classifies samples with the inverse Christoffel score, runs
ICA on the retained (diffuse) subset only, and applies the estimated
unmixing matrix to every sample.  Any ICA routine returning a rotation of
whitened data can be plugged in; the built-in one is a simultaneous
(deflation-free) fixed-point iteration on a kurtosis-family contrast.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .christoffel import DEFAULT_DEGREE, DEFAULT_EIG_RTOL, ScoreReport, classify
from .validation import check_labels, check_observations, check_random_state

__all__ = [
    "WhiteningTransform",
    "UnmixingEstimate",
    "SeparationResult",
    "whiten",
    "run_ica",
    "separate",
    "separate_supervised",
    "min_retained_samples",
    "KurtosisICA",
    "MixtureSourceSeparator",
    "save_separation_result",
]

ICA_TOL = 1e-9
ICA_MAX_ITER = 500


@dataclass(frozen=True)
class WhiteningTransform:
    """Affine map z = W (x - mean) giving the data identity covariance."""

    matrix: np.ndarray
    mean: np.ndarray

    def apply(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) @ self.matrix.T


@dataclass(frozen=True)
class UnmixingEstimate:
    """Estimated unmixing matrix with iteration metadata."""

    matrix: np.ndarray
    iterations: int
    converged: bool


@dataclass(frozen=True)
class SeparationResult:
    """Recovered sources for all samples plus the pieces that produced them."""

    sources: np.ndarray
    unmixing: UnmixingEstimate
    report: ScoreReport | None
    retained_count: int


def whiten(X) -> tuple[WhiteningTransform, np.ndarray]:
    """Center and decorrelate X to unit covariance.

    Deterministic: covariance eigenvalues ascending, each eigenvector's
    largest-magnitude entry made positive.  Raises if the covariance is
    numerically rank deficient, naming the deficient directions.
    """
    X = check_observations(X, min_samples=2)
    mu = X.mean(axis=0)
    Xc = X - mu
    C = Xc.T @ Xc / X.shape[0]
    lam, V = np.linalg.eigh((C + C.T) / 2.0)
    lmax = lam[-1] if lam.size else 0.0
    deficient = np.flatnonzero(lam <= 1e-12 * max(lmax, 0.0))
    if lmax <= 0.0 or deficient.size:
        raise ValueError(
            f"covariance is rank deficient: {deficient.size} of {lam.size} directions "
            f"(eigenvalue indices {deficient.tolist()}) carry no variance"
        )
    for k in range(V.shape[1]):
        j = int(np.argmax(np.abs(V[:, k])))
        if V[j, k] < 0:
            V[:, k] = -V[:, k]
    W = (V / np.sqrt(lam)).T
    transform = WhiteningTransform(matrix=W, mean=mu)
    return transform, Xc @ W.T


_CONTRASTS = ("kurtosis", "logcosh")


def _contrast_step(Y: np.ndarray, contrast: str) -> tuple[np.ndarray, np.ndarray]:
    if contrast == "kurtosis":
        return Y**3, 3.0 * Y**2
    if contrast == "logcosh":
        th = np.tanh(Y)
        return th, 1.0 - th**2
    raise ValueError(f"unknown contrast {contrast!r}; choose from {_CONTRASTS}")


def _sym_orth(W: np.ndarray) -> np.ndarray:
    U, _, Vt = np.linalg.svd(W)
    return U @ Vt


def _contrast_objective(Z: np.ndarray, W: np.ndarray, contrast: str) -> float:
    Y = Z @ W.T
    if contrast == "kurtosis":
        return float(np.abs((Y**4).mean(axis=0) - 3.0).sum())
    # 0.3746 = E[log cosh] of a standard normal; deviation measures non-Gaussianity
    return float(np.abs(np.log(np.cosh(Y)).mean(axis=0) - 0.3746).sum())


def _fixed_point(Z, W0, contrast, tol, max_iter):
    T = Z.shape[0]
    W = W0
    for it in range(1, max_iter + 1):
        Y = Z @ W.T
        G, Gp = _contrast_step(Y, contrast)
        Wn = G.T @ Z / T - Gp.mean(axis=0)[:, None] * W
        Wn = _sym_orth(Wn)
        cos_angles = np.abs(np.einsum("ij,ij->i", Wn, W))
        max_angle = float(np.arccos(np.clip(cos_angles, -1.0, 1.0)).max())
        W = Wn
        if max_angle < tol:
            return W, it, True
    return W, max_iter, False


def run_ica(
    Z,
    random_state=0,
    *,
    contrast: str = "kurtosis",
    tol: float = ICA_TOL,
    max_iter: int = ICA_MAX_ITER,
) -> UnmixingEstimate:
    """Symmetric fixed-point ICA on whitened data; returns an orthogonal rotation.

    Starts from the identity; if that run does not converge (successive
    rotations still differ by >= ``tol`` in maximal principal angle after
    ``max_iter`` sweeps), retries once from a seeded random rotation and
    keeps the iterate with the larger contrast value.  Convergence is only
    meaningful when at most one source is Gaussian.
    """
    Z = check_observations(Z, min_samples=2)
    n = Z.shape[1]
    W, iters, conv = _fixed_point(Z, np.eye(n), contrast, tol, max_iter)
    if not conv:
        rng = check_random_state(random_state)
        W0 = _sym_orth(rng.normal(size=(n, n)))
        W2, iters2, conv2 = _fixed_point(Z, W0, contrast, tol, max_iter)
        if conv2 or _contrast_objective(Z, W2, contrast) > _contrast_objective(Z, W, contrast):
            W, conv = W2, conv2
        iters += iters2
    return UnmixingEstimate(matrix=W, iterations=iters, converged=conv)


def min_retained_samples(n: int) -> int:
    """Floor on the retained-subset size below which unmixing is refused."""
    return max(10 * n, n + 1)


def _unmix_subset(X, mask, random_state, contrast, tol, max_iter, ica):
    """Whiten the masked rows, rotate, and compose the full unmixing matrix."""
    n = X.shape[1]
    retained = int(np.count_nonzero(mask))
    floor = min_retained_samples(n)
    if retained < floor:
        raise ValueError(
            f"only {retained} samples retained for unmixing; need at least {floor} for n={n}"
        )
    transform, Z = whiten(X[mask])
    if ica is not None:
        est = ica(Z, random_state)
        if not isinstance(est, UnmixingEstimate):
            rotation, iterations, converged = est
            est = UnmixingEstimate(
                matrix=np.asarray(rotation, dtype=np.float64),
                iterations=int(iterations),
                converged=bool(converged),
            )
    else:
        est = run_ica(Z, random_state, contrast=contrast, tol=tol, max_iter=max_iter)
    B = est.matrix @ transform.matrix
    return UnmixingEstimate(matrix=B, iterations=est.iterations, converged=est.converged), retained


def separate(
    X,
    degree: int = DEFAULT_DEGREE,
    eta: float = 0.5,
    random_state=0,
    *,
    contrast: str = "kurtosis",
    tol: float = ICA_TOL,
    max_iter: int = ICA_MAX_ITER,
    eig_rtol: float = DEFAULT_EIG_RTOL,
    ica=None,
) -> SeparationResult:
    """Classify, unmix the retained subset, and recover sources for all samples.

    Steps: score and threshold every sample (see :func:`cbss.christoffel.classify`),
    keep the columns labeled 0, run whitening plus fixed-point ICA on that
    subset only, and output sources = X @ B' for the whole data set.

    ``ica`` optionally replaces the built-in rotation solver; it receives the
    whitened retained samples and the seed and must return either an
    :class:`UnmixingEstimate` or a ``(rotation, iterations, converged)`` triple.
    """
    X = check_observations(X)
    report = classify(X, degree, eta, eig_rtol=eig_rtol)
    unmixing, retained = _unmix_subset(
        X, report.labels == 0, random_state, contrast, tol, max_iter, ica
    )
    return SeparationResult(
        sources=X @ unmixing.matrix.T,
        unmixing=unmixing,
        report=report,
        retained_count=retained,
    )


def separate_supervised(
    X,
    labels,
    random_state=0,
    *,
    contrast: str = "kurtosis",
    tol: float = ICA_TOL,
    max_iter: int = ICA_MAX_ITER,
    ica=None,
) -> SeparationResult:
    """Like :func:`separate` but subsetting on given labels instead of scores.

    With all-zero labels this is exactly plain ICA on the full data set
    (the ignore-the-mixture baseline); the supervised oracle passes the true
    labels.  No score report is produced.
    """
    X = check_observations(X)
    labels = check_labels(labels, length=X.shape[0])
    unmixing, retained = _unmix_subset(
        X, labels == 0, random_state, contrast, tol, max_iter, ica
    )
    return SeparationResult(
        sources=X @ unmixing.matrix.T,
        unmixing=unmixing,
        report=None,
        retained_count=retained,
    )


class KurtosisICA(BaseEstimator, TransformerMixin):
    """Fixed-point ICA estimator: fit(X) learns an unmixing matrix, transform applies it.

    transform(X) returns X @ components_.T without recentering, so recovered
    sources may carry the fixed offset components_ @ mean_.
    """

    def __init__(
        self,
        contrast: str = "kurtosis",
        tol: float = ICA_TOL,
        max_iter: int = ICA_MAX_ITER,
        random_state=0,
    ):
        self.contrast = contrast
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_observations(X, min_samples=2)
        transform, Z = whiten(X)
        est = run_ica(
            Z,
            self.random_state,
            contrast=self.contrast,
            tol=self.tol,
            max_iter=self.max_iter,
        )
        self.whitening_ = transform
        self.rotation_ = est.matrix
        self.components_ = est.matrix @ transform.matrix
        self.mean_ = transform.mean
        self.iterations_ = est.iterations
        self.converged_ = est.converged
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "components_"):
            raise NotFittedError("KurtosisICA is not fitted; call fit(X) first")
        X = check_observations(X)
        return X @ self.components_.T


class MixtureSourceSeparator(BaseEstimator, TransformerMixin):
    """Full pipeline estimator: Christoffel classification then ICA on the kept subset.

    Parameters mirror :func:`separate`.  After fit, ``unmixing_`` holds the
    composed unmixing matrix, ``report_`` the classification scores, and
    ``retained_count_`` the size of the subset the rotation was fitted on.
    """

    def __init__(
        self,
        degree: int = DEFAULT_DEGREE,
        eta: float = 0.5,
        contrast: str = "kurtosis",
        tol: float = ICA_TOL,
        max_iter: int = ICA_MAX_ITER,
        random_state=0,
        eig_rtol: float = DEFAULT_EIG_RTOL,
        ica=None,
    ):
        self.degree = degree
        self.eta = eta
        self.contrast = contrast
        self.tol = tol
        self.max_iter = max_iter
        self.random_state = random_state
        self.eig_rtol = eig_rtol
        self.ica = ica

    def fit(self, X, y=None):
        result = separate(
            X,
            self.degree,
            self.eta,
            self.random_state,
            contrast=self.contrast,
            tol=self.tol,
            max_iter=self.max_iter,
            eig_rtol=self.eig_rtol,
            ica=self.ica,
        )
        self.unmixing_ = result.unmixing.matrix
        self.report_ = result.report
        self.retained_count_ = result.retained_count
        self.iterations_ = result.unmixing.iterations
        self.converged_ = result.unmixing.converged
        self.n_features_in_ = result.sources.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        if not hasattr(self, "unmixing_"):
            raise NotFittedError("MixtureSourceSeparator is not fitted; call fit(X) first")
        X = check_observations(X)
        return X @ self.unmixing_.T

    def predict(self, X) -> np.ndarray:
        """Classification labels for a batch.

        Scoring is transductive: each batch is scored against its own moment
        matrix, so predict(X) on the fit data reproduces ``report_.labels``.
        """
        if not hasattr(self, "unmixing_"):
            raise NotFittedError("MixtureSourceSeparator is not fitted; call fit(X) first")
        rep = classify(X, self.degree, self.eta, eig_rtol=self.eig_rtol)
        return rep.labels


def save_separation_result(result: SeparationResult, out_dir) -> None:
    """Write sources CSV, unmixing JSON, and (when present) the score files."""
    from .christoffel import save_score_report

    os.makedirs(out_dir, exist_ok=True)
    np.savetxt(os.path.join(out_dir, "S_hat.csv"), result.sources, delimiter=",", fmt="%.17g")
    n = result.unmixing.matrix.shape[0]
    payload = {
        "n": n,
        "B_hat": [[float(v) for v in row] for row in result.unmixing.matrix],
        "iterations": result.unmixing.iterations,
        "converged": result.unmixing.converged,
        "retained_count": result.retained_count,
    }
    with open(os.path.join(out_dir, "B_hat.json"), "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    if result.report is not None:
        save_score_report(
            result.report,
            os.path.join(out_dir, "scores.csv"),
            os.path.join(out_dir, "scores.json"),
        )
