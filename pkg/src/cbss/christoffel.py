"""Empirical moment matrices, inverse Christoffel scores, and sample classification.

The score of a point x is the quadratic form [x]' M^{-1} [x], where [x] is
the monomial embedding of x and M the empirical moment matrix of the data.
Samples drawn from a diffuse (absolutely continuous) component score high;
samples clustered on a low-dimensional algebraic set score low, so
thresholding the scores splits the two populations.

Scores are invariant under any invertible affine transform of the data, so
the classification entry points whiten internally before embedding: this
keeps the moment matrix well conditioned without changing the result.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .polybasis import MonomialBasis, basis_size, enumerate_basis
from .validation import check_observations, check_vector, check_weight

__all__ = [
    "ConditioningWarning",
    "MomentMatrix",
    "FirstOrderStats",
    "ScoreReport",
    "moment_matrix",
    "scores",
    "score_threshold",
    "threshold_labels",
    "classify",
    "christoffel_value",
    "variational_christoffel_value",
    "kernel",
    "first_order_stats",
    "ChristoffelClassifier",
    "save_score_report",
    "load_score_report",
]

DEFAULT_DEGREE = 6
DEFAULT_EIG_RTOL = 1e-10
DEFAULT_MAX_BASIS_SIZE = 5000


class ConditioningWarning(UserWarning):
    """The moment matrix is numerically rank deficient; some directions were truncated."""


@dataclass(frozen=True)
class MomentMatrix:
    """Symmetric PSD moment matrix with an eigendecomposition solve handle.

    ``eigenvalues``/``eigenvectors`` hold the computed eigenpairs (ascending;
    possibly fewer than ``size`` when built from fewer samples than basis
    elements, in which case the missing directions are exact null space).
    Eigenvalues below ``eig_rtol`` times the largest are treated as zero and
    excluded from the pseudo-inverse; a :class:`ConditioningWarning` is
    emitted when that happens so degradation is loud rather than silent.
    """

    matrix: np.ndarray
    basis: MonomialBasis
    n_samples: int
    eig_rtol: float
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self._kept()))

    @property
    def truncated(self) -> bool:
        return self.rank < self.size

    def _kept(self) -> np.ndarray:
        lam = self.eigenvalues
        lmax = lam[-1] if lam.size else 0.0
        if lmax <= 0.0:
            return np.zeros_like(lam, dtype=bool)
        return lam > self.eig_rtol * lmax

    def _check_rank(self):
        if self.rank == 0:
            raise np.linalg.LinAlgError("moment matrix has numerical rank 0")

    @classmethod
    def from_samples(
        cls,
        X,
        basis: MonomialBasis,
        *,
        eig_rtol: float = DEFAULT_EIG_RTOL,
        max_basis_size: int = DEFAULT_MAX_BASIS_SIZE,
    ) -> "MomentMatrix":
        """Average of embed(x) embed(x)' over the rows of X.

        The eigendecomposition is obtained from an SVD of the embedded
        sample matrix, which resolves small eigenvalues far more accurately
        than factorizing the Gram matrix itself.
        """
        X = check_observations(X)
        if len(basis) > max_basis_size:
            raise ValueError(
                f"basis size {len(basis)} exceeds the cap {max_basis_size} "
                f"(n={basis.n}, d={basis.degree}); raise max_basis_size to override"
            )
        T = X.shape[0]
        Phi = basis.embed(X)
        M = Phi.T @ Phi / T
        M = (M + M.T) / 2.0
        _, sing, Vt = np.linalg.svd(Phi / np.sqrt(T), full_matrices=False)
        lam = sing[::-1] ** 2  # ascending, like eigh
        mom = cls(
            matrix=M,
            basis=basis,
            n_samples=T,
            eig_rtol=float(eig_rtol),
            eigenvalues=lam,
            eigenvectors=Vt[::-1].T,
        )
        mom._warn_if_truncated()
        return mom

    @classmethod
    def from_matrix(
        cls,
        M,
        basis: MonomialBasis,
        *,
        n_samples: int = 0,
        eig_rtol: float = DEFAULT_EIG_RTOL,
    ) -> "MomentMatrix":
        """Wrap an explicit symmetric PSD matrix (mostly for testing and oracles)."""
        M = np.asarray(M, dtype=np.float64)
        if M.ndim != 2 or M.shape[0] != M.shape[1]:
            raise ValueError("moment matrix must be square")
        if M.shape[0] != len(basis):
            raise ValueError(f"matrix size {M.shape[0]} does not match basis size {len(basis)}")
        scale = np.abs(M).max() or 1.0
        if np.abs(M - M.T).max() > 1e-12 * scale:
            raise ValueError("moment matrix must be symmetric")
        M = (M + M.T) / 2.0
        lam, V = np.linalg.eigh(M)
        if lam.size and lam[0] < -1e-10 * max(lam[-1], 0.0):
            raise ValueError("moment matrix must be positive semi-definite")
        lam = np.maximum(lam, 0.0)
        mom = cls(
            matrix=M,
            basis=basis,
            n_samples=int(n_samples),
            eig_rtol=float(eig_rtol),
            eigenvalues=lam,
            eigenvectors=V,
        )
        mom._warn_if_truncated()
        return mom

    def _warn_if_truncated(self):
        if self.truncated and self.rank > 0:
            warnings.warn(
                f"moment matrix is ill conditioned: {self.size - self.rank} of "
                f"{self.size} eigendirections fall below the relative cutoff "
                f"{self.eig_rtol:g} and were truncated",
                ConditioningWarning,
                stacklevel=3,
            )

    def solve(self, B) -> np.ndarray:
        """Pseudo-inverse application M^+ B restricted to the kept eigenspace."""
        self._check_rank()
        B = np.asarray(B, dtype=np.float64)
        keep = self._kept()
        V = self.eigenvectors[:, keep]
        return V @ ((V.T @ B).T / self.eigenvalues[keep]).T

    def score_samples(self, Phi_or_X) -> np.ndarray:
        """Quadratic forms embed(x)' M^+ embed(x) for each row.

        Accepts either raw samples (n columns) or already-embedded rows.
        """
        self._check_rank()
        A = np.asarray(Phi_or_X, dtype=np.float64)
        single = A.ndim == 1
        if single:
            A = A[None, :]
        if A.shape[1] == self.basis.n and self.basis.n != self.size:
            A = self.basis.embed(A)
        if A.shape[1] != self.size:
            raise ValueError(f"expected {self.basis.n} features or {self.size} embedded columns")
        keep = self._kept()
        Psi = A @ self.eigenvectors[:, keep]
        th = np.einsum("ij,ij->i", Psi, Psi / self.eigenvalues[keep])
        return float(th[0]) if single else th


def moment_matrix(
    X,
    degree: int,
    *,
    eig_rtol: float = DEFAULT_EIG_RTOL,
    max_basis_size: int = DEFAULT_MAX_BASIS_SIZE,
) -> MomentMatrix:
    """Empirical moment matrix of the samples in X at the given degree."""
    X = check_observations(X)
    basis = enumerate_basis(X.shape[1], degree)
    return MomentMatrix.from_samples(X, basis, eig_rtol=eig_rtol, max_basis_size=max_basis_size)


def scores(X, moment: MomentMatrix) -> np.ndarray:
    """Inverse Christoffel score of each row of X under the given moment matrix."""
    X = check_observations(X)
    if X.shape[1] != moment.basis.n:
        raise ValueError(f"moment matrix was built for n={moment.basis.n}, data has {X.shape[1]}")
    return moment.score_samples(X)


def score_threshold(weight: float, n: int, degree: int) -> float:
    """Score threshold proportional to the basis size: weight * C(n+d, n)."""
    weight = check_weight(weight, name="weight")
    return weight * basis_size(n, degree)


def threshold_labels(theta, threshold: float) -> np.ndarray:
    """0 where the score is at or above the threshold, else 1.

    Ties go to label 0 (kept): equality has probability zero for continuous
    data, so the rule only pins determinism.
    """
    theta = np.asarray(theta, dtype=np.float64)
    return np.where(theta >= threshold, 0, 1).astype(np.int64)


@dataclass(frozen=True)
class FirstOrderStats:
    """Empirical mean, covariance, and the (n+1)x(n+1) extended covariance."""

    mu: np.ndarray
    sigma: np.ndarray
    sigma_ext: np.ndarray


def first_order_stats(X) -> FirstOrderStats:
    """Mean, biased covariance, and the extended second-moment matrix of [1; x]."""
    X = check_observations(X)
    T = X.shape[0]
    ext = np.column_stack([np.ones(T), X])
    sigma_ext = ext.T @ ext / T
    mu = X.mean(axis=0)
    sigma = X.T @ X / T - np.outer(mu, mu)
    sigma = (sigma + sigma.T) / 2.0
    return FirstOrderStats(mu=mu, sigma=sigma, sigma_ext=(sigma_ext + sigma_ext.T) / 2.0)


@dataclass(frozen=True)
class ScoreReport:
    """Per-sample scores, the threshold used, and the resulting 0/1 labels.

    Label 0 marks samples kept as coming from the diffuse component
    (score >= threshold, ties kept); label 1 marks samples attributed to
    the low-dimensional component.
    """

    theta: np.ndarray
    threshold: float
    labels: np.ndarray
    degree: int
    eta: float
    n_features: int
    basis_size: int
    condition_warning: bool

    @property
    def retained_count(self) -> int:
        return int(np.count_nonzero(self.labels == 0))


def _pseudo_whitener(X, rtol: float = 1e-12):
    """Affine map (mean, W) making the covariance ~identity; W is symmetric.

    Directions with negligible variance are left at unit scale so the map
    stays invertible even for degenerate clouds.
    """
    mu = X.mean(axis=0)
    Xc = X - mu
    C = Xc.T @ Xc / X.shape[0]
    lam, V = np.linalg.eigh((C + C.T) / 2.0)
    lmax = lam[-1]
    if lmax <= 0.0:
        return mu, np.eye(X.shape[1])
    lam = np.maximum(lam, lmax * rtol)
    W = (V / np.sqrt(lam)) @ V.T
    return mu, W


def classify(
    X,
    degree: int = DEFAULT_DEGREE,
    eta: float = 0.5,
    *,
    eig_rtol: float = DEFAULT_EIG_RTOL,
    max_basis_size: int = DEFAULT_MAX_BASIS_SIZE,
    standardize: bool = True,
) -> ScoreReport:
    """Score every sample and threshold into kept (0) / flagged (1) labels.

    ``eta`` is the expected fraction of samples from the diffuse component;
    the threshold is (1 - eta) * C(n+d, n), sized so that roughly the
    flagged fraction of the score mass falls below it.  Scores are computed
    on internally whitened data (an invertible affine map, which provably
    leaves them unchanged) to keep the moment matrix well conditioned.
    """
    X = check_observations(X)
    eta = check_weight(eta)
    n = X.shape[1]
    m = basis_size(n, degree)
    if X.shape[0] <= m:
        warnings.warn(
            f"T={X.shape[0]} samples for a basis of size {m}: the moment matrix "
            "is rank deficient or barely determined; scores will be unreliable",
            UserWarning,
            stacklevel=2,
        )
    Z = X
    if standardize:
        mu, W = _pseudo_whitener(X)
        Z = (X - mu) @ W
    basis = enumerate_basis(n, degree)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        mom = MomentMatrix.from_samples(Z, basis, eig_rtol=eig_rtol, max_basis_size=max_basis_size)
        theta = mom.score_samples(Z)
    condition_warning = any(issubclass(w.category, ConditioningWarning) for w in caught)
    for w in caught:
        warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    thr = score_threshold(1.0 - eta, n, degree)
    labels = threshold_labels(theta, thr)
    return ScoreReport(
        theta=theta,
        threshold=thr,
        labels=labels,
        degree=int(degree),
        eta=eta,
        n_features=n,
        basis_size=m,
        condition_warning=condition_warning,
    )


def christoffel_value(x, moment: MomentMatrix) -> float:
    """Christoffel function at x: reciprocal of the inverse-Christoffel score."""
    x = check_vector(x, length=moment.basis.n)
    return 1.0 / moment.score_samples(x)


def variational_christoffel_value(z, moment: MomentMatrix) -> float:
    """Christoffel function at z via its variational characterization.

    Solves min p' M p over polynomial coefficient vectors p with p(z) = 1,
    through a direct KKT solve.  Serves as an independent oracle for
    :func:`christoffel_value`: it never touches the eigendecomposition.
    """
    z = check_vector(z, length=moment.basis.n)
    v = moment.basis.embed(z)
    m = moment.size
    kkt = np.zeros((m + 1, m + 1))
    kkt[:m, :m] = 2.0 * moment.matrix
    kkt[:m, m] = v
    kkt[m, :m] = v
    rhs = np.zeros(m + 1)
    rhs[m] = 1.0
    try:
        sol = np.linalg.solve(kkt, rhs)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            "KKT system is singular: the moment matrix is degenerate at this point"
        ) from exc
    p = sol[:m]
    return float(p @ moment.matrix @ p)


def kernel(x, y, moment: MomentMatrix) -> float:
    """Christoffel-Darboux kernel: embed(x)' M^+ embed(y)."""
    x = check_vector(x, length=moment.basis.n)
    y = check_vector(y, length=moment.basis.n)
    moment._check_rank()
    keep = moment._kept()
    V = moment.eigenvectors[:, keep]
    ax = (moment.basis.embed(x) @ V) / np.sqrt(moment.eigenvalues[keep])
    ay = (moment.basis.embed(y) @ V) / np.sqrt(moment.eigenvalues[keep])
    return float(ax @ ay)


class ChristoffelClassifier(BaseEstimator):
    """Unsupervised two-class sample classifier based on inverse Christoffel scores.

    fit(X) builds the moment matrix of X (after an internal whitening step);
    predict(X) labels samples 0 (diffuse component, kept) when their score is
    at or above (1 - eta) * C(n+d, n), else 1.

    Parameters
    ----------
    degree : maximal total degree of the monomial embedding.
    eta : expected fraction of samples from the diffuse component.
    eig_rtol : relative eigenvalue cutoff for the pseudo-inverse.
    standardize : whiten the data before embedding (affine-invariant, on by default).
    max_basis_size : refuse basis sizes beyond this cap.
    """

    def __init__(
        self,
        degree: int = DEFAULT_DEGREE,
        eta: float = 0.5,
        eig_rtol: float = DEFAULT_EIG_RTOL,
        standardize: bool = True,
        max_basis_size: int = DEFAULT_MAX_BASIS_SIZE,
    ):
        self.degree = degree
        self.eta = eta
        self.eig_rtol = eig_rtol
        self.standardize = standardize
        self.max_basis_size = max_basis_size

    def fit(self, X, y=None):
        X = check_observations(X)
        eta = check_weight(self.eta)
        n = X.shape[1]
        if self.standardize:
            self.mean_, self.whitener_ = _pseudo_whitener(X)
        else:
            self.mean_, self.whitener_ = np.zeros(n), np.eye(n)
        Z = (X - self.mean_) @ self.whitener_
        self.basis_ = enumerate_basis(n, self.degree)
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            self.moment_matrix_ = MomentMatrix.from_samples(
                Z, self.basis_, eig_rtol=self.eig_rtol, max_basis_size=self.max_basis_size
            )
        self.condition_warning_ = any(
            issubclass(w.category, ConditioningWarning) for w in caught
        )
        for w in caught:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
        self.threshold_ = score_threshold(1.0 - eta, n, self.degree)
        self.n_features_in_ = n
        return self

    def _check_fitted(self):
        if not hasattr(self, "moment_matrix_"):
            raise NotFittedError("ChristoffelClassifier is not fitted; call fit(X) first")

    def score_samples(self, X) -> np.ndarray:
        """Inverse Christoffel score of each row of X under the fitted moment matrix."""
        self._check_fitted()
        X = check_observations(X)
        Z = (X - self.mean_) @ self.whitener_
        return self.moment_matrix_.score_samples(Z)

    def predict(self, X) -> np.ndarray:
        """0 for kept (diffuse) samples, 1 for flagged (structured) samples."""
        return threshold_labels(self.score_samples(X), self.threshold_)

    def fit_predict(self, X, y=None) -> np.ndarray:
        return self.fit(X).predict(X)


def save_score_report(report: ScoreReport, csv_path, sidecar_path) -> None:
    """Write scores as CSV (columns t, theta, label) plus a JSON sidecar."""
    T = report.theta.size
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write("t,theta,label\n")
        for t in range(T):
            fh.write(f"{t},{report.theta[t]:.17g},{int(report.labels[t])}\n")
    meta = {
        "n": report.n_features,
        "d": report.degree,
        "eta": report.eta,
        "threshold": report.threshold,
        "m": report.basis_size,
        "condition_warning": report.condition_warning,
    }
    with open(sidecar_path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")


def load_score_report(csv_path, sidecar_path) -> ScoreReport:
    """Inverse of :func:`save_score_report`."""
    with open(sidecar_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    data = np.genfromtxt(csv_path, delimiter=",", skip_header=1)
    data = np.atleast_2d(data)
    return ScoreReport(
        theta=data[:, 1].copy(),
        threshold=float(meta["threshold"]),
        labels=data[:, 2].astype(np.int64),
        degree=int(meta["d"]),
        eta=float(meta["eta"]),
        n_features=int(meta["n"]),
        basis_size=int(meta["m"]),
        condition_warning=bool(meta["condition_warning"]),
    )
