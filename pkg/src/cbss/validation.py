"""Input validation helpers shared across the package.

All public entry points accept array-likes with samples as rows
(shape ``(n_samples, n_features)``) and normalize them to float64
C-contiguous arrays here.
"""

from __future__ import annotations

import numpy as np


def check_observations(X, *, min_samples: int = 1, name: str = "X") -> np.ndarray:
    """Validate a sample matrix: 2-D, finite, at least ``min_samples`` rows."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise ValueError(f"{name} must be 2-D (n_samples, n_features), got ndim={X.ndim}")
    if X.shape[0] < min_samples:
        raise ValueError(f"{name} needs at least {min_samples} samples, got {X.shape[0]}")
    if X.shape[1] < 1:
        raise ValueError(f"{name} needs at least one feature column")
    if not np.all(np.isfinite(X)):
        bad = int(np.flatnonzero(~np.isfinite(X).all(axis=1))[0])
        raise ValueError(f"{name} contains non-finite entries (first bad row: {bad})")
    return np.ascontiguousarray(X)


def check_vector(x, *, length: int | None = None, name: str = "x") -> np.ndarray:
    """Validate a single point as a finite 1-D float vector."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if length is not None and x.size != length:
        raise ValueError(f"{name} must have length {length}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


def check_labels(labels, *, length: int | None = None, name: str = "labels") -> np.ndarray:
    """Validate a 0/1 label vector."""
    raw = np.asarray(labels).ravel()
    lab = raw.astype(np.int64)
    if raw.dtype.kind == "f" and np.any(lab != raw):
        raise ValueError(f"{name} must contain only 0 and 1")
    if length is not None and lab.size != length:
        raise ValueError(f"{name} must have length {length}, got {lab.size}")
    if lab.size and not np.isin(lab, (0, 1)).all():
        raise ValueError(f"{name} must contain only 0 and 1")
    return lab


def check_weight(eta: float, *, name: str = "eta") -> float:
    """Validate a mixture weight in [0, 1]."""
    eta = float(eta)
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {eta}")
    return eta


def check_random_state(seed) -> np.random.Generator:
    """Normalize an int seed / Generator / None into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
