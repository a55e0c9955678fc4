"""Seeded generators for mixed diffuse/structured sources and linear observations.

The source law is a two-component probability mixture: with probability
``eta`` a sample has independent centered unit-variance uniform components
(the ICA-compatible part), otherwise it falls on a built-in or user-supplied
algebraic set.  Observations are X = A S for a random Gaussian mixing matrix.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .validation import check_random_state, check_weight

__all__ = [
    "UNIT_UNIFORM_HALFWIDTH",
    "MixtureSpec",
    "GeneratedData",
    "uniform_sources",
    "cubic_curve_sources",
    "vanishing_pair_sources",
    "generate_mixture",
    "dump_generated_data",
    "load_generated_data",
]

# Half-width of the unique centered uniform law with unit variance.
UNIT_UNIFORM_HALFWIDTH = math.sqrt(3.0)

P1_KINDS = ("cubic_curve", "vanishing_pair", "pluggable")

MIXING_CONDITION_CAP = 1e6


@dataclass(frozen=True)
class MixtureSpec:
    """Generative description of the two-component source mixture.

    Parameters
    ----------
    n : source dimension.
    eta : probability that a sample comes from the diffuse component.
    p1_kind : 'cubic_curve' (n=3 curve s3 = s1^3 / beta^2), 'vanishing_pair'
        (n=5, two components forced to zero), or 'pluggable' (user callback).
    params : kind-specific parameters; for 'pluggable' supply
        ``{"generator": fn}`` where ``fn(count, rng) -> (count, n) array``.
    """

    n: int
    eta: float
    p1_kind: str = "vanishing_pair"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        check_weight(self.eta)
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.p1_kind not in P1_KINDS:
            raise ValueError(f"p1_kind must be one of {P1_KINDS}, got {self.p1_kind!r}")
        if self.p1_kind == "cubic_curve":
            if self.n != 3:
                raise ValueError("cubic_curve requires n=3")
            beta = float(self.params.get("beta", 1.5))
            gamma = float(self.params.get("gamma", 0.0))
            if beta <= 0:
                raise ValueError("cubic_curve requires beta > 0")
            if gamma < 0:
                raise ValueError("cubic_curve requires gamma >= 0")
        elif self.p1_kind == "vanishing_pair":
            if self.n != 5:
                raise ValueError("vanishing_pair requires n=5")
            idx = tuple(self.params.get("vanish_indices", (3, 4)))
            if len(idx) != 2 or idx[0] == idx[1] or not all(0 <= i < self.n for i in idx):
                raise ValueError("vanishing_pair requires two distinct in-range indices")
        elif self.p1_kind == "pluggable":
            if not callable(self.params.get("generator")):
                raise ValueError("pluggable requires params['generator'] to be callable")

    def to_dict(self) -> dict:
        params = {k: v for k, v in self.params.items() if k != "generator"}
        if self.p1_kind == "pluggable":
            params["generator"] = "<in-process callable>"
        return {"n": self.n, "eta": self.eta, "p1_kind": self.p1_kind, "params": params}

    @classmethod
    def from_dict(cls, d: dict) -> "MixtureSpec":
        kind = d.get("p1_kind", "vanishing_pair")
        if kind == "pluggable":
            raise ValueError("pluggable generators cannot be restored from a config file")
        return cls(
            n=int(d["n"]),
            eta=float(d["eta"]),
            p1_kind=kind,
            params=dict(d.get("params", {})),
        )


@dataclass(frozen=True)
class GeneratedData:
    """Sources, latent labels, mixing matrix, and the mixed observations.

    ``observations`` is exactly ``sources @ mixing.T`` (X = A S in column
    convention); rows are samples throughout.
    """

    sources: np.ndarray
    labels: np.ndarray
    mixing: np.ndarray
    observations: np.ndarray


def _uniform_block(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.uniform(-UNIT_UNIFORM_HALFWIDTH, UNIT_UNIFORM_HALFWIDTH, (rows, cols))


def uniform_sources(n: int, count: int, seed=0) -> np.ndarray:
    """i.i.d. centered unit-variance uniform samples, shape (count, n)."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    rng = check_random_state(seed)
    return _uniform_block(rng, count, n)


def _cubic_curve_block(rng, count, beta, gamma):
    s1 = rng.uniform(-beta, beta, count)
    s2 = rng.uniform(-gamma, gamma, count) if gamma > 0 else np.zeros(count)
    return np.column_stack([s1, s2, s1**3 / beta**2])


def cubic_curve_sources(count: int, beta: float = 1.5, gamma: float = 0.0, seed=0) -> np.ndarray:
    """Samples on the cubic curve s3 = s1^3 / beta^2 with s2 uniform on [-gamma, gamma].

    Shape (count, 3).  Every row satisfies s3 * beta^2 - s1^3 = 0 exactly.
    """
    beta = float(beta)
    gamma = float(gamma)
    if beta <= 0:
        raise ValueError("beta must be > 0")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    rng = check_random_state(seed)
    return _cubic_curve_block(rng, count, beta, gamma)


def _vanishing_block(rng, count, vanish_indices):
    S = _uniform_block(rng, count, 5)
    S[:, list(vanish_indices)] = 0.0
    return S


def vanishing_pair_sources(count: int, seed=0, vanish_indices=(3, 4)) -> np.ndarray:
    """Five-component sources with two components identically zero.

    The remaining components are centered unit-variance uniform; rows lie on
    the algebraic set {x_i = 0, x_j = 0} for the given 0-based indices
    (defaults: components 4 and 5).
    """
    idx = tuple(vanish_indices)
    if len(idx) != 2 or idx[0] == idx[1] or not all(0 <= i < 5 for i in idx):
        raise ValueError("vanish_indices must be two distinct indices in 0..4")
    rng = check_random_state(seed)
    return _vanishing_block(rng, count, idx)


def _p1_block(spec: MixtureSpec, count: int, rng: np.random.Generator) -> np.ndarray:
    if spec.p1_kind == "cubic_curve":
        return _cubic_curve_block(
            rng, count, float(spec.params.get("beta", 1.5)), float(spec.params.get("gamma", 0.0))
        )
    if spec.p1_kind == "vanishing_pair":
        return _vanishing_block(rng, count, tuple(spec.params.get("vanish_indices", (3, 4))))
    block = np.asarray(spec.params["generator"](count, rng), dtype=np.float64)
    if block.shape != (count, spec.n):
        raise ValueError(
            f"pluggable generator returned shape {block.shape}, expected {(count, spec.n)}"
        )
    return block


def generate_mixture(spec: MixtureSpec, count: int, seed=0) -> GeneratedData:
    """Draw labels, sources, and a random Gaussian mixing matrix; mix them.

    Labels are i.i.d. with P(label=0) = eta.  The mixing matrix is redrawn
    until its condition number is at most 1e6.  The draw order (labels,
    diffuse block, structured block, mixing matrix) is fixed, so identical
    (spec, count, seed) give bit-identical output.
    """
    rng = check_random_state(seed)
    T = int(count)
    labels = (rng.random(T) >= spec.eta).astype(np.int64)
    S = np.empty((T, spec.n))
    kept = labels == 0
    S[kept] = _uniform_block(rng, int(kept.sum()), spec.n)
    S[~kept] = _p1_block(spec, T - int(kept.sum()), rng)
    A = rng.normal(size=(spec.n, spec.n))
    while np.linalg.cond(A) > MIXING_CONDITION_CAP:
        A = rng.normal(size=(spec.n, spec.n))
    return GeneratedData(sources=S, labels=labels, mixing=A, observations=S @ A.T)


def dump_generated_data(data: GeneratedData, out_dir, *, spec: MixtureSpec | None = None, seed=None) -> None:
    """Write S.csv, X.csv, labels.csv, A.json and a manifest describing the draw."""
    os.makedirs(out_dir, exist_ok=True)
    np.savetxt(os.path.join(out_dir, "S.csv"), data.sources, delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(out_dir, "X.csv"), data.observations, delimiter=",", fmt="%.17g")
    np.savetxt(os.path.join(out_dir, "labels.csv"), data.labels, fmt="%d")
    n = data.mixing.shape[0]
    with open(os.path.join(out_dir, "A.json"), "w", encoding="utf-8") as fh:
        json.dump({"n": n, "A": [[float(v) for v in row] for row in data.mixing]}, fh, indent=2)
        fh.write("\n")
    manifest = {
        "T": int(data.sources.shape[0]),
        "n": n,
        "seed": seed,
        "spec": spec.to_dict() if spec is not None else None,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def load_generated_data(in_dir) -> GeneratedData:
    """Inverse of :func:`dump_generated_data` (manifest is not re-validated)."""
    S = np.loadtxt(os.path.join(in_dir, "S.csv"), delimiter=",", ndmin=2)
    X = np.loadtxt(os.path.join(in_dir, "X.csv"), delimiter=",", ndmin=2)
    labels = np.loadtxt(os.path.join(in_dir, "labels.csv"), dtype=np.int64, ndmin=1)
    with open(os.path.join(in_dir, "A.json"), encoding="utf-8") as fh:
        A = np.asarray(json.load(fh)["A"], dtype=np.float64)
    return GeneratedData(sources=S, labels=labels, mixing=A, observations=X)
