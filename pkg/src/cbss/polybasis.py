"""Graded-lexicographic monomial bases and polynomial feature embeddings.

The basis for total degree <= d in n variables is ordered by ascending
total degree, and within a degree by descending powers of the earlier
variables, so that for n=2, d=2 the monomials come out as
1, x1, x2, x1^2, x1*x2, x2^2.  The constant monomial is always first.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .validation import check_observations

__all__ = ["MonomialBasis", "basis_size", "enumerate_basis"]


def basis_size(n: int, d: int) -> int:
    """Number of monomials of total degree <= d in n variables.

    Exact integer binomial C(n+d, n); Python integers cannot silently
    wrap, so the result is always exact.
    """
    n = int(n)
    d = int(d)
    if n < 1:
        raise ValueError(f"dimension n must be >= 1, got {n}")
    if d < 0:
        raise ValueError(f"degree d must be >= 0, got {d}")
    return math.comb(n + d, n)


def _degree_exponents(n: int, k: int):
    """Yield exponent tuples of total degree k, largest leading powers first."""
    if n == 1:
        yield (k,)
        return
    for e in range(k, -1, -1):
        for rest in _degree_exponents(n - 1, k - e):
            yield (e,) + rest


@dataclass(frozen=True)
class MonomialBasis:
    """Ordered monomial basis with a fast vectorized embedding.

    Attributes
    ----------
    n : number of variables.
    degree : maximal total degree.
    exponents : tuple of exponent tuples, graded order, constant first.
    """

    n: int
    degree: int
    exponents: tuple[tuple[int, ...], ...]
    _parent: np.ndarray = field(repr=False, compare=False, default=None)
    _factor_var: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        # Each non-constant monomial is a lower-degree monomial times one
        # variable; precompute that recursion so embedding is one multiply
        # per basis element instead of repeated pow calls.
        position = {a: j for j, a in enumerate(self.exponents)}
        parent = np.zeros(len(self.exponents), dtype=np.intp)
        factor_var = np.zeros(len(self.exponents), dtype=np.intp)
        for j, alpha in enumerate(self.exponents):
            if sum(alpha) == 0:
                continue
            i = next(k for k, e in enumerate(alpha) if e > 0)
            beta = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            parent[j] = position[beta]
            factor_var[j] = i
        object.__setattr__(self, "_parent", parent)
        object.__setattr__(self, "_factor_var", factor_var)

    def __len__(self) -> int:
        return len(self.exponents)

    @property
    def size(self) -> int:
        return len(self.exponents)

    def embed(self, X) -> np.ndarray:
        """Evaluate every monomial at every sample.

        Parameters
        ----------
        X : array of shape (n_samples, n) or a single length-n vector.

        Returns
        -------
        Array of shape (n_samples, size); column 0 is identically 1.
        """
        x = np.asarray(X, dtype=np.float64)
        single = x.ndim == 1
        X = check_observations(x[None, :] if single else x, name="X")
        if X.shape[1] != self.n:
            raise ValueError(f"basis has n={self.n} variables, data has {X.shape[1]}")
        T = X.shape[0]
        Phi = np.empty((T, len(self.exponents)))
        Phi[:, 0] = 1.0
        for j in range(1, len(self.exponents)):
            np.multiply(Phi[:, self._parent[j]], X[:, self._factor_var[j]], out=Phi[:, j])
        return Phi[0] if single else Phi

    def monomial_strings(self) -> list[str]:
        """Human-readable monomials, e.g. '1', 'x1^2*x2'."""
        out = []
        for alpha in self.exponents:
            parts = []
            for i, e in enumerate(alpha):
                if e == 1:
                    parts.append(f"x{i + 1}")
                elif e > 1:
                    parts.append(f"x{i + 1}^{e}")
            out.append("*".join(parts) if parts else "1")
        return out

    def to_json(self) -> str:
        """Serialize as a JSON array of exponent arrays (stable order)."""
        return json.dumps([list(a) for a in self.exponents])

    @classmethod
    def from_json(cls, text: str) -> "MonomialBasis":
        exps = tuple(tuple(int(e) for e in a) for a in json.loads(text))
        if not exps:
            raise ValueError("empty basis")
        n = len(exps[0])
        degree = max(sum(a) for a in exps)
        basis = cls(n=n, degree=degree, exponents=exps)
        if basis.exponents != enumerate_basis(n, degree).exponents:
            raise ValueError("exponent list is not a complete graded-lex basis")
        return basis


def enumerate_basis(n: int, d: int) -> MonomialBasis:
    """Build the graded-lexicographic monomial basis for degree <= d in n variables."""
    size = basis_size(n, d)  # also validates n, d
    exps = []
    for k in range(d + 1):
        exps.extend(_degree_exponents(n, k))
    assert len(exps) == size
    return MonomialBasis(n=n, degree=d, exponents=tuple(exps))
