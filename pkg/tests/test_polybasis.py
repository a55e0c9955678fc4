import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbss.polybasis import MonomialBasis, basis_size, enumerate_basis


def brute_force_exponents(n, d):
    """Oracle: all exponent tuples with sum <= d, via product enumeration."""
    return {e for e in itertools.product(range(d + 1), repeat=n) if sum(e) <= d}


def brute_force_embed(x, exponents):
    """Oracle: direct power products, no recursion."""
    return np.array([np.prod([xi**e for xi, e in zip(x, alpha)]) for alpha in exponents])


# Appendix sizes for C(n+d, n), keyed (n, d).
APPENDIX_SIZES = {
    (2, 1): 3, (2, 2): 6, (2, 4): 15, (2, 6): 28, (2, 8): 45,
    (3, 1): 4, (3, 2): 10, (3, 4): 35, (3, 6): 84, (3, 8): 165,
    (5, 1): 6, (5, 2): 21, (5, 4): 126, (5, 6): 462, (5, 8): 1287,
    (8, 1): 9, (8, 2): 45, (8, 4): 495, (8, 6): 3003, (8, 8): 12870,
}


def test_basis_size_table():
    for (n, d), size in APPENDIX_SIZES.items():
        assert basis_size(n, d) == size


def test_basis_size_trivial_and_errors():
    assert basis_size(1, 0) == 1
    assert basis_size(3, 4) == 35
    assert basis_size(8, 8) == 12870
    with pytest.raises(ValueError):
        basis_size(0, 3)
    with pytest.raises(ValueError):
        basis_size(2, -1)


def test_enumerate_order_n2_d2():
    basis = enumerate_basis(2, 2)
    assert basis.exponents == ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))
    assert basis.monomial_strings() == ["1", "x1", "x2", "x1^2", "x1*x2", "x2^2"]


def test_enumerate_n2_d3_ends_with_pure_power():
    basis = enumerate_basis(2, 3)
    assert len(basis) == 10
    assert basis.exponents[-1] == (0, 3)
    assert basis.exponents[6:] == ((3, 0), (2, 1), (1, 2), (0, 3))


def test_enumerate_sizes_match_formula():
    for n in range(1, 9):
        for d in range(0, 9):
            if basis_size(n, d) > 4000 and (n, d) != (8, 8):
                continue
            assert len(enumerate_basis(n, d)) == basis_size(n, d)


def test_enumerate_complete_and_unique():
    for n, d in [(1, 5), (2, 4), (3, 3), (4, 2)]:
        basis = enumerate_basis(n, d)
        assert len(set(basis.exponents)) == len(basis.exponents)
        assert set(basis.exponents) == brute_force_exponents(n, d)


def test_enumerate_graded_order_invariants():
    basis = enumerate_basis(4, 3)
    degs = [sum(a) for a in basis.exponents]
    assert degs == sorted(degs)
    assert basis.exponents[0] == (0, 0, 0, 0)
    # within each degree: larger leading powers come first
    for k in range(4):
        level = [a for a in basis.exponents if sum(a) == k]
        assert level == sorted(level, reverse=True)


def test_enumerate_degree_zero():
    basis = enumerate_basis(3, 0)
    assert basis.exponents == ((0, 0, 0),)


def test_embed_example_values():
    basis = enumerate_basis(2, 2)
    np.testing.assert_array_equal(basis.embed(np.array([2.0, 3.0])), [1, 2, 3, 4, 6, 9])


def test_embed_zero_and_one_vectors():
    basis = enumerate_basis(3, 4)
    at_zero = basis.embed(np.zeros(3))
    assert at_zero[0] == 1.0
    assert np.all(at_zero[1:] == 0.0)
    np.testing.assert_array_equal(basis.embed(np.ones(3)), np.ones(len(basis)))


def test_embed_matches_brute_force():
    rng = np.random.default_rng(11)
    for n, d in [(1, 6), (2, 5), (3, 4), (5, 3)]:
        basis = enumerate_basis(n, d)
        X = rng.normal(size=(7, n))
        Phi = basis.embed(X)
        for t in range(7):
            np.testing.assert_allclose(
                Phi[t], brute_force_embed(X[t], basis.exponents), rtol=1e-13, atol=1e-13
            )


def test_embed_batch_first_column_is_one():
    basis = enumerate_basis(4, 3)
    Phi = basis.embed(np.random.default_rng(0).normal(size=(25, 4)))
    assert np.all(Phi[:, 0] == 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 4), st.integers(1, 5), st.integers(0, 10**6))
def test_embed_multiplicative_over_exponent_splits(n, d, seed):
    rng = np.random.default_rng(seed)
    basis = enumerate_basis(n, d)
    pos = {a: j for j, a in enumerate(basis.exponents)}
    x = rng.uniform(0.5, 1.5, n)
    phi = basis.embed(x)
    alpha = basis.exponents[rng.integers(len(basis))]
    split = tuple(rng.integers(0, e + 1) for e in alpha)
    rest = tuple(a - s for a, s in zip(alpha, split))
    np.testing.assert_allclose(phi[pos[alpha]], phi[pos[split]] * phi[pos[rest]], rtol=1e-12)


def test_embed_scaling_by_two_is_exact():
    basis = enumerate_basis(3, 4)
    x = np.array([0.5, -1.25, 0.75])  # dyadic entries: powers of 2 scale exactly
    phi = basis.embed(x)
    phi2 = basis.embed(2.0 * x)
    factors = np.array([2.0 ** sum(a) for a in basis.exponents])
    np.testing.assert_array_equal(phi2, phi * factors)


def test_embed_validates_input():
    basis = enumerate_basis(2, 2)
    with pytest.raises(ValueError):
        basis.embed(np.array([1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        basis.embed(np.array([np.inf, 0.0]))


def test_json_round_trip():
    basis = enumerate_basis(3, 2)
    text = basis.to_json()
    parsed = json.loads(text)
    assert parsed[0] == [0, 0, 0]
    again = MonomialBasis.from_json(text)
    assert again.exponents == basis.exponents
    assert again.n == 3 and again.degree == 2


def test_from_json_rejects_incomplete_basis():
    with pytest.raises(ValueError):
        MonomialBasis.from_json(json.dumps([[0, 0], [1, 0]]))
    with pytest.raises(ValueError):
        MonomialBasis.from_json("[]")
