import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbss.evaluation import (
    Aggregate,
    Alignment,
    EvaluationReport,
    align,
    label_accuracy,
    mse,
    trimmed_mean,
)


def brute_force_best_assignment(S_hat, S_true):
    """Oracle: maximize total |correlation| by enumerating all permutations."""
    n = S_true.shape[1]
    best, best_perm = -np.inf, None
    for perm in itertools.permutations(range(n)):
        total = 0.0
        for i in range(n):
            c = np.corrcoef(S_true[:, i], S_hat[:, perm[i]])[0, 1]
            total += abs(c) if np.isfinite(c) else 0.0
        if total > best:
            best, best_perm = total, perm
    return best, best_perm


def assignment_objective(S_hat, S_true, perm):
    total = 0.0
    for i in range(S_true.shape[1]):
        c = np.corrcoef(S_true[:, i], S_hat[:, perm[i]])[0, 1]
        total += abs(c) if np.isfinite(c) else 0.0
    return total


# ----------------------------------------------------------------------- align


def test_align_identity():
    S = np.random.default_rng(0).normal(size=(500, 3))
    a = align(S, S)
    np.testing.assert_array_equal(a.permutation, [0, 1, 2])
    np.testing.assert_allclose(a.scales, np.ones(3), rtol=1e-12)
    assert mse(S, S, a) == 0.0


def test_align_swap_and_negate():
    S = np.random.default_rng(1).normal(size=(400, 2))
    S_hat = -S[:, ::-1]
    a = align(S_hat, S)
    np.testing.assert_array_equal(a.permutation, [1, 0])
    np.testing.assert_allclose(a.scales, [-1.0, -1.0], rtol=1e-12)
    assert mse(S_hat, S, a) == pytest.approx(0.0, abs=1e-25)


def test_align_row_scaling():
    S = np.random.default_rng(2).normal(size=(300, 3))
    a = align(2.0 * S, S)
    np.testing.assert_array_equal(a.permutation, [0, 1, 2])
    np.testing.assert_allclose(a.scales, [0.5, 0.5, 0.5], rtol=1e-12)


def test_align_matches_brute_force_assignment():
    rng = np.random.default_rng(3)
    for _ in range(10):
        S = rng.normal(size=(200, 4))
        S_hat = S @ rng.normal(size=(4, 4))
        a = align(S_hat, S)
        oracle_obj, _ = brute_force_best_assignment(S_hat, S)
        ours = assignment_objective(S_hat, S, a.permutation)
        assert ours == pytest.approx(oracle_obj, rel=1e-10)


def test_align_zero_variance_estimate():
    rng = np.random.default_rng(4)
    S = rng.normal(size=(100, 2))
    S_hat = np.column_stack([np.zeros(100), S[:, 1]])
    a = align(S_hat, S)
    assert set(a.permutation.tolist()) == {0, 1}
    dead = int(np.flatnonzero(a.permutation == 0)[0])
    assert a.scales[dead] == 0.0


def test_align_shape_and_variance_checks():
    with pytest.raises(ValueError, match="shape"):
        align(np.zeros((10, 2)), np.zeros((10, 3)))
    with pytest.raises(ValueError, match="variance"):
        align(np.random.default_rng(0).normal(size=(10, 2)), np.zeros((10, 2)))


def test_align_invariant_to_permutation_and_scaling():
    rng = np.random.default_rng(5)
    S = rng.normal(size=(300, 3))
    S_hat = S + 0.05 * rng.normal(size=(300, 3))
    base = mse(S_hat, S, align(S_hat, S))
    perm = [2, 0, 1]
    scales = np.array([3.0, -0.5, 7.0])
    twisted = S_hat[:, perm] * scales
    again = mse(twisted, S, align(twisted, S))
    assert again == pytest.approx(base, abs=1e-10)


# ------------------------------------------------------------------------- mse


def test_mse_perfect_recovery_is_zero():
    S = np.random.default_rng(6).normal(size=(50, 2))
    assert mse(S, S, align(S, S)) == 0.0


def test_mse_offset_residual_closed_form():
    # adding offset c to one unit-variance component leaves residual
    # ~ c^2/(1+c^2)/n after least-squares scaling
    rng = np.random.default_rng(7)
    T, n, c = 200000, 2, 0.5
    S = rng.uniform(-np.sqrt(3), np.sqrt(3), (T, n))
    S_hat = S.copy()
    S_hat[:, 0] += c
    val = mse(S_hat, S, align(S_hat, S))
    expected = c**2 / (1.0 + c**2) / n
    assert val == pytest.approx(expected, rel=0.05)
    assert val >= 0.9 * expected


def test_mse_uses_alignment():
    S = np.random.default_rng(8).normal(size=(100, 2))
    a = Alignment(permutation=np.array([1, 0]), scales=np.array([1.0, 1.0]))
    assert mse(S[:, [1, 0]], S, a) == 0.0


# ------------------------------------------------------------------- upsilon


def test_label_accuracy_examples():
    assert label_accuracy([0, 1, 0, 1], [0, 1, 0, 1]) == 1.0
    assert label_accuracy([0, 1], [1, 0]) == 0.0
    assert label_accuracy([0, 1, 0, 1], [0, 1, 1, 1]) == 0.75


def test_label_accuracy_symmetry_and_errors():
    rng = np.random.default_rng(9)
    a = rng.integers(0, 2, 57)
    b = rng.integers(0, 2, 57)
    assert label_accuracy(a, b) == label_accuracy(b, a)
    with pytest.raises(ValueError):
        label_accuracy([0, 1], [0, 1, 1])
    with pytest.raises(ValueError):
        label_accuracy([], [])


# ---------------------------------------------------------------- trimmed mean


def test_trimmed_mean_drops_outliers():
    values = list(range(1, 99)) + [-10_000.0, 10_000.0]
    assert trimmed_mean(values, 0.01) == pytest.approx(np.mean(range(1, 99)))


def test_trimmed_mean_examples():
    assert trimmed_mean([7.0] * 25, 0.01) == 7.0
    assert trimmed_mean(np.arange(1, 101, dtype=float), 0.01) == pytest.approx(50.5)
    assert trimmed_mean([3.0], 0.0) == 3.0


def test_trimmed_mean_errors():
    with pytest.raises(ValueError):
        trimmed_mean([], 0.01)
    with pytest.raises(ValueError):
        trimmed_mean([1.0, 2.0], 0.5)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=60), st.floats(0.0, 0.49))
def test_trimmed_mean_permutation_invariant(values, frac):
    rng = np.random.default_rng(0)
    shuffled = list(values)
    rng.shuffle(shuffled)
    assert trimmed_mean(shuffled, frac) == pytest.approx(trimmed_mean(values, frac), rel=1e-9, abs=1e-9)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=40))
def test_trimmed_mean_monotone_adding_above_max(values):
    frac = 0.1
    before = trimmed_mean(values, frac)
    after = trimmed_mean(values + [max(values) + 1.0], frac)
    assert after >= before - 1e-9


def test_evaluation_report_container():
    rep = EvaluationReport(mse=0.004, accuracy=0.97, trials=200, aggregate=Aggregate.trimmed_mean)
    assert rep.mse == 0.004
    assert rep.aggregate.value == "trimmed_mean"
    single = EvaluationReport(mse=0.0, accuracy=1.0, trials=1)
    assert single.aggregate is Aggregate.single
