import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import nnls as scipy_nnls

from projdyn.errors import SolverError
from projdyn.nnls import nnls_gram

from oracles import qp_enumerate


def _problem(seed, m, k):
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((k, m))
    d = rng.standard_normal(k)
    return C, d


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6))
def test_matches_enumeration(seed, m):
    C, d = _problem(seed, m, m + 2)
    M, q = C.T @ C, C.T @ d
    lam = nnls_gram(M, q)
    # Enumeration over lam >= 0 written as -lam <= 0.
    ref, _ = qp_enumerate(M, q, -np.eye(m), np.zeros(m))
    np.testing.assert_allclose(lam, ref, atol=1e-8)


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 8), k=st.integers(1, 10))
def test_kkt_conditions(seed, m, k):
    # Also covers rank-deficient Gram matrices (k < m).
    C, d = _problem(seed, m, k)
    M, q = C.T @ C, C.T @ d
    lam = nnls_gram(M, q)
    w = q - M @ lam
    scale = 1.0 + np.abs(q).max() + np.abs(M).max()
    assert np.all(lam >= 0.0)
    assert np.all(w <= 1e-9 * scale)
    assert abs(lam @ w) <= 1e-9 * scale * (1.0 + lam.sum())


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), m=st.integers(1, 6))
def test_objective_matches_scipy(seed, m):
    C, d = _problem(seed, m, m + 3)
    lam = nnls_gram(C.T @ C, C.T @ d)
    ref, _ = scipy_nnls(C, d)
    assert np.linalg.norm(C @ lam - d) <= np.linalg.norm(C @ ref - d) + 1e-10


def test_one_dimensional_fast_path():
    np.testing.assert_allclose(nnls_gram([[2.0]], [3.0]), [1.5])
    np.testing.assert_allclose(nnls_gram([[2.0]], [-3.0]), [0.0])
    np.testing.assert_allclose(nnls_gram([[0.0]], [-1.0]), [0.0])
    with pytest.raises(SolverError):
        nnls_gram([[0.0]], [1.0])


def test_empty_problem():
    assert nnls_gram(np.zeros((0, 0)), np.zeros(0)).shape == (0,)


def test_iteration_cap_reports_iterate():
    rng = np.random.default_rng(3)
    C = rng.standard_normal((8, 6))
    d = rng.standard_normal(8) * 10
    with pytest.raises(SolverError) as info:
        nnls_gram(C.T @ C, C.T @ d, maxiter=1)
    assert info.value.iterate is not None
    assert info.value.passive is not None


def test_tie_breaks_to_lowest_index():
    # Two identical columns: the first one enters and the second stays at zero.
    M = np.ones((2, 2))
    lam = nnls_gram(M, [1.0, 1.0])
    np.testing.assert_allclose(lam, [1.0, 0.0])
