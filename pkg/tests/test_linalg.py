import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mgopt.errors import AsymmetricMatrix, NotPositiveDefinite, SingularInteriorBlock
from mgopt.linalg import SOLVE_TOL, as_symmetric, cholesky, schur_complement, solve_spd, sym_eig


def _spd(rng, n, cond=1e3):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return Q @ np.diag(np.geomspace(1.0, cond, n)) @ Q.T


def test_as_symmetric_rejects():
    with pytest.raises(AsymmetricMatrix):
        as_symmetric([[1.0, 2.0], [0.0, 1.0]])
    with pytest.raises(AsymmetricMatrix):
        as_symmetric(np.ones((2, 3)))


def test_as_symmetric_symmetrizes_roundoff():
    A = np.array([[2.0, 1.0], [1.0 + 1e-15, 3.0]])
    S = as_symmetric(A)
    assert np.array_equal(S, S.T)


@pytest.mark.parametrize("n", [1, 3, 10, 40])
def test_solve_spd_residual(n):
    rng = np.random.default_rng(n)
    A = _spd(rng, n)
    b = rng.normal(size=n)
    x = solve_spd(A, b)
    r = np.linalg.norm(A @ x - b)
    assert r <= SOLVE_TOL * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))


def test_solve_spd_matrix_rhs():
    rng = np.random.default_rng(0)
    A = _spd(rng, 5)
    B = rng.normal(size=(5, 3))
    np.testing.assert_allclose(A @ solve_spd(A, B), B, atol=1e-10)


@pytest.mark.parametrize(
    "A", [np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((2, 2)), np.array([[1.0, 1.0], [1.0, 1.0]])]
)
def test_not_positive_definite(A):
    with pytest.raises(NotPositiveDefinite):
        cholesky(A)


def test_near_singular_pivot_rejected():
    A = np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])
    with pytest.raises(NotPositiveDefinite):
        solve_spd(A, np.ones(2))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(-10, 10)))
def test_sym_eig_contract(M):
    A = M + M.T
    lam, V = sym_eig(A)
    assert np.all(np.diff(lam) >= 0)
    np.testing.assert_allclose(V.T @ V, np.eye(6), atol=1e-10)
    scale = max(np.abs(A).max(), 1.0)
    np.testing.assert_allclose(A @ V, V * lam, atol=1e-9 * scale)


def test_schur_complement_matches_block_formula():
    rng = np.random.default_rng(3)
    A = _spd(rng, 7)
    keep = [5, 0, 2]
    rest = [1, 3, 4, 6]
    expect = A[np.ix_(keep, keep)] - A[np.ix_(keep, rest)] @ np.linalg.solve(A[np.ix_(rest, rest)], A[np.ix_(rest, keep)])
    np.testing.assert_allclose(schur_complement(A, keep), expect, atol=1e-10)


def test_schur_complement_of_laplacian_is_laplacian():
    # path 0-1-2 with unit conductances: eliminating 1 gives conductance 1/2
    A = np.array([[1.0, -1.0, 0.0], [-1.0, 2.0, -1.0], [0.0, -1.0, 1.0]])
    np.testing.assert_allclose(schur_complement(A, [0, 2]), [[0.5, -0.5], [-0.5, 0.5]])


def test_schur_singular_interior():
    A = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 1.0], [0.0, 1.0, 1.0]])
    with pytest.raises(SingularInteriorBlock):
        schur_complement(A, [0])
