import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from substructuring.linalg import (
    NotSPDError,
    SPDFactor,
    assemble_dense,
    is_spd,
    pseudo_inverse_apply,
    psd_sqrt,
    spd_solve,
    sym_eig,
)


def test_spd_solve_scalar():
    assert spd_solve(np.array([[2.0]]), np.array([4.0])) == pytest.approx([2.0])


@pytest.mark.parametrize("n", [1, 3, 7])
def test_spd_solve_identity(n, rng):
    b = rng.standard_normal(n)
    np.testing.assert_array_equal(spd_solve(np.eye(n), b), b)


def test_spd_solve_random_residual(rng):
    M = rng.standard_normal((50, 50))
    A = M @ M.T + 50 * np.eye(50)
    b = rng.standard_normal(50)
    x = spd_solve(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * np.linalg.norm(A, 2) * np.linalg.norm(x)


def test_spd_factor_is_reused(rng):
    A = np.diag([1.0, 2.0, 4.0])
    fac = SPDFactor(A)
    B = rng.standard_normal((3, 5))
    np.testing.assert_allclose(A @ fac.solve(B), B, atol=1e-14)
    np.testing.assert_allclose(fac.lower @ fac.lower.T, A)


@pytest.mark.parametrize("A", [np.array([[1.0, 2.0], [2.0, 1.0]]), np.zeros((2, 2)), np.array([[1.0, 1.0], [1.0, 1.0 + 1e-14]])])
def test_spd_factor_rejects(A):
    with pytest.raises(NotSPDError):
        SPDFactor(A)


def test_spd_factor_accepts_bad_scaling(rng):
    X = rng.standard_normal((6, 6))
    D = np.diag(np.geomspace(1, 1e-7, 6))
    A = D @ (X @ X.T + 6 * np.eye(6)) @ D
    b = rng.standard_normal(6)
    x = SPDFactor(A).solve(b)
    assert np.linalg.norm(A @ x - b) <= 1e-8 * np.linalg.norm(b)


def test_empty_factor():
    assert SPDFactor(np.zeros((0, 0))).solve(np.zeros(0)).shape == (0,)


def test_is_spd():
    assert is_spd(np.eye(3))
    assert not is_spd(np.diag([1.0, 0.0]))
    assert not is_spd(np.array([[1.0, 1.0], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "A, expected",
    [(np.diag([1.0, 2.0, 3.0]), [1, 2, 3]), (np.array([[0.0, 1.0], [1.0, 0.0]]), [-1, 1]), (np.zeros((1, 1)), [0])],
)
def test_sym_eig_values(A, expected):
    eig = sym_eig(A)
    np.testing.assert_allclose(eig.values, expected, atol=1e-14)
    V = eig.vectors
    assert np.abs(A @ V - V * eig.values).max() <= 1e-11 * max(1.0, np.abs(A).max())
    assert np.abs(V.T @ V - np.eye(len(expected))).max() <= 1e-12


def test_pinv_of_zero_and_identity():
    zero = sym_eig(np.zeros((1, 1)))
    assert pseudo_inverse_apply(zero, np.array([3.0]))[0] == 0.0
    one = sym_eig(np.array([[1.0]]))
    assert pseudo_inverse_apply(one, np.array([3.0]))[0] == pytest.approx(3.0)


def test_pinv_rank_deficient_moore_penrose(rng):
    M = rng.standard_normal((10, 6))
    S = M @ M.T
    Sp = sym_eig(S).pinv()
    nrm = np.linalg.norm(S)
    assert np.linalg.norm(S @ Sp @ S - S) <= 1e-9 * nrm
    assert np.linalg.norm(Sp @ S @ Sp - Sp) <= 1e-9 * np.linalg.norm(Sp)
    for X in (Sp @ S, S @ Sp):
        assert np.linalg.norm(X @ X - X) <= 1e-9
        assert np.linalg.norm(X - X.T) <= 1e-9
    # block application agrees with the dense pseudoinverse
    B = rng.standard_normal((10, 3))
    np.testing.assert_allclose(pseudo_inverse_apply(sym_eig(S), B), Sp @ B, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(2, 8), rank=st.integers(1, 8), seed=st.integers(0, 10_000))
def test_pinv_projector_property(n, rank, seed):
    rank = min(rank, n)
    gen = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(gen.standard_normal((n, n)))
    vals = np.zeros(n)
    vals[:rank] = gen.uniform(0.1, 10.0, rank)
    S = (Q * vals) @ Q.T
    eig = sym_eig(S)
    X = assemble_dense(lambda v: pseudo_inverse_apply(eig, S @ v), n)
    assert np.linalg.norm(X @ X - X) <= 1e-9
    assert np.linalg.norm(X - X.T) <= 1e-9
    assert np.trace(X) == pytest.approx(rank, abs=1e-9)


def test_psd_sqrt(rng):
    M = rng.standard_normal((5, 3))
    A = M @ M.T
    root = psd_sqrt(A)
    np.testing.assert_allclose(root @ root, A, atol=1e-12)
    with pytest.raises(NotSPDError):
        psd_sqrt(-np.eye(2))
