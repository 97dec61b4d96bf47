"""Dense kernels: SPD factorizations, symmetric eigendecompositions and
eigen-based Moore-Penrose pseudoinverses.

Everything here works on small dense matrices. Tolerances are relative to the
largest eigenvalue unless stated otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

RANK_TOL = 1e-10
SPD_TOL = 1e-10


class NotSPDError(np.linalg.LinAlgError):
    """Raised when a matrix that must be symmetric positive definite is not."""


class SingularOperatorError(np.linalg.LinAlgError):
    """Raised when a coarse or local operator that must be invertible is singular."""


class SPDFactor:
    """Cached Cholesky factorization of a dense SPD matrix.

    An empty (0x0) matrix is accepted; solves then return empty vectors.
    """

    def __init__(self, A, name="matrix"):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"{name} must be square, got shape {A.shape}")
        self.n = A.shape[0]
        self.name = name
        self._factor = None
        if self.n == 0:
            return
        try:
            self._factor = sla.cho_factor(A, lower=True, check_finite=True)
        except np.linalg.LinAlgError as exc:
            raise NotSPDError(f"{name} is not positive definite: {exc}") from exc
        # cholesky accepts tiny pivots on singular PSD input; the check runs on
        # the Jacobi-scaled matrix so coefficient jumps alone do not trip it
        d = 1.0 / np.sqrt(np.diag(A))
        w = sla.eigvalsh(A * np.outer(d, d))
        if w[0] <= SPD_TOL * w[-1]:
            raise NotSPDError(f"{name} is numerically singular (eigenvalue ratio {w[0] / w[-1]:.3e})")

    def solve(self, rhs):
        rhs = np.asarray(rhs, dtype=float)
        if self.n == 0:
            return np.zeros_like(rhs)
        return sla.cho_solve(self._factor, rhs, check_finite=False)

    @property
    def lower(self):
        """Lower Cholesky factor L with A = L L^T."""
        if self.n == 0:
            return np.zeros((0, 0))
        return np.tril(self._factor[0])


def spd_solve(A, rhs):
    """Solve A x = rhs for a dense SPD matrix A."""
    return SPDFactor(A).solve(rhs)


def is_spd(A, tol=SPD_TOL):
    """True if A is symmetric and its smallest eigenvalue exceeds tol * lambda_max."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return True
    if not np.allclose(A, A.T, rtol=0, atol=1e-12 * max(np.abs(A).max(), 1e-300)):
        return False
    w = np.linalg.eigvalsh(A)
    return bool(w[-1] > 0 and w[0] > tol * w[-1])


@dataclass(frozen=True)
class EigDecomp:
    """Symmetric eigendecomposition A = V diag(values) V^T, values ascending."""

    values: np.ndarray
    vectors: np.ndarray
    rank_tol: float = RANK_TOL

    @property
    def lambda_max(self):
        if self.values.size == 0:
            return 0.0
        return float(np.abs(self.values).max())

    def null_mask(self):
        """Mask of eigenvalues treated as zero by the pseudoinverse."""
        return self.values <= self.rank_tol * self.lambda_max

    def inverse_values(self):
        inv = np.zeros_like(self.values)
        keep = ~self.null_mask()
        inv[keep] = 1.0 / self.values[keep]
        return inv

    def pinv(self):
        """Dense pseudoinverse V Lambda^+ V^T."""
        V = self.vectors
        return (V * self.inverse_values()) @ V.T


def sym_eig(A, rank_tol=RANK_TOL):
    """Full eigendecomposition of a dense symmetric matrix, ascending order."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] == 0:
        return EigDecomp(np.zeros(0), np.zeros((0, 0)), rank_tol)
    try:
        w, V = sla.eigh(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"symmetric eigensolver did not converge: {exc}") from exc
    return EigDecomp(w, V, rank_tol)


def pseudo_inverse_apply(eig, x):
    """Apply the Moore-Penrose pseudoinverse held by ``eig`` to a vector or block."""
    if eig.values.size == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    V = eig.vectors
    coef = V.T @ x
    inv = eig.inverse_values()
    if coef.ndim == 1:
        return V @ (inv * coef)
    return V @ (inv[:, None] * coef)


def psd_sqrt(A, neg_tol=1e-9):
    """Symmetric square root of a PSD matrix.

    Eigenvalues below ``-neg_tol * lambda_max`` raise ``NotSPDError``; small
    negative ones from rounding are clipped to zero.
    """
    eig = sym_eig(A)
    if eig.values.size == 0:
        return np.zeros((0, 0))
    lmax = eig.lambda_max
    if eig.values[0] < -neg_tol * lmax:
        raise NotSPDError(f"matrix has eigenvalue {eig.values[0]:.3e} < 0 (lambda_max {lmax:.3e})")
    root = np.sqrt(np.clip(eig.values, 0.0, None))
    return (eig.vectors * root) @ eig.vectors.T


def assemble_dense(apply, n):
    """Dense matrix of a linear map given by ``apply`` on R^n (column by column)."""
    eye = np.eye(n)
    if n == 0:
        return np.zeros((0, 0))
    cols = [apply(eye[:, k]) for k in range(n)]
    return np.column_stack(cols)
