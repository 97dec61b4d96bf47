"""Preconditioned conjugate gradients with Lanczos condition estimates."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

DEFAULT_TOL = 1e-8
DEFAULT_MAXIT = 500


class IndefiniteOperatorError(ArithmeticError):
    """CG met a non-positive curvature p^T A p or a negative r^T M r."""


class ProjectionDriftError(RuntimeError):
    """Projected iterates left the affine constraint set G^T lambda = Z^T f."""


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    converged: bool
    residual_history: list = field(default_factory=list)
    kappa_estimate: float = 1.0
    alphas: list = field(default_factory=list, repr=False)
    betas: list = field(default_factory=list, repr=False)

    def summary(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "kappa_estimate": self.kappa_estimate,
            "final_residual": self.residual_history[-1] if self.residual_history else 0.0,
        }


def lanczos_kappa(alphas, betas):
    """Condition number of the Lanczos tridiagonal built from CG coefficients.

    ``betas[k]`` is the coefficient used to form direction k+1.
    """
    k = len(alphas)
    if k == 0:
        return 1.0
    T = np.zeros((k, k))
    for j in range(k):
        T[j, j] = 1.0 / alphas[j]
        if j > 0:
            T[j, j] += betas[j - 1] / alphas[j - 1]
        if j + 1 < k:
            T[j, j + 1] = T[j + 1, j] = np.sqrt(betas[j]) / alphas[j]
    ev = np.linalg.eigvalsh(T)
    if ev[0] <= 0:
        return float("inf")
    return float(ev[-1] / ev[0])


def _cg_loop(op_apply, precond_apply, x, r, tol, maxit, project=None, check=None):
    z = precond_apply(r)
    if project is not None:
        z = project(z)
    rz = float(r @ z)
    if rz < 0:
        raise IndefiniteOperatorError(f"preconditioner is not positive semidefinite: r^T M r = {rz:.3e}")
    res0 = np.sqrt(rz)
    history = [res0]
    alphas, betas = [], []
    converged = res0 == 0.0
    p = z.copy()
    it = 0
    while not converged and it < maxit:
        Ap = op_apply(p)
        pAp = float(p @ Ap)
        if pAp <= 0:
            raise IndefiniteOperatorError(f"non-positive curvature p^T A p = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        it += 1
        if check is not None:
            check(x, it)
        z = precond_apply(r)
        if project is not None:
            z = project(z)
        rz_new = float(r @ z)
        if rz_new < 0:
            raise IndefiniteOperatorError(f"preconditioner is not positive semidefinite: r^T M r = {rz_new:.3e}")
        alphas.append(alpha)
        res = np.sqrt(rz_new)
        history.append(res)
        if res <= tol * res0:
            converged = True
            break
        beta = rz_new / rz
        betas.append(beta)
        p = z + beta * p
        rz = rz_new
    return SolveReport(
        solution=x,
        iterations=it,
        converged=converged,
        residual_history=history,
        kappa_estimate=lanczos_kappa(alphas, betas),
        alphas=alphas,
        betas=betas,
    )


def pcg(op_apply, precond_apply, rhs, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, x0=None):
    """Solve A x = rhs by PCG; stops when sqrt(r^T M r) <= tol * initial value."""
    rhs = np.asarray(rhs, dtype=float)
    x = np.zeros_like(rhs) if x0 is None else np.asarray(x0, dtype=float).copy()
    r = rhs - op_apply(x) if x0 is not None else rhs.copy()
    return _cg_loop(op_apply, precond_apply, x, r, tol, maxit)


def projected_pcg(system, tol=DEFAULT_TOL, maxit=DEFAULT_MAXIT, drift_tol=1e-6):
    """FETI-1 iteration on P^T F P lambda = P^T B S^+ f starting from lambda_0.

    Search directions and preconditioned residuals are re-projected by P every
    step so that G^T lambda_k = Z^T f holds throughout. Returns a report whose
    ``solution`` is the final multiplier vector.
    """
    lam0 = system.lambda0.copy()
    r0 = system.rhs()
    scale = float(np.linalg.norm(system.Ztf)) + 1.0

    def check(lam_delta, it):
        drift = system.constraint_residual(lam0 + lam_delta)
        if drift > drift_tol * scale:
            raise ProjectionDriftError(f"|G^T lambda - Z^T f| = {drift:.3e} at iteration {it}")

    def op(x):
        return system.Pt_apply(system.F_apply(system.P_apply(x)))

    report = _cg_loop(
        op,
        lambda v: system.M_apply(v),
        np.zeros_like(lam0),
        r0,
        tol,
        maxit,
        project=system.P_apply,
        check=check,
    )
    report.solution = lam0 + report.solution
    return report
