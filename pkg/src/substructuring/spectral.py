"""Spectra of preconditioned operators and the primal/dual equivalence checks.

Spectra are always computed from symmetric similarity transforms, so they are
real by construction: L^T M L for a primal pair with S_hat = L L^T, and
A^{1/2} M A^{1/2} for a dual pair with PSD operator A.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import SPDFactor, psd_sqrt

ID_TOL = 1e-6
MATCH_TOL = 1e-6
CLUSTER_GAP = 1e-6


def primal_spectrum(M, S_hat):
    """Eigenvalues of M S_hat via the similar symmetric matrix L^T M L."""
    L = SPDFactor(S_hat, "S_hat").lower
    A = L.T @ M @ L
    return np.linalg.eigvalsh(0.5 * (A + A.T))


def dual_spectrum(M, F, P=None):
    """Eigenvalues of M A with A = F, or A = P^T F P when a projection is given."""
    A = F if P is None else P.T @ F @ P
    root = psd_sqrt(0.5 * (A + A.T))
    X = root @ M @ root
    return np.linalg.eigvalsh(0.5 * (X + X.T))


def clusters(values, gap=CLUSTER_GAP):
    """Group sorted values into clusters; returns list of (mean, count)."""
    values = np.sort(np.asarray(values, dtype=float))
    out = []
    start = 0
    for k in range(1, values.size + 1):
        if k == values.size or values[k] - values[k - 1] > gap * max(1.0, abs(values[k])):
            chunk = values[start:k]
            out.append((float(chunk.mean()), int(chunk.size)))
            start = k
    return out


@dataclass(frozen=True)
class SpectrumReport:
    method: str
    eigenvalues: np.ndarray
    excluded_targets: tuple
    id_tol: float = ID_TOL

    @property
    def excluded_mask(self):
        ev = self.eigenvalues
        mask = np.zeros(ev.size, dtype=bool)
        for t in self.excluded_targets:
            mask |= np.abs(ev - t) <= self.id_tol
        return mask

    @property
    def excluded(self):
        return self.eigenvalues[self.excluded_mask]

    @property
    def filtered(self):
        return np.sort(self.eigenvalues[~self.excluded_mask])

    @property
    def multiplicity_table(self):
        return clusters(self.filtered)

    def condition_number(self, zero_tol=1e-8):
        """lambda_max / lambda_min over eigenvalues above zero_tol * lambda_max."""
        ev = self.eigenvalues
        if ev.size == 0 or ev.max() <= 0:
            return 1.0
        nz = ev[ev > zero_tol * ev.max()]
        return float(nz.max() / nz.min())

    def summary(self):
        return {
            "method": self.method,
            "n": int(self.eigenvalues.size),
            "min": float(self.eigenvalues.min()) if self.eigenvalues.size else None,
            "max": float(self.eigenvalues.max()) if self.eigenvalues.size else None,
            "condition_number": self.condition_number(),
            "excluded": {str(t): int(np.sum(np.abs(self.eigenvalues - t) <= self.id_tol)) for t in self.excluded_targets},
        }


def primal_report(method, M, S_hat):
    return SpectrumReport(method, primal_spectrum(M, S_hat), (1.0,))


def dual_report(method, M, F, P=None):
    return SpectrumReport(method, dual_spectrum(M, F, P), (0.0, 1.0))


@dataclass(frozen=True)
class SpectrumMatch:
    primal: str
    dual: str
    matched_pairs: tuple
    orphans_primal: tuple
    orphans_dual: tuple
    max_pair_diff: float
    multiplicities_equal: bool
    tol: float

    @property
    def passed(self):
        return (
            not self.orphans_primal
            and not self.orphans_dual
            and self.multiplicities_equal
            and all(abs(a - b) <= self.tol * max(1.0, abs(a)) for a, b in self.matched_pairs)
        )

    def summary(self):
        return {
            "passed": self.passed,
            "pairs": len(self.matched_pairs),
            "max_pair_diff": self.max_pair_diff,
            "orphans_primal": list(self.orphans_primal),
            "orphans_dual": list(self.orphans_dual),
            "multiplicities_equal": self.multiplicities_equal,
        }


def spectra_match(primal, dual, tol=MATCH_TOL):
    """Compare filtered multisets: sorted values paired in order."""
    a, b = primal.filtered, dual.filtered
    k = min(a.size, b.size)
    pairs = tuple((float(x), float(y)) for x, y in zip(a[:k], b[:k]))
    diff = max((abs(x - y) for x, y in pairs), default=0.0)
    ca, cb = clusters(a), clusters(b)
    mult_equal = len(ca) == len(cb) and all(na == nb for (_, na), (_, nb) in zip(ca, cb))
    return SpectrumMatch(
        primal=primal.method,
        dual=dual.method,
        matched_pairs=pairs,
        orphans_primal=tuple(float(x) for x in a[k:]),
        orphans_dual=tuple(float(x) for x in b[k:]),
        max_pair_diff=float(diff),
        multiplicities_equal=mult_equal,
        tol=tol,
    )


@dataclass(frozen=True)
class IdentityTable:
    residuals: dict
    tol: float

    @property
    def passed(self):
        return all(v <= self.tol for v in self.residuals.values())


def _nrm(A):
    return float(np.linalg.norm(A, 2)) if A.size else 0.0


def _rel(lhs, rhs, *factors):
    scale = 1.0
    for f in factors:
        scale *= _nrm(f)
    diff = _nrm(lhs - rhs)
    if diff == 0.0:
        return 0.0
    return diff / scale if scale > 0 else diff


def identity_suite(system, tol=1e-10):
    """Residuals of the identities linking FETI-1 (Q Dirichlet) and BDD.

    Each residual is ||lhs - rhs||_2 divided by the product of the 2-norms of
    the factors in the lhs.
    """
    ops = system.ops
    S = ops.S_dense()
    R, B, E, B_D, S_hat = ops.R, ops.B, ops.E, ops.B_D, ops.S_hat
    St = system.dense("S_tilde_pinv")
    St = 0.5 * (St + St.T)
    M_feti = B_D @ S @ B_D.T
    F_cal = B @ St @ B.T
    M_bdd = E @ St @ E.T
    KD = M_feti @ F_cal
    KP = M_bdd @ S_hat
    T_D = E @ St @ B.T
    T_P = KD @ B_D @ S @ R
    X = B_D @ S @ St @ B.T
    H = system.dense("H")
    res = {
        "H_projection": _rel(H @ H, H, H, H),
        "St+SR=R": _rel(St @ S @ R, R, St, S, R),
        "St+SSt+=St+": _rel(St @ S @ St, St, St, S, St),
        "BSt+SR=0": _rel(B @ St @ S @ R, 0 * R[: B.shape[0]], B, St, S, R),
        "St+BtBDSSt+Et=0": _rel(St @ B.T @ B_D @ S @ St @ E.T, 0 * E.T, St, B, B_D, S, St, E),
        "T_D_intertwining": _rel(T_D @ KD, KP @ T_D, T_D, KD),
        "T_P_intertwining": _rel(T_P @ KP, KD @ T_P, T_P, KP),
        "BDSSt+Bt_idempotent": _rel(X @ X, X, X, X),
    }
    return IdentityTable(res, tol)


def log_squared_fit(ns, kappas):
    """Per-size constants kappa / (1 + log(1 + n))^2 and their maximum."""
    ns = np.asarray(ns, dtype=float)
    consts = np.asarray(kappas, dtype=float) / (1.0 + np.log1p(ns)) ** 2
    return consts, float(consts.max())
