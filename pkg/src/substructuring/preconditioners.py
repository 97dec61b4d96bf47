"""FETI-1, P-FETI-1, BDD, FETI-DP, P-FETI-DP and BDDC.

All preconditioners are applied by composing cached factorizations; a dense
matrix is only formed on request (``dense()``), for diagnostics and for the
equivalence checks. BDDC and P-FETI-DP are deliberately separate code paths:
BDDC builds its coarse basis from constrained local energy minimizations,
P-FETI-DP uses the block elimination on the corner/remainder split.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .linalg import (
    NotSPDError,
    SingularOperatorError,
    SPDFactor,
    assemble_dense,
    pseudo_inverse_apply,
    sym_eig,
)

Q_CHOICES = ("identity", "dirichlet")


class LocalPseudoInverse:
    """Block-diagonal S^+ built from per-substructure eigendecompositions."""

    def __init__(self, ops):
        self.offsets = ops.offsets
        self.eigs = [sym_eig(S) for S in ops.S_blocks]

    def __call__(self, w):
        out = np.zeros_like(w, dtype=float)
        for k, eig in enumerate(self.eigs):
            a, b = self.offsets[k], self.offsets[k + 1]
            out[a:b] = pseudo_inverse_apply(eig, w[a:b])
        return out


class Feti1System:
    """Projected dual system P^T F P lambda = P^T B S^+ f of FETI-1.

    ``q`` selects the scaling of the natural coarse projection: ``identity`` or
    ``dirichlet`` (Q = B_D S B_D^T). The preconditioner is always the Dirichlet
    one, B_D S B_D^T. Build through ``feti1_build``.
    """

    def __init__(self, ops, q, f):
        if q not in Q_CHOICES:
            raise ValueError(f"Q choice must be one of {Q_CHOICES}, got {q!r}")
        self.ops = ops
        self.q = q
        self.f = np.asarray(f, dtype=float)
        self.S_pinv = LocalPseudoInverse(ops)
        B, G = ops.B, ops.G
        n_lam = B.shape[0]
        if q == "identity":
            self.Q = np.eye(n_lam)
        else:
            self.Q = ops.B_D @ ops.S_dense() @ ops.B_D.T
        self.QG = self.Q @ G
        GtQG = G.T @ self.QG
        try:
            self._coarse = SPDFactor(0.5 * (GtQG + GtQG.T), "G^T Q G")
        except NotSPDError as exc:
            raise SingularOperatorError(f"G^T Q G is singular for Q={q!r}: {exc}") from exc
        self.GtQG = GtQG
        self.d = B @ self.S_pinv(self.f)
        self.Ztf = ops.Z.T @ self.f
        self.lambda0 = self.QG @ self._coarse.solve(self.Ztf)

    @property
    def n_lambda(self):
        return self.ops.B.shape[0]

    def F_apply(self, lam):
        B = self.ops.B
        return B @ self.S_pinv(B.T @ lam)

    def M_apply(self, mu):
        """Dirichlet preconditioner B_D S B_D^T."""
        ops = self.ops
        return ops.B_D @ ops.S_apply(ops.B_D.T @ mu)

    def P_apply(self, lam):
        """P = I - Q G (G^T Q G)^{-1} G^T."""
        return lam - self.QG @ self._coarse.solve(self.ops.G.T @ lam)

    def Pt_apply(self, lam):
        return lam - self.ops.G @ self._coarse.solve(self.QG.T @ lam)

    def H_apply(self, w):
        """H = I - B^T Q G (G^T Q G)^{-1} Z^T on W."""
        return w - self.ops.B.T @ (self.QG @ self._coarse.solve(self.ops.Z.T @ w))

    def Ht_apply(self, w):
        return w - self.ops.Z @ self._coarse.solve(self.QG.T @ (self.ops.B @ w))

    def rhs(self):
        """P^T (B S^+ f - F lambda0), the right-hand side seen by the iteration."""
        return self.Pt_apply(self.d - self.F_apply(self.lambda0))

    def constraint_residual(self, lam):
        return float(np.linalg.norm(self.ops.G.T @ lam - self.Ztf))

    def coarse_amplitudes(self, lam):
        """a = (G^T Q G)^{-1} G^T Q (F lambda - B S^+ f)."""
        return self._coarse.solve(self.QG.T @ (self.F_apply(lam) - self.d))

    def dense(self, name):
        n_lam, dim_w = self.n_lambda, self.ops.dim_w
        maps = {
            "F": (self.F_apply, n_lam),
            "M": (self.M_apply, n_lam),
            "P": (self.P_apply, n_lam),
            "H": (self.H_apply, dim_w),
            "S_tilde_pinv": (lambda w: self.Ht_apply(self.S_pinv(self.H_apply(w))), dim_w),
        }
        if name == "PtFP":
            A = assemble_dense(lambda x: self.Pt_apply(self.F_apply(self.P_apply(x))), n_lam)
            return 0.5 * (A + A.T)
        apply, n = maps[name]
        return assemble_dense(apply, n)


def feti1_build(ops, q="dirichlet", f=None):
    """Set up FETI-1 for the broken load f (default: E^T r for the configured rhs)."""
    if f is None:
        f = ops.E.T @ ops.problem.interface_rhs()
    return Feti1System(ops, q, f)


class CoarseCompatibilityError(RuntimeError):
    """Multipliers violate Z^T (f - B^T lambda) = 0."""


def recover_primal(system, lam, tol=1e-8):
    """Primal solution w = S^+(f - B^T lambda) + Z a and averaged u = E w."""
    ops = system.ops
    resid = ops.Z.T @ (system.f - ops.B.T @ lam)
    scale = max(1.0, float(np.linalg.norm(system.f)))
    if resid.size and np.linalg.norm(resid) > tol * scale:
        raise CoarseCompatibilityError(
            f"coarse compatibility violated: |Z^T(f - B^T lambda)| = {np.linalg.norm(resid):.3e}"
        )
    a = system.coarse_amplitudes(lam)
    w = system.S_pinv(system.f - ops.B.T @ lam) + ops.Z @ a
    return w, ops.E @ w


class PFeti1:
    """Primal FETI-1 preconditioner E H^T S^+ H E^T on W_hat."""

    def __init__(self, system):
        self.system = system
        self.n = system.ops.R.shape[1]

    def apply(self, r):
        s, E = self.system, self.system.ops.E
        return E @ s.Ht_apply(s.S_pinv(s.H_apply(E.T @ r)))

    __call__ = apply

    def dense(self):
        return assemble_dense(self.apply, self.n)


def pfeti1_apply(system, r):
    return PFeti1(system).apply(r)


class BDD:
    """Balancing Neumann-Neumann preconditioner P_C E S^+ E^T P_C^T + S_C."""

    def __init__(self, ops):
        self.ops = ops
        self.n = ops.S_hat.shape[0]
        self.S_pinv = LocalPseudoInverse(ops)
        C = ops.C
        CtSC = C.T @ ops.S_hat @ C
        try:
            self._coarse = SPDFactor(0.5 * (CtSC + CtSC.T), "C^T S_hat C")
        except NotSPDError as exc:
            raise SingularOperatorError(f"BDD coarse matrix is singular: {exc}") from exc

    def S_C(self, r):
        C = self.ops.C
        return C @ self._coarse.solve(C.T @ r)

    def apply(self, r):
        ops = self.ops
        s = self.S_C(r)
        v = r - ops.S_hat @ s  # P_C^T r
        y = ops.E @ self.S_pinv(ops.E.T @ v)
        return y - self.S_C(ops.S_hat @ y) + s

    __call__ = apply

    def dense(self):
        return assemble_dense(self.apply, self.n)


def bdd_apply(ops, r):
    return BDD(ops).apply(r)


class FetiDP:
    """FETI-DP dual operator B S~^{-1} B^T and Dirichlet preconditioner B_D S~ B_D^T.

    Multipliers are the rows of B whose dof is not coarse; they only touch the
    remaining (r) dofs, so S~^{-1} acts on W~ = (u_r, u_c) through the block
    elimination with S_rr and S~*_cc.
    """

    def __init__(self, ops, split):
        self.ops = ops
        self.split = split
        coarse = set(int(g) for g in split.corner_dofs)
        keep = np.array([int(g) not in coarse for g in ops.B_rows[:, 0]], dtype=bool)
        self.rows = np.flatnonzero(keep)
        self.B_r = ops.B[np.ix_(self.rows, split.r_slots)]
        self.B_D_r = ops.B_D[np.ix_(self.rows, split.r_slots)]
        if ops.B[np.ix_(self.rows, split.c_slots)].any():
            raise AssertionError("kept multipliers must not touch coarse dofs")

    @property
    def n_lambda(self):
        return self.rows.size

    def S_tilde_solve(self, f_r, f_c):
        sp = self.split
        y = sp.solve_rr(f_r)
        u_c = sp.S_cc_star_factor.solve(f_c - sp.apply_rc_t(y))
        u_r = sp.solve_rr(f_r - sp.apply_rc(u_c))
        return u_r, u_c

    def S_tilde_apply(self, u_r, u_c):
        sp = self.split
        return sp.apply_rr(u_r) + sp.apply_rc(u_c), sp.apply_rc_t(u_r) + sp.S_cc_tilde @ u_c

    def F_apply(self, lam):
        u_r, _ = self.S_tilde_solve(self.B_r.T @ lam, np.zeros(self.split.n_coarse))
        return self.B_r @ u_r

    def M_apply(self, mu):
        v_r, _ = self.S_tilde_apply(self.B_D_r.T @ mu, np.zeros(self.split.n_coarse))
        return self.B_D_r @ v_r

    def loads(self, r):
        sp = self.split
        return sp.E_r.T @ r, sp.E_c.T @ r

    def rhs(self, r):
        f_r, f_c = self.loads(r)
        u_r, _ = self.S_tilde_solve(f_r, f_c)
        return self.B_r @ u_r

    def recover(self, lam, r):
        """Averaged primal solution u = E_r u_r + E_c u_c for multipliers lam."""
        f_r, f_c = self.loads(r)
        u_r, u_c = self.S_tilde_solve(f_r - self.B_r.T @ lam, f_c)
        return self.split.E_r @ u_r + self.split.E_c @ u_c

    def dense(self, name):
        apply = {"F": self.F_apply, "M": self.M_apply}[name]
        A = assemble_dense(apply, self.n_lambda)
        return A


def fetidp_build(ops, split):
    return FetiDP(ops, split)


class PFetiDP:
    """Primal FETI-DP preconditioner by block elimination:

    E_r S_rr^{-1} E_r^T + (E_c - E_r S_rr^{-1} S_rc R_c) S~*_cc^{-1} (...)^T
    """

    def __init__(self, ops, split):
        self.split = split
        self.n = ops.S_hat.shape[0]

    def apply(self, r):
        sp = self.split
        f_r, f_c = sp.E_r.T @ r, sp.E_c.T @ r
        y = sp.solve_rr(f_r)
        u_c = sp.S_cc_star_factor.solve(f_c - sp.apply_rc_t(y))
        return sp.E_r @ y + sp.E_c @ u_c - sp.E_r @ sp.solve_rr(sp.apply_rc(u_c))

    __call__ = apply

    def dense(self):
        return assemble_dense(self.apply, self.n)


def pfetidp_apply(ops, split, r):
    return PFetiDP(ops, split).apply(r)


@dataclass(frozen=True)
class CoarseBasis:
    Psi: np.ndarray  # dim W x n_coarse
    coarse_gram: np.ndarray  # Psi^T S Psi


class BDDC:
    """BDDC with corner constraints, M = T_sub + E Psi (Psi^T S Psi)^{-1} Psi^T E^T.

    Each substructure factors the constrained Neumann matrix
    [[S_i, C_i^T], [C_i, 0]] (C_i selects its coarse dofs). The coarse basis
    Psi_i solves it with the coarse values prescribed; the substructure
    correction solves it with coarse values held at zero.
    """

    def __init__(self, ops, corners):
        self.ops = ops
        self.n = ops.S_hat.shape[0]
        corners = np.asarray(corners, dtype=int)
        coarse_index = {int(g): k for k, g in enumerate(corners)}
        n_c = corners.size
        self.n_coarse = n_c
        self._kkt = []
        Psi = np.zeros((ops.dim_w, n_c))
        for s in ops.problem.subs:
            c_local = [p for p, g in enumerate(s.iface) if int(g) in coarse_index]
            n_i, k_i = s.n_iface, len(c_local)
            Ci = np.zeros((k_i, n_i))
            Ci[np.arange(k_i), c_local] = 1.0
            kkt = np.block([[s.S, Ci.T], [Ci, np.zeros((k_i, k_i))]])
            try:
                lu = sla.lu_factor(kkt, check_finite=True)
            except (np.linalg.LinAlgError, ValueError) as exc:
                raise SingularOperatorError(f"constrained Neumann matrix of substructure {s.id}: {exc}") from exc
            piv = np.abs(np.diag(lu[0]))
            if piv.size and piv.min() <= 1e-12 * piv.max():
                raise SingularOperatorError(
                    f"constrained Neumann matrix of substructure {s.id} is singular (no coarse dof?)"
                )
            self._kkt.append((lu, n_i, k_i))
            if k_i:
                rhs = np.zeros((n_i + k_i, n_c))
                rhs[n_i + np.arange(k_i), [coarse_index[int(s.iface[p])] for p in c_local]] = 1.0
                a = ops.offsets[s.id]
                Psi[a : a + n_i] = sla.lu_solve(lu, rhs)[:n_i]
        gram = Psi.T @ ops.S_apply(Psi)
        gram = 0.5 * (gram + gram.T)
        try:
            self._coarse = SPDFactor(gram, "Psi^T S Psi")
        except NotSPDError as exc:
            raise SingularOperatorError(f"BDDC coarse matrix is singular: {exc}") from exc
        self.basis = CoarseBasis(Psi, gram)

    def substructure_correction(self, r):
        ops = self.ops
        g = ops.E.T @ r
        w = np.zeros(ops.dim_w)
        for k, (lu, n_i, k_i) in enumerate(self._kkt):
            a = ops.offsets[k]
            rhs = np.concatenate([g[a : a + n_i], np.zeros(k_i)])
            w[a : a + n_i] = sla.lu_solve(lu, rhs)[:n_i]
        return ops.E @ w

    def coarse_correction(self, r):
        E, Psi = self.ops.E, self.basis.Psi
        return E @ (Psi @ self._coarse.solve(Psi.T @ (E.T @ r)))

    def apply(self, r):
        return self.substructure_correction(r) + self.coarse_correction(r)

    __call__ = apply

    def dense(self):
        return assemble_dense(self.apply, self.n)


def bddc_build(ops, corners):
    return BDDC(ops, corners)
