"""Global substructuring algebra.

Broken interface space W stacks the substructure interface vectors; the
continuous space W_hat is indexed by global interface dofs. This module builds
the embedding R, the jump matrix B (fully redundant at crosspoints), the
weights D_P with averaging E = R^T D_P, the scaled jump B_D, the natural coarse
space (Z, G = BZ, C = EZ), the assembled Schur complement S_hat = R^T S R and
the corner/remainder split used by FETI-DP and BDDC.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .linalg import NotSPDError, SingularOperatorError, SPDFactor

SCALINGS = ("multiplicity", "stiffness")


@dataclass(frozen=True)
class CouplingOperators:
    """Dense coupling operators of one problem (immutable after construction)."""

    problem: object
    scaling: str
    offsets: np.ndarray
    R: np.ndarray
    B: np.ndarray
    B_rows: np.ndarray  # (dof, sub_i, sub_j) for every row of B, sub_i < sub_j
    D_P: np.ndarray  # diagonal of the weight matrix on W
    E: np.ndarray
    B_D: np.ndarray
    Z: np.ndarray
    G: np.ndarray
    C: np.ndarray
    S_hat: np.ndarray

    @property
    def S_blocks(self):
        return [s.S for s in self.problem.subs]

    @property
    def dim_w(self):
        return self.R.shape[0]

    @property
    def dim_lambda(self):
        return self.B.shape[0]

    def S_dense(self):
        return sla.block_diag(*self.S_blocks) if self.S_blocks else np.zeros((0, 0))

    def S_apply(self, w):
        out = np.empty_like(w, dtype=float)
        for k, S in enumerate(self.S_blocks):
            a, b = self.offsets[k], self.offsets[k + 1]
            out[a:b] = S @ w[a:b]
        return out


def build_embedding_and_jump(imap, offsets):
    """Embedding R (dim W x dim W_hat) and fully redundant signed jump matrix B.

    One row of B per unordered pair of sharers of every dof: +1 on the lower
    substructure id, -1 on the higher. Returns ``(R, B, rows)`` where ``rows``
    lists (dof, i, j) per row.
    """
    dim_w = int(offsets[-1])
    R = np.zeros((dim_w, imap.n_global))
    rows = []
    for g, sharers in enumerate(imap.sharers):
        for sid, loc in sharers:
            R[offsets[sid] + loc, g] = 1.0
        for a in range(len(sharers)):
            for b in range(a + 1, len(sharers)):
                rows.append((g, sharers[a], sharers[b]))
    B = np.zeros((len(rows), dim_w))
    for k, (g, (i, li), (j, lj)) in enumerate(rows):
        B[k, offsets[i] + li] = 1.0
        B[k, offsets[j] + lj] = -1.0
    row_info = np.array([(g, i, j) for g, (i, _), (j, _) in rows], dtype=int).reshape(-1, 3)
    return R, B, row_info


def build_scalings(imap, S_blocks, offsets, mode="multiplicity"):
    """Weights D_P (diagonal on W), averaging E = R^T D_P and scaled jump B_D.

    ``multiplicity``: 1 / (number of sharers). ``stiffness``: diag(S_i) at the
    dof divided by its sum over sharers. In B_D the entry of substructure i in
    the row pairing (i, j) is scaled by the weight of j at that dof, which
    makes B_D^T B + R E = I.
    """
    if mode not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}, got {mode!r}")
    dim_w = int(offsets[-1])
    dp = np.zeros(dim_w)
    for g, sharers in enumerate(imap.sharers):
        slots = [offsets[sid] + loc for sid, loc in sharers]
        if mode == "multiplicity":
            dp[slots] = 1.0 / len(sharers)
        else:
            d = np.array([S_blocks[sid][loc, loc] for sid, loc in sharers])
            total = d.sum()
            if not total > 0:
                raise ValueError(f"stiffness weights at interface dof {g} sum to {total}")
            dp[slots] = d / total
    R, B, rows = build_embedding_and_jump(imap, offsets)
    E = R.T * dp
    B_D = np.zeros_like(B)
    for k in range(B.shape[0]):
        plus, minus = np.flatnonzero(B[k] > 0)[0], np.flatnonzero(B[k] < 0)[0]
        B_D[k, plus] = dp[minus]
        B_D[k, minus] = -dp[plus]
    return dp, E, B_D


def assemble_global_schur(R, S):
    """S_hat = R^T S R; raises ``NotSPDError`` if not positive definite."""
    S_hat = R.T @ S @ R
    S_hat = 0.5 * (S_hat + S_hat.T)
    try:
        SPDFactor(S_hat, "assembled Schur complement")
    except NotSPDError as exc:
        raise NotSPDError(f"{exc} (insufficient Dirichlet boundary?)") from exc
    return S_hat


def build_natural_coarse(B, E, Z_blocks):
    """Block-diagonal nullspace stack Z with G = B Z and C = E Z."""
    Z = sla.block_diag(*Z_blocks) if Z_blocks else np.zeros((0, 0))
    dim_w = sum(z.shape[0] for z in Z_blocks)
    Z = Z.reshape(dim_w, -1)
    return Z, B @ Z, E @ Z


def build_operators(problem, scaling="multiplicity"):
    offsets = problem.offsets
    S_blocks = [s.S for s in problem.subs]
    R, B, rows = build_embedding_and_jump(problem.imap, offsets)
    dp, E, B_D = build_scalings(problem.imap, S_blocks, offsets, scaling)
    Z, G, C = build_natural_coarse(B, E, [s.Z for s in problem.subs])
    S = sla.block_diag(*S_blocks)
    S_hat = assemble_global_schur(R, S)
    return CouplingOperators(
        problem=problem,
        scaling=scaling,
        offsets=offsets,
        R=R,
        B=B,
        B_rows=rows,
        D_P=dp,
        E=E,
        B_D=B_D,
        Z=Z,
        G=G,
        C=C,
        S_hat=S_hat,
    )


@dataclass(frozen=True)
class AlgebraReport:
    residuals: dict
    tol: float

    @property
    def passed(self):
        return all(v <= self.tol for v in self.residuals.values())


def verify_algebra(ops, tol=1e-12):
    """Max-norm residuals of BR = 0, ER = I, B_D^T B + RE = I and B^T B_D E^T = 0."""
    def maxabs(A):
        return float(np.abs(A).max()) if A.size else 0.0

    I_w = np.eye(ops.dim_w)
    res = {
        "BR": maxabs(ops.B @ ops.R),
        "ER-I": maxabs(ops.E @ ops.R - np.eye(ops.R.shape[1])),
        "BDtB+RE-I": maxabs(ops.B_D.T @ ops.B + ops.R @ ops.E - I_w),
        "BtBDEt": maxabs(ops.B.T @ ops.B_D @ ops.E.T),
    }
    return AlgebraReport(res, tol)


@dataclass(frozen=True)
class LocalSplit:
    """Corner/remainder partition of one substructure's interface."""

    c: np.ndarray  # local positions of coarse dofs
    r: np.ndarray  # local positions of remaining dofs
    Rc: np.ndarray  # (len(c) x n_coarse) 0/1 map from global coarse dofs
    S_cc: np.ndarray
    S_rc: np.ndarray
    S_rr: np.ndarray
    S_rr_factor: SPDFactor


@dataclass(frozen=True)
class CoarseSplit:
    """FETI-DP/BDDC split of W into coarse (c) and remaining (r) dofs."""

    corner_dofs: np.ndarray  # global interface dofs that are coarse
    locals: tuple
    c_slots: np.ndarray  # positions in W of local coarse dofs, substructure order
    r_slots: np.ndarray  # positions in W of remaining dofs, substructure order
    r_offsets: np.ndarray
    Rc: np.ndarray  # stacked R_c^(i): (len(c_slots) x n_coarse)
    S_cc_tilde: np.ndarray
    S_cc_star: np.ndarray
    S_cc_star_factor: SPDFactor
    E_r: np.ndarray
    E_c: np.ndarray

    @property
    def n_coarse(self):
        return self.corner_dofs.size

    @property
    def dim_r(self):
        return self.r_slots.size

    def solve_rr(self, v):
        """Apply the block-diagonal S_rr^{-1} to a vector (or block) on the r-dofs."""
        out = np.empty_like(v, dtype=float)
        for k, loc in enumerate(self.locals):
            a, b = self.r_offsets[k], self.r_offsets[k + 1]
            out[a:b] = loc.S_rr_factor.solve(v[a:b])
        return out

    def apply_rr(self, v):
        out = np.empty_like(v, dtype=float)
        for k, loc in enumerate(self.locals):
            a, b = self.r_offsets[k], self.r_offsets[k + 1]
            out[a:b] = loc.S_rr @ v[a:b]
        return out

    def apply_rc(self, uc):
        """S_rc R_c u_c, stacked over substructures."""
        parts = [loc.S_rc @ (loc.Rc @ uc) for loc in self.locals]
        return np.concatenate(parts) if parts else np.zeros(0)

    def apply_rc_t(self, vr):
        """R_c^T S_rc^T v_r."""
        out = np.zeros(self.n_coarse)
        for k, loc in enumerate(self.locals):
            a, b = self.r_offsets[k], self.r_offsets[k + 1]
            out += loc.Rc.T @ (loc.S_rc.T @ vr[a:b])
        return out

    def S_rr_dense(self):
        return sla.block_diag(*[loc.S_rr for loc in self.locals])


def corner_dofs(imap):
    """Corner rule: interface dofs that are vertices of substructure boxes."""
    return np.flatnonzero(imap.is_vertex)


def build_coarse_split(problem, E, corners=None):
    """Permute each S_i into coarse/remaining blocks and form S~_cc and S~*_cc."""
    imap = problem.imap
    if corners is None:
        corners = corner_dofs(imap)
    corners = np.asarray(corners, dtype=int)
    coarse_index = {int(g): k for k, g in enumerate(corners)}
    n_c = corners.size
    offsets = problem.offsets
    locals_, c_slots, r_slots, r_sizes, Rc_rows = [], [], [], [], []
    S_cc_tilde = np.zeros((n_c, n_c))
    schur_corr = np.zeros((n_c, n_c))
    for s in problem.subs:
        is_c = np.array([int(g) in coarse_index for g in s.iface], dtype=bool)
        c, r = np.flatnonzero(is_c), np.flatnonzero(~is_c)
        Rc = np.zeros((c.size, n_c))
        Rc[np.arange(c.size), [coarse_index[int(g)] for g in s.iface[c]]] = 1.0
        S_rr = s.S[np.ix_(r, r)]
        try:
            fac = SPDFactor(S_rr, f"S_rr of substructure {s.id}")
        except NotSPDError as exc:
            raise SingularOperatorError(
                f"{exc}; a floating substructure needs at least one coarse dof"
            ) from exc
        S_rc = s.S[np.ix_(r, c)]
        S_cc = s.S[np.ix_(c, c)]
        S_cc_tilde += Rc.T @ S_cc @ Rc
        SrcRc = S_rc @ Rc
        schur_corr += SrcRc.T @ fac.solve(SrcRc)
        locals_.append(LocalSplit(c, r, Rc, S_cc, S_rc, S_rr, fac))
        c_slots.extend(offsets[s.id] + c)
        r_slots.extend(offsets[s.id] + r)
        r_sizes.append(r.size)
        Rc_rows.append(Rc)
    S_cc_star = S_cc_tilde - schur_corr
    S_cc_star = 0.5 * (S_cc_star + S_cc_star.T)
    try:
        star_fac = SPDFactor(S_cc_star, "coarse matrix S~*_cc")
    except NotSPDError as exc:
        raise SingularOperatorError(str(exc)) from exc
    c_slots = np.array(c_slots, dtype=int)
    r_slots = np.array(r_slots, dtype=int)
    Rc_all = np.vstack(Rc_rows) if Rc_rows else np.zeros((0, n_c))
    return CoarseSplit(
        corner_dofs=corners,
        locals=tuple(locals_),
        c_slots=c_slots,
        r_slots=r_slots,
        r_offsets=np.concatenate([[0], np.cumsum(r_sizes)]).astype(int),
        Rc=Rc_all,
        S_cc_tilde=S_cc_tilde,
        S_cc_star=S_cc_star,
        S_cc_star_factor=star_fac,
        E_r=E[:, r_slots],
        E_c=E[:, c_slots] @ Rc_all,
    )
