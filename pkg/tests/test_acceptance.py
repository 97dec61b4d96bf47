"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest -v -s tests/test_acceptance.py`` or as a script
with ``python3 tests/test_acceptance.py``.
"""
import numpy as np

from substructuring import Laboratory, ProblemConfig
from substructuring.experiment import METHODS, kappa_spread, rel_frobenius
from substructuring.model_problem import build_bar_problem, checkerboard
from substructuring.spectral import identity_suite, log_squared_fit, spectra_match

JUMP = 1e6
RESULTS = []  # echoed in the terminal summary by conftest


def record(label, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    RESULTS.append(line)
    print(line)
    return ok


def lab(grid, n, scaling="multiplicity", jump=False, q="dirichlet"):
    coef = checkerboard(grid, 1.0, JUMP) if jump else 1.0
    return Laboratory(ProblemConfig(grid, n, coefficient=coef), scaling=scaling, q=q)


EQUIV_CASES = [
    (grid, n, scaling, jump)
    for grid, n in (((2, 2), 2), ((4, 4), 4))
    for scaling in ("multiplicity", "stiffness")
    for jump in (False, True)
]


def test_c1_algebra():
    ops = lab((4, 4), 4).ops
    inf = lambda A: float(np.linalg.norm(A, np.inf))
    I_w, I_u = np.eye(ops.dim_w), np.eye(ops.S_hat.shape[0])
    br = inf(ops.B @ ops.R)
    er = inf(ops.E @ ops.R - I_u)
    unity = inf(ops.B_D.T @ ops.B + ops.R @ ops.E - I_w)
    bde = inf(ops.B.T @ ops.B_D @ ops.E.T)
    ok = br == 0.0 and er <= 1e-14 and unity <= 1e-12 and bde <= 1e-12
    assert record(
        "C1 algebra (4x4, n=4)", ok,
        f"|BR|={br:.1e} (=0) |ER-I|={er:.1e} (<=1e-14) |BD'B+RE-I|={unity:.1e} (<=1e-12) |B'BDE'|={bde:.1e} (<=1e-12)",
    )


def test_c2_pfeti1_equals_bdd():
    worst, where = 0.0, None
    for grid, n, scaling, jump in EQUIV_CASES:
        L = lab(grid, n, scaling, jump)
        d = rel_frobenius(L.dense_preconditioner("pfeti1"), L.dense_preconditioner("bdd"))
        if d >= worst:
            worst, where = d, (grid, n, scaling, jump)
    assert record("C2 P-FETI-1 = BDD", worst <= 1e-10, f"max rel Frobenius diff {worst:.2e} (<=1e-10) at {where}")


def test_c3_pfetidp_equals_bddc():
    worst_m, worst_g = 0.0, 0.0
    for grid, n, scaling, jump in EQUIV_CASES:
        L = lab(grid, n, scaling, jump)
        worst_m = max(worst_m, rel_frobenius(L.dense_preconditioner("pfetidp"), L.dense_preconditioner("bddc")))
        gram = L.preconditioner("bddc").basis.coarse_gram
        worst_g = max(worst_g, rel_frobenius(gram, L.split.S_cc_star))
    ok = worst_m <= 1e-10 and worst_g <= 1e-10
    assert record("C3 P-FETI-DP = BDDC", ok, f"preconditioner diff {worst_m:.2e}, coarse Gram diff {worst_g:.2e} (<=1e-10)")


def test_c4_spectra_bdd_feti1():
    worst, all_ok = 0.0, True
    for grid in ((2, 2), (4, 4)):
        for n in (2, 4):
            L = lab(grid, n)
            m = spectra_match(L.spectrum("bdd"), L.spectrum("feti1"), tol=1e-6)
            worst = max(worst, m.max_pair_diff)
            all_ok &= m.passed
    assert record("C4 spectra BDD vs FETI-1", all_ok, f"max pair diff {worst:.2e} (<=1e-6), multiplicities equal={all_ok}")


def test_c5_identities():
    worst, where = 0.0, None
    for grid, n in (((2, 2), 2), ((4, 4), 4)):
        for scaling in ("multiplicity", "stiffness"):
            table = identity_suite(lab(grid, n, scaling).feti1(), tol=1e-10)
            key = max(table.residuals, key=table.residuals.get)
            if table.residuals[key] >= worst:
                worst, where = table.residuals[key], (grid, scaling, key)
    assert record("C5 operator identities", worst <= 1e-10, f"max normalized residual {worst:.2e} (<=1e-10) at {where}")


def test_c6_spectra_bddc_fetidp():
    L = lab((4, 4), 4)
    m = spectra_match(L.spectrum("bddc"), L.spectrum("fetidp"), tol=1e-6)
    assert record(
        "C6 spectra BDDC vs FETI-DP (4x4, n=4)", m.passed,
        f"{len(m.matched_pairs)} pairs, max diff {m.max_pair_diff:.2e} (<=1e-6), multiplicities equal={m.multiplicities_equal}",
    )


def test_c7_solver_correctness():
    worst = 0.0
    for L in (lab((2, 2), 2), lab((4, 4), 4), lab((3, 3), 4, "stiffness", jump=True)):
        ref = L.direct_solution
        for method in METHODS:
            u, rep = L.solve(method, tol=1e-10)
            assert rep.converged
            worst = max(worst, float(np.linalg.norm(u - ref) / np.linalg.norm(ref)))
    bar = Laboratory(build_bar_problem())
    bar_u = {m: bar.solve(m, r=np.array([1.0])) for m in METHODS}
    bar_ok = all(np.allclose(u, [1.0], atol=1e-14) for u, _ in bar_u.values())
    one_step = all(bar_u[m][1].iterations <= 1 for m in ("bdd", "bddc"))
    ok = worst <= 1e-6 and bar_ok and one_step
    iters = {m: bar_u[m][1].iterations for m in ("bdd", "bddc")}
    assert record("C7 solver correctness", ok, f"max rel error vs direct {worst:.2e} (<=1e-6); bar r=1 gives u=1: {bar_ok}; bar iterations {iters}")


def test_c8_scalability_shape():
    ns = [2, 4, 8, 16]
    kappas = [lab((4, 4), n).bddc_condition_number() for n in ns]
    consts, c_max = log_squared_fit(ns, kappas)
    bounded = all(k <= c_max * (1 + np.log1p(n)) ** 2 * (1 + 1e-12) for k, n in zip(kappas, ns))
    nonincreasing = bool(np.all(np.diff(consts) <= 1e-12))
    grids = [(2, 2), (4, 4), (8, 8)]
    kappa_m = [lab(g, 4).bddc_condition_number() for g in grids]
    spread = kappa_spread(kappa_m)
    ok = bounded and nonincreasing and spread <= 0.2
    assert record(
        "C8 scalability shape", ok,
        f"kappa(n={ns})={np.round(kappas, 3).tolist()} fit constants {np.round(consts, 3).tolist()} "
        f"(bounded={bounded}, nonincreasing={nonincreasing}); kappa(m=2,4,8)={np.round(kappa_m, 3).tolist()} "
        f"variation max/min-1={spread:.1%} (<=20%)",
    )


def test_c9_jump_robustness():
    worst = 0.0
    for grid, n in (((2, 2), 2), ((4, 4), 4)):
        k_jump = lab(grid, n, "stiffness", jump=True).bddc_condition_number()
        k_unif = lab(grid, n, "stiffness").bddc_condition_number()
        worst = max(worst, k_jump / k_unif)
    assert record("C9 jump robustness", worst <= 2.0, f"max kappa(checkerboard 1/1e6)/kappa(uniform) = {worst:.3f} (<=2)")


if __name__ == "__main__":
    import sys

    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_c") and callable(fn):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
