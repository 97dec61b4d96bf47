# BDDC built from constrained local solves against the primal form of
# FETI-DP built by block elimination. The two code paths share nothing
# beyond the substructure matrices.
from substructuring import Laboratory, ProblemConfig
from substructuring.experiment import rel_frobenius

lab = Laboratory(ProblemConfig((4, 4), 4))
split = lab.split
print(f"{len(split.corner_dofs)} coarse (corner) dofs")

bddc = lab.preconditioner("bddc")
Psi = bddc.basis.Psi
print("coarse basis shape", Psi.shape)
print("Psi^T S Psi vs eliminated coarse matrix:", f"{rel_frobenius(bddc.basis.coarse_gram, split.S_cc_star):.1e}")
print("M_bddc vs M_pfetidp:", f"{rel_frobenius(bddc.dense(), lab.dense_preconditioner('pfetidp')):.1e}")

for method in ("fetidp", "bddc"):
    _, rep = lab.solve(method)
    print(f"{method:7s} {rep.iterations} iterations, Lanczos kappa {rep.kappa_estimate:.3f}")
