# The projected FETI-1 preconditioner with the Dirichlet choice of Q is the
# BDD preconditioner. With Q = I it is a different operator.
import numpy as np

from substructuring import Laboratory, ProblemConfig
from substructuring.experiment import rel_frobenius

lab = Laboratory(ProblemConfig((3, 3), 4))
m_bdd = lab.dense_preconditioner("bdd")
for q in ("dirichlet", "identity"):
    other = Laboratory(lab.problem, q=q)
    diff = rel_frobenius(other.dense_preconditioner("pfeti1"), m_bdd)
    print(f"Q = {q:9s}  |M_pfeti1 - M_bdd| / |M_bdd| = {diff:.2e}")

# Both iterations land on the same interface solution.
ref = lab.direct_solution
for method in ("feti1", "bdd"):
    u, rep = lab.solve(method)
    err = np.linalg.norm(u - ref) / np.linalg.norm(ref)
    print(f"{method:6s} {rep.iterations:2d} iterations, error vs direct {err:.1e}")
