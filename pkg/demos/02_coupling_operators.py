# The structural identities between the interface operators on a 4x4
# checkerboard of substructures.
import numpy as np

from substructuring import ProblemConfig, build_operators, build_problem, verify_algebra
from substructuring.model_problem import checkerboard

config = ProblemConfig((4, 4), 4, coefficient=checkerboard((4, 4), 1.0, 1e3))
problem = build_problem(config)
print(f"{problem.imap.n_global} interface dofs, {len(problem.subs)} substructures")

for scaling in ("multiplicity", "stiffness"):
    ops = build_operators(problem, scaling)
    print(f"\n{scaling}: dim W = {ops.dim_w}, multipliers = {ops.dim_lambda}, rigid modes = {ops.Z.shape[1]}")
    for name, value in verify_algebra(ops).residuals.items():
        print(f"  {name:12s} {value:.1e}")

# Averaging a jump-free vector gives it back; the jump of R u vanishes.
u = np.random.default_rng(0).standard_normal(ops.S_hat.shape[0])
w = ops.R @ u
print("\n|B R u| =", np.abs(ops.B @ w).max(), " |E R u - u| =", np.abs(ops.E @ w - u).max())
