# A checkerboard of coefficients 1 and 1e6. Stiffness scaling keeps BDDC
# insensitive to the jump; multiplicity scaling does not.
from substructuring import Laboratory, ProblemConfig
from substructuring.model_problem import checkerboard

grid, n = (4, 4), 4
uniform = Laboratory(ProblemConfig(grid, n)).bddc_condition_number()
print(f"uniform coefficient: kappa = {uniform:.3f}")
for rho in (1e2, 1e4, 1e6):
    config = ProblemConfig(grid, n, coefficient=checkerboard(grid, 1.0, rho))
    for scaling in ("multiplicity", "stiffness"):
        k = Laboratory(config, scaling=scaling).bddc_condition_number()
        print(f"rho = {rho:.0e}  {scaling:12s} kappa = {k:.4g}")
