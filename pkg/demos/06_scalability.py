# Condition number of BDDC as the substructures are refined (n elements per
# side) and as more substructures are added (m x m grid).
import numpy as np

from substructuring import Laboratory, ProblemConfig
from substructuring.spectral import log_squared_fit

ns = [2, 4, 8, 16]
kappas = [Laboratory(ProblemConfig((4, 4), n)).bddc_condition_number() for n in ns]
consts, c = log_squared_fit(ns, kappas)
print(" n   kappa   kappa/(1+log(1+n))^2")
for n, k, q in zip(ns, kappas, consts):
    print(f"{n:2d}  {k:6.3f}  {q:.3f}")
print(f"fitted constant C = {c:.3f}")

# Growth with the number of substructures levels off.
for m in (2, 4, 8):
    k = Laboratory(ProblemConfig((m, m), 4)).bddc_condition_number()
    print(f"m = {m}: kappa = {k:.3f}")
