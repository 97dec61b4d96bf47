# A 1D bar on (0, 2) cut into two substructures of two elements each.
# Every operator here is a scalar or a 2-vector, so the numbers can be
# checked by hand.
import numpy as np

from substructuring import Laboratory, build_operators
from substructuring.model_problem import build_bar_problem

bar = build_bar_problem()
for sub in bar.subs:
    print(f"substructure {sub.id}: S = {sub.S.ravel()}, floating = {sub.Z.shape[1] > 0}")

ops = build_operators(bar)
print("R  =", ops.R.ravel())
print("B  =", ops.B.ravel())
print("E  =", ops.E.ravel())
print("BD =", ops.B_D.ravel())
print("S_hat =", ops.S_hat.ravel())  # S_1 + S_2 = 1 + 0

# The right substructure floats, so it has one rigid mode. G = B Z picks it up.
print("G =", ops.G.ravel(), " C =", ops.C.ravel())

# With r = 1 every method returns u = 1.
lab = Laboratory(bar)
for method in ("feti1", "pfeti1", "bdd", "fetidp", "pfetidp", "bddc"):
    u, rep = lab.solve(method, r=np.array([1.0]))
    print(f"{method:8s} u = {u[0]:.3f}  iterations = {rep.iterations}")
