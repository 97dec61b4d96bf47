"""Primal and dual substructuring preconditioners (FETI-1, BDD, FETI-DP, BDDC and
the primal FETI variants) on a 2D Laplace model problem, with numerical checks of
their algebraic equivalences and spectral relations."""

from .experiment import METHODS, Laboratory, run_experiment, sweep
from .krylov import SolveReport, pcg, projected_pcg
from .linalg import EigDecomp, pseudo_inverse_apply, spd_solve, sym_eig
from .model_problem import (
    ProblemConfig,
    assemble_global,
    assemble_substructure,
    build_bar_problem,
    build_problem,
    checkerboard,
    nullspace_basis,
    schur_reduce,
)
from .operators import build_coarse_split, build_operators, verify_algebra
from .preconditioners import BDD, BDDC, FetiDP, PFeti1, PFetiDP, feti1_build, recover_primal
from .spectral import dual_spectrum, identity_suite, primal_spectrum, spectra_match

__version__ = "0.1.0"
