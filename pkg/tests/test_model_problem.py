import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from substructuring.model_problem import (
    LocalStiffness,
    NullspaceMismatchError,
    ProblemConfig,
    assemble_global,
    assemble_substructure,
    build_bar_problem,
    build_problem,
    checkerboard,
    nullspace_basis,
    q1_element_stiffness,
    schur_reduce,
)
from substructuring.operators import build_operators


def dense_bar_stiffness(nodes, h, drop_first):
    """Oracle: direct dense assembly of 1/h [[1,-1],[-1,1]] elements."""
    n = len(nodes)
    K = np.zeros((n, n))
    for e in range(n - 1):
        K[e, e] += 1 / h
        K[e + 1, e + 1] += 1 / h
        K[e, e + 1] -= 1 / h
        K[e + 1, e] -= 1 / h
    return K[1:, 1:] if drop_first else K


class TestBar:
    def test_substructure_stiffness(self, bar):
        K1 = bar.subs[0].stiffness.K
        np.testing.assert_allclose(K1, [[4.0, -2.0], [-2.0, 2.0]])
        np.testing.assert_allclose(K1, dense_bar_stiffness([0, 0.5, 1.0], 0.5, True))
        np.testing.assert_allclose(bar.subs[1].stiffness.K, dense_bar_stiffness([1.0, 1.5, 2.0], 0.5, False))

    def test_schur_complements(self, bar):
        np.testing.assert_allclose(bar.subs[0].S, [[1.0]], atol=1e-15)
        np.testing.assert_allclose(bar.subs[1].S, [[0.0]], atol=1e-15)

    def test_nullspaces(self, bar):
        assert bar.subs[0].Z.shape == (1, 0)
        np.testing.assert_allclose(bar.subs[1].Z, [[1.0]])

    def test_interface(self, bar):
        assert bar.imap.n_global == 1
        assert bar.imap.multiplicity.tolist() == [2]
        assert bar.imap.sharers == (((0, 0), (1, 0)),)


def test_element_rows_sum_to_zero():
    K = q1_element_stiffness(0.3, 0.7)
    np.testing.assert_allclose(K.sum(axis=1), 0, atol=1e-14)
    np.testing.assert_allclose(K, K.T)
    # square element: the classical 1/6 [4 -1 -1 -2 ...] stencil
    np.testing.assert_allclose(6 * q1_element_stiffness(1.0, 1.0)[0], [4, -1, -1, -2], atol=1e-14)


def test_coefficient_scales_stiffness_exactly():
    base = assemble_substructure(0, ProblemConfig((2, 2), 3))
    ten = assemble_substructure(0, ProblemConfig((2, 2), 3, coefficient=10.0))
    np.testing.assert_array_equal(ten.K, 10 * base.K)


def test_two_by_one_single_element():
    p = build_problem(ProblemConfig((2, 1), 1))
    assert p.n_subs == 2
    assert p.imap.n_global == 2
    assert p.imap.multiplicity.tolist() == [2, 2]


def test_crosspoint_multiplicity_four():
    p = build_problem(ProblemConfig((2, 2), 2))
    centre = np.flatnonzero(np.all(np.isclose(p.imap.coords, 0.5), axis=1))
    assert centre.size == 1
    assert p.imap.multiplicity[centre[0]] == 4
    assert np.all(p.imap.multiplicity >= 2)


def test_floating_count_4x4():
    p = build_problem(ProblemConfig((4, 4), 4))
    floating = [s for s in p.subs if not s.touches_dirichlet]
    assert len(floating) == 12
    assert all(s.Z.shape[1] == 1 for s in floating)
    assert all(s.Z.shape[1] == 0 for s in p.subs if s.touches_dirichlet)


def test_floating_nullspace_is_normalized_constant():
    p = build_problem(ProblemConfig((2, 2), 2))
    for s in p.subs:
        if not s.touches_dirichlet:
            np.testing.assert_allclose(s.Z[:, 0], np.full(s.n_iface, 1 / np.sqrt(s.n_iface)))


def test_nullspace_mismatch_detected():
    with pytest.raises(NullspaceMismatchError):
        nullspace_basis(np.ones((3, 3)), touches_dirichlet=True)
    with pytest.raises(NullspaceMismatchError):
        nullspace_basis(np.eye(3), touches_dirichlet=False)


def test_no_interior_means_no_elimination():
    local = assemble_substructure(4, ProblemConfig((3, 3), 1))
    assert local.interior.size == 0
    S, f = schur_reduce(local)
    np.testing.assert_array_equal(S, local.K[np.ix_(local.interface, local.interface)])


def test_schur_reduce_rejects_bad_interior():
    local = LocalStiffness(np.array([[-1.0, 0.0], [0.0, 1.0]]), np.zeros(2), np.array([0]), np.array([1]))
    with pytest.raises(np.linalg.LinAlgError):
        schur_reduce(local)


@pytest.mark.parametrize(
    "cfg",
    [
        ProblemConfig((2, 2), 2),
        ProblemConfig((3, 2), 3, dirichlet="left-bottom"),
        ProblemConfig((4, 4), 4),
        ProblemConfig((2, 3), 2, dirichlet="all", coefficient=checkerboard((2, 3), 1.0, 100.0)),
    ],
)
def test_schur_invariants(cfg):
    p = build_problem(cfg)
    for s in p.subs:
        nrm = np.abs(s.S).max()
        assert np.abs(s.S - s.S.T).max() <= 1e-13 * nrm
        ev = np.linalg.eigvalsh(s.S)
        assert ev[0] >= -1e-12 * ev[-1]
        if s.Z.size:
            assert np.linalg.norm(s.S @ s.Z) <= 1e-11 * np.linalg.norm(s.S)
            np.testing.assert_allclose(s.Z.T @ s.Z, np.eye(s.Z.shape[1]), atol=1e-14)


@pytest.mark.parametrize("cfg", [ProblemConfig((2, 2), 2), ProblemConfig((3, 2), 2, dirichlet="left-bottom")])
def test_condensed_solution_matches_global_solve(cfg):
    """Oracle: full un-condensed system restricted to the interface."""
    K, g, iface = assemble_global(cfg)
    assert K.shape[0] <= 300
    u_full = np.linalg.solve(K, g)
    p = build_problem(cfg)
    ops = build_operators(p)
    u = np.linalg.solve(ops.S_hat, p.interface_rhs("ones"))
    assert np.linalg.norm(u - u_full[iface]) <= 1e-10 * np.linalg.norm(u_full[iface])


def test_interface_ordering_is_lexicographic_in_y_then_x():
    p = build_problem(ProblemConfig((3, 3), 2))
    keys = [(y, x) for x, y in p.imap.coords]
    assert keys == sorted(keys)


@settings(max_examples=10, deadline=None)
@given(c=st.floats(1e-3, 1e3), n=st.integers(1, 3))
def test_schur_scales_linearly_with_coefficient(c, n):
    base = build_problem(ProblemConfig((2, 2), n))
    scaled = build_problem(ProblemConfig((2, 2), n, coefficient=c))
    for a, b in zip(base.subs, scaled.subs):
        np.testing.assert_allclose(b.S, c * a.S, rtol=1e-12, atol=1e-14 * c * np.abs(a.S).max())


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(sub_grid=(0, 2)),
        dict(elems_per_sub=0),
        dict(coefficient=-1.0),
        dict(dirichlet=frozenset()),
        dict(dirichlet="nowhere"),
        dict(seed_rhs="twos"),
        dict(sub_grid=(2, 2), coefficient=(1.0, 2.0)),
    ],
)
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        ProblemConfig(**kwargs)


def test_single_substructure_rejected():
    with pytest.raises(ValueError):
        build_problem(ProblemConfig((1, 1), 2))


def test_rhs_kinds(lab22):
    p = lab22.problem
    assert not p.interface_rhs("zero").any()
    np.testing.assert_array_equal(p.interface_rhs("random", 3), p.interface_rhs("random", 3))
    ones = p.interface_rhs("ones")
    np.testing.assert_allclose(ones, lab22.ops.R.T @ p.condensed_load())


def test_bar_generalizes():
    p = build_bar_problem(n_subs=4, elems_per_sub=3)
    assert p.imap.n_global == 3
    assert [s.Z.shape[1] for s in p.subs] == [0, 1, 1, 1]
