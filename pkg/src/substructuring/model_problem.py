"""Model problem: -div(rho grad u) = 1 on the unit square with bilinear (Q1)
elements on a uniform grid, split into a rectangular grid of substructures.

Each substructure is assembled on its own, its interior unknowns are eliminated
and only the interface Schur complement, the condensed load and a nullspace
basis are kept. A 1D two-substructure bar (``build_bar_problem``) is provided as
a hand-checkable desk case.

Node and dof ordering is lexicographic in (y, x) everywhere.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .linalg import NotSPDError, sym_eig

EDGES = ("left", "right", "bottom", "top")
DIRICHLET_PRESETS = {
    "left": frozenset({"left"}),
    "all": frozenset(EDGES),
    "left-bottom": frozenset({"left", "bottom"}),
}
RHS_KINDS = ("zero", "ones", "random")


class NullspaceMismatchError(RuntimeError):
    """Analytic and numerical nullspace dimensions of a Schur complement disagree."""


@dataclass(frozen=True)
class ProblemConfig:
    """Mesh, partition, coefficients and boundary conditions of the model problem.

    ``coefficient`` is either a scalar applied to every substructure or one
    positive value per substructure (substructure ids are lexicographic in the
    substructure grid, x fastest). ``seed_rhs`` selects the interface residual
    used by solve experiments: ``zero``, ``ones`` (condensed unit source) or
    ``random`` (standard normal with ``seed``).
    """

    sub_grid: tuple = (2, 2)
    elems_per_sub: int = 2
    coefficient: object = 1.0
    dirichlet: frozenset = frozenset({"left"})
    seed_rhs: str = "ones"
    seed: int = 0

    def __post_init__(self):
        mx, my = self.sub_grid
        if int(mx) != mx or int(my) != my or mx < 1 or my < 1:
            raise ValueError(f"sub_grid must be positive integers, got {self.sub_grid}")
        if int(self.elems_per_sub) != self.elems_per_sub or self.elems_per_sub < 1:
            raise ValueError(f"elems_per_sub must be a positive integer, got {self.elems_per_sub}")
        dirichlet = self.dirichlet
        if isinstance(dirichlet, str):
            dirichlet = DIRICHLET_PRESETS.get(dirichlet, frozenset({dirichlet}))
        dirichlet = frozenset(dirichlet)
        if not dirichlet:
            raise ValueError("at least one Dirichlet edge is required")
        unknown = dirichlet - set(EDGES)
        if unknown:
            raise ValueError(f"unknown Dirichlet edges {sorted(unknown)}")
        object.__setattr__(self, "dirichlet", dirichlet)
        object.__setattr__(self, "sub_grid", (int(mx), int(my)))
        object.__setattr__(self, "elems_per_sub", int(self.elems_per_sub))
        rho = self.coefficients()
        if np.any(~np.isfinite(rho)) or np.any(rho <= 0):
            raise ValueError("all coefficients must be positive")
        if self.seed_rhs not in RHS_KINDS:
            raise ValueError(f"seed_rhs must be one of {RHS_KINDS}, got {self.seed_rhs!r}")

    @property
    def n_subs(self):
        return self.sub_grid[0] * self.sub_grid[1]

    def coefficients(self):
        """Per-substructure coefficient array of length ``n_subs``."""
        c = np.asarray(self.coefficient, dtype=float)
        if c.ndim == 0:
            return np.full(self.n_subs, float(c))
        if c.shape != (self.n_subs,):
            raise ValueError(f"need {self.n_subs} coefficients, got {c.size}")
        return c.copy()


def checkerboard(sub_grid, rho1, rho2):
    """Per-substructure coefficients alternating rho1/rho2 like a checkerboard."""
    mx, my = sub_grid
    return tuple(rho1 if (sx + sy) % 2 == 0 else rho2 for sy in range(my) for sx in range(mx))


@dataclass(frozen=True)
class LocalStiffness:
    """Assembled stiffness of one substructure with Dirichlet dofs removed.

    ``interior`` and ``interface`` index rows of ``K``; ``interface`` is ordered
    like the substructure's interface dofs.
    """

    K: np.ndarray
    load: np.ndarray
    interior: np.ndarray
    interface: np.ndarray

    def blocks(self):
        ii, gg = self.interior, self.interface
        K = self.K
        return K[np.ix_(ii, ii)], K[np.ix_(ii, gg)], K[np.ix_(gg, gg)]


@dataclass(frozen=True)
class SubstructureLocal:
    id: int
    S: np.ndarray
    f: np.ndarray
    Z: np.ndarray
    iface: np.ndarray  # local interface dof -> global interface dof
    touches_dirichlet: bool
    stiffness: LocalStiffness = field(repr=False, default=None)

    @property
    def n_iface(self):
        return self.iface.size


@dataclass(frozen=True)
class InterfaceMap:
    """Global interface dofs and the substructures sharing each of them.

    ``coords`` holds node coordinates, ``is_vertex`` flags dofs that are vertices
    of substructure boxes (candidates for coarse dofs).
    """

    n_global: int
    multiplicity: np.ndarray
    sharers: tuple  # per global dof: tuple of (sub id, local index), sub id ascending
    coords: np.ndarray
    is_vertex: np.ndarray


@dataclass(frozen=True)
class Problem:
    subs: tuple
    imap: InterfaceMap
    config: ProblemConfig = None
    label: str = ""

    @property
    def n_subs(self):
        return len(self.subs)

    @property
    def offsets(self):
        """Start of each substructure block in the broken space W."""
        sizes = [s.n_iface for s in self.subs]
        return np.concatenate([[0], np.cumsum(sizes)]).astype(int)

    @property
    def dim_w(self):
        return int(sum(s.n_iface for s in self.subs))

    def condensed_load(self):
        """Broken load vector f in W (stacked condensed loads)."""
        return np.concatenate([s.f for s in self.subs])

    def interface_rhs(self, kind=None, seed=None):
        """Interface residual r for the assembled system S_hat u = r."""
        if kind is None:
            kind = self.config.seed_rhs if self.config is not None else "ones"
        if seed is None:
            seed = self.config.seed if self.config is not None else 0
        n = self.imap.n_global
        if kind == "zero":
            return np.zeros(n)
        if kind == "ones":
            r = np.zeros(n)
            for s in self.subs:
                np.add.at(r, s.iface, s.f)
            return r
        if kind == "random":
            return np.random.default_rng(seed).standard_normal(n)
        raise ValueError(f"unknown rhs kind {kind!r}")


def q1_element_stiffness(hx, hy, rho=1.0):
    """Q1 element stiffness on an hx-by-hy rectangle, nodes (0,0),(1,0),(0,1),(1,1)."""
    gp = np.array([-1.0, 1.0]) / np.sqrt(3.0)
    xi_n = np.array([-1.0, 1.0, -1.0, 1.0])
    eta_n = np.array([-1.0, -1.0, 1.0, 1.0])
    K = np.zeros((4, 4))
    for xi in gp:
        for eta in gp:
            dN_dxi = 0.25 * xi_n * (1 + eta * eta_n)
            dN_deta = 0.25 * eta_n * (1 + xi * xi_n)
            grad = np.vstack([dN_dxi * 2.0 / hx, dN_deta * 2.0 / hy])
            K += grad.T @ grad * (hx * hy / 4.0)
    return rho * K


def _node_subs(i, n, m):
    """Substructure indices (along one axis) whose closed box contains grid line i."""
    out = []
    s = i // n
    if i % n == 0 and s > 0:
        out.append(s - 1)
    if s < m:
        out.append(s)
    return out


class _Grid:
    def __init__(self, config):
        self.config = config
        self.mx, self.my = config.sub_grid
        self.n = config.elems_per_sub
        self.Nx, self.Ny = self.mx * self.n, self.my * self.n
        self.hx, self.hy = 1.0 / self.Nx, 1.0 / self.Ny

    def node(self, i, j):
        return j * (self.Nx + 1) + i

    def is_dirichlet(self, i, j):
        d = self.config.dirichlet
        return (
            ("left" in d and i == 0)
            or ("right" in d and i == self.Nx)
            or ("bottom" in d and j == 0)
            or ("top" in d and j == self.Ny)
        )

    def node_subs(self, i, j):
        xs = _node_subs(i, self.n, self.mx)
        ys = _node_subs(j, self.n, self.my)
        return sorted(sy * self.mx + sx for sy in ys for sx in xs)

    def sub_box(self, sub_id):
        sx, sy = sub_id % self.mx, sub_id // self.mx
        return sx * self.n, sy * self.n

    def sub_nodes(self, sub_id):
        """Free (non-Dirichlet) nodes of a substructure as (i, j) pairs, lexicographic in (y, x)."""
        x0, y0 = self.sub_box(sub_id)
        return [
            (i, j)
            for j in range(y0, y0 + self.n + 1)
            for i in range(x0, x0 + self.n + 1)
            if not self.is_dirichlet(i, j)
        ]

    def interface_nodes(self):
        out = []
        for j in range(self.Ny + 1):
            for i in range(self.Nx + 1):
                if not self.is_dirichlet(i, j) and len(self.node_subs(i, j)) >= 2:
                    out.append((i, j))
        return out


def assemble_substructure(sub_id, config):
    """Assemble one substructure's stiffness and unit-source load.

    Returns a ``LocalStiffness`` whose ``interface`` rows follow the global
    interface ordering restricted to the substructure.
    """
    grid = _Grid(config)
    if not 0 <= sub_id < config.n_subs:
        raise ValueError(f"substructure id {sub_id} out of range")
    rho = config.coefficients()[sub_id]
    n = grid.n
    x0, y0 = grid.sub_box(sub_id)
    box = n + 1
    Ke = q1_element_stiffness(grid.hx, grid.hy, rho)
    fe = np.full(4, grid.hx * grid.hy / 4.0)
    Kfull = np.zeros((box * box, box * box))
    gfull = np.zeros(box * box)
    for ey in range(n):
        for ex in range(n):
            dofs = [ey * box + ex, ey * box + ex + 1, (ey + 1) * box + ex, (ey + 1) * box + ex + 1]
            Kfull[np.ix_(dofs, dofs)] += Ke
            gfull[dofs] += fe
    free, iface, interior = [], [], []
    for b in range(box * box):
        i, j = x0 + b % box, y0 + b // box
        if grid.is_dirichlet(i, j):
            continue
        pos = len(free)
        free.append(b)
        (iface if len(grid.node_subs(i, j)) >= 2 else interior).append(pos)
    free = np.array(free, dtype=int)
    return LocalStiffness(
        K=Kfull[np.ix_(free, free)],
        load=gfull[free],
        interior=np.array(interior, dtype=int),
        interface=np.array(iface, dtype=int),
    )


def schur_reduce(local):
    """Eliminate interior dofs: returns (S, f) on the interface."""
    K_II, K_IG, K_GG = local.blocks()
    g_I, g_G = local.load[local.interior], local.load[local.interface]
    if local.interior.size == 0:
        return K_GG.copy(), g_G.copy()
    try:
        c = sla.cho_factor(K_II, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotSPDError(f"interior stiffness block is not SPD: {exc}") from exc
    X = sla.cho_solve(c, np.column_stack([K_IG, g_I]))
    S = K_GG - K_IG.T @ X[:, :-1]
    f = g_G - K_IG.T @ X[:, -1]
    return 0.5 * (S + S.T), f


def nullspace_basis(S, touches_dirichlet, verify=True, rank_tol=1e-10):
    """Orthonormal basis of null(S) for the scalar Laplace model.

    Floating substructures get the normalized constant vector, pinned ones an
    empty basis. With ``verify`` the count is checked against the eigenvalues
    of S below ``rank_tol * lambda_max``.
    """
    n = S.shape[0]
    if touches_dirichlet or n == 0:
        Z = np.zeros((n, 0))
    else:
        Z = np.full((n, 1), 1.0 / np.sqrt(n))
    if verify and n > 0:
        eig = sym_eig(S)
        lmax = eig.lambda_max
        n_null = int(np.sum(eig.values < rank_tol * lmax)) if lmax > 0 else n
        if n_null != Z.shape[1]:
            raise NullspaceMismatchError(
                f"analytic nullspace has {Z.shape[1]} columns, eigenvalues give {n_null}"
            )
    return Z


def _condense(sub_id, local, iface_global, touches_dirichlet):
    S, f = schur_reduce(local)
    Z = nullspace_basis(S, touches_dirichlet)
    return SubstructureLocal(
        id=sub_id,
        S=S,
        f=f,
        Z=Z,
        iface=np.asarray(iface_global, dtype=int),
        touches_dirichlet=touches_dirichlet,
        stiffness=local,
    )


def _interface_map(n_global, sub_ifaces, coords, is_vertex):
    sharers = [[] for _ in range(n_global)]
    for sid, iface in enumerate(sub_ifaces):
        for loc, g in enumerate(iface):
            sharers[g].append((sid, loc))
    mult = np.array([len(s) for s in sharers], dtype=int)
    if n_global and mult.min() < 2:
        raise ValueError("every interface dof must be shared by at least two substructures")
    return InterfaceMap(
        n_global=n_global,
        multiplicity=mult,
        sharers=tuple(tuple(s) for s in sharers),
        coords=np.asarray(coords, dtype=float).reshape(n_global, -1),
        is_vertex=np.asarray(is_vertex, dtype=bool),
    )


def build_problem(config):
    """Assemble and condense every substructure of the 2D model problem."""
    if config.n_subs < 2:
        raise ValueError("need at least two substructures to have an interface")
    grid = _Grid(config)
    inodes = grid.interface_nodes()
    if not inodes:
        raise ValueError("configuration has no interface dofs")
    gindex = {grid.node(i, j): k for k, (i, j) in enumerate(inodes)}
    coords = [(i * grid.hx, j * grid.hy) for i, j in inodes]
    is_vertex = [i % grid.n == 0 and j % grid.n == 0 for i, j in inodes]

    subs, sub_ifaces = [], []
    for sid in range(config.n_subs):
        local = assemble_substructure(sid, config)
        nodes = grid.sub_nodes(sid)
        iface = [gindex[grid.node(*nodes[p])] for p in local.interface]
        x0, y0 = grid.sub_box(sid)
        touches = any(
            grid.is_dirichlet(i, j)
            for j in range(y0, y0 + grid.n + 1)
            for i in range(x0, x0 + grid.n + 1)
        )
        subs.append(_condense(sid, local, iface, touches))
        sub_ifaces.append(iface)
    imap = _interface_map(len(inodes), sub_ifaces, coords, is_vertex)
    return Problem(subs=tuple(subs), imap=imap, config=config, label="2d")


def build_bar_problem(n_subs=2, elems_per_sub=2, length=2.0):
    """1D Laplace bar on (0, length), Dirichlet at x=0, split into equal substructures.

    With the defaults this is the 4-element desk case: S_1 = [1], S_2 = [0].
    The load is the condensed unit source.
    """
    if n_subs < 2 or elems_per_sub < 1:
        raise ValueError("need at least two substructures and one element each")
    n_el = n_subs * elems_per_sub
    h = length / n_el
    Ke = np.array([[1.0, -1.0], [-1.0, 1.0]]) / h
    subs, sub_ifaces = [], []
    for sid in range(n_subs):
        first = sid * elems_per_sub
        nodes = list(range(first, first + elems_per_sub + 1))
        Kfull = np.zeros((len(nodes), len(nodes)))
        gfull = np.zeros(len(nodes))
        for e in range(elems_per_sub):
            Kfull[e : e + 2, e : e + 2] += Ke
            gfull[e : e + 2] += h / 2.0
        keep = [p for p, x in enumerate(nodes) if x != 0]
        Kfull, gfull = Kfull[np.ix_(keep, keep)], gfull[keep]
        kept_nodes = [nodes[p] for p in keep]
        iface = [p for p, x in enumerate(kept_nodes) if x % elems_per_sub == 0 and 0 < x < n_el]
        interior = [p for p in range(len(kept_nodes)) if p not in iface]
        local = LocalStiffness(Kfull, gfull, np.array(interior, dtype=int), np.array(iface, dtype=int))
        iface_global = [kept_nodes[p] // elems_per_sub - 1 for p in iface]
        subs.append(_condense(sid, local, iface_global, touches_dirichlet=(sid == 0)))
        sub_ifaces.append(iface_global)
    n_global = n_subs - 1
    coords = [(k + 1) * elems_per_sub * h for k in range(n_global)]
    imap = _interface_map(n_global, sub_ifaces, coords, [True] * n_global)
    return Problem(subs=tuple(subs), imap=imap, config=None, label="bar")


def assemble_global(config):
    """Fully assembled global stiffness and load on free nodes (oracle).

    Returns ``(K, g, iface_rows)`` where ``iface_rows[k]`` is the row of global
    interface dof ``k``.
    """
    grid = _Grid(config)
    rho = config.coefficients()
    nn = (grid.Nx + 1) * (grid.Ny + 1)
    K = np.zeros((nn, nn))
    g = np.zeros(nn)
    fe = np.full(4, grid.hx * grid.hy / 4.0)
    Kref = q1_element_stiffness(grid.hx, grid.hy)
    for ey in range(grid.Ny):
        for ex in range(grid.Nx):
            sid = (ey // grid.n) * grid.mx + ex // grid.n
            dofs = [grid.node(ex, ey), grid.node(ex + 1, ey), grid.node(ex, ey + 1), grid.node(ex + 1, ey + 1)]
            K[np.ix_(dofs, dofs)] += rho[sid] * Kref
            g[dofs] += fe
    free = [grid.node(i, j) for j in range(grid.Ny + 1) for i in range(grid.Nx + 1) if not grid.is_dirichlet(i, j)]
    pos = {node: k for k, node in enumerate(free)}
    iface_rows = np.array([pos[grid.node(i, j)] for i, j in grid.interface_nodes()], dtype=int)
    free = np.array(free)
    return K[np.ix_(free, free)], g[free], iface_rows
