"""Finite-element core on network meshes.

Function spaces are piecewise polynomials per edge, broken at graph vertices:
each edge owns its endpoint degrees of freedom, and coupling across vertices
is restored by explicit jump constraints with one Lagrange multiplier per
interior vertex. Degrees of freedom are ordered deterministically: edges in
ascending id order, local dofs from source to target; pressure blocks follow
flux blocks; multipliers come last.

The weak saddle-point structure assembled here is

    [ A   B^T  J^T ] [ q ]   [ F ]
    [ B   0    0   ] [ p ] = [ g ]
    [ J   0    0   ] [ l ]   [ 0 ]

with A a coefficient-weighted mass (plus viscous stiffness for the Stokes
model), B the negative flux-divergence tested against pressure, and J the
signed jump operator at interior vertices (in-edges +1, out-edges -1).
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import kernels
from .errors import MeshError, SingularSystemError

MAX_QUAD_ORDER = 10


def quadrature(order):
    """Gauss-Legendre rule on the reference cell [0, 1].

    Exact for polynomials of degree <= 2*order - 1; weights sum to one.
    """
    if not 1 <= order <= MAX_QUAD_ORDER:
        raise ValueError(f"quadrature order must be in [1, {MAX_QUAD_ORDER}], got {order}")
    pts, wts = np.polynomial.legendre.leggauss(order)
    return (pts + 1.0) / 2.0, wts / 2.0


def _ref_values(degree, xi):
    """Nodal basis values on [0, 1] at points xi; shape (len(xi), degree + 1)."""
    xi = np.asarray(xi, dtype=float)
    if degree == 0:
        return np.ones((xi.size, 1))
    if degree == 1:
        return np.stack([1.0 - xi, xi], axis=1)
    if degree == 2:
        # nodes at 0, 1/2, 1
        return np.stack(
            [(1.0 - xi) * (1.0 - 2.0 * xi), 4.0 * xi * (1.0 - xi), xi * (2.0 * xi - 1.0)],
            axis=1,
        )
    raise ValueError(f"unsupported polynomial degree {degree}")


def _ref_derivs(degree, xi):
    """Nodal basis derivatives d/dxi on [0, 1]; shape (len(xi), degree + 1)."""
    xi = np.asarray(xi, dtype=float)
    ones = np.ones_like(xi)
    if degree == 0:
        return np.zeros((xi.size, 1))
    if degree == 1:
        return np.stack([-ones, ones], axis=1)
    if degree == 2:
        return np.stack([4.0 * xi - 3.0, 4.0 - 8.0 * xi, 4.0 * xi - 1.0], axis=1)
    raise ValueError(f"unsupported polynomial degree {degree}")


class LineSpace:
    """Scalar piecewise-polynomial space on a network mesh, broken at vertices.

    degree 0: one constant per cell (dim = n_cells)
    degree 1/2: continuous Lagrange polynomials along each edge
    (dim = degree * cells_per_edge + 1 per edge)
    """

    def __init__(self, mesh, degree):
        if degree not in (0, 1, 2):
            raise ValueError(f"unsupported degree {degree}")
        self.mesh = mesh
        self.degree = degree
        cpe = mesh.cells_per_edge
        self.block_size = cpe if degree == 0 else degree * cpe + 1
        self.edge_ids = sorted(mesh.edge_nodes)
        self.edge_offset = {
            eid: i * self.block_size for i, eid in enumerate(self.edge_ids)
        }
        self.ndofs = self.block_size * len(self.edge_ids)
        self._cell_dofs = self._build_cell_dofs()
        # per-cell geometry shared by assembly and evaluation
        self.cell_h = mesh.cell_lengths()
        edge_len = {eid: float(self.cell_h[mesh.edge_cells[eid]].sum()) for eid in self.edge_ids}
        self.edge_length = edge_len

    def _build_cell_dofs(self):
        mesh = self.mesh
        nloc = 1 if self.degree == 0 else self.degree + 1
        out = np.empty((mesh.n_cells, nloc), dtype=np.int64)
        for eid in self.edge_ids:
            off = self.edge_offset[eid]
            for k, cid in enumerate(mesh.edge_cells[eid]):
                if self.degree == 0:
                    out[cid, 0] = off + k
                else:
                    d = self.degree
                    out[cid] = off + d * k + np.arange(d + 1)
        return out

    @property
    def local_size(self):
        return self._cell_dofs.shape[1]

    def cell_dofs(self):
        """(n_cells, local_size) global dof index per cell, source-to-target order."""
        return self._cell_dofs

    def source_dof(self, edge_id):
        if self.degree == 0:
            raise ValueError("piecewise-constant space has no endpoint dofs")
        return self.edge_offset[edge_id]

    def target_dof(self, edge_id):
        if self.degree == 0:
            raise ValueError("piecewise-constant space has no endpoint dofs")
        return self.edge_offset[edge_id] + self.block_size - 1

    def dof_arclengths(self, edge_id):
        """Arclength of each dof of the edge block (nodal spaces: the nodes)."""
        length = self.edge_length[edge_id]
        if self.degree == 0:
            cpe = self.mesh.cells_per_edge
            return (np.arange(cpe) + 0.5) * (length / cpe)
        n = self.block_size - 1
        return np.arange(self.block_size) * (length / n)

    def interpolate(self, fn):
        """Nodal interpolation of fn(edge_id, s_array) -> values."""
        coeffs = np.empty(self.ndofs)
        for eid in self.edge_ids:
            s = self.dof_arclengths(eid)
            vals = np.asarray(fn(eid, s), dtype=float)
            off = self.edge_offset[eid]
            coeffs[off : off + self.block_size] = vals
        return DiscreteFunction(self, coeffs)

    def _locate(self, edge_id, s):
        """Cell index along the edge and local coordinate; left-cell at joints."""
        length = self.edge_length[edge_id]
        cpe = self.mesh.cells_per_edge
        tol = 1e-12 * max(length, 1.0)
        if s < -tol or s > length + tol:
            raise ValueError(f"arclength {s} outside edge {edge_id} of length {length}")
        h = length / cpe
        k = int(np.ceil(s / h)) - 1 if s > 0 else 0
        k = min(max(k, 0), cpe - 1)
        xi = s / h - k
        return k, min(max(xi, 0.0), 1.0)

    def evaluate(self, coeffs, edge_id, s):
        k, xi = self._locate(edge_id, s)
        cid = self.mesh.edge_cells[edge_id][k]
        local = coeffs[self._cell_dofs[cid]]
        return float(_ref_values(self.degree, [xi])[0] @ local)

    def evaluate_deriv(self, coeffs, edge_id, s):
        k, xi = self._locate(edge_id, s)
        cid = self.mesh.edge_cells[edge_id][k]
        local = coeffs[self._cell_dofs[cid]]
        return float(_ref_derivs(self.degree, [xi])[0] @ local) / self.cell_h[cid]


def flux_space(mesh, degree):
    """Cross-section flux space: per-edge continuous P1 or P2, broken at vertices."""
    if degree not in (1, 2):
        raise ValueError(f"flux space degree must be 1 or 2, got {degree}")
    return LineSpace(mesh, degree)


def pressure_space(mesh, variant):
    """Pressure space: 'P0' (cellwise constants) or 'P1' (per-edge continuous)."""
    if variant == "P0":
        return LineSpace(mesh, 0)
    if variant == "P1":
        return LineSpace(mesh, 1)
    raise ValueError(f"unknown pressure space variant {variant!r}")


class MultiplierSpace:
    """One real unknown per interior vertex, ordered by ascending vertex id."""

    def __init__(self, classification):
        self.vertex_ids = tuple(sorted(classification.bifurcations))
        self.index = {vid: i for i, vid in enumerate(self.vertex_ids)}
        self.ndofs = len(self.vertex_ids)


@dataclass
class DiscreteFunction:
    """Coefficient vector bound to its function space."""

    space: LineSpace
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.shape != (self.space.ndofs,):
            raise ValueError(
                f"coefficient vector has length {self.coeffs.shape}, "
                f"space dimension is {self.space.ndofs}"
            )

    def __call__(self, edge_id, s):
        return self.space.evaluate(self.coeffs, edge_id, s)


def dds(f, edge_id, s):
    """Spatial derivative of f along the edge tangent at arclength s.

    One-sided at cell boundaries, taking the cell to the left (the first cell
    at s = 0).
    """
    return f.space.evaluate_deriv(f.coeffs, edge_id, s)


def coefficient_at_quadrature(space, coeff, points):
    """Expand a coefficient spec to an (n_cells, nq) array at quadrature points.

    Accepts a scalar, a per-edge-id dict, a per-cell array of length n_cells,
    an (n_cells, nq) array, or a callable(edge_id, s_array) -> values.
    """
    mesh = space.mesh
    nq = len(points)
    ncells = mesh.n_cells
    if coeff is None:
        coeff = 0.0
    if np.isscalar(coeff):
        return np.full((ncells, nq), float(coeff))
    if isinstance(coeff, dict):
        per_cell = np.empty(ncells)
        for eid in space.edge_ids:
            per_cell[mesh.edge_cells[eid]] = coeff[eid]
        return np.repeat(per_cell[:, None], nq, axis=1)
    if callable(coeff):
        out = np.empty((ncells, nq))
        for eid in space.edge_ids:
            cids = mesh.edge_cells[eid]
            length = space.edge_length[eid]
            h = length / mesh.cells_per_edge
            s0 = np.arange(len(cids)) * h
            s = s0[:, None] + np.asarray(points)[None, :] * h
            out[cids] = np.asarray(coeff(eid, s), dtype=float).reshape(len(cids), nq)
        return out
    arr = np.asarray(coeff, dtype=float)
    if arr.shape == (ncells,):
        return np.repeat(arr[:, None], nq, axis=1)
    if arr.shape == (ncells, nq):
        return arr
    raise ValueError(f"cannot interpret coefficient with shape {arr.shape}")


def _check_coefficient(vals, nonnegative):
    if not np.all(np.isfinite(vals)):
        raise ValueError("coefficient is not finite at a quadrature point")
    if nonnegative and np.any(vals < 0):
        raise ValueError("coefficient is negative at a quadrature point")


def _scatter(rows_map, cols_map, vals, shape):
    nloc_r = rows_map.shape[1]
    nloc_c = cols_map.shape[1]
    rows = np.repeat(rows_map, nloc_c, axis=1).ravel()
    cols = np.tile(cols_map, (1, nloc_r)).ravel()
    mat = sp.coo_matrix((vals.ravel(), (rows, cols)), shape=shape)
    return mat.tocsr()


def assemble_weighted_mass(space, coeff, quad_order=None):
    """Sparse (c u, v) over all cells; symmetric positive semidefinite."""
    order = quad_order or max(1, 2 * space.degree)
    pts, wts = quadrature(order)
    cvals = coefficient_at_quadrature(space, coeff, pts)
    _check_coefficient(cvals, nonnegative=True)
    phi = _ref_values(space.degree, pts)
    vals = kernels.element_matrices(wts, cvals, phi, phi, space.cell_h)
    dofs = space.cell_dofs()
    return _scatter(dofs, dofs, vals, (space.ndofs, space.ndofs))


def assemble_stiffness(space, coeff, quad_order=None):
    """Sparse (c u', v'); symmetric PSD with per-edge constants in the kernel."""
    order = quad_order or max(1, 2 * space.degree)
    pts, wts = quadrature(order)
    cvals = coefficient_at_quadrature(space, coeff, pts)
    _check_coefficient(cvals, nonnegative=True)
    dphi = _ref_derivs(space.degree, pts)
    vals = kernels.element_matrices(wts, cvals, dphi, dphi, 1.0 / space.cell_h)
    dofs = space.cell_dofs()
    return _scatter(dofs, dofs, vals, (space.ndofs, space.ndofs))


def assemble_divergence(flux, pressure, quad_order=None):
    """Sparse B with B[k, j] = -(d/ds psi_j, phi_k); exact at default order."""
    if flux.mesh is not pressure.mesh:
        raise MeshError("flux and pressure spaces must share one mesh")
    order = quad_order or max(1, 2 * max(flux.degree, pressure.degree))
    pts, wts = quadrature(order)
    ones = np.ones((flux.mesh.n_cells, len(pts)))
    phi_p = _ref_values(pressure.degree, pts)
    dpsi = _ref_derivs(flux.degree, pts)
    # d/ds = (1/h) d/dxi and ds = h dxi cancel
    vals = kernels.element_matrices(wts, ones, phi_p, dpsi, np.full(flux.mesh.n_cells, -1.0))
    return _scatter(pressure.cell_dofs(), flux.cell_dofs(), vals, (pressure.ndofs, flux.ndofs))


def assemble_load(space, fn, quad_order=None):
    """Load vector (f, phi) with f given as any coefficient spec."""
    order = quad_order or max(2, 2 * space.degree)
    pts, wts = quadrature(order)
    fvals = coefficient_at_quadrature(space, fn, pts)
    _check_coefficient(fvals, nonnegative=False)
    phi = _ref_values(space.degree, pts)
    vec = kernels.element_vectors(wts, fvals, phi, space.cell_h)
    out = np.zeros(space.ndofs)
    np.add.at(out, space.cell_dofs().ravel(), vec.ravel())
    return out


def assemble_jump_matrix(flux, classification):
    """Signed jump operator J: (J q)_b = sum_in q(b) - sum_out q(b).

    Rows follow MultiplierSpace ordering (ascending interior vertex id); each
    in-edge contributes +1 at its target endpoint dof, each out-edge -1 at its
    source endpoint dof.
    """
    mult = MultiplierSpace(classification)
    rows, cols, vals = [], [], []
    for e in flux.mesh.network.edges_sorted():
        if e.target in mult.index:
            rows.append(mult.index[e.target])
            cols.append(flux.target_dof(e.id))
            vals.append(1.0)
        if e.source in mult.index:
            rows.append(mult.index[e.source])
            cols.append(flux.source_dof(e.id))
            vals.append(-1.0)
    return sp.coo_matrix(
        (vals, (rows, cols)), shape=(mult.ndofs, flux.ndofs)
    ).tocsr()


@dataclass
class BlockSystem:
    """Assembled saddle-point system over [flux | pressure | multiplier] blocks."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    n_flux: int
    n_pressure: int
    n_multiplier: int

    @property
    def size(self):
        return self.n_flux + self.n_pressure + self.n_multiplier

    def split(self, x):
        nq, npr = self.n_flux, self.n_pressure
        return x[:nq], x[nq : nq + npr], x[nq + npr :]


def assemble_saddle(A, B, J, rhs_flux=None, rhs_pressure=None, rhs_multiplier=None):
    """Assemble [[A, B^T, J^T], [B, 0, 0], [J, 0, 0]] and the stacked right side."""
    A = sp.csr_matrix(A)
    B = sp.csr_matrix(B)
    nq = A.shape[0]
    if A.shape[1] != nq:
        raise ValueError(f"A must be square, got {A.shape}")
    if B.shape[1] != nq:
        raise ValueError(f"B has {B.shape[1]} columns, expected {nq}")
    npr = B.shape[0]
    if J is None:
        J = sp.csr_matrix((0, nq))
    J = sp.csr_matrix(J)
    if J.shape[1] != nq:
        raise ValueError(f"J has {J.shape[1]} columns, expected {nq}")
    nm = J.shape[0]

    def _rhs(part, n, name):
        if part is None:
            return np.zeros(n)
        part = np.asarray(part, dtype=float)
        if part.shape != (n,):
            raise ValueError(f"{name} right-hand side has shape {part.shape}, expected ({n},)")
        return part

    mat = sp.bmat(
        [
            [A, B.T, J.T],
            [B, sp.csr_matrix((npr, npr)), sp.csr_matrix((npr, nm))],
            [J, sp.csr_matrix((nm, npr)), sp.csr_matrix((nm, nm))],
        ],
        format="csr",
    )
    rhs = np.concatenate(
        [_rhs(rhs_flux, nq, "flux"), _rhs(rhs_pressure, npr, "pressure"), _rhs(rhs_multiplier, nm, "multiplier")]
    )
    return BlockSystem(mat, rhs, nq, npr, nm)


def eliminate_dofs(system, dof_values):
    """Impose x[dof] = value symmetrically (row/column elimination).

    Returns a new BlockSystem; used for essential flux boundary conditions.
    """
    if not dof_values:
        return system
    mat = system.matrix.tocsc(copy=True)
    rhs = system.rhs.copy()
    dofs = np.fromiter(dof_values.keys(), dtype=np.int64)
    vals = np.fromiter((dof_values[d] for d in dofs), dtype=float)
    rhs -= mat[:, dofs] @ vals
    mat = mat.tolil()
    mat[dofs, :] = 0.0
    mat[:, dofs] = 0.0
    for d, v in zip(dofs, vals):
        mat[d, d] = 1.0
        rhs[d] = v
    return BlockSystem(mat.tocsr(), rhs, system.n_flux, system.n_pressure, system.n_multiplier)


RESIDUAL_RTOL = 1e-10


def solve_sparse(system):
    """Direct sparse solve with a residual guard.

    Raises SingularSystemError with a rank-deficiency diagnostic when the
    factorization fails or the residual exceeds
    RESIDUAL_RTOL * (|M| |x| + |b|).
    """
    mat = system.matrix.tocsc()
    if mat.shape[0] != mat.shape[1]:
        raise ValueError(f"system matrix is not square: {mat.shape}")
    try:
        lu = spla.splu(mat)
        x = lu.solve(system.rhs)
    except RuntimeError as exc:
        raise SingularSystemError(
            f"sparse factorization failed ({exc}); the system is rank deficient. "
            "A hydraulic/Stokes system needs a pressure condition (or an "
            "unconstrained boundary vertex, which is held at zero pressure)."
        ) from exc
    norm_m = spla.norm(mat, np.inf)
    norm_x = np.linalg.norm(x)
    norm_b = np.linalg.norm(system.rhs)
    if not np.all(np.isfinite(x)):
        raise SingularSystemError("solution contains non-finite entries; system is singular")
    resid = np.linalg.norm(mat @ x - system.rhs)
    if resid > RESIDUAL_RTOL * (norm_m * norm_x + norm_b):
        raise SingularSystemError(
            f"direct solve residual {resid:.3e} exceeds tolerance; "
            "the system is rank deficient or severely ill-conditioned"
        )
    return x
