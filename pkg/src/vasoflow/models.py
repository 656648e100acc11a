"""Network flow models: Poisson, hydraulic, and reduced Stokes.

The hydraulic model solves, per edge,

    R q + dp/ds = 0        (flow runs from high to low pressure)
    dq/ds      = f
    [[q]]_b    = 0         at every interior vertex b

in dual mixed form: P1 flux with P0 pressure. The Stokes variant adds an
axial viscous term -mu d2q/ds2 to the momentum balance and uses P2 flux with
per-edge continuous P1 pressure. Pressure boundary values enter naturally
through endpoint terms; flux boundary values are imposed essentially on the
broken flux space. A boundary vertex with no condition behaves as an open end
held at zero pressure.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import fem, kernels
from .errors import SingularSystemError
from .mesh import build_mesh
from .network import classify_vertices

DEFAULT_VISCOSITY_PA_S = 7.0e-4  # CSF-like


def annular_resistance(mu, inner_radius_m, outer_radius_m):
    """Poiseuille flow resistance per unit length of an annular channel.

    R = 8 mu / (pi [R2^4 - R1^4 - (R2^2 - R1^2)^2 / ln(R2/R1)]), in Pa*s/m^4
    per meter of channel. Vectorized over numpy arrays.
    """
    r1 = np.asarray(inner_radius_m, dtype=float)
    r2 = np.asarray(outer_radius_m, dtype=float)
    if np.any(r1 <= 0) or np.any(r2 <= r1):
        raise ValueError("annulus requires 0 < inner radius < outer radius")
    gap = r2**4 - r1**4 - (r2**2 - r1**2) ** 2 / np.log(r2 / r1)
    out = 8.0 * mu / (math.pi * gap)
    return float(out) if np.isscalar(inner_radius_m) and np.isscalar(outer_radius_m) else out


def annulus_area(inner_radius_m, outer_radius_m):
    """Open cross-section area pi (R2^2 - R1^2) of the annular channel."""
    r1 = np.asarray(inner_radius_m, dtype=float)
    r2 = np.asarray(outer_radius_m, dtype=float)
    out = math.pi * (r2**2 - r1**2)
    return float(out) if np.isscalar(inner_radius_m) and np.isscalar(outer_radius_m) else out


@dataclass
class Coefficients:
    """Physical coefficients: viscosity plus per-edge resistance and area.

    edge_resistance maps edge id -> flow resistance per unit length
    (Pa*s/m^4); edge_area maps edge id -> channel area (m^2). cell_resistance,
    when set, overrides the per-edge values with one entry per mesh cell (the
    quasi-static driver uses this to move the wall in time).
    """

    viscosity_Pa_s: float = DEFAULT_VISCOSITY_PA_S
    edge_resistance: dict = field(default_factory=dict)
    edge_area: dict = field(default_factory=dict)
    cell_resistance: np.ndarray = None

    @classmethod
    def from_network(cls, net, viscosity_Pa_s=DEFAULT_VISCOSITY_PA_S):
        """Annular-Poiseuille resistance per edge, honoring per-edge overrides."""
        if not (viscosity_Pa_s > 0 and math.isfinite(viscosity_Pa_s)):
            raise ValueError(f"viscosity must be positive, got {viscosity_Pa_s}")
        resistance, area = {}, {}
        for e in net.edges:
            if e.resistance_override is not None:
                resistance[e.id] = e.resistance_override
            else:
                resistance[e.id] = annular_resistance(
                    viscosity_Pa_s, e.inner_radius_m, e.outer_radius_m
                )
            area[e.id] = annulus_area(e.inner_radius_m, e.outer_radius_m)
        return cls(viscosity_Pa_s, resistance, area)

    def resistance_for(self, mesh):
        """Per-cell resistance array for assembly."""
        if self.cell_resistance is not None:
            arr = np.asarray(self.cell_resistance, dtype=float)
            if arr.shape != (mesh.n_cells,):
                raise ValueError(
                    f"cell_resistance has shape {arr.shape}, expected ({mesh.n_cells},)"
                )
            return arr
        out = np.empty(mesh.n_cells)
        for eid, cells in mesh.edge_cells.items():
            out[cells] = self.edge_resistance[eid]
        return out


@dataclass
class BoundaryConditions:
    """Boundary data: natural pressure values and essential flux values.

    pressure (Pa) and flux (m^3/s, signed along the edge tangent at the
    vertex) are maps keyed by boundary vertex id; a vertex may appear in at
    most one of them. Unlisted boundary vertices are held at zero pressure.
    """

    pressure: dict = field(default_factory=dict)
    flux: dict = field(default_factory=dict)

    def validate(self, net, classification):
        boundary = classification.boundary
        for name, data in (("pressure", self.pressure), ("flux", self.flux)):
            for vid, val in data.items():
                if vid not in boundary:
                    raise ValueError(
                        f"{name} condition on vertex {vid}, which is not a boundary vertex"
                    )
                if not math.isfinite(val):
                    raise ValueError(f"{name} condition on vertex {vid} is not finite")
        clash = set(self.pressure) & set(self.flux)
        if clash:
            raise ValueError(f"vertices {sorted(clash)} carry both pressure and flux conditions")
        if not self.pressure and boundary and set(self.flux) >= boundary:
            raise SingularSystemError(
                "flux conditions on every boundary vertex with no pressure condition "
                "leave the pressure defined only up to a constant"
            )


@dataclass
class Solution:
    """Discrete flux, pressure, and interior-vertex multipliers of one solve.

    multipliers[b] is the Lagrange multiplier enforcing mass conservation at
    interior vertex b; it coincides with the pressure value at b.
    """

    model: str
    mesh: object
    classification: object
    flux: fem.DiscreteFunction
    pressure: fem.DiscreteFunction
    multipliers: dict
    bcs: BoundaryConditions
    source_integral: float = 0.0

    def _boundary_edge(self, vid):
        net = self.mesh.network
        for e in net.edges_sorted():
            if e.source == vid or e.target == vid:
                return e
        raise ValueError(f"vertex {vid} not found in network")


def _pressure_bc_vector(flux, bcs, net):
    """Natural endpoint terms F_j = -sum_v p_bc(v) psi_j(v) n(v)."""
    out = np.zeros(flux.ndofs)
    for vid, p in bcs.pressure.items():
        for e in net.edges_sorted():
            if e.target == vid:
                out[flux.target_dof(e.id)] -= p
            elif e.source == vid:
                out[flux.source_dof(e.id)] += p
    return out


def _flux_bc_dofs(flux, bcs, net):
    """Essential flux dofs (boundary endpoint of the single incident edge)."""
    out = {}
    for vid, q in bcs.flux.items():
        for e in net.edges_sorted():
            if e.target == vid:
                out[flux.target_dof(e.id)] = q
            elif e.source == vid:
                out[flux.source_dof(e.id)] = q
    return out


def _solve_mixed(model, net, coeffs, bcs, f, mesh, cells_per_edge, flux_degree, pressure_variant):
    if mesh is None:
        mesh = build_mesh(net, cells_per_edge)
    elif mesh.network is not net:
        raise ValueError("mesh was built for a different network")
    cls = classify_vertices(net)
    if bcs is None:
        bcs = BoundaryConditions()
    bcs.validate(net, cls)
    if coeffs is None:
        coeffs = Coefficients.from_network(net)

    q_space = fem.flux_space(mesh, flux_degree)
    p_space = fem.pressure_space(mesh, pressure_variant)
    resistance = coeffs.resistance_for(mesh)
    A = fem.assemble_weighted_mass(q_space, resistance)
    if model == "stokes":
        A = A + fem.assemble_stiffness(q_space, coeffs.viscosity_Pa_s)
    B = fem.assemble_divergence(q_space, p_space)
    J = fem.assemble_jump_matrix(q_space, cls)

    F = _pressure_bc_vector(q_space, bcs, net)
    load = fem.assemble_load(p_space, f) if f is not None else np.zeros(p_space.ndofs)
    system = fem.assemble_saddle(A, B, J, rhs_flux=F, rhs_pressure=-load)
    system = fem.eliminate_dofs(system, _flux_bc_dofs(q_space, bcs, net))
    x = fem.solve_sparse(system)
    q, p, lam = system.split(x)

    mult_space = fem.MultiplierSpace(cls)
    multipliers = {vid: float(lam[i]) for vid, i in mult_space.index.items()}
    return Solution(
        model=model,
        mesh=mesh,
        classification=cls,
        flux=fem.DiscreteFunction(q_space, q),
        pressure=fem.DiscreteFunction(p_space, p),
        multipliers=multipliers,
        bcs=bcs,
        source_integral=float(load.sum()),
    )


def solve_hydraulic(net, coeffs=None, bcs=None, f=None, mesh=None, cells_per_edge=3):
    """Hydraulic network solve with the stable P1 flux / P0 pressure pair.

    With f = 0 the discrete solution is exact: edgewise-constant flux and
    edgewise-linear pressure lie in the discrete spaces.
    """
    return _solve_mixed("hydraulic", net, coeffs, bcs, f, mesh, cells_per_edge, 1, "P0")


def solve_stokes(net, coeffs=None, bcs=None, f=None, mesh=None, cells_per_edge=3):
    """Reduced Stokes solve (adds -mu d2q/ds2) with P2 flux / P1 pressure.

    Vertex coupling beyond mass conservation and the pressure multiplier is
    the natural zero-viscous-traction condition.
    """
    return _solve_mixed("stokes", net, coeffs, bcs, f, mesh, cells_per_edge, 2, "P1")


def solve_poisson(net, f=None, dirichlet=None, mesh=None, cells_per_edge=3):
    """Globally continuous P1 Poisson solve: -u'' = f with Kirchhoff coupling.

    dirichlet maps vertex id -> value; at least one entry is required. All
    other vertices get the natural zero-flux-sum condition. Returns a nodal
    DiscreteFunction over the mesh (shared vertex dofs, unlike the broken
    flux/pressure spaces).
    """
    if not dirichlet:
        raise SingularSystemError("Poisson solve needs at least one Dirichlet vertex")
    if mesh is None:
        mesh = build_mesh(net, cells_per_edge)
    for vid in dirichlet:
        net.vertex(vid)

    pts, wts = fem.quadrature(2)
    phi = fem._ref_values(1, pts)
    dphi = fem._ref_derivs(1, pts)
    h = mesh.cell_lengths()
    ones = np.ones((mesh.n_cells, len(pts)))
    vals = kernels.element_matrices(wts, ones, dphi, dphi, 1.0 / h)
    K = fem._scatter(mesh.cells, mesh.cells, vals, (mesh.n_nodes, mesh.n_nodes))

    b = np.zeros(mesh.n_nodes)
    if f is not None:
        space = fem.LineSpace(mesh, 1)  # reuse quadrature-point expansion per edge
        fvals = fem.coefficient_at_quadrature(space, f, pts)
        fem._check_coefficient(fvals, nonnegative=False)
        vec = kernels.element_vectors(wts, fvals, phi, h)
        np.add.at(b, mesh.cells.ravel(), vec.ravel())

    fixed = {mesh.vertex_node[vid]: float(val) for vid, val in dirichlet.items()}
    dofs = np.fromiter(fixed.keys(), dtype=np.int64)
    vals_d = np.fromiter((fixed[d] for d in dofs), dtype=float)
    Kc = K.tocsc()
    b = b - Kc[:, dofs] @ vals_d
    Kl = Kc.tolil()
    Kl[dofs, :] = 0.0
    Kl[:, dofs] = 0.0
    for d, v in zip(dofs, vals_d):
        Kl[d, d] = 1.0
        b[d] = v
    system = fem.BlockSystem(Kl.tocsr(), b, mesh.n_nodes, 0, 0)
    u = fem.solve_sparse(system)
    return NodalFunction(mesh, u)


@dataclass
class NodalFunction:
    """Vertex-continuous piecewise-linear field on the mesh nodes."""

    mesh: object
    coeffs: np.ndarray

    def __call__(self, edge_id, s):
        chain = self.mesh.edge_nodes[edge_id]
        cpe = self.mesh.cells_per_edge
        length = float(self.mesh.cell_lengths()[self.mesh.edge_cells[edge_id]].sum())
        h = length / cpe
        k = int(np.ceil(s / h)) - 1 if s > 0 else 0
        k = min(max(k, 0), cpe - 1)
        xi = s / h - k
        a, b = self.coeffs[chain[k]], self.coeffs[chain[k + 1]]
        return float(a + (b - a) * xi)

    def deriv(self, edge_id, s):
        chain = self.mesh.edge_nodes[edge_id]
        cpe = self.mesh.cells_per_edge
        length = float(self.mesh.cell_lengths()[self.mesh.edge_cells[edge_id]].sum())
        h = length / cpe
        k = int(np.ceil(s / h)) - 1 if s > 0 else 0
        k = min(max(k, 0), cpe - 1)
        a, b = self.coeffs[chain[k]], self.coeffs[chain[k + 1]]
        return float((b - a) / h)


def evaluate_flux(sol, vertex_id):
    """Tangent-signed cross-section flux at a boundary vertex."""
    cls = sol.classification
    if vertex_id in cls.bifurcations:
        raise ValueError(
            f"vertex {vertex_id} is interior; use flux_jump or evaluate on an edge"
        )
    if vertex_id not in cls.boundary:
        raise ValueError(f"vertex {vertex_id} not in network")
    e = sol._boundary_edge(vertex_id)
    space = sol.flux.space
    dof = space.target_dof(e.id) if e.target == vertex_id else space.source_dof(e.id)
    return float(sol.flux.coeffs[dof])


def boundary_outflow(sol, vertex_id):
    """Flux leaving the network at a boundary vertex (q * outward normal)."""
    e = sol._boundary_edge(vertex_id)
    q = evaluate_flux(sol, vertex_id)
    return q if e.target == vertex_id else -q


def flux_jump(sol, vertex_id):
    """Jump sum_in q(b) - sum_out q(b) at an interior vertex."""
    cls = sol.classification
    if vertex_id not in cls.bifurcations:
        raise ValueError(f"vertex {vertex_id} is not an interior vertex")
    net = sol.mesh.network
    space = sol.flux.space
    total = 0.0
    for e in net.edges_sorted():
        if e.target == vertex_id:
            total += sol.flux.coeffs[space.target_dof(e.id)]
        if e.source == vertex_id:
            total -= sol.flux.coeffs[space.source_dof(e.id)]
    return float(total)


def max_flux_jump(sol):
    """Largest |[[q]]_b| over the interior vertices (0.0 if there are none)."""
    jumps = [abs(flux_jump(sol, b)) for b in sol.classification.bifurcations]
    return max(jumps) if jumps else 0.0


def mass_balance(sol):
    """(total inflow, total outflow, residual) of the global balance.

    Residual = sum of boundary outflow - integral of the source; it vanishes
    to solver tolerance for every well-posed solve.
    """
    cls = sol.classification
    inflow = sum(-boundary_outflow(sol, v) for v in cls.inlets)
    outflow = sum(boundary_outflow(sol, v) for v in cls.outlets)
    residual = (outflow - inflow) - sol.source_integral
    return inflow, outflow, residual


def vertex_pressure(sol, vertex_id):
    """Pressure at a vertex: the multiplier inside, boundary data outside.

    Boundary vertices take their prescribed pressure value when one exists,
    else the adjacent discrete pressure evaluated at the vertex.
    """
    if vertex_id in sol.multipliers:
        return sol.multipliers[vertex_id]
    if vertex_id in sol.bcs.pressure:
        return float(sol.bcs.pressure[vertex_id])
    e = sol._boundary_edge(vertex_id)
    s = sol.flux.space.edge_length[e.id] if e.target == vertex_id else 0.0
    return sol.pressure(e.id, s)
