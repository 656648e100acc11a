"""Manufactured-solution verification for the mixed network models.

Both studies run on a unit single-edge network so the discretization error of
the edgewise forms is isolated (vertex coupling is enforced exactly and is
tested elsewhere). Fields are chosen compatible with the models' natural
boundary conditions:

hydraulic:  p = cos(pi s),  q = -p'/R = (pi/R) sin(pi s),  f = q'
stokes:     q = q0 cos(pi s)  (zero viscous traction at both ends),
            p' = -(R + mu pi^2) q,  f = q'

The source f follows from the mass balance dq/ds = f in both cases, so the
pair satisfies the strong equations exactly and the discrete error is pure
discretization error.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import fem, models
from .network import Edge, Network, Vertex


def _unit_edge_network(resistance):
    return Network(
        [Vertex(0, (0.0, 0.0, 0.0)), Vertex(1, (1.0, 0.0, 0.0))],
        [Edge(0, 0, 1, 5e-5, resistance_override=resistance)],
    )


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact fields plus the data needed to reproduce them discretely."""

    model: str
    resistance: float
    viscosity: float
    flux_exact: object  # callable(s) -> q
    pressure_exact: object  # callable(s) -> p
    source: object  # callable(edge_id, s) -> f
    pressure_bc: dict


def hydraulic_case(resistance=1.0):
    r = resistance
    return ManufacturedCase(
        model="hydraulic",
        resistance=r,
        viscosity=models.DEFAULT_VISCOSITY_PA_S,
        flux_exact=lambda s: (math.pi / r) * np.sin(math.pi * s),
        pressure_exact=lambda s: np.cos(math.pi * s),
        source=lambda eid, s: (math.pi**2 / r) * np.cos(math.pi * s),
        pressure_bc={0: 1.0, 1: -1.0},
    )


def stokes_case(resistance=1.0, viscosity=0.2):
    r, mu = resistance, viscosity
    amp = (r + mu * math.pi**2) / math.pi
    return ManufacturedCase(
        model="stokes",
        resistance=r,
        viscosity=mu,
        flux_exact=lambda s: np.cos(math.pi * s),
        pressure_exact=lambda s: -amp * np.sin(math.pi * s),
        source=lambda eid, s: -math.pi * np.sin(math.pi * s),
        pressure_bc={0: 0.0, 1: 0.0},
    )


def l2_error(func, exact, quad_order=6):
    """L2 norm of (discrete - exact) over the whole network mesh."""
    space = func.space
    pts, wts = fem.quadrature(quad_order)
    phi = fem._ref_values(space.degree, pts)
    dofs = space.cell_dofs()
    total = 0.0
    for eid in space.edge_ids:
        length = space.edge_length[eid]
        h = length / space.mesh.cells_per_edge
        for k, cid in enumerate(space.mesh.edge_cells[eid]):
            s = k * h + pts * h
            uh = phi @ func.coeffs[dofs[cid]]
            diff = uh - np.asarray(exact(s), dtype=float)
            total += h * float(np.sum(wts * diff * diff))
    return math.sqrt(total)


def solve_case(case, cells_per_edge):
    net = _unit_edge_network(case.resistance)
    coeffs = models.Coefficients(case.viscosity, {0: case.resistance}, {0: 1.0})
    bcs = models.BoundaryConditions(pressure=case.pressure_bc)
    solver = models.solve_hydraulic if case.model == "hydraulic" else models.solve_stokes
    return solver(net, coeffs, bcs, f=case.source, cells_per_edge=cells_per_edge)


@dataclass(frozen=True)
class ConvergenceRow:
    cells_per_edge: int
    h: float
    flux_error: float
    pressure_error: float
    flux_order: float  # nan on the first row
    pressure_order: float


def convergence_study(model, levels, cells_per_edge0=4):
    """Solve the manufactured case on a geometric mesh sequence.

    Returns one ConvergenceRow per level; observed orders are computed
    between consecutive levels.
    """
    if levels < 3:
        raise ValueError(f"need at least 3 refinement levels, got {levels}")
    case = {"hydraulic": hydraulic_case, "stokes": stokes_case}[model]()
    rows = []
    prev = None
    for lvl in range(levels):
        cpe = cells_per_edge0 * 2**lvl
        sol = solve_case(case, cpe)
        eq = l2_error(sol.flux, case.flux_exact)
        ep = l2_error(sol.pressure, case.pressure_exact)
        if prev is None:
            oq = op = float("nan")
        else:
            oq = math.log2(prev[0] / eq)
            op = math.log2(prev[1] / ep)
        rows.append(ConvergenceRow(cpe, 1.0 / cpe, eq, ep, oq, op))
        prev = (eq, ep)
    return rows


def format_table(model, rows):
    lines = [
        f"model: {model}",
        f"{'cells':>6} {'h':>10} {'flux L2 err':>13} {'order':>6} {'pressure L2 err':>16} {'order':>6}",
    ]
    for r in rows:
        oq = "  --" if math.isnan(r.flux_order) else f"{r.flux_order:4.2f}"
        op = "  --" if math.isnan(r.pressure_order) else f"{r.pressure_order:4.2f}"
        lines.append(
            f"{r.cells_per_edge:>6} {r.h:>10.4e} {r.flux_error:>13.4e} {oq:>6} "
            f"{r.pressure_error:>16.4e} {op:>6}"
        )
    return "\n".join(lines)
