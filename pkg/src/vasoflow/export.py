"""Solution export: legacy ASCII VTK polylines and time-series CSV.

Emitted files are deterministic for identical inputs (no timestamps). Point
data on shared vertex nodes is single-valued by convention: values come from
the lowest-id incident edge, and interior-vertex pressures are the Lagrange
multipliers (the discontinuous cell pressures are never evaluated at
vertices).
"""
import numpy as np
from scipy.integrate import cumulative_trapezoid

from . import models

_FMT = "%.16g"


def _node_owners(mesh):
    """(edge id, arclength) per mesh node, from the lowest-id incident edge."""
    owners = {}
    net = mesh.network
    for e in net.edges_sorted():
        chain = mesh.edge_nodes[e.id]
        h = net.edge_length(e) / mesh.cells_per_edge
        for k, node in enumerate(chain):
            owners.setdefault(int(node), (e.id, k * h))
    return [owners[n] for n in range(mesh.n_nodes)]


def _point_arrays(solution):
    """Per-node pressure, flux, and tangential flux vector for a mixed Solution."""
    mesh = solution.mesh
    net = mesh.network
    from .mesh import tangents

    tau = tangents(net)
    owners = _node_owners(mesh)
    n = mesh.n_nodes
    pressure = np.empty(n)
    flux = np.empty(n)
    flux_vec = np.empty((n, 3))
    for node in range(n):
        eid, s = owners[node]
        vid = mesh.node_vertex.get(node)
        flux[node] = solution.flux(eid, s)
        if vid is not None and vid in solution.multipliers:
            pressure[node] = solution.multipliers[vid]
        elif vid is not None:
            pressure[node] = models.vertex_pressure(solution, vid)
        else:
            pressure[node] = solution.pressure(eid, s)
        flux_vec[node] = flux[node] * tau[eid]
    return {"pressure": pressure, "flux": flux}, {"flux_tangent": flux_vec}


def _poisson_point_arrays(mesh, nodal):
    """Poisson export: the solution as 'pressure', -du/ds as 'flux'."""
    from .mesh import tangents

    tau = tangents(mesh.network)
    owners = _node_owners(mesh)
    n = mesh.n_nodes
    pressure = np.asarray(nodal.coeffs, dtype=float)
    flux = np.empty(n)
    flux_vec = np.empty((n, 3))
    for node in range(n):
        eid, s = owners[node]
        flux[node] = -nodal.deriv(eid, s)
        flux_vec[node] = flux[node] * tau[eid]
    return {"pressure": pressure, "flux": flux}, {"flux_tangent": flux_vec}


def _write_polydata(path, points, lines, scalars, vectors):
    out = []
    out.append("# vtk DataFile Version 3.0\n")
    out.append("network flow solution\n")
    out.append("ASCII\n")
    out.append("DATASET POLYDATA\n")
    out.append(f"POINTS {len(points)} double\n")
    for p in points:
        out.append(f"{_FMT % p[0]} {_FMT % p[1]} {_FMT % p[2]}\n")
    out.append(f"LINES {len(lines)} {3 * len(lines)}\n")
    for a, b in lines:
        out.append(f"2 {a} {b}\n")
    out.append(f"POINT_DATA {len(points)}\n")
    for name, vals in scalars.items():
        out.append(f"SCALARS {name} double 1\n")
        out.append("LOOKUP_TABLE default\n")
        for v in vals:
            out.append(f"{_FMT % v}\n")
    for name, vecs in vectors.items():
        out.append(f"VECTORS {name} double\n")
        for v in vecs:
            out.append(f"{_FMT % v[0]} {_FMT % v[1]} {_FMT % v[2]}\n")
    with open(path, "w", encoding="utf-8") as fh:
        fh.writelines(out)


def write_vtk(mesh, solution, path):
    """Write a solution as legacy ASCII polydata.

    Point scalars 'pressure' and 'flux', point vectors 'flux_tangent' (the
    flux value times the owning edge's unit tangent, so its magnitude equals
    |flux| at every point). Accepts mixed Solutions or Poisson NodalFunctions.
    """
    if isinstance(solution, models.NodalFunction):
        scalars, vectors = _poisson_point_arrays(mesh, solution)
    else:
        scalars, vectors = _point_arrays(solution)
    _write_polydata(path, mesh.nodes, mesh.cells, scalars, vectors)


def write_timeseries_csv(series, path, include_volumes=False):
    """CSV columns: time_s, flux_<vid>..., then volume_<vid>... when requested.

    Flux columns are outflow-signed boundary fluxes in m^3/s; volume columns
    are their cumulative trapezoidal integrals in m^3.
    """
    vids = sorted(series.flux)
    header = ["time_s"] + [f"flux_{v}" for v in vids]
    columns = [series.times] + [series.flux[v] for v in vids]
    if include_volumes:
        header += [f"volume_{v}" for v in vids]
        columns += [
            cumulative_trapezoid(series.flux[v], x=series.times, initial=0.0) for v in vids
        ]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*columns):
            fh.write(",".join(_FMT % v for v in row) + "\n")
