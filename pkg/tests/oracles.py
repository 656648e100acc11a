"""Independent oracles the solver tests are checked against.

These deliberately share no code path with the package internals: the flow
oracle is classic nodal (Kirchhoff) analysis with dense linear algebra, and
the annulus oracle integrates the Poiseuille velocity profile numerically.
"""
import numpy as np
from scipy.integrate import quad

from vasoflow.network import Edge, Network, Vertex


def kirchhoff_solve(net, resistance, pressure_bc):
    """Nodal analysis: conductance g_e = 1/(R_e L_e), KCL at free vertices.

    Args:
        net: Network
        resistance: map edge id -> resistance per unit length
        pressure_bc: map vertex id -> prescribed pressure

    Returns:
        (vertex pressures, edge fluxes) with flux signed source -> target.
    """
    ids = sorted(v.id for v in net.vertices)
    idx = {v: i for i, v in enumerate(ids)}
    n = len(ids)
    A = np.zeros((n, n))
    b = np.zeros(n)
    cond = {e.id: 1.0 / (resistance[e.id] * net.edge_length(e)) for e in net.edges}
    for e in net.edges:
        i, j = idx[e.source], idx[e.target]
        g = cond[e.id]
        A[i, i] += g
        A[j, j] += g
        A[i, j] -= g
        A[j, i] -= g
    for vid, val in pressure_bc.items():
        i = idx[vid]
        A[i, :] = 0.0
        A[i, i] = 1.0
        b[i] = val
    p = np.linalg.solve(A, b)
    pressures = {v: float(p[idx[v]]) for v in ids}
    fluxes = {
        e.id: cond[e.id] * (pressures[e.source] - pressures[e.target]) for e in net.edges
    }
    return pressures, fluxes


def annular_resistance_quadrature(mu, r1, r2):
    """Resistance per unit length from the integrated annular velocity profile."""
    c = (r2**2 - r1**2) / np.log(r2 / r1)

    def u(r):  # axial velocity for unit pressure gradient
        return (r2**2 - r**2 + c * np.log(r / r2)) / (4.0 * mu)

    flow, _ = quad(lambda r: u(r) * 2.0 * np.pi * r, r1, r2, epsabs=1e-16, epsrel=1e-13)
    return 1.0 / flow


def random_tree(rng, max_edges=50):
    """Random rooted tree with randomized geometry, radii, and resistances."""
    n_edges = int(rng.integers(3, max_edges + 1))
    vertices = [Vertex(0, (0.0, 0.0, 0.0))]
    edges = []
    tips = [0]
    while len(edges) < n_edges and tips:
        tip = tips.pop(int(rng.integers(len(tips))))
        n_children = int(rng.integers(1, 4))
        for _ in range(min(n_children, n_edges - len(edges))):
            parent_pos = np.asarray(vertices[tip].position)
            pos = parent_pos + rng.uniform(0.3, 1.5) * _random_direction(rng)
            vid = len(vertices)
            vertices.append(Vertex(vid, tuple(pos)))
            edges.append(
                Edge(
                    len(edges),
                    tip,
                    vid,
                    inner_radius_m=float(rng.uniform(1e-5, 1e-4)),
                    resistance_override=float(rng.uniform(0.5, 5.0)),
                )
            )
            tips.append(vid)
        if not tips:  # keep at least one growth point
            tips.append(int(rng.integers(1, len(vertices))))
    return Network(vertices, edges)


def random_graph_with_cycles(rng, max_edges=50, extra_edges=3):
    """Random tree plus a few forward cross edges (introduces cycles)."""
    tree = random_tree(rng, max_edges=max_edges - extra_edges)
    vertices = list(tree.vertices)
    edges = list(tree.edges)
    existing = {(e.source, e.target) for e in edges}
    out_deg = {v.id: 0 for v in vertices}
    in_deg = {v.id: 0 for v in vertices}
    for e in edges:
        out_deg[e.source] += 1
        in_deg[e.target] += 1
    interior = [v.id for v in vertices if in_deg[v.id] + out_deg[v.id] >= 2 and v.id != 0]
    added = 0
    for _ in range(30):
        if added >= extra_edges or len(interior) < 2:
            break
        a, b = rng.choice(interior, size=2, replace=False)
        a, b = int(a), int(b)
        if a == b or (a, b) in existing or (b, a) in existing:
            continue
        edges.append(
            Edge(
                len(edges),
                a,
                b,
                inner_radius_m=float(rng.uniform(1e-5, 1e-4)),
                resistance_override=float(rng.uniform(0.5, 5.0)),
            )
        )
        existing.add((a, b))
        added += 1
    return Network(vertices, edges)


def _random_direction(rng):
    vec = rng.normal(size=3)
    return vec / np.linalg.norm(vec)
