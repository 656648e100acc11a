"""Global 1D mesh over a network: nodes, cells, graph maps, tangents, arclengths.

Node numbering is deterministic: the first |V| mesh nodes are the graph
vertices in ascending vertex-id order, followed by the interior nodes of each
edge (edges in ascending id order, nodes ordered source to target). Cells are
numbered per edge in the same order and chain each edge from source to target.
"""
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import MeshError


@dataclass(frozen=True)
class NetworkMesh:
    """Immutable mesh of straight segments embedded in 3D.

    Attributes:
        network: the meshed network (kept for exact refinement)
        nodes: (n_nodes, 3) coordinates in meters
        cells: (n_cells, 2) node ids; cells[c] = (left, right) along the edge
        cell_edge: (n_cells,) graph edge id per cell
        vertex_node: map graph vertex id -> mesh node id
        node_vertex: partial map mesh node id -> graph vertex id
        arclength: (n_nodes,) distance from the owning edge's source vertex;
            shared vertex nodes take the value from their lowest-id incident edge
        cells_per_edge: uniform number of cells on every edge
        edge_nodes: map edge id -> (cells_per_edge + 1,) node ids source->target
        edge_cells: map edge id -> (cells_per_edge,) cell ids source->target
    """

    network: object = field(compare=False)
    nodes: np.ndarray = field(compare=False)
    cells: np.ndarray = field(compare=False)
    cell_edge: np.ndarray = field(compare=False)
    vertex_node: dict = field(compare=False)
    node_vertex: dict = field(compare=False)
    arclength: np.ndarray = field(compare=False)
    cells_per_edge: int = field(compare=False)
    edge_nodes: dict = field(compare=False)
    edge_cells: dict = field(compare=False)

    @property
    def n_nodes(self):
        return self.nodes.shape[0]

    @property
    def n_cells(self):
        return self.cells.shape[0]

    def cell_lengths(self):
        vec = self.nodes[self.cells[:, 1]] - self.nodes[self.cells[:, 0]]
        return np.linalg.norm(vec, axis=1)


def build_mesh(net, cells_per_edge=1):
    """Uniformly subdivide every edge into cells_per_edge straight cells."""
    if cells_per_edge < 1:
        raise MeshError(f"cells_per_edge must be >= 1, got {cells_per_edge}")
    edges = net.edges_sorted()
    vids = sorted(v.id for v in net.vertices)
    vertex_node = {vid: i for i, vid in enumerate(vids)}
    node_vertex = {i: vid for vid, i in vertex_node.items()}

    coords = [net.position(vid) for vid in vids]
    arclength = [0.0] * len(vids)
    arc_set = [False] * len(vids)
    cells = []
    cell_edge = []
    edge_nodes = {}
    edge_cells = {}
    for e in edges:
        src = net.position(e.source)
        dst = net.position(e.target)
        length = net.edge_length(e)
        chain = [vertex_node[e.source]]
        for k in range(1, cells_per_edge):
            frac = k / cells_per_edge
            coords.append(src + frac * (dst - src))
            arclength.append(frac * length)
            arc_set.append(True)
            chain.append(len(coords) - 1)
        chain.append(vertex_node[e.target])
        for nid, s in ((vertex_node[e.source], 0.0), (vertex_node[e.target], length)):
            if not arc_set[nid]:
                arclength[nid] = s
                arc_set[nid] = True
        first_cell = len(cells)
        for k in range(cells_per_edge):
            cells.append((chain[k], chain[k + 1]))
            cell_edge.append(e.id)
        edge_nodes[e.id] = np.array(chain, dtype=np.int64)
        edge_cells[e.id] = np.arange(first_cell, first_cell + cells_per_edge, dtype=np.int64)

    mesh = NetworkMesh(
        network=net,
        nodes=np.asarray(coords, dtype=float),
        cells=np.asarray(cells, dtype=np.int64),
        cell_edge=np.asarray(cell_edge, dtype=np.int64),
        vertex_node=vertex_node,
        node_vertex=node_vertex,
        arclength=np.asarray(arclength, dtype=float),
        cells_per_edge=cells_per_edge,
        edge_nodes=edge_nodes,
        edge_cells=edge_cells,
    )
    lengths = mesh.cell_lengths()
    if np.any(lengths <= 0):
        raise MeshError("mesh contains a zero-length cell")
    return mesh


def refine(mesh):
    """Bisect every cell. Existing node coordinates are reproduced exactly."""
    return build_mesh(mesh.network, 2 * mesh.cells_per_edge)


def tangents(net):
    """Unit tangent per edge id, pointing source -> target."""
    out = {}
    for e in net.edges_sorted():
        vec = net.position(e.target) - net.position(e.source)
        length = np.linalg.norm(vec)
        if length <= 0:
            raise MeshError(f"edge {e.id}: zero-length edge has no tangent")
        out[e.id] = vec / length
    return out


def geodesic_arclength(net, root):
    """Shortest-path distance (m) from root to every vertex, along the edges.

    Edge weights are geometric lengths and direction is ignored. Returns a map
    vertex id -> distance. Interior mesh nodes are handled by
    node_geodesic_arclength, which extends these values affinely per edge.
    """
    net.vertex(root)
    g = net.to_digraph().to_undirected(as_view=False)
    dist = nx.single_source_dijkstra_path_length(g, root, weight="length")
    missing = [v.id for v in net.vertices if v.id not in dist]
    if missing:
        raise MeshError(f"vertices unreachable from {root}: {sorted(missing)}")
    return dist


def node_geodesic_arclength(mesh, root):
    """Per mesh node distance from root: vertex distances extended affinely."""
    net = mesh.network
    dist = geodesic_arclength(net, root)
    out = np.empty(mesh.n_nodes, dtype=float)
    for e in net.edges_sorted():
        chain = mesh.edge_nodes[e.id]
        d_src, d_dst = dist[e.source], dist[e.target]
        frac = np.linspace(0.0, 1.0, len(chain))
        out[chain] = d_src + frac * (d_dst - d_src)
    # vertex nodes may be written several times; pin them to the exact values
    for vid, nid in mesh.vertex_node.items():
        out[nid] = dist[vid]
    return out
