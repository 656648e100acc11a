"""Directed spatial networks: data model, vertex classification, generators, file I/O.

A network is a weakly connected directed graph embedded in 3D. Every edge is a
straight segment carrying an inner (arterial) radius and an outer radius
bounding the surrounding annular flow channel. All quantities are SI (meters).
"""
import json
import math
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from .errors import NetworkValidationError, SchemaError

DEFAULT_OUTER_RADIUS_FACTOR = 3.0

# Generator defaults chosen so a four-generation tree is ~5.9 mm deep,
# comparable to the 8 mm wavelength used in the travelling-wave scenario.
DEFAULT_ROOT_LENGTH_M = 2e-3
DEFAULT_ROOT_RADIUS_M = 5e-5
DEFAULT_LENGTH_RATIO = 0.8
DEFAULT_BRANCH_ANGLE_RAD = 0.5
MAX_TREE_GENERATIONS = 20


@dataclass(frozen=True)
class Vertex:
    id: int
    position: tuple  # (x, y, z) in meters


@dataclass(frozen=True)
class Edge:
    id: int
    source: int
    target: int
    inner_radius_m: float
    outer_radius_m: float = None  # defaults to 3 * inner_radius_m
    resistance_override: float = None  # Pa*s/m^4 per unit length, optional

    def __post_init__(self):
        if self.outer_radius_m is None:
            object.__setattr__(
                self, "outer_radius_m", DEFAULT_OUTER_RADIUS_FACTOR * self.inner_radius_m
            )


@dataclass(frozen=True)
class Network:
    """Immutable directed network with 3D-embedded vertices.

    Construction validates all structural invariants; instances can be shared
    freely across threads afterwards.
    """

    vertices: tuple
    edges: tuple
    _vertex_index: dict = field(init=False, repr=False, compare=False)

    def __init__(self, vertices, edges):
        object.__setattr__(self, "vertices", tuple(vertices))
        object.__setattr__(self, "edges", tuple(edges))
        object.__setattr__(
            self, "_vertex_index", {v.id: v for v in self.vertices}
        )
        self._validate()

    def _validate(self):
        if not self.vertices:
            raise NetworkValidationError("network has no vertices")
        if len(self._vertex_index) != len(self.vertices):
            seen, dup = set(), None
            for v in self.vertices:
                if v.id in seen:
                    dup = v.id
                    break
                seen.add(v.id)
            raise NetworkValidationError(f"duplicate vertex id {dup}")
        for v in self.vertices:
            pos = np.asarray(v.position, dtype=float)
            if pos.shape != (3,) or not np.all(np.isfinite(pos)):
                raise NetworkValidationError(
                    f"vertex {v.id}: position must be a finite 3-vector, got {v.position}"
                )
        edge_ids = set()
        seen_pairs = set()
        for e in self.edges:
            if e.id in edge_ids:
                raise NetworkValidationError(f"duplicate edge id {e.id}")
            edge_ids.add(e.id)
            for end, name in ((e.source, "source"), (e.target, "target")):
                if end not in self._vertex_index:
                    raise NetworkValidationError(
                        f"edge {e.id}: {name} references missing vertex id {end}"
                    )
            if e.source == e.target:
                raise NetworkValidationError(f"edge {e.id}: source equals target ({e.source})")
            if (e.source, e.target) in seen_pairs:
                raise NetworkValidationError(
                    f"duplicate directed edge {e.source} -> {e.target}"
                )
            seen_pairs.add((e.source, e.target))
            if not (e.inner_radius_m > 0 and math.isfinite(e.inner_radius_m)):
                raise NetworkValidationError(
                    f"edge {e.id}: inner radius must be positive, got {e.inner_radius_m}"
                )
            if not (e.outer_radius_m > e.inner_radius_m):
                raise NetworkValidationError(
                    f"edge {e.id}: outer radius {e.outer_radius_m} must exceed "
                    f"inner radius {e.inner_radius_m}"
                )
            if e.resistance_override is not None and not (
                e.resistance_override > 0 and math.isfinite(e.resistance_override)
            ):
                raise NetworkValidationError(
                    f"edge {e.id}: resistance override must be positive"
                )
            if self.edge_length(e) <= 0:
                raise NetworkValidationError(f"edge {e.id}: zero geometric length")
        incident = {v.id for e in self.edges for v in (self.vertex(e.source), self.vertex(e.target))}
        for v in self.vertices:
            if v.id not in incident:
                raise NetworkValidationError(f"vertex {v.id} is isolated (no incident edge)")
        if not nx.is_weakly_connected(self.to_digraph()):
            raise NetworkValidationError("network is not weakly connected")

    def vertex(self, vid):
        try:
            return self._vertex_index[vid]
        except KeyError:
            raise NetworkValidationError(f"no vertex with id {vid}") from None

    def position(self, vid):
        return np.asarray(self.vertex(vid).position, dtype=float)

    def edge_length(self, edge):
        if isinstance(edge, int):
            edge = next(e for e in self.edges if e.id == edge)
        return float(
            np.linalg.norm(self.position(edge.target) - self.position(edge.source))
        )

    def edges_sorted(self):
        return sorted(self.edges, key=lambda e: e.id)

    def to_digraph(self):
        """NetworkX view (graph algorithms only; attributes stay on the dataclasses)."""
        g = nx.DiGraph()
        g.add_nodes_from(v.id for v in self.vertices)
        for e in self.edges:
            g.add_edge(e.source, e.target, length=self.edge_length(e), id=e.id)
        return g


@dataclass(frozen=True)
class VertexClassification:
    """Partition of the vertex set into interior (bifurcation) and boundary vertices.

    Every vertex with total degree >= 2 is interior and receives a coupling
    constraint; degree-1 vertices are boundary, split into inlets (only
    out-edges) and outlets (only in-edges).
    """

    bifurcations: frozenset
    inlets: frozenset
    outlets: frozenset

    @property
    def boundary(self):
        return self.inlets | self.outlets


def classify_vertices(net):
    """Classify vertices by degree; deterministic for a given network."""
    out_deg = {v.id: 0 for v in net.vertices}
    in_deg = {v.id: 0 for v in net.vertices}
    for e in net.edges:
        out_deg[e.source] += 1
        in_deg[e.target] += 1
    bifurcations, inlets, outlets = set(), set(), set()
    for v in net.vertices:
        deg = in_deg[v.id] + out_deg[v.id]
        if deg == 0:
            raise NetworkValidationError(f"vertex {v.id} is isolated")
        if deg >= 2:
            bifurcations.add(v.id)
        elif out_deg[v.id] == 1:
            inlets.add(v.id)
        else:
            outlets.add(v.id)
    return VertexClassification(frozenset(bifurcations), frozenset(inlets), frozenset(outlets))


def generate_tree(
    generations,
    root_radius_m=DEFAULT_ROOT_RADIUS_M,
    murray_exponent=3.0,
    length_root_m=DEFAULT_ROOT_LENGTH_M,
    length_ratio=DEFAULT_LENGTH_RATIO,
    branch_angle_rad=DEFAULT_BRANCH_ANGLE_RAD,
):
    """Symmetric binary tree in the z=0 plane with Murray-law radius tapering.

    Generation 1 is the single root edge; each subsequent generation splits
    every tip into two children fanning by +-branch_angle_rad. Child radius is
    parent * 2**(-1/murray_exponent), child length is parent * length_ratio.

    Returns a network with 2**generations - 1 edges, rooted at vertex 0.
    """
    if generations < 1:
        raise ValueError("generations must be >= 1")
    if generations > MAX_TREE_GENERATIONS:
        raise ValueError(
            f"generations > {MAX_TREE_GENERATIONS} would create "
            f"{2 ** generations - 1} edges; refusing"
        )
    for name, val in (
        ("root_radius_m", root_radius_m),
        ("murray_exponent", murray_exponent),
        ("length_root_m", length_root_m),
        ("length_ratio", length_ratio),
        ("branch_angle_rad", branch_angle_rad),
    ):
        if not (val > 0 and math.isfinite(val)):
            raise ValueError(f"{name} must be positive, got {val}")

    radius_factor = 2.0 ** (-1.0 / murray_exponent)
    vertices = [Vertex(0, (0.0, 0.0, 0.0))]
    edges = []
    # frontier entries: (tip vertex id, direction angle in the plane)
    frontier = [(0, 0.0)]
    length = length_root_m
    radius = root_radius_m
    for gen in range(1, generations + 1):
        new_frontier = []
        fan = [0.0] if gen == 1 else [branch_angle_rad, -branch_angle_rad]
        for tip, heading in frontier:
            for dtheta in fan:
                theta = heading + dtheta
                tip_pos = np.asarray(vertices[tip].position)
                pos = tip_pos + length * np.array([math.cos(theta), math.sin(theta), 0.0])
                vid = len(vertices)
                vertices.append(Vertex(vid, tuple(pos)))
                edges.append(Edge(len(edges), tip, vid, radius))
                new_frontier.append((vid, theta))
        frontier = new_frontier
        length *= length_ratio
        radius *= radius_factor
    return Network(vertices, edges)


def generate_y(lengths_m=(1e-3, 1e-3, 1e-3), radii_m=(5e-5, 4e-5, 4e-5), half_angle_rad=0.7):
    """Minimal bifurcation network: one inlet edge feeding two outlet edges."""
    l0, l1, l2 = lengths_m
    for val in (*lengths_m, *radii_m):
        if not (val > 0 and math.isfinite(val)):
            raise ValueError("lengths and radii must be positive")
    junction = np.array([l0, 0.0, 0.0])
    tip1 = junction + l1 * np.array([math.cos(half_angle_rad), math.sin(half_angle_rad), 0.0])
    tip2 = junction + l2 * np.array([math.cos(half_angle_rad), -math.sin(half_angle_rad), 0.0])
    vertices = [
        Vertex(0, (0.0, 0.0, 0.0)),
        Vertex(1, tuple(junction)),
        Vertex(2, tuple(tip1)),
        Vertex(3, tuple(tip2)),
    ]
    edges = [
        Edge(0, 0, 1, radii_m[0]),
        Edge(1, 1, 2, radii_m[1]),
        Edge(2, 1, 3, radii_m[2]),
    ]
    return Network(vertices, edges)


def generate_line(num_edges=1, total_length_m=1e-3, radius_m=5e-5):
    """Straight chain of num_edges collinear edges along +x."""
    if num_edges < 1:
        raise ValueError("num_edges must be >= 1")
    if not (total_length_m > 0 and radius_m > 0):
        raise ValueError("length and radius must be positive")
    h = total_length_m / num_edges
    vertices = [Vertex(i, (i * h, 0.0, 0.0)) for i in range(num_edges + 1)]
    edges = [Edge(i, i, i + 1, radius_m) for i in range(num_edges)]
    return Network(vertices, edges)


# On-disk schema: JSON document with exactly the keys below, SI units.
_VERTEX_KEYS = {"id", "x", "y", "z"}
_EDGE_KEYS_REQUIRED = {"id", "source", "target", "radius1"}
_EDGE_KEYS_OPTIONAL = {"radius2", "resistance"}


def _require_number(obj, key, location):
    if key not in obj:
        raise SchemaError(location, f"missing required key '{key}'")
    val = obj[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"{location}.{key}", f"expected a number, got {val!r}")
    if not math.isfinite(val):
        raise SchemaError(f"{location}.{key}", f"non-finite value {val!r}")
    return val


def _require_int(obj, key, location):
    val = _require_number(obj, key, location)
    if isinstance(val, float) and not val.is_integer():
        raise SchemaError(f"{location}.{key}", f"expected an integer, got {val!r}")
    return int(val)


def read_network(path):
    """Read a network file (JSON; vertices/edges schema) with location diagnostics."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(str(path), f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(str(path), "top level must be an object")
    unknown = set(doc) - {"vertices", "edges"}
    if unknown:
        raise SchemaError(str(path), f"unknown top-level keys {sorted(unknown)}")
    for key in ("vertices", "edges"):
        if key not in doc or not isinstance(doc[key], list):
            raise SchemaError(str(path), f"'{key}' must be present and a list")

    vertices = []
    for i, item in enumerate(doc["vertices"]):
        loc = f"vertices[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(loc, "expected an object")
        unknown = set(item) - _VERTEX_KEYS
        if unknown:
            raise SchemaError(loc, f"unknown keys {sorted(unknown)}")
        vid = _require_int(item, "id", loc)
        pos = tuple(_require_number(item, k, loc) for k in ("x", "y", "z"))
        vertices.append(Vertex(vid, pos))

    edges = []
    for i, item in enumerate(doc["edges"]):
        loc = f"edges[{i}]"
        if not isinstance(item, dict):
            raise SchemaError(loc, "expected an object")
        unknown = set(item) - _EDGE_KEYS_REQUIRED - _EDGE_KEYS_OPTIONAL
        if unknown:
            raise SchemaError(loc, f"unknown keys {sorted(unknown)}")
        eid = _require_int(item, "id", loc)
        source = _require_int(item, "source", loc)
        target = _require_int(item, "target", loc)
        radius1 = _require_number(item, "radius1", loc)
        radius2 = _require_number(item, "radius2", loc) if "radius2" in item else None
        resistance = _require_number(item, "resistance", loc) if "resistance" in item else None
        edges.append(Edge(eid, source, target, radius1, radius2, resistance))

    try:
        return Network(vertices, edges)
    except SchemaError:
        raise
    except NetworkValidationError as exc:
        raise SchemaError(str(path), str(exc)) from exc


def write_network(net, path):
    """Write a network file; read_network(write_network(net)) reproduces net."""
    doc = {
        "vertices": [
            {"id": v.id, "x": v.position[0], "y": v.position[1], "z": v.position[2]}
            for v in net.vertices
        ],
        "edges": [],
    }
    for e in net.edges_sorted():
        item = {
            "id": e.id,
            "source": e.source,
            "target": e.target,
            "radius1": e.inner_radius_m,
            "radius2": e.outer_radius_m,
        }
        if e.resistance_override is not None:
            item["resistance"] = e.resistance_override
        doc["edges"].append(item)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
