"""Quasi-static pulsatile flow driven by arterial wall motion.

The wall radius R1 oscillates around its rest value while the outer channel
wall stays frozen; at every time step the instantaneous annulus sets the
per-cell flow resistance, the rate of change of the open area acts as a
distributed source f = 2 pi R1 dR1/dt, and the chosen steady model is solved.
Time enters only through coefficients and sources (no flow inertia), so each
step is an independent steady solve and reruns are bit-identical.

Two forcing kinds are supported: a uniform waveform (every point of the
network moves in phase, sinusoidal by default or tabulated) and a travelling
sinusoidal wave whose phase advances with the geodesic distance d(s) from a
chosen origin vertex, R1 = R1_0 (1 + eps sin(2 pi (f t + d/lambda))). Crests
sweep from the far ends toward the origin, which is what pumps net volume out
of the origin ("root") of a branched tree.
"""
import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import fem, models
from .errors import SchemaError, SingularSystemError
from .mesh import build_mesh, geodesic_arclength
from .network import classify_vertices

UNIFORM = "uniform-waveform"
TRAVELLING = "travelling-wave"
LOAD_QUAD_ORDER = 4


@dataclass(frozen=True)
class WallMotion:
    """Relative wall-radius oscillation R1(t)/R1_0 - 1 of amplitude eps < 1."""

    kind: str
    amplitude: float
    frequency_hz: float
    wavelength_m: float = None
    waveform: tuple = None  # ((phases...), (values...)) on [0, 1), uniform kind only

    def __post_init__(self):
        if self.kind not in (UNIFORM, TRAVELLING):
            raise ValueError(f"unknown wall motion kind {self.kind!r}")
        if not 0.0 <= self.amplitude < 1.0:
            raise ValueError(f"amplitude must lie in [0, 1), got {self.amplitude}")
        if not self.frequency_hz > 0:
            raise ValueError("frequency must be positive")
        if self.kind == TRAVELLING:
            if not (self.wavelength_m and self.wavelength_m > 0):
                raise ValueError("travelling wave needs a positive wavelength")
            if self.waveform is not None:
                raise ValueError("tabulated waveforms apply to uniform motion only")
        if self.waveform is not None:
            phases = np.asarray(self.waveform[0], dtype=float)
            values = np.asarray(self.waveform[1], dtype=float)
            if phases.ndim != 1 or phases.shape != values.shape or len(phases) < 2:
                raise ValueError("waveform needs two equal-length sample columns")
            if np.any(np.diff(phases) <= 0) or phases[0] < 0 or phases[-1] >= 1:
                raise ValueError("waveform phases must be strictly increasing in [0, 1)")

    @property
    def period_s(self):
        return 1.0 / self.frequency_hz

    def displacement(self, phase):
        """Waveform w(phase), periodic with period 1."""
        phase = np.asarray(phase, dtype=float)
        if self.waveform is None:
            return np.sin(2.0 * math.pi * phase)
        ph, val = (np.asarray(a, dtype=float) for a in self.waveform)
        wrapped = np.mod(phase, 1.0)
        ph_ext = np.concatenate([[ph[-1] - 1.0], ph, [ph[0] + 1.0]])
        val_ext = np.concatenate([[val[-1]], val, [val[0]]])
        return np.interp(wrapped, ph_ext, val_ext)

    def displacement_rate(self, phase):
        """dw/dphase; analytic for the sinusoid, centered difference otherwise."""
        phase = np.asarray(phase, dtype=float)
        if self.waveform is None:
            return 2.0 * math.pi * np.cos(2.0 * math.pi * phase)
        delta = 1e-5
        return (self.displacement(phase + delta) - self.displacement(phase - delta)) / (2 * delta)


@dataclass
class PulsatileScenario:
    """A wall-motion forcing applied to a network with fixed boundary data."""

    network: object
    wall: WallMotion
    t_end_s: float
    dt_s: float
    model: str = "stokes"
    root: int = 0
    bcs: models.BoundaryConditions = None
    viscosity_Pa_s: float = models.DEFAULT_VISCOSITY_PA_S
    cells_per_edge: int = 3

    def __post_init__(self):
        if self.model not in ("hydraulic", "stokes"):
            raise ValueError(f"model must be hydraulic or stokes, got {self.model!r}")
        if not self.dt_s > 0:
            raise ValueError("dt_s must be positive")
        if self.t_end_s < self.dt_s:
            raise ValueError("t_end_s must cover at least one step")
        self.network.vertex(self.root)
        if self.bcs is None:
            self.bcs = models.BoundaryConditions()

    def _phase_distance(self, edge, s):
        if not hasattr(self, "_dist_cache"):
            self._dist_cache = geodesic_arclength(self.network, self.root)
        dist = self._dist_cache
        length = self.network.edge_length(edge)
        frac = np.asarray(s, dtype=float) / length
        return dist[edge.source] + frac * (dist[edge.target] - dist[edge.source])

    def _edge(self, edge_id):
        for e in self.network.edges:
            if e.id == edge_id:
                return e
        raise ValueError(f"no edge with id {edge_id}")


def _phase(scenario, edge, s, t):
    wall = scenario.wall
    if wall.kind == UNIFORM:
        return wall.frequency_hz * t + np.zeros_like(np.asarray(s, dtype=float))
    d = scenario._phase_distance(edge, s)
    return wall.frequency_hz * t + d / wall.wavelength_m


def _as_input_shape(out, s):
    return float(out) if np.ndim(s) == 0 else out


def inner_radius(scenario, edge_id, s, t):
    """Instantaneous arterial radius R1(s, t) on the given edge (meters)."""
    edge = scenario._edge(edge_id)
    wall = scenario.wall
    phase = _phase(scenario, edge, s, t)
    out = edge.inner_radius_m * (1.0 + wall.amplitude * wall.displacement(phase))
    return _as_input_shape(out, s)


def radius_rate(scenario, edge_id, s, t):
    """dR1/dt (m/s) at (s, t) on the given edge."""
    edge = scenario._edge(edge_id)
    wall = scenario.wall
    phase = _phase(scenario, edge, s, t)
    out = edge.inner_radius_m * wall.amplitude * wall.frequency_hz * wall.displacement_rate(phase)
    return _as_input_shape(out, s)


def source_term(scenario, edge_id, s, t):
    """Distributed source f = -dA/dt = 2 pi R1 dR1/dt (m^3/s per meter).

    The outer wall is frozen at its rest radius, so the open annular area
    A = pi (R2_0^2 - R1^2) shrinks when the artery expands and the displaced
    volume enters the channel.
    """
    return 2.0 * math.pi * inner_radius(scenario, edge_id, s, t) * radius_rate(
        scenario, edge_id, s, t
    )


@dataclass
class TimeSeries:
    """Recorded step data: boundary fluxes are outflow-signed (positive out).

    max_jumps and balance_residuals hold the per-step conservation
    diagnostics max_b |[[q]]_b| and |sum of boundary outflow - integral f|.
    """

    times: np.ndarray
    flux: dict  # vertex id -> (n_steps,) outflow samples in m^3/s
    period_s: float
    max_jumps: np.ndarray
    balance_residuals: np.ndarray
    flux_scale: float  # max |q| dof value seen over the run (jump normalization)
    snapshots: list = field(default_factory=list)  # (time, Solution) pairs


class _QuasiStaticDriver:
    """Precomputed mesh/operator state shared by all time steps."""

    def __init__(self, scenario):
        net = scenario.network
        self.scenario = scenario
        self.mesh = build_mesh(net, scenario.cells_per_edge)
        self.cls = classify_vertices(net)
        scenario.bcs.validate(net, self.cls)
        degree = 1 if scenario.model == "hydraulic" else 2
        variant = "P0" if scenario.model == "hydraulic" else "P1"
        self.q_space = fem.flux_space(self.mesh, degree)
        self.p_space = fem.pressure_space(self.mesh, variant)
        self.B = fem.assemble_divergence(self.q_space, self.p_space)
        self.J = fem.assemble_jump_matrix(self.q_space, self.cls)
        self.K = (
            fem.assemble_stiffness(self.q_space, scenario.viscosity_Pa_s)
            if scenario.model == "stokes"
            else None
        )
        self.F = models._pressure_bc_vector(self.q_space, scenario.bcs, net)
        self.flux_bc = models._flux_bc_dofs(self.q_space, scenario.bcs, net)

        edges = {e.id: e for e in net.edges}
        cpe = self.mesh.cells_per_edge
        n_cells = self.mesh.n_cells
        pts, _ = fem.quadrature(LOAD_QUAD_ORDER)
        self.r1_rest = np.empty(n_cells)
        self.r2_rest = np.empty(n_cells)
        self.d_mid = np.empty(n_cells)
        self.s_quad = np.empty((n_cells, len(pts)))
        self.d_quad = np.empty((n_cells, len(pts)))
        dist = geodesic_arclength(net, scenario.root)
        for eid, cells in self.mesh.edge_cells.items():
            e = edges[eid]
            length = net.edge_length(e)
            h = length / cpe
            k = np.arange(cpe)
            s_mid = (k + 0.5) * h
            self.r1_rest[cells] = e.inner_radius_m
            self.r2_rest[cells] = e.outer_radius_m
            d0, d1 = dist[e.source], dist[e.target]
            self.d_mid[cells] = d0 + (s_mid / length) * (d1 - d0)
            s_q = k[:, None] * h + pts[None, :] * h
            self.s_quad[cells] = s_q
            self.d_quad[cells] = d0 + (s_q / length) * (d1 - d0)

        # outflow bookkeeping: boundary vertex -> (flux dof, outward sign)
        self.outflow_dofs = {}
        for e in net.edges_sorted():
            if e.source in self.cls.boundary:
                self.outflow_dofs[e.source] = (self.q_space.source_dof(e.id), -1.0)
            if e.target in self.cls.boundary:
                self.outflow_dofs[e.target] = (self.q_space.target_dof(e.id), 1.0)

    def _phases(self, base, t):
        wall = self.scenario.wall
        if wall.kind == UNIFORM:
            return np.full_like(base, wall.frequency_hz * t)
        return wall.frequency_hz * t + base / wall.wavelength_m

    def step(self, t):
        wall = self.scenario.wall
        eps, f_hz = wall.amplitude, wall.frequency_hz

        r1_mid = self.r1_rest * (1.0 + eps * wall.displacement(self._phases(self.d_mid, t)))
        resistance = models.annular_resistance(
            self.scenario.viscosity_Pa_s, r1_mid, self.r2_rest
        )
        A = fem.assemble_weighted_mass(self.q_space, resistance)
        if self.K is not None:
            A = A + self.K

        phases_q = self._phases(self.d_quad, t)
        r1_q = self.r1_rest[:, None] * (1.0 + eps * wall.displacement(phases_q))
        dr1_q = self.r1_rest[:, None] * eps * f_hz * wall.displacement_rate(phases_q)
        source = 2.0 * math.pi * r1_q * dr1_q
        load = fem.assemble_load(self.p_space, source, quad_order=LOAD_QUAD_ORDER)

        system = fem.assemble_saddle(A, self.B, self.J, rhs_flux=self.F, rhs_pressure=-load)
        system = fem.eliminate_dofs(system, self.flux_bc)
        x = fem.solve_sparse(system)
        q, p, lam = system.split(x)
        return q, p, lam, float(load.sum())

    def solution(self, q, p, lam):
        mult = fem.MultiplierSpace(self.cls)
        return models.Solution(
            model=self.scenario.model,
            mesh=self.mesh,
            classification=self.cls,
            flux=fem.DiscreteFunction(self.q_space, q),
            pressure=fem.DiscreteFunction(self.p_space, p),
            multipliers={vid: float(lam[i]) for vid, i in mult.index.items()},
            bcs=self.scenario.bcs,
            source_integral=0.0,
        )


def run_quasistatic(scenario, tracked_vertices, snapshot_every=0):
    """Run the scenario, recording outflow at the tracked boundary vertices.

    Steps are t_k = k dt for k = 0 .. round(t_end/dt). snapshot_every > 0
    additionally stores the full Solution every that-many steps.
    """
    driver = _QuasiStaticDriver(scenario)
    tracked = list(tracked_vertices)
    for vid in tracked:
        if vid not in driver.outflow_dofs:
            raise ValueError(f"tracked vertex {vid} is not a boundary vertex")

    n_steps = int(round(scenario.t_end_s / scenario.dt_s))
    times = np.arange(n_steps + 1) * scenario.dt_s
    flux = {vid: np.zeros(n_steps + 1) for vid in tracked}
    max_jumps = np.zeros(n_steps + 1)
    residuals = np.zeros(n_steps + 1)
    flux_scale = 0.0
    snapshots = []
    for k, t in enumerate(times):
        try:
            q, p, lam, src_total = driver.step(t)
        except SingularSystemError as exc:
            raise SingularSystemError(f"step {k} (t = {t:.6g} s) failed: {exc}") from exc
        for vid in tracked:
            dof, sign = driver.outflow_dofs[vid]
            flux[vid][k] = sign * q[dof]
        if driver.J.shape[0]:
            max_jumps[k] = float(np.abs(driver.J @ q).max())
        total_out = sum(
            sign * q[dof] for dof, sign in driver.outflow_dofs.values()
        )
        residuals[k] = abs(total_out - src_total)
        flux_scale = max(flux_scale, float(np.abs(q).max()))
        if snapshot_every and k % snapshot_every == 0:
            snapshots.append((float(t), driver.solution(q, p, lam)))
    return TimeSeries(
        times=times,
        flux=flux,
        period_s=scenario.wall.period_s,
        max_jumps=max_jumps,
        balance_residuals=residuals,
        flux_scale=flux_scale,
        snapshots=snapshots,
    )


def net_volume(series, vertex_id, over):
    """Trapezoidal net outflow volume (m^3) over exactly `over` whole periods."""
    if over < 1:
        raise ValueError("need at least one whole period")
    if vertex_id not in series.flux:
        raise ValueError(f"vertex {vertex_id} was not tracked")
    target = over * series.period_s
    times = series.times
    idx = int(round(target / (times[1] - times[0]))) if len(times) > 1 else 0
    if idx >= len(times) or abs(times[idx] - target) > 1e-9 * max(series.period_s, 1.0):
        raise ValueError(
            f"series does not cover {over} whole periods at the sampling step"
        )
    return float(trapezoid(series.flux[vertex_id][: idx + 1], x=times[: idx + 1]))


def stroke_volume(scenario):
    """Half the volume displaced by the wall over one period: 0.5 int int |f| ds dt."""
    driver = _QuasiStaticDriver(scenario)
    wall = scenario.wall
    _, wts = fem.quadrature(LOAD_QUAD_ORDER)
    h = driver.mesh.cell_lengths()
    n_steps = max(int(round(wall.period_s / scenario.dt_s)), 2)
    times = np.linspace(0.0, wall.period_s, n_steps + 1)
    totals = np.empty(n_steps + 1)
    for k, t in enumerate(times):
        phases = driver._phases(driver.d_quad, t)
        r1 = driver.r1_rest[:, None] * (1.0 + wall.amplitude * wall.displacement(phases))
        dr1 = (
            driver.r1_rest[:, None]
            * wall.amplitude
            * wall.frequency_hz
            * wall.displacement_rate(phases)
        )
        f_abs = np.abs(2.0 * math.pi * r1 * dr1)
        totals[k] = float(np.sum(h * (f_abs @ wts)))
    return 0.5 * float(trapezoid(totals, x=times))


# scenario files: JSON mirroring PulsatileScenario, paths relative to the file
_WALL_KEYS = {"kind", "amplitude", "frequency_hz", "wavelength_m", "waveform_csv"}
_SCENARIO_KEYS = {
    "network",
    "model",
    "root",
    "t_end_s",
    "dt_s",
    "cells_per_edge",
    "viscosity_Pa_s",
    "pressure_bc",
    "flux_bc",
    "track",
    "wall",
}


def read_waveform_csv(path):
    """Two-column CSV (phase in [0, 1), relative displacement); '#' comments."""
    phases, values = [], []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row_no, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].lstrip().startswith("#"):
                continue
            if len(row) != 2:
                raise SchemaError(f"{path}:{row_no}", f"expected 2 columns, got {len(row)}")
            try:
                phase, value = float(row[0]), float(row[1])
            except ValueError:
                if row_no == 1:
                    continue  # header row
                raise SchemaError(f"{path}:{row_no}", f"non-numeric row {row!r}") from None
            phases.append(phase)
            values.append(value)
    if len(phases) < 2:
        raise SchemaError(str(path), "waveform needs at least two samples")
    return tuple(phases), tuple(values)


def read_scenario(path):
    """Load a scenario file; returns (PulsatileScenario, tracked vertex ids)."""
    import json
    from pathlib import Path

    from .network import read_network

    base = Path(path).parent
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(str(path), f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise SchemaError(str(path), "top level must be an object")
    unknown = set(doc) - _SCENARIO_KEYS
    if unknown:
        raise SchemaError(str(path), f"unknown keys {sorted(unknown)}")
    for key in ("network", "t_end_s", "dt_s", "wall"):
        if key not in doc:
            raise SchemaError(str(path), f"missing required key '{key}'")

    wall_doc = doc["wall"]
    if not isinstance(wall_doc, dict):
        raise SchemaError(f"{path}:wall", "expected an object")
    unknown = set(wall_doc) - _WALL_KEYS
    if unknown:
        raise SchemaError(f"{path}:wall", f"unknown keys {sorted(unknown)}")
    waveform = None
    if "waveform_csv" in wall_doc:
        waveform = read_waveform_csv(base / wall_doc["waveform_csv"])
    try:
        wall = WallMotion(
            kind=wall_doc.get("kind", TRAVELLING),
            amplitude=float(wall_doc.get("amplitude", 0.1)),
            frequency_hz=float(wall_doc.get("frequency_hz", 1.0)),
            wavelength_m=(
                float(wall_doc["wavelength_m"]) if "wavelength_m" in wall_doc else None
            ),
            waveform=waveform,
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"{path}:wall", str(exc)) from exc

    net = read_network(base / doc["network"])
    cls = classify_vertices(net)

    def _bc_map(key):
        raw = doc.get(key)
        if raw is None:
            return {}
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return {vid: float(raw) for vid in sorted(cls.boundary)}
        if not isinstance(raw, dict):
            raise SchemaError(f"{path}:{key}", "expected a number or an object")
        try:
            return {int(k): float(v) for k, v in raw.items()}
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{path}:{key}", str(exc)) from exc

    bcs = models.BoundaryConditions(pressure=_bc_map("pressure_bc"), flux=_bc_map("flux_bc"))
    try:
        scenario = PulsatileScenario(
            network=net,
            wall=wall,
            t_end_s=float(doc["t_end_s"]),
            dt_s=float(doc["dt_s"]),
            model=doc.get("model", "stokes"),
            root=int(doc.get("root", 0)),
            bcs=bcs,
            viscosity_Pa_s=float(doc.get("viscosity_Pa_s", models.DEFAULT_VISCOSITY_PA_S)),
            cells_per_edge=int(doc.get("cells_per_edge", 3)),
        )
    except (TypeError, ValueError) as exc:
        raise SchemaError(str(path), str(exc)) from exc
    tracked = doc.get("track")
    if tracked is None:
        tracked = sorted(cls.boundary)
    elif not isinstance(tracked, list):
        raise SchemaError(f"{path}:track", "expected a list of vertex ids")
    return scenario, [int(v) for v in tracked]
