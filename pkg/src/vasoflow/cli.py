"""Command-line front end: generate, solve, simulate, convergence.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure. All
lengths on disk are SI (meters); flags with an -mm suffix convert on parse.
"""
import argparse
import sys
from pathlib import Path

from . import export, mms, models, pulsatile
from .errors import NetworkValidationError, SingularSystemError
from .mesh import build_mesh
from .network import (
    classify_vertices,
    generate_line,
    generate_tree,
    generate_y,
    read_network,
    write_network,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


def _mm_pair(parser, name, default_m, help_text):
    group = parser.add_mutually_exclusive_group()
    group.add_argument(f"--{name}-m", type=float, default=None, help=f"{help_text} [m]")
    group.add_argument(f"--{name}-mm", type=float, default=None, help=f"{help_text} [mm]")


def _mm_value(args, name, default_m):
    m = getattr(args, f"{name.replace('-', '_')}_m")
    mm = getattr(args, f"{name.replace('-', '_')}_mm")
    if mm is not None:
        return mm * 1e-3
    if m is not None:
        return m
    return default_m


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="vasoflow",
        description="Finite-element flow simulation on spatial networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="generate a network file")
    gen.add_argument("kind", choices=["tree", "Y", "line"])
    gen.add_argument("--output", type=Path, default=Path("network.json"), help="output file")
    gen.add_argument("--generations", type=int, default=4, help="tree generations (>= 1)")
    gen.add_argument("--murray-exponent", type=float, default=3.0)
    gen.add_argument("--length-ratio", type=float, default=0.8)
    gen.add_argument("--branch-angle", type=float, default=0.5, help="half fan angle [rad]")
    _mm_pair(gen, "root-length", 2e-3, "root edge length")
    _mm_pair(gen, "root-radius", 5e-5, "root inner radius")
    gen.add_argument("--edges", type=int, default=1, help="line: number of chained edges")
    _mm_pair(gen, "length", 1e-3, "Y/line: edge or total length")
    _mm_pair(gen, "radius", 5e-5, "Y/line: inner radius")

    sol = sub.add_parser("solve", help="steady solve on a network file")
    sol.add_argument("--network", type=Path, required=True)
    sol.add_argument("--model", choices=["poisson", "hydraulic", "stokes"], default="hydraulic")
    sol.add_argument("--cells-per-edge", type=int, default=3)
    sol.add_argument("--pressure-in", type=float, default=1.0, help="pressure at every inlet [Pa]")
    sol.add_argument("--pressure-out", type=float, default=0.0, help="pressure at every outlet [Pa]")
    sol.add_argument("--viscosity", type=float, default=models.DEFAULT_VISCOSITY_PA_S)
    sol.add_argument("--output", type=Path, default=Path("."), help="output directory")

    sim = sub.add_parser("simulate", help="quasi-static pulsatile simulation")
    sim.add_argument("scenario", type=Path, help="scenario file (JSON)")
    sim.add_argument("--output", type=Path, default=Path("."), help="output directory")
    sim.add_argument("--track", type=int, nargs="+", default=None, help="override tracked vertices")
    sim.add_argument("--dt", type=float, default=None, help="override scenario dt [s]")
    sim.add_argument("--t-end", type=float, default=None, help="override scenario t_end [s]")
    sim.add_argument("--cells-per-edge", type=int, default=None, help="override mesh resolution")
    sim.add_argument("--snapshot-every", type=int, default=0, help="VTK snapshot cadence in steps")
    sim.add_argument("--volumes", action="store_true", help="add cumulative volume columns")
    sim.add_argument("--seed", type=int, default=None, help="reserved")

    conv = sub.add_parser("convergence", help="manufactured-solution rate table")
    conv.add_argument("--model", choices=["hydraulic", "stokes"], default="hydraulic")
    conv.add_argument("--levels", type=int, default=4)
    conv.add_argument("--cells-per-edge", type=int, default=4, help="coarsest level")
    return parser


def _cmd_generate(args):
    if args.kind == "tree":
        if args.generations < 1:
            raise NetworkValidationError("--generations must be >= 1")
        net = generate_tree(
            args.generations,
            root_radius_m=_mm_value(args, "root-radius", 5e-5),
            murray_exponent=args.murray_exponent,
            length_root_m=_mm_value(args, "root-length", 2e-3),
            length_ratio=args.length_ratio,
            branch_angle_rad=args.branch_angle,
        )
    elif args.kind == "Y":
        length = _mm_value(args, "length", 1e-3)
        radius = _mm_value(args, "radius", 5e-5)
        net = generate_y((length,) * 3, (radius, 0.8 * radius, 0.8 * radius))
    else:
        net = generate_line(args.edges, _mm_value(args, "length", 1e-3), _mm_value(args, "radius", 5e-5))
    write_network(net, args.output)
    cls = classify_vertices(net)
    print(f"wrote {args.output}")
    print(
        f"vertices: {len(net.vertices)}  edges: {len(net.edges)}  "
        f"bifurcations: {len(cls.bifurcations)}  inlets: {len(cls.inlets)}  "
        f"outlets: {len(cls.outlets)}"
    )
    return EXIT_OK


def _cmd_solve(args):
    net = read_network(args.network)
    cls = classify_vertices(net)
    args.output.mkdir(parents=True, exist_ok=True)
    mesh = build_mesh(net, args.cells_per_edge)

    if args.model == "poisson":
        dirichlet = {v: args.pressure_in for v in cls.inlets}
        dirichlet.update({v: args.pressure_out for v in cls.outlets})
        nodal = models.solve_poisson(net, dirichlet=dirichlet, mesh=mesh)
        export.write_vtk(mesh, nodal, args.output / "solution.vtk")
        lines = [
            "model: poisson",
            f"vertices: {len(net.vertices)}  edges: {len(net.edges)}  "
            f"bifurcations: {len(cls.bifurcations)}",
            f"solution range: [{nodal.coeffs.min():.6e}, {nodal.coeffs.max():.6e}]",
        ]
    else:
        coeffs = models.Coefficients.from_network(net, viscosity_Pa_s=args.viscosity)
        pressure = {v: args.pressure_in for v in cls.inlets}
        pressure.update({v: args.pressure_out for v in cls.outlets})
        bcs = models.BoundaryConditions(pressure=pressure)
        solver = models.solve_hydraulic if args.model == "hydraulic" else models.solve_stokes
        sol = solver(net, coeffs, bcs, mesh=mesh)
        export.write_vtk(mesh, sol, args.output / "solution.vtk")
        inflow, outflow, residual = models.mass_balance(sol)
        lines = [
            f"model: {args.model}",
            f"vertices: {len(net.vertices)}  edges: {len(net.edges)}  "
            f"bifurcations: {len(cls.bifurcations)}",
            f"total inflow  [m^3/s]: {inflow: .12e}",
            f"total outflow [m^3/s]: {outflow: .12e}",
            f"mass balance residual: {abs(residual):.3e}",
            f"max bifurcation jump:  {models.max_flux_jump(sol):.3e}",
        ]
    summary = "\n".join(lines) + "\n"
    (args.output / "summary.txt").write_text(summary, encoding="utf-8")
    print(summary, end="")
    print(f"wrote {args.output / 'solution.vtk'}")
    return EXIT_OK


def _cmd_simulate(args):
    scenario, tracked = pulsatile.read_scenario(args.scenario)
    if args.track is not None:
        tracked = args.track
    if args.dt is not None:
        scenario.dt_s = args.dt
    if args.t_end is not None:
        scenario.t_end_s = args.t_end
    if args.cells_per_edge is not None:
        scenario.cells_per_edge = args.cells_per_edge
    args.output.mkdir(parents=True, exist_ok=True)

    series = pulsatile.run_quasistatic(scenario, tracked, snapshot_every=args.snapshot_every)
    csv_path = args.output / "timeseries.csv"
    export.write_timeseries_csv(series, csv_path, include_volumes=args.volumes)
    for i, (t, sol) in enumerate(series.snapshots):
        export.write_vtk(sol.mesh, sol, args.output / f"snapshot_{i:05d}.vtk")
    print(f"wrote {csv_path} ({len(series.times)} steps, {len(tracked)} tracked vertices)")
    if series.snapshots:
        print(f"wrote {len(series.snapshots)} VTK snapshots")
    print(f"max bifurcation jump over run: {series.max_jumps.max():.3e}")
    print(f"max balance residual over run: {series.balance_residuals.max():.3e}")
    return EXIT_OK


def _cmd_convergence(args):
    if args.levels < 3:
        raise NetworkValidationError("--levels must be >= 3")
    rows = mms.convergence_study(args.model, args.levels, args.cells_per_edge)
    print(mms.format_table(args.model, rows))
    return EXIT_OK


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "generate": _cmd_generate,
        "solve": _cmd_solve,
        "simulate": _cmd_simulate,
        "convergence": _cmd_convergence,
    }
    try:
        return handlers[args.command](args)
    except SingularSystemError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (NetworkValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
