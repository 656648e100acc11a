"""Finite-element fluid flow on spatial networks.

Steady hydraulic and reduced-Stokes models on directed metric graphs with
Lagrange-multiplier mass conservation at bifurcations, plus quasi-static
pulsatile simulations of annular perivascular flow driven by wall motion.
"""
from .errors import (
    MeshError,
    NetworkValidationError,
    SchemaError,
    SingularSystemError,
)
from .fem import (
    BlockSystem,
    DiscreteFunction,
    LineSpace,
    MultiplierSpace,
    assemble_divergence,
    assemble_jump_matrix,
    assemble_load,
    assemble_saddle,
    assemble_stiffness,
    assemble_weighted_mass,
    dds,
    flux_space,
    pressure_space,
    quadrature,
    solve_sparse,
)
from .mesh import (
    NetworkMesh,
    build_mesh,
    geodesic_arclength,
    node_geodesic_arclength,
    refine,
    tangents,
)
from .models import (
    BoundaryConditions,
    Coefficients,
    Solution,
    annular_resistance,
    annulus_area,
    boundary_outflow,
    evaluate_flux,
    flux_jump,
    mass_balance,
    max_flux_jump,
    solve_hydraulic,
    solve_poisson,
    solve_stokes,
    vertex_pressure,
)
from .network import (
    Edge,
    Network,
    Vertex,
    VertexClassification,
    classify_vertices,
    generate_line,
    generate_tree,
    generate_y,
    read_network,
    write_network,
)
from .pulsatile import (
    PulsatileScenario,
    TimeSeries,
    WallMotion,
    inner_radius,
    net_volume,
    read_scenario,
    run_quasistatic,
    source_term,
    stroke_volume,
)

__version__ = "0.1.0"
