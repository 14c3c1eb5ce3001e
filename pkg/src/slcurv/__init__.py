"""Constant special Lagrangian curvature graphs in hyperbolic space.

Matrix curvature calculus, umbilic-cap oracles, discrete shape operators on
polar graph lattices, Perron-style convexity primitives, comparison
diagnostics, and a homotopy damped-Newton Dirichlet solver.
"""

from .slcalc import (
    CurvatureQuery,
    SLDerivatives,
    SymMat,
    arctan_sym,
    d2_sigma,
    d_r,
    d_sl,
    k_bounds,
    r_theta,
    sl,
)
from .hgeom import (
    DomainSpec,
    MinkPoint,
    UmbilicCap,
    cap_height,
    fermi_embed,
    offset_cap,
    poincare_project,
    poincare_unproject,
    umbilic_cap,
)
from .shape import (
    GraphFn,
    Grid,
    ShapeField,
    build_grid,
    delta_b,
    load_graph,
    save_graph,
    shape_at,
    shape_field,
)
from .convexops import MollifyConfig, min_combine, mollify, weak_curvature_lb
from .diag import Verdict, f_threshold, max_principle_check, mu_boundary, subharmonic_probe
from .solver import SolveConfig, SolveReport, continuity_solve, jacobian, newton_solve

__all__ = [
    "CurvatureQuery",
    "SLDerivatives",
    "SymMat",
    "arctan_sym",
    "d2_sigma",
    "d_r",
    "d_sl",
    "k_bounds",
    "r_theta",
    "sl",
    "DomainSpec",
    "MinkPoint",
    "UmbilicCap",
    "cap_height",
    "fermi_embed",
    "offset_cap",
    "poincare_project",
    "poincare_unproject",
    "umbilic_cap",
    "GraphFn",
    "Grid",
    "ShapeField",
    "build_grid",
    "delta_b",
    "load_graph",
    "save_graph",
    "shape_at",
    "shape_field",
    "MollifyConfig",
    "min_combine",
    "mollify",
    "weak_curvature_lb",
    "Verdict",
    "f_threshold",
    "max_principle_check",
    "mu_boundary",
    "subharmonic_probe",
    "SolveConfig",
    "SolveReport",
    "continuity_solve",
    "jacobian",
    "newton_solve",
]
