"""High-order discrete Gaussian curvature of Regge finite element metrics."""

__version__ = "0.1.0"

from .assembly import Assembler, MetricNotSPDError, SolverError, assemble_b_h, solve_spd  # noqa: E402
from .curvature import (  # noqa: E402
    CurvatureResult,
    angle_defect,
    angle_defects,
    discrete_curvature,
    verify_linearization,
)
from .fields import AnalyticField, ConstantField, graph_surface_metric  # noqa: E402
from .lagrange import LagrangeFunction, LagrangeSpace  # noqa: E402
from .mesh import Mesh, build_uniform_square_mesh, perturb_interior_vertices  # noqa: E402
from .quadrature import QuadratureConfig  # noqa: E402
from .regge import ReggeFunction, ReggeSpace  # noqa: E402

__all__ = [
    "Assembler",
    "AnalyticField",
    "ConstantField",
    "CurvatureResult",
    "LagrangeFunction",
    "LagrangeSpace",
    "Mesh",
    "MetricNotSPDError",
    "QuadratureConfig",
    "ReggeFunction",
    "ReggeSpace",
    "SolverError",
    "angle_defect",
    "angle_defects",
    "assemble_b_h",
    "build_uniform_square_mesh",
    "discrete_curvature",
    "graph_surface_metric",
    "perturb_interior_vertices",
    "solve_spd",
    "verify_linearization",
]
