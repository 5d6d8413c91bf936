"""Error norms, observed orders and the mesh-refinement studies."""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import geometry
from .curvature import discrete_curvature
from .fields import graph_surface_metric
from .lagrange import LagrangeFunction
from .mesh import Mesh, build_uniform_square_mesh, perturb_interior_vertices
from .quadrature import QuadratureConfig, triangle_rule
from .regge import ReggeFunction, ReggeSpace

CSV_HEADER = [
    "h",
    "l2_error",
    "l2_order",
    "h1_error",
    "h1_order",
    "g_l2_error",
    "g_h1_error",
    "dofs_regge",
    "dofs_lagrange",
    "seconds",
]


def _element_quadrature(mesh: Mesh, degree: int):
    pts, w = triangle_rule(degree)
    cells = np.arange(mesh.n_triangles)
    xy = mesh.to_physical(cells, pts)
    return cells, pts, w[None, :] * (2.0 * mesh.areas)[:, None], xy


def l2_error(u_h: LagrangeFunction, u_exact, quad: QuadratureConfig | None = None) -> float:
    """Euclidean L2 norm of u_h - u_exact, with ``u_exact(x, y)`` vectorised."""
    quad = quad or QuadratureConfig()
    cells, pts, w, xy = _element_quadrature(u_h.space.mesh, quad.tri_degree)
    val, _, _ = u_h.eval_with_derivatives(cells, pts)
    diff = val - u_exact(xy[..., 0], xy[..., 1])
    return float(np.sqrt(np.sum(w * diff**2)))


def broken_h1_seminorm_error(u_h: LagrangeFunction, grad_exact, quad: QuadratureConfig | None = None) -> float:
    """sqrt(sum_K |u_h - u|_{H1(K)}^2) given ``grad_exact(x, y) -> (..., 2)``."""
    quad = quad or QuadratureConfig()
    cells, pts, w, xy = _element_quadrature(u_h.space.mesh, quad.tri_degree)
    _, grad, _ = u_h.eval_with_derivatives(cells, pts)
    diff = grad - grad_exact(xy[..., 0], xy[..., 1])
    return float(np.sqrt(np.sum(w * np.sum(diff**2, axis=-1))))


def regge_l2_error(g_h: ReggeFunction, g, quad: QuadratureConfig | None = None) -> float:
    """Frobenius L2 norm of g_h - g for an analytic field ``g``."""
    quad = quad or QuadratureConfig()
    mesh = g_h.space.mesh
    cells, pts, w, _ = _element_quadrature(mesh, quad.tri_degree)
    diff = g_h.evaluate(mesh, cells, pts) - g.evaluate(mesh, cells, pts)
    return float(np.sqrt(np.sum(w * np.sum(diff**2, axis=(-1, -2)))))


def regge_broken_h1_error(g_h: ReggeFunction, g, quad: QuadratureConfig | None = None) -> float:
    """Broken H1 seminorm of g_h - g: element-wise derivatives of every component."""
    quad = quad or QuadratureConfig()
    mesh = g_h.space.mesh
    cells, pts, w, _ = _element_quadrature(mesh, quad.tri_degree)
    _, dgh = g_h.evaluate(mesh, cells, pts, derivatives=True)
    _, dg = g.evaluate(mesh, cells, pts, derivatives=True)
    return float(np.sqrt(np.sum(w * np.sum((dgh - dg) ** 2, axis=(-1, -2, -3)))))


def observed_orders(h, errors) -> list[float]:
    """log(e_i / e_{i+1}) / log(h_i / h_{i+1}) for consecutive pairs."""
    h = np.asarray(h, dtype=float)
    e = np.asarray(errors, dtype=float)
    return list(np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:]))


@dataclass
class ConvergenceRow:
    n: int
    h: float
    l2_error: float
    h1_error: float
    g_l2_error: float
    g_h1_error: float
    dofs_regge: int
    dofs_lagrange: int
    seconds: float


@dataclass
class ConvergenceTable:
    r: int
    q: int
    rows: list[ConvergenceRow] = field(default_factory=list)

    @property
    def h(self):
        return [row.h for row in self.rows]

    def orders(self, attr: str = "l2_error") -> list[float]:
        if len(self.rows) < 2:
            return []
        return observed_orders(self.h, [getattr(row, attr) for row in self.rows])

    def to_csv(self, timing: bool = True) -> str:
        l2 = [None] + self.orders("l2_error")
        h1 = [None] + self.orders("h1_error")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        fmt = "{:.12e}".format
        for row, o2, o1 in zip(self.rows, l2, h1):
            w.writerow(
                [
                    fmt(row.h),
                    fmt(row.l2_error),
                    "" if o2 is None else f"{o2:.6f}",
                    fmt(row.h1_error),
                    "" if o1 is None else f"{o1:.6f}",
                    fmt(row.g_l2_error),
                    fmt(row.g_h1_error),
                    row.dofs_regge,
                    row.dofs_lagrange,
                    f"{row.seconds:.3f}" if timing else "",
                ]
            )
        return buf.getvalue()

    def format(self) -> str:
        lines = [f"r={self.r} q={self.q}", f"{'h':>10} {'L2 error':>12} {'order':>7} {'H1 error':>12} {'order':>7}"]
        l2 = [None] + self.orders("l2_error")
        h1 = [None] + self.orders("h1_error")
        for row, o2, o1 in zip(self.rows, l2, h1):
            lines.append(
                f"{row.h:10.4e} {row.l2_error:12.4e} {'' if o2 is None else f'{o2:7.3f}':>7} "
                f"{row.h1_error:12.4e} {'' if o1 is None else f'{o1:7.3f}':>7}"
            )
        return "\n".join(lines)


def study_mesh(n: int, perturb: float = 0.2, seed: int | None = 42) -> Mesh:
    """Uniform n x n mesh of (-1, 1)^2 with randomly perturbed interior vertices."""
    return perturb_interior_vertices(build_uniform_square_mesh(n), perturb, seed)


def convergence_row(
    n: int,
    r: int,
    q: int = 1,
    seed: int | None = 42,
    perturb: float = 0.2,
    quad: QuadratureConfig | None = None,
    mass_kind: str = "consistent",
    solver_tol: float = 1e-12,
) -> ConvergenceRow:
    quad = quad or QuadratureConfig()
    start = time.perf_counter()
    mesh = study_mesh(n, perturb, seed)
    g = graph_surface_metric()
    g_h = ReggeSpace(mesh, r).interpolate(g)
    res = discrete_curvature(g_h, q, quad=quad, mass_kind=mass_kind, solver_tol=solver_tol)
    return ConvergenceRow(
        n=n,
        h=mesh.h,
        l2_error=l2_error(res.kappa, geometry.exact_test_curvature, quad),
        h1_error=broken_h1_seminorm_error(res.kappa, geometry.exact_test_curvature_gradient, quad),
        g_l2_error=regge_l2_error(g_h, g, quad),
        g_h1_error=regge_broken_h1_error(g_h, g, quad),
        dofs_regge=g_h.space.dim,
        dofs_lagrange=res.kappa.space.dim,
        seconds=time.perf_counter() - start,
    )


def run_convergence_study(
    r: int,
    q: int = 1,
    sizes=(8, 16, 32, 64),
    seed: int | None = 42,
    perturb: float = 0.2,
    quad: QuadratureConfig | None = None,
    mass_kind: str = "consistent",
    solver_tol: float = 1e-12,
    threads: int = 1,
) -> ConvergenceTable:
    """One row per mesh size; each mesh is regenerated from the same seed."""
    sizes = sorted(set(int(n) for n in sizes))

    def row(n):
        return convergence_row(n, r, q, seed, perturb, quad, mass_kind, solver_tol)

    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, sizes))
    else:
        rows = [row(n) for n in sizes]
    return ConvergenceTable(r=r, q=q, rows=rows)


@dataclass
class InterpolationRow:
    n: int
    h: float
    l2_error: float
    h1_error: float
    dofs: int


def run_interpolation_study(r: int, sizes=(8, 16, 32, 64), seed: int | None = 42, perturb: float = 0.2, quad=None):
    """Regge interpolation errors of the graph metric only (no curvature solve)."""
    g = graph_surface_metric()
    rows = []
    for n in sorted(set(int(n) for n in sizes)):
        mesh = study_mesh(n, perturb, seed)
        g_h = ReggeSpace(mesh, r).interpolate(g)
        rows.append(InterpolationRow(n, mesh.h, regge_l2_error(g_h, g, quad), regge_broken_h1_error(g_h, g, quad), g_h.space.dim))
    return rows
