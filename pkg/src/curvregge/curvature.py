"""Discrete Gaussian curvature, the classical angle defect, and the check
that the angle defect linearises to one half of b_h."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import Assembler, SolverInfo, solve_spd
from .lagrange import LagrangeFunction, LagrangeSpace
from .mesh import vertex_star
from .quadrature import QuadratureConfig
from .regge import ReggeFunction, SPDReport

MASS_KINDS = ("consistent", "lumped")


class TriangleInequalityError(ValueError):
    """Metric edge lengths of a triangle cannot close up into a flat triangle."""


@dataclass
class CurvatureResult:
    kappa: LagrangeFunction
    rhs: np.ndarray
    mass_matrix: object
    mass_kind: str
    solver: SolverInfo
    spd: SPDReport
    quad: QuadratureConfig

    def pairing(self, dof: int) -> float:
        """<kappa_h, phi_dof>_{g_h}, the mass-matrix row applied to kappa_h."""
        return (self.mass_matrix[dof] @ self.kappa.coeffs).item()

    def pairings(self) -> np.ndarray:
        return self.mass_matrix @ self.kappa.coeffs


def discrete_curvature(
    g_h: ReggeFunction,
    q: int = 1,
    quad: QuadratureConfig | None = None,
    mass_kind: str = "consistent",
    solver_tol: float = 1e-12,
    space: LagrangeSpace | None = None,
) -> CurvatureResult:
    """The kappa_h in V_h with <kappa_h, v>_{g_h} = 1/2 int_0^1 b_h(G(t); g_h - delta, v) dt."""
    if mass_kind not in MASS_KINDS:
        raise ValueError(f"mass_kind must be one of {MASS_KINDS}, got {mass_kind!r}")
    quad = quad or QuadratureConfig()
    space = space or LagrangeSpace(g_h.space.mesh, q)
    spd = g_h.check_spd(quad.tri_degree)
    if not spd.is_spd:
        from .assembly import MetricNotSPDError

        raise MetricNotSPDError(f"discrete metric outside the positive cone: {spd}", cell=spd.worst_cell, point=spd.worst_point)
    asm = Assembler(space, quad)
    rhs = asm.curvature_rhs(g_h)
    M = asm.mass_matrix(g_h, lumped=mass_kind == "lumped")
    coeffs, info = solve_spd(M, rhs, tol=solver_tol)
    return CurvatureResult(
        kappa=LagrangeFunction(space, coeffs),
        rhs=rhs,
        mass_matrix=M,
        mass_kind=mass_kind,
        solver=info,
        spd=spd,
        quad=quad,
    )


def pairing(result: CurvatureResult, dof: int) -> float:
    return result.pairing(dof)


# --- angle defect -------------------------------------------------------------


@dataclass
class AngleDefectReport:
    vertices: np.ndarray  # interior vertex indices
    defects: np.ndarray  # 2 pi - sum of angles, per entry of ``vertices``
    angles: np.ndarray  # (T, 3) interior angle at each local vertex
    lengths: np.ndarray  # (T, 3) metric length of each local edge

    def at(self, vertex: int) -> float:
        hit = np.flatnonzero(self.vertices == vertex)
        if not len(hit):
            raise ValueError(f"vertex {vertex} is not an interior vertex")
        return float(self.defects[hit[0]])


def _piecewise_constant_values(g_h: ReggeFunction) -> np.ndarray:
    if g_h.space.r != 0:
        raise ValueError(f"angle defect needs a piecewise constant (r = 0) metric, got r = {g_h.space.r}")
    mesh = g_h.space.mesh
    return g_h.evaluate(mesh, np.arange(mesh.n_triangles), np.array([[1 / 3, 1 / 3]]))[:, 0]


def triangle_angles(g_h: ReggeFunction, cos_tol: float = 1e-12):
    """Interior angles (T, 3) and edge lengths (T, 3) measured by g_h, from
    the law of cosines a^2 + b^2 - c^2 = 2 a b cos(theta)."""
    mesh = g_h.space.mesh
    g = _piecewise_constant_values(g_h)
    p = mesh.vertices[mesh.triangles]
    lengths = np.empty((mesh.n_triangles, 3))
    for k in range(3):
        e = p[:, (k + 2) % 3] - p[:, (k + 1) % 3]
        lengths[:, k] = np.sqrt(np.einsum("ti,tij,tj->t", e, g, e))
    angles = np.empty_like(lengths)
    for k in range(3):
        c = lengths[:, k]
        a = lengths[:, (k + 1) % 3]
        b = lengths[:, (k + 2) % 3]
        if np.any(c >= a + b):
            bad = int(np.flatnonzero(c >= a + b)[0])
            raise TriangleInequalityError(f"metric edge lengths of triangle {bad} violate the triangle inequality")
        cos = (a**2 + b**2 - c**2) / (2 * a * b)
        if np.any(np.abs(cos) > 1 + cos_tol):
            bad = int(np.flatnonzero(np.abs(cos) > 1 + cos_tol)[0])
            raise TriangleInequalityError(f"cos(theta) = {cos[bad]!r} out of range in triangle {bad}")
        angles[:, k] = np.arccos(np.clip(cos, -1.0, 1.0))
    return angles, lengths


def angle_defects(g_h: ReggeFunction) -> AngleDefectReport:
    mesh = g_h.space.mesh
    angles, lengths = triangle_angles(g_h)
    total = np.bincount(mesh.triangles.ravel(), weights=angles.ravel(), minlength=mesh.n_vertices)
    interior = mesh.interior_vertices
    return AngleDefectReport(interior, 2 * np.pi - total[interior], angles, lengths)


def angle_defect(g_h: ReggeFunction, vertex: int) -> float:
    """2 pi minus the sum of g_h-angles at ``vertex`` over its star."""
    mesh = g_h.space.mesh
    if mesh.boundary_vertices[vertex]:
        raise ValueError(f"vertex {vertex} lies on the boundary")
    star = vertex_star(mesh, vertex)
    angles, _ = triangle_angles(g_h)
    local = np.argmax(mesh.triangles[star.triangles] == vertex, axis=1)
    return float(2 * np.pi - angles[star.triangles, local].sum())


@dataclass
class LinearizationCheck:
    fd_derivative: float
    half_b_h: float

    @property
    def discrepancy(self) -> float:
        return abs(self.fd_derivative - self.half_b_h)


def verify_linearization(
    g_h: ReggeFunction,
    sigma_h: ReggeFunction,
    vertex: int,
    eps: float,
    quad: QuadratureConfig | None = None,
    assembler: Assembler | None = None,
) -> LinearizationCheck:
    """Central difference of the angle defect along g_h + eps sigma_h versus
    1/2 b_h(g_h; sigma_h, phi_vertex)."""
    if not 0 < eps:
        raise ValueError("eps must be positive")
    plus = g_h + eps * sigma_h
    minus = g_h - eps * sigma_h
    for m in (plus, minus):
        if not m.check_spd(1).is_spd:
            raise ValueError(f"eps = {eps} too large: perturbed metric leaves the SPD cone")
    fd = (angle_defect(plus, vertex) - angle_defect(minus, vertex)) / (2 * eps)
    asm = assembler or Assembler(LagrangeSpace(g_h.space.mesh, 1), quad)
    b = asm.b_h(asm.sample(g_h, derivatives=True), asm.sample(sigma_h, derivatives=False))
    return LinearizationCheck(float(fd), 0.5 * float(b[asm.space.vertex_dof(vertex)]))
