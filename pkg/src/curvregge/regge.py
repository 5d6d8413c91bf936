"""Degree-r Regge finite elements on a triangulation.

Degrees of freedom are the functionals ``sigma -> tau^T sigma(z) tau`` at the
midpoint ``z`` of every sub-edge of the subdivision lattice, with ``tau`` the
Euclidean unit tangent of that sub-edge. Inside each triangle a field is stored
in the basis ``monomial(xi, eta) * E_c`` with E_11, E_12, E_22 the elementary
symmetric matrices in physical components, and the local dual basis comes from
inverting the (n_local x n_local) matrix of functionals applied to that basis.
Dofs on a mesh edge are shared between its two triangles, which is exactly
tangential-tangential continuity: tau^T sigma tau restricted to an edge is a
degree-r polynomial pinned by its r + 1 shared midpoint values.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import geometry, polynomials
from .mesh import LOCAL_EDGES, Mesh, subdivision_lattice
from .quadrature import triangle_rule

SYM_BASIS = np.array(
    [
        [[1.0, 0.0], [0.0, 0.0]],
        [[0.0, 1.0], [1.0, 0.0]],
        [[0.0, 0.0], [0.0, 1.0]],
    ]
)


class ReggeSpace:
    def __init__(self, mesh: Mesh, r: int):
        self.mesh = mesh
        self.r = int(r)
        self.lattice = subdivision_lattice(mesh, r)
        self.n_monomials = len(polynomials.exponents(self.r))
        self.n_local = self.lattice.n_local
        assert self.n_local == 3 * self.n_monomials

        # functional e applied to basis (c, p): tau_e^T E_c tau_e * mono_p(z_e)
        tau = self.lattice.tangents  # (T, L, 2)
        tEt = np.einsum("tli,cij,tlj->tlc", tau, SYM_BASIS, tau)
        (mono,) = polynomials.monomials(self.r, self.lattice.ref_midpoints[:, 1:])
        A = np.einsum("tlc,lp->tlcp", tEt, mono).reshape(mesh.n_triangles, self.n_local, self.n_local)
        try:
            self._dual_inverse = np.linalg.inv(A)
        except np.linalg.LinAlgError as exc:
            raise ValueError("singular local Regge system (degenerate triangle?)") from exc
        self._functional_matrix = A

    @property
    def dim(self) -> int:
        return self.lattice.n_global

    @property
    def local_to_global(self) -> np.ndarray:
        return self.lattice.local_to_global

    def condition_numbers(self) -> np.ndarray:
        """2-norm condition number of each local functional matrix."""
        return np.linalg.cond(self._functional_matrix)

    def local_basis_coefficients(self, cell: int) -> np.ndarray:
        """Monomial-times-matrix coefficients of the local dual basis psi_e,
        shape (n_local, 3, n_monomials): row e is psi_e."""
        return self._dual_inverse[cell].T.reshape(self.n_local, 3, self.n_monomials)

    def function(self, coeffs) -> "ReggeFunction":
        return ReggeFunction(self, coeffs)

    def zero(self) -> "ReggeFunction":
        return ReggeFunction(self, np.zeros(self.dim))

    def identity(self) -> "ReggeFunction":
        """Interpolant of the Euclidean metric (all dofs equal to 1)."""
        return ReggeFunction(self, np.ones(self.dim))

    def interpolate(self, field) -> "ReggeFunction":
        """Midpoint interpolant sum_e tau^T g(z_e) tau psi_e."""
        T = self.mesh.n_triangles
        vals = field.evaluate(self.mesh, np.arange(T), self.lattice.ref_midpoints[:, 1:])
        tau = self.lattice.tangents
        dofs = np.einsum("tli,tlij,tlj->tl", tau, vals, tau)
        coeffs = np.empty(self.dim)
        coeffs[self.local_to_global] = dofs
        return ReggeFunction(self, coeffs)

    def random_function(self, rng, scale: float = 1.0) -> "ReggeFunction":
        return ReggeFunction(self, scale * rng.standard_normal(self.dim))


@dataclass(frozen=True)
class SPDReport:
    min_eigenvalue: float
    max_eigenvalue: float
    is_spd: bool
    worst_cell: int
    worst_point: tuple[float, float]

    def __str__(self):
        state = "SPD" if self.is_spd else "NOT SPD"
        return (
            f"{state}: eigenvalues in [{self.min_eigenvalue:.6g}, {self.max_eigenvalue:.6g}], "
            f"min at triangle {self.worst_cell} point {self.worst_point}"
        )


class ReggeFunction:
    """A field in a :class:`ReggeSpace`, given by its global dof vector."""

    def __init__(self, space: ReggeSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.dim,):
            raise ValueError(f"expected {space.dim} Regge coefficients, got shape {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    # arithmetic on coefficient vectors
    def _check(self, other):
        if other.space is not self.space:
            raise ValueError("Regge functions live in different spaces")

    def __add__(self, other):
        self._check(other)
        return ReggeFunction(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check(other)
        return ReggeFunction(self.space, self.coeffs - other.coeffs)

    def __mul__(self, a):
        return ReggeFunction(self.space, a * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self):
        return ReggeFunction(self.space, -self.coeffs)

    def minus_identity(self) -> "ReggeFunction":
        return self - self.space.identity()

    @cached_property
    def _monomial_coeffs(self) -> np.ndarray:
        sp = self.space
        local = self.coeffs[sp.local_to_global]
        c = np.einsum("tab,tb->ta", sp._dual_inverse, local)
        return c.reshape(-1, 3, sp.n_monomials)

    def evaluate(self, mesh, cells, ref_pts, derivatives: bool = False):
        sp = self.space
        if mesh is not sp.mesh:
            raise ValueError("Regge function evaluated on a foreign mesh")
        cells = np.asarray(cells)
        ref_pts = np.asarray(ref_pts, dtype=float)
        order = 1 if derivatives else 0
        mono = polynomials.monomials(sp.r, ref_pts, order=order)
        coef = self._monomial_coeffs[cells]  # (C, 3, m)
        if ref_pts.ndim == 2:
            comp = np.einsum("ckm,qm->cqk", coef, mono[0])
        else:
            comp = np.einsum("ckm,cqm->cqk", coef, mono[0])
        val = np.einsum("cqk,kij->cqij", comp, SYM_BASIS)
        if not derivatives:
            return val
        if ref_pts.ndim == 2:
            dcomp_ref = np.einsum("ckm,qma->cqka", coef, mono[1])
        else:
            dcomp_ref = np.einsum("ckm,cqma->cqka", coef, mono[1])
        Binv = mesh.inverse_jacobians[cells]  # (C, 2, 2); d xi_a / d x^k = Binv[a, k]
        dcomp = np.einsum("cqka,cal->cqkl", dcomp_ref, Binv)
        grad = np.einsum("cqkl,kij->cqijl", dcomp, SYM_BASIS)
        return val, grad

    def evaluate_bary(self, cell: int, bary) -> np.ndarray:
        """Value at a single barycentric point of one triangle."""
        bary = np.asarray(bary, dtype=float)
        if np.any(bary < -1e-12) or abs(bary.sum() - 1.0) > 1e-12:
            raise ValueError(f"barycentric point {bary} is outside the triangle")
        return self.evaluate(self.space.mesh, [cell], bary[None, 1:])[0, 0]

    def check_spd(self, degree: int = 10) -> SPDReport:
        """Eigenvalue scan over element quadrature points and vertices."""
        mesh = self.space.mesh
        pts, _ = triangle_rule(degree)
        pts = np.vstack([pts, [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]])
        cells = np.arange(mesh.n_triangles)
        vals = self.evaluate(mesh, cells, pts)
        lam = geometry.sym_eigvalsh(vals)
        lo = lam[..., 0]
        c, q = np.unravel_index(np.argmin(lo), lo.shape)
        lmax = float(lam[..., 1].max())
        mask = geometry.spd_mask(vals)
        return SPDReport(
            min_eigenvalue=float(lo[c, q]),
            max_eigenvalue=lmax,
            is_spd=bool(np.all(mask)),
            worst_cell=int(c),
            worst_point=tuple(float(v) for v in mesh.to_physical([c], pts[q][None])[0, 0]),
        )

    def tt_continuity_defect(self, n_samples: int | None = None) -> float:
        """Largest mismatch of tau^T sigma tau across interior edges."""
        sp = self.space
        mesh = sp.mesh
        n_samples = n_samples or sp.r + 3
        s = np.linspace(0.0, 1.0, n_samples)
        interior = np.flatnonzero(~mesh.boundary_edges)
        tau = mesh.vertices[mesh.edges[interior, 1]] - mesh.vertices[mesh.edges[interior, 0]]
        tau /= np.linalg.norm(tau, axis=1, keepdims=True)
        sides = []
        for side in range(2):
            cells = mesh.edge_triangles[interior, side]
            ref = edge_reference_points(mesh, cells, mesh.edge_local[interior, side], interior, s)
            val = self.evaluate(mesh, cells, ref)
            sides.append(np.einsum("ei,eqij,ej->eq", tau, val, tau))
        return float(np.max(np.abs(sides[0] - sides[1]))) if len(interior) else 0.0


def edge_reference_points(mesh: Mesh, cells, local_edges, edges, s) -> np.ndarray:
    """Reference coordinates, in each of ``cells``, of the points at parameter
    ``s`` along global edges ``edges`` (measured from the lower vertex index).
    Returns (C, len(s), 2)."""
    cells = np.asarray(cells)
    local_edges = np.asarray(local_edges)
    s = np.asarray(s, dtype=float)
    a = LOCAL_EDGES[local_edges, 0]
    b = LOCAL_EDGES[local_edges, 1]
    start_is_lo = mesh.triangles[cells, a] == mesh.edges[edges, 0]
    bary = np.zeros((len(cells), len(s), 3))
    rows = np.arange(len(cells))[:, None]
    t_b = np.where(start_is_lo[:, None], s[None, :], 1.0 - s[None, :])
    bary[rows, np.arange(len(s))[None, :], a[:, None]] = 1.0 - t_b
    bary[rows, np.arange(len(s))[None, :], b[:, None]] = t_b
    return bary[..., 1:]


def write_dofs_csv(fn: ReggeFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["edge_id", "value"])
        for i, v in enumerate(fn.coeffs):
            w.writerow([i, repr(float(v))])


def read_dofs_csv(space: ReggeSpace, path) -> ReggeFunction:
    coeffs = np.full(space.dim, np.nan)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            coeffs[int(row["edge_id"])] = float(row["value"])
    if np.any(np.isnan(coeffs)):
        raise ValueError(f"{path}: missing dofs for {int(np.isnan(coeffs).sum())} sub-edges")
    return ReggeFunction(space, coeffs)
