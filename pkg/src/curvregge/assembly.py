"""Quadrature assembly of b_h, the curvature right-hand side and mass matrices.

``b_h(G; sigma, v)`` is assembled as a vector over the Lagrange basis:

    sum_K  int_K tr(G^-1 S_G sigma G^-1 Hess_G v) sqrt(det G) dx
  + sum_e  int_e (tau_G^T sigma tau_G) [[dv/dn_G]] sqrt(tau^T G tau) dl

Edge terms are integrated at shared Gauss points along every mesh edge, one
contribution per adjacent triangle (each with its own outward n_G), so the
jump is formed by the scatter. Boundary edges carry the single trace.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sps
from scipy.sparse.linalg import cg

from . import geometry
from .lagrange import LagrangeSpace
from .quadrature import QuadratureConfig, gauss_legendre_01, triangle_rule
from .regge import edge_reference_points

log = logging.getLogger(__name__)

# Multiplies the edge term; only ever changed by the mutation check in verify.
_EDGE_TERM_SIGN = 1.0


class MetricNotSPDError(geometry.NotSPDError):
    def __init__(self, message, cell=None, point=None, t=None):
        super().__init__(message)
        self.cell = cell
        self.point = point
        self.t = t


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class HomotopyMetric:
    """G(t) = (1 - t) delta + t g, for an endpoint field ``g``."""

    endpoint: object
    t: float

    def evaluate(self, mesh, cells, ref_pts, derivatives: bool = False):
        out = self.endpoint.evaluate(mesh, cells, ref_pts, derivatives=derivatives)
        if derivatives:
            val, grad = out
            return (1.0 - self.t) * geometry.IDENTITY + self.t * val, self.t * grad
        return (1.0 - self.t) * geometry.IDENTITY + self.t * out


@dataclass
class FieldSamples:
    """A field sampled at the element and edge quadrature points."""

    element: np.ndarray  # (T, Q, 2, 2)
    element_grad: np.ndarray | None  # (T, Q, 2, 2, 2)
    facet: np.ndarray  # (F, P, 2, 2)

    def affine(self, a: float, b: float) -> "FieldSamples":
        """a * delta + b * self."""
        grad = None if self.element_grad is None else b * self.element_grad
        return FieldSamples(
            a * geometry.IDENTITY + b * self.element,
            grad,
            a * geometry.IDENTITY + b * self.facet,
        )


class Assembler:
    """Precomputed basis data at quadrature points for one Lagrange space."""

    def __init__(self, space: LagrangeSpace, quad: QuadratureConfig | None = None):
        self.space = space
        self.quad = quad = quad or QuadratureConfig()
        mesh = space.mesh
        T = mesh.n_triangles
        self.cells = np.arange(T)

        self.tri_pts, tri_w = triangle_rule(quad.tri_degree)
        self.tri_weights = tri_w[None, :] * (2.0 * mesh.areas)[:, None]  # (T, Q)
        self.phi, self.dphi, self.hphi = space.physical_basis(self.cells, self.tri_pts, order=2)

        # facets: every (triangle, local edge) pair, quadrature along the edge
        s, w = gauss_legendre_01(quad.edge_points)
        self.facet_cells = np.repeat(self.cells, 3)
        self.facet_local = np.tile(np.arange(3), T)
        self.facet_edges = mesh.triangle_edges.ravel()
        self.facet_pts = edge_reference_points(mesh, self.facet_cells, self.facet_local, self.facet_edges, s)
        self.facet_weights = w[None, :] * mesh.edge_lengths[self.facet_edges][:, None]  # (F, P)
        self.facet_tau = mesh.local_edge_tangents().reshape(-1, 2)  # (F, 2) counterclockwise
        _, self.facet_dphi = space.physical_basis(self.facet_cells, self.facet_pts, order=1)
        self.facet_xy = mesh.to_physical(self.facet_cells, self.facet_pts)

    def sample(self, fld, derivatives: bool = True) -> FieldSamples:
        mesh = self.space.mesh
        if derivatives:
            el, el_grad = fld.evaluate(mesh, self.cells, self.tri_pts, derivatives=True)
        else:
            el, el_grad = fld.evaluate(mesh, self.cells, self.tri_pts), None
        fa = fld.evaluate(mesh, self.facet_cells, self.facet_pts)
        return FieldSamples(el, el_grad, fa)

    def check_spd(self, G: FieldSamples, t: float | None = None) -> None:
        mesh = self.space.mesh
        for where, vals, cells, xy in (
            ("element", G.element, self.cells, None),
            ("edge", G.facet, self.facet_cells, self.facet_xy),
        ):
            ok = geometry.spd_mask(vals)
            if not np.all(ok):
                c, q = np.argwhere(~ok)[0]
                if xy is None:
                    point = mesh.to_physical([cells[c]], self.tri_pts[q][None])[0, 0]
                else:
                    point = xy[c, q]
                point = tuple(float(p) for p in point)
                msg = f"metric not SPD at {where} quadrature point {point} of triangle {cells[c]}"
                if t is not None:
                    msg += f" (t = {t:.6g})"
                raise MetricNotSPDError(msg, cell=int(cells[c]), point=point, t=t)

    # -- local contributions -------------------------------------------------

    def local_b_h(self, G: FieldSamples, sigma: FieldSamples):
        """Per-element (T, nb) and per-facet (F, nb) contributions to b_h."""
        if G.element_grad is None:
            raise ValueError("b_h needs metric derivatives at element quadrature points")
        g, dg, s = G.element, G.element_grad, sigma.element
        ginv = geometry.inv2(g)
        gamma = geometry.christoffel(g, dg, check=False)
        W = ginv @ geometry.s_g(s, g) @ ginv
        W *= (geometry.volume_density(g) * self.tri_weights)[..., None, None]
        # W : Hess_G phi = W : hess(phi) - (W : Gamma^k) d_k phi
        w_gamma = np.einsum("cqij,cqkij->cqk", W, gamma)
        elem = -np.einsum("cqk,cqnk->cn", w_gamma, self.dphi)
        if self.space.q > 1:
            elem += np.einsum("cqij,cqnij->cn", W, self.hphi)

        gf, sf = G.facet, sigma.facet
        gtau = np.einsum("fpij,fj->fpi", gf, self.facet_tau)
        tGt = np.einsum("fi,fpi->fp", self.facet_tau, gtau)
        tSt = np.einsum("fi,fpij,fj->fp", self.facet_tau, sf, self.facet_tau)
        # n_G^T G grad_G v = n_G^T grad v, with n_G = J G tau / (|tau|_G sqrt(det G))
        n_g = (gtau @ geometry.J.T) / (np.sqrt(tGt) * geometry.volume_density(gf))[..., None]
        dn = np.einsum("fpi,fpni->fpn", n_g, self.facet_dphi)
        # (tau^T s tau / tau^T G tau) * dv/dn_G * sqrt(tau^T G tau)
        coef = tSt / np.sqrt(tGt) * self.facet_weights
        facet = _EDGE_TERM_SIGN * np.einsum("fp,fpn->fn", coef, dn)
        return elem, facet

    def scatter(self, elem, facet) -> np.ndarray:
        sp = self.space
        out = np.zeros(sp.dim + 1)  # slot -1 swallows boundary nodes
        np.add.at(out, sp.local_to_dof.ravel(), elem.ravel())
        np.add.at(out, sp.local_to_dof[self.facet_cells].ravel(), facet.ravel())
        return out[:-1]

    def b_h(self, G: FieldSamples, sigma: FieldSamples) -> np.ndarray:
        return self.scatter(*self.local_b_h(G, sigma))

    # -- public quantities -----------------------------------------------------

    def curvature_rhs(self, g, check: bool = True) -> np.ndarray:
        """1/2 int_0^1 b_h((1 - t) delta + t g; g - delta, phi_i) dt by Gauss-Legendre in t."""
        gs = self.sample(g, derivatives=True)
        sigma = self.sample(g.minus_identity(), derivatives=False)
        ts, wt = gauss_legendre_01(self.quad.t_points)
        rhs = np.zeros(self.space.dim)
        if check:
            self.check_spd(gs, t=1.0)
        for t, w in zip(ts, wt):
            G = gs.affine(1.0 - t, t)
            if check:
                self.check_spd(G, t=t)
            rhs += 0.5 * w * self.b_h(G, sigma)
        return rhs

    def mass_matrix(self, g, lumped: bool = False):
        gs = self.sample(g, derivatives=False)
        self.check_spd(FieldSamples(gs.element, None, gs.facet))
        dens = geometry.volume_density(gs.element) * self.tri_weights
        local = np.einsum("cqi,cqj,cq->cij", self.phi, self.phi, dens)
        ld = self.space.local_to_dof
        rows = np.broadcast_to(ld[:, :, None], local.shape).ravel()
        cols = np.broadcast_to(ld[:, None, :], local.shape).ravel()
        keep = (rows >= 0) & (cols >= 0)
        n = self.space.dim
        M = sps.coo_matrix((local.ravel()[keep], (rows[keep], cols[keep])), shape=(n, n)).tocsr()
        M.sum_duplicates()
        if lumped:
            M = sps.diags(np.asarray(M.sum(axis=1)).ravel(), format="csr")
        return M


def assemble_b_h(G, sigma, space: LagrangeSpace, quad: QuadratureConfig | None = None) -> np.ndarray:
    """b_h(G; sigma, phi_i) for every basis function phi_i of ``space``."""
    asm = Assembler(space, quad)
    Gs = asm.sample(G, derivatives=True)
    asm.check_spd(Gs)
    return asm.b_h(Gs, asm.sample(sigma, derivatives=False))


def assemble_curvature_rhs(g_h, space: LagrangeSpace, quad: QuadratureConfig | None = None) -> np.ndarray:
    return Assembler(space, quad).curvature_rhs(g_h)


def assemble_mass_matrix(g_h, space: LagrangeSpace, quad: QuadratureConfig | None = None, lumped: bool = False):
    return Assembler(space, quad).mass_matrix(g_h, lumped=lumped)


@dataclass
class SolverInfo:
    iterations: int
    relative_residual: float
    method: str = "cg"
    extra: dict = field(default_factory=dict)


def solve_spd(matrix, rhs, tol: float = 1e-12, maxiter: int | None = None):
    """Jacobi-preconditioned conjugate gradients; returns ``(x, SolverInfo)``.

    Raises :class:`SolverError` on a non-SPD diagonal, an asymmetric matrix or
    if the true relative residual misses ``tol``.
    """
    A = sps.csr_matrix(matrix)
    b = np.asarray(rhs, dtype=float)
    n = A.shape[0]
    if A.shape != (n, n) or b.shape != (n,):
        raise ValueError(f"shape mismatch: matrix {A.shape}, rhs {b.shape}")
    if n == 0:
        return np.zeros(0), SolverInfo(0, 0.0)
    diag = A.diagonal()
    if np.any(diag <= 0):
        raise SolverError("matrix has a nonpositive diagonal entry; not SPD")
    asym = abs(A - A.T).max() if n else 0.0
    if asym > 1e-12 * abs(A).max():
        raise SolverError(f"matrix is not symmetric (max asymmetry {asym:.3g})")
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros(n), SolverInfo(0, 0.0)

    counter = {"it": 0}

    def count(_):
        counter["it"] += 1

    M = sps.diags(1.0 / diag)
    maxiter = maxiter or 10 * n
    x, status = cg(A, b, rtol=0.1 * tol, atol=0.0, M=M, maxiter=maxiter, callback=count)
    res = np.linalg.norm(A @ x - b) / bnorm
    if status < 0:
        raise SolverError(f"conjugate gradients broke down (status {status}); matrix not SPD?")
    if res > tol:
        raise SolverError(f"no convergence: relative residual {res:.3g} > {tol:.3g} after {counter['it']} iterations")
    log.debug("cg converged in %d iterations, residual %.3g", counter["it"], res)
    return x, SolverInfo(counter["it"], float(res))
