"""Continuous degree-q Lagrange elements vanishing on the domain boundary."""

from __future__ import annotations

import csv

import numpy as np

from . import geometry, polynomials
from .mesh import LOCAL_EDGES, MAX_DEGREE, Mesh


def reference_nodes(q: int) -> np.ndarray:
    """Principal lattice of degree q in reference coordinates: vertices,
    then q - 1 nodes per local edge (in the edge's local direction), then
    interior nodes."""
    verts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    nodes = [verts]
    for k in range(3):
        a, b = LOCAL_EDGES[k]
        s = np.arange(1, q)[:, None] / q
        nodes.append((1 - s) * verts[a] + s * verts[b])
    inner = [(i / q, j / q) for j in range(1, q) for i in range(1, q - j)]
    if inner:
        nodes.append(np.array(inner))
    return np.vstack(nodes)


class LagrangeSpace:
    def __init__(self, mesh: Mesh, q: int):
        if int(q) != q or q < 1 or q > MAX_DEGREE:
            raise ValueError(f"Lagrange degree q={q} unsupported; supported range is 1..{MAX_DEGREE}")
        self.mesh = mesh
        self.q = q = int(q)
        self.ref_nodes = reference_nodes(q)
        nb = len(self.ref_nodes)
        (V,) = polynomials.monomials(q, self.ref_nodes)
        # shape function i = sum_p coef[p, i] * mono_p
        self._shape_coef = np.linalg.inv(V)
        self.n_local = nb

        T = mesh.n_triangles
        nv, ne = mesh.n_vertices, mesh.n_edges
        per_edge = q - 1
        per_cell = nb - 3 - 3 * per_edge
        l2n = np.empty((T, nb), dtype=np.int64)
        l2n[:, :3] = mesh.triangles
        for k in range(3):
            a, b = LOCAL_EDGES[k]
            forward = mesh.triangles[:, a] < mesh.triangles[:, b]
            m = np.arange(per_edge)
            slot = np.where(forward[:, None], m[None, :], per_edge - 1 - m[None, :])
            l2n[:, 3 + k * per_edge : 3 + (k + 1) * per_edge] = (
                nv + mesh.triangle_edges[:, k : k + 1] * per_edge + slot
            )
        l2n[:, 3 + 3 * per_edge :] = (
            nv + ne * per_edge + np.arange(T)[:, None] * per_cell + np.arange(per_cell)[None, :]
        )
        self.local_to_node = l2n
        self.n_nodes = nv + ne * per_edge + T * per_cell

        on_boundary = np.zeros(self.n_nodes, dtype=bool)
        on_boundary[:nv] = mesh.boundary_vertices
        bedges = np.flatnonzero(mesh.boundary_edges)
        idx = nv + bedges[:, None] * per_edge + np.arange(per_edge)[None, :]
        on_boundary[idx.ravel()] = True
        self.boundary_nodes = on_boundary

        self.node_to_dof = -np.ones(self.n_nodes, dtype=np.int64)
        free = np.flatnonzero(~on_boundary)
        self.node_to_dof[free] = np.arange(len(free))
        self.dof_to_node = free
        self.local_to_dof = self.node_to_dof[l2n]

        coords = np.empty((self.n_nodes, 2))
        coords[l2n.ravel()] = mesh.to_physical(np.arange(T), self.ref_nodes).reshape(-1, 2)
        self.node_coords = coords

    @property
    def dim(self) -> int:
        return len(self.dof_to_node)

    def reference_basis(self, ref_pts, order: int = 0):
        """Shape functions (and reference derivatives) at reference points:
        values (..., nb), gradients (..., nb, 2), Hessians (..., nb, 2, 2)."""
        mono = polynomials.monomials(self.q, ref_pts, order=order)
        c = self._shape_coef
        out = [mono[0] @ c]
        if order >= 1:
            out.append(np.einsum("...pa,pi->...ia", mono[1], c))
        if order >= 2:
            out.append(np.einsum("...pab,pi->...iab", mono[2], c))
        return out

    def physical_basis(self, cells, ref_pts, order: int = 2):
        """Basis values, physical gradients and Hessians on ``cells``.

        ``ref_pts`` may be shared (Q, 2) or per cell (C, Q, 2); outputs have
        shapes (C, Q, nb), (C, Q, nb, 2), (C, Q, nb, 2, 2).
        """
        cells = np.asarray(cells)
        ref_pts = np.asarray(ref_pts, dtype=float)
        ref = self.reference_basis(ref_pts, order=order)
        Binv = self.mesh.inverse_jacobians[cells]  # d xi_a / d x^k = Binv[a, k]
        C = len(cells)
        if ref_pts.ndim == 2:
            ref = [np.broadcast_to(r, (C,) + r.shape) for r in ref]
        out = [ref[0]]
        if order >= 1:
            out.append(np.einsum("cqia,cak->cqik", ref[1], Binv))
        if order >= 2:
            out.append(np.einsum("cqiab,cak,cbl->cqikl", ref[2], Binv, Binv))
        return out

    def function(self, coeffs) -> "LagrangeFunction":
        return LagrangeFunction(self, coeffs)

    def interpolate(self, func) -> "LagrangeFunction":
        """Nodal interpolant of ``func(x, y)``; boundary values are dropped."""
        xy = self.node_coords[self.dof_to_node]
        return LagrangeFunction(self, np.asarray(func(xy[:, 0], xy[:, 1]), dtype=float))

    def basis_function(self, dof: int) -> "LagrangeFunction":
        c = np.zeros(self.dim)
        c[dof] = 1.0
        return LagrangeFunction(self, c)

    def vertex_dof(self, vertex: int) -> int:
        d = int(self.node_to_dof[vertex])
        if d < 0:
            raise ValueError(f"vertex {vertex} is on the boundary and carries no dof")
        return d


class LagrangeFunction:
    def __init__(self, space: LagrangeSpace, coeffs):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.shape != (space.dim,):
            raise ValueError(f"expected {space.dim} coefficients, got shape {coeffs.shape}")
        self.space = space
        self.coeffs = coeffs

    def local_coeffs(self, cells) -> np.ndarray:
        ld = self.space.local_to_dof[np.asarray(cells)]
        padded = np.append(self.coeffs, 0.0)
        return padded[ld]  # boundary entries (-1) read the trailing zero

    def nodal_values(self) -> np.ndarray:
        """Values at every node, boundary nodes included (zero)."""
        out = np.zeros(self.space.n_nodes)
        out[self.space.dof_to_node] = self.coeffs
        return out

    def eval_with_derivatives(self, cells, ref_pts):
        """Value (C, Q), gradient (C, Q, 2) and Hessian (C, Q, 2, 2)."""
        phi, dphi, hphi = self.space.physical_basis(cells, ref_pts, order=2)
        c = self.local_coeffs(cells)
        return (
            np.einsum("cqi,ci->cq", phi, c),
            np.einsum("cqik,ci->cqk", dphi, c),
            np.einsum("cqikl,ci->cqkl", hphi, c),
        )

    def evaluate_bary(self, cell: int, bary):
        bary = np.asarray(bary, dtype=float)
        if np.any(bary < -1e-12) or abs(bary.sum() - 1.0) > 1e-12:
            raise ValueError(f"barycentric point {bary} is outside the triangle")
        v, g, h = self.eval_with_derivatives([cell], bary[None, 1:])
        return v[0, 0], g[0, 0], h[0, 0]


def normal_derivative_jump(v: LagrangeFunction, edge: int, metric, s) -> np.ndarray:
    """Sum over the triangles adjacent to ``edge`` of the one-sided derivative
    n_g^T g grad_g v, each with its own outward g-normal, at parameters ``s``
    along the edge (from its lower vertex index). ``metric`` is any sampled
    field; it is evaluated from each side separately."""
    from .regge import edge_reference_points

    mesh = v.space.mesh
    s = np.atleast_1d(np.asarray(s, dtype=float))
    total = np.zeros(len(s))
    for side in range(2):
        cell = int(mesh.edge_triangles[edge, side])
        if cell < 0:
            continue
        k = int(mesh.edge_local[edge, side])
        ref = edge_reference_points(mesh, [cell], [k], [edge], s)
        G = metric.evaluate(mesh, [cell], ref)[0]
        _, grad, _ = v.eval_with_derivatives([cell], ref)
        tau = mesh.local_edge_tangents()[cell, k]
        frame = geometry.edge_frame(G, tau)
        grad_g = np.einsum("qij,qj->qi", geometry.inv2(G), grad[0])
        total += np.einsum("qi,qij,qj->q", frame.n_g, G, grad_g)
    return total


def write_nodal_csv(fn: LagrangeFunction, path) -> None:
    vals = fn.nodal_values()
    xy = fn.space.node_coords
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["node_id", "x", "y", "value"])
        for i in range(len(vals)):
            w.writerow([i, repr(float(xy[i, 0])), repr(float(xy[i, 1])), repr(float(vals[i]))])
