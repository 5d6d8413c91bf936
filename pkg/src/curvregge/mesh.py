"""Planar triangulations and the subdivision edge lattices carrying Regge dofs.

Local conventions used throughout the package:

* triangles are stored counterclockwise;
* local edge ``k`` of a triangle is the edge opposite local vertex ``k``,
  running from local vertex ``(k + 1) % 3`` to ``(k + 2) % 3`` (this is the
  counterclockwise direction, so the Euclidean outward normal is ``J @ tau``);
* reference coordinates ``(xi, eta)`` correspond to barycentric coordinates
  ``(1 - xi - eta, xi, eta)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

MAX_DEGREE = 3

# local edge k -> (start, end) local vertices
LOCAL_EDGES = np.array([[1, 2], [2, 0], [0, 1]])


class MeshError(ValueError):
    """Invalid mesh construction or query."""


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (V, 2)
    triangles: np.ndarray  # (T, 3), counterclockwise
    edges: np.ndarray  # (E, 2), sorted so edges[:, 0] < edges[:, 1]
    edge_triangles: np.ndarray  # (E, 2), -1 marks a missing neighbour
    edge_local: np.ndarray  # (E, 2) local edge index inside edge_triangles
    triangle_edges: np.ndarray  # (T, 3) global edge of each local edge
    boundary_edges: np.ndarray  # (E,) bool
    boundary_vertices: np.ndarray  # (V,) bool

    @classmethod
    def from_arrays(cls, vertices, triangles) -> "Mesh":
        """Build topology from raw coordinates and connectivity.

        Triangles with negative signed area are reoriented; degenerate
        triangles and non-manifold edges raise :class:`MeshError`.
        """
        vertices = np.array(vertices, dtype=float).reshape(-1, 2)
        triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) == 0:
            raise MeshError("mesh has no triangles")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshError("triangle references a vertex out of range")

        area = _signed_areas(vertices, triangles)
        flip = area < 0
        triangles[flip] = triangles[flip][:, [0, 2, 1]]
        area = np.abs(area)
        scale = np.max(np.ptp(vertices, axis=0)) ** 2
        if np.any(area <= 1e-14 * scale):
            raise MeshError("mesh contains degenerate triangles")

        T = len(triangles)
        ends = triangles[:, LOCAL_EDGES]  # (T, 3, 2)
        keys = np.sort(ends.reshape(-1, 2), axis=1)
        edges, inverse, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
        inverse = inverse.reshape(-1)
        if np.any(counts > 2):
            raise MeshError("non-manifold edge shared by more than two triangles")

        E = len(edges)
        edge_triangles = -np.ones((E, 2), dtype=np.int64)
        edge_local = -np.ones((E, 2), dtype=np.int64)
        for flat, e in enumerate(inverse):
            slot = 0 if edge_triangles[e, 0] < 0 else 1
            edge_triangles[e, slot] = flat // 3
            edge_local[e, slot] = flat % 3

        boundary_edges = counts == 1
        boundary_vertices = np.zeros(len(vertices), dtype=bool)
        boundary_vertices[edges[boundary_edges].ravel()] = True
        return cls(
            vertices=vertices,
            triangles=triangles,
            edges=edges,
            edge_triangles=edge_triangles,
            edge_local=edge_local,
            triangle_edges=inverse.reshape(T, 3),
            boundary_edges=boundary_edges,
            boundary_vertices=boundary_vertices,
        )

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @cached_property
    def interior_vertices(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_vertices)

    @cached_property
    def areas(self) -> np.ndarray:
        return _signed_areas(self.vertices, self.triangles)

    @cached_property
    def jacobians(self) -> np.ndarray:
        """Affine map matrices ``B`` with ``x = x0 + B @ (xi, eta)``, shape (T, 2, 2)."""
        p = self.vertices[self.triangles]
        return np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)

    @cached_property
    def inverse_jacobians(self) -> np.ndarray:
        return np.linalg.inv(self.jacobians)

    @cached_property
    def edge_lengths(self) -> np.ndarray:
        d = self.vertices[self.edges[:, 1]] - self.vertices[self.edges[:, 0]]
        return np.hypot(d[:, 0], d[:, 1])

    @cached_property
    def element_diameters(self) -> np.ndarray:
        """h_K: the longest edge of each triangle."""
        return self.edge_lengths[self.triangle_edges].max(axis=1)

    @cached_property
    def inradii(self) -> np.ndarray:
        perimeter = self.edge_lengths[self.triangle_edges].sum(axis=1)
        return 2.0 * self.areas / perimeter

    @property
    def h(self) -> float:
        return float(self.element_diameters.max())

    @property
    def shape_regularity(self) -> float:
        """max_K h_K / rho_K."""
        return float(np.max(self.element_diameters / self.inradii))

    @property
    def quasi_uniformity(self) -> float:
        """max_K h / h_K."""
        return float(self.h / self.element_diameters.min())

    @cached_property
    def _vertex_triangles(self) -> list[np.ndarray]:
        order = np.argsort(self.triangles.ravel(), kind="stable")
        owners = order // 3
        counts = np.bincount(self.triangles.ravel(), minlength=self.n_vertices)
        return np.split(owners, np.cumsum(counts)[:-1])

    def to_physical(self, cells, ref_pts) -> np.ndarray:
        """Map reference points, shape (Q, 2) or (C, Q, 2), to physical coordinates (C, Q, 2)."""
        cells = np.asarray(cells)
        x0 = self.vertices[self.triangles[cells, 0]]
        B = self.jacobians[cells]
        ref_pts = np.asarray(ref_pts, dtype=float)
        if ref_pts.ndim == 2:
            return x0[:, None, :] + np.einsum("cij,qj->cqi", B, ref_pts)
        return x0[:, None, :] + np.einsum("cij,cqj->cqi", B, ref_pts)

    def local_edge_tangents(self) -> np.ndarray:
        """Counterclockwise Euclidean unit tangents of every local edge, (T, 3, 2)."""
        p = self.vertices[self.triangles]
        d = p[:, LOCAL_EDGES[:, 1]] - p[:, LOCAL_EDGES[:, 0]]
        return d / np.linalg.norm(d, axis=-1, keepdims=True)


def _signed_areas(vertices, triangles) -> np.ndarray:
    p = vertices[triangles]
    u = p[:, 1] - p[:, 0]
    v = p[:, 2] - p[:, 0]
    return 0.5 * (u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0])


def build_uniform_square_mesh(n: int, domain=(-1.0, 1.0, -1.0, 1.0)) -> Mesh:
    """Uniform ``n x n`` grid on an axis-aligned rectangle, each cell cut along
    the diagonal from its lower-left to its upper-right corner."""
    if int(n) != n or n < 1:
        raise MeshError(f"need n >= 1 subdivisions per side, got {n}")
    n = int(n)
    x0, x1, y0, y1 = map(float, domain)
    if not (x1 > x0 and y1 > y0):
        raise MeshError(f"degenerate rectangle {domain}")
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    j, i = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ll = (j * (n + 1) + i).ravel()
    lr, ul, ur = ll + 1, ll + n + 1, ll + n + 2
    lower = np.column_stack([ll, lr, ur])
    upper = np.column_stack([ll, ur, ul])
    triangles = np.stack([lower, upper], axis=1).reshape(-1, 3)
    return Mesh.from_arrays(vertices, triangles)


def perturb_interior_vertices(mesh: Mesh, amplitude: float = 0.2, seed: int | None = 0) -> Mesh:
    """Move each interior vertex in a uniformly random direction by a distance
    drawn uniformly from ``[0, amplitude * L_min]``, with ``L_min`` the shortest
    edge incident to that vertex. Boundary vertices stay fixed."""
    if amplitude < 0:
        raise MeshError("perturbation amplitude must be nonnegative")
    if amplitude == 0:
        return mesh
    rng = np.random.default_rng(seed)
    V = mesh.n_vertices
    lmin = np.full(V, np.inf)
    np.minimum.at(lmin, mesh.edges[:, 0], mesh.edge_lengths)
    np.minimum.at(lmin, mesh.edges[:, 1], mesh.edge_lengths)

    interior = mesh.interior_vertices
    angle = rng.uniform(0.0, 2.0 * np.pi, size=len(interior))
    radius = rng.uniform(0.0, 1.0, size=len(interior)) * amplitude * lmin[interior]
    vertices = mesh.vertices.copy()
    vertices[interior] += radius[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])

    if np.any(_signed_areas(vertices, mesh.triangles) <= 0):
        raise MeshError(f"perturbation amplitude {amplitude} inverted a triangle")
    return Mesh.from_arrays(vertices, mesh.triangles)


@dataclass(frozen=True)
class VertexStar:
    vertex: int
    triangles: np.ndarray


def vertex_star(mesh: Mesh, i: int) -> VertexStar:
    if not 0 <= i < mesh.n_vertices:
        raise IndexError(f"vertex {i} out of range for a mesh with {mesh.n_vertices} vertices")
    return VertexStar(int(i), mesh._vertex_triangles[i])


def minimum_angles(mesh: Mesh) -> np.ndarray:
    """Smallest Euclidean interior angle of each triangle (radians)."""
    p = mesh.vertices[mesh.triangles]
    angles = []
    for k in range(3):
        a = p[:, (k + 1) % 3] - p[:, k]
        b = p[:, (k + 2) % 3] - p[:, k]
        cos = np.sum(a * b, axis=1) / (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1))
        angles.append(np.arccos(np.clip(cos, -1.0, 1.0)))
    return np.min(angles, axis=0)


# --- subdivision lattices ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class SubdivisionLattice:
    """Edges of the ``(r + 1)**2`` sub-triangles obtained by cutting every
    triangle along the barycentric lines ``lambda_i = j / (r + 1)``.

    Local sub-edges are numbered identically in every triangle. Sub-edges that
    lie on a mesh edge are shared with the neighbouring triangle and map to the
    same global id; the remaining ones are private to their triangle.
    """

    mesh: Mesh
    r: int
    ref_endpoints: np.ndarray  # (n_local, 2, 3) barycentric
    ref_midpoints: np.ndarray  # (n_local, 3) barycentric
    parallel_edge: np.ndarray  # (n_local,) local mesh edge each sub-edge is parallel to
    on_element_boundary: np.ndarray  # (n_local,) bool, sub-edge lies on dK
    local_to_global: np.ndarray  # (T, n_local)
    n_global: int

    @property
    def n_local(self) -> int:
        return len(self.ref_midpoints)

    @cached_property
    def midpoints(self) -> np.ndarray:
        """World coordinates of every local sub-edge midpoint, (T, n_local, 2)."""
        return self.mesh.to_physical(np.arange(self.mesh.n_triangles), self.ref_midpoints[:, 1:])

    @cached_property
    def tangents(self) -> np.ndarray:
        """Euclidean unit tangents, (T, n_local, 2), oriented from the lower to
        the higher vertex index of the parallel mesh edge."""
        mesh = self.mesh
        ends = mesh.triangles[:, LOCAL_EDGES[self.parallel_edge]]  # (T, n_local, 2)
        lo = np.minimum(ends[..., 0], ends[..., 1])
        hi = np.maximum(ends[..., 0], ends[..., 1])
        d = mesh.vertices[hi] - mesh.vertices[lo]
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    @cached_property
    def multiplicity(self) -> np.ndarray:
        """Number of triangles holding each global sub-edge (1 or 2)."""
        return np.bincount(self.local_to_global.ravel(), minlength=self.n_global)


def _reference_subedges(r: int):
    """Enumerate sub-edges as edges of the 'upward' sub-triangles."""
    m = r + 1
    endpoints, parallel, boundary = [], [], []
    eye = np.eye(3, dtype=int)
    for a in range(r + 1):
        for b in range(r + 1 - a):
            base = np.array([a, b, r - a - b])
            for k in range(3):
                i, j = (k + 1) % 3, (k + 2) % 3
                p0, p1 = base + eye[i], base + eye[j]
                endpoints.append(np.stack([p0, p1]) / m)
                parallel.append(k)
                boundary.append(base[k] == 0)
    endpoints = np.array(endpoints)
    parallel = np.array(parallel)
    boundary = np.array(boundary)
    # boundary sub-edges first, grouped by local edge; keeps numbering readable
    order = np.lexsort((parallel, ~boundary))
    endpoints, parallel, boundary = endpoints[order], parallel[order], boundary[order]
    return endpoints, endpoints.mean(axis=1), parallel, boundary


def subdivision_lattice(mesh: Mesh, r: int) -> SubdivisionLattice:
    if int(r) != r or r < 0:
        raise ValueError(f"Regge degree must be a nonnegative integer, got {r}")
    if r > MAX_DEGREE:
        raise ValueError(f"Regge degree r={r} unsupported; supported range is 0..{MAX_DEGREE}")
    r = int(r)
    endpoints, midpoints, parallel, boundary = _reference_subedges(r)
    n_local = len(midpoints)
    T, E = mesh.n_triangles, mesh.n_edges

    per_edge = r + 1
    n_private = n_local - 3 * per_edge
    l2g = np.empty((T, n_local), dtype=np.int64)

    tri = mesh.triangles
    for s in np.flatnonzero(boundary):
        k = parallel[s]
        a, b = LOCAL_EDGES[k]
        glob_a, glob_b = tri[:, a], tri[:, b]
        # position along the edge measured from its lower-index vertex
        s_from_lo = np.where(glob_a < glob_b, midpoints[s, b], midpoints[s, a])
        slot = np.rint(s_from_lo * per_edge - 0.5).astype(np.int64)
        l2g[:, s] = mesh.triangle_edges[:, k] * per_edge + slot
    private = np.flatnonzero(~boundary)
    l2g[:, private] = E * per_edge + np.arange(T)[:, None] * n_private + np.arange(n_private)[None, :]
    return SubdivisionLattice(
        mesh=mesh,
        r=r,
        ref_endpoints=endpoints,
        ref_midpoints=midpoints,
        parallel_edge=parallel,
        on_element_boundary=boundary,
        local_to_global=l2g,
        n_global=E * per_edge + T * n_private,
    )
