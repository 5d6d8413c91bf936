"""Plain-text mesh files and legacy ASCII VTK output."""

from __future__ import annotations

import re
from pathlib import Path

import numpy as np

from .lagrange import LagrangeFunction
from .mesh import Mesh, MeshError

_HEADER = re.compile(r"^mesh\s+2d\s+v=(\d+)\s+t=(\d+)\s*$")


def write_mesh(mesh: Mesh, path) -> None:
    """``mesh 2d v=<V> t=<T>``, then V lines ``x y``, then T lines ``i j k``."""
    lines = [f"mesh 2d v={mesh.n_vertices} t={mesh.n_triangles}"]
    lines += [f"{x!r} {y!r}" for x, y in mesh.vertices.tolist()]
    lines += [f"{i} {j} {k}" for i, j, k in mesh.triangles.tolist()]
    Path(path).write_text("\n".join(lines) + "\n")


def read_mesh(path) -> Mesh:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise MeshError(f"cannot read mesh file {path}: {exc.strerror or exc}") from exc
    rows = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise MeshError(f"{path}: empty mesh file")
    m = _HEADER.match(rows[0])
    if not m:
        raise MeshError(f"{path}: bad header {rows[0]!r}, expected 'mesh 2d v=<V> t=<T>'")
    nv, nt = int(m.group(1)), int(m.group(2))
    if len(rows) != 1 + nv + nt:
        raise MeshError(f"{path}: header announces {nv} vertices and {nt} triangles, found {len(rows) - 1} data lines")
    try:
        verts = np.array([[float(a) for a in ln.split()] for ln in rows[1 : 1 + nv]])
        tris = np.array([[int(a) for a in ln.split()] for ln in rows[1 + nv :]])
    except ValueError as exc:
        raise MeshError(f"{path}: {exc}") from exc
    if verts.shape != (nv, 2) or tris.shape != (nt, 3):
        raise MeshError(f"{path}: expected 2 coordinates per vertex and 3 indices per triangle")
    return Mesh.from_arrays(verts, tris)


def _lattice_subtriangles(ref_nodes: np.ndarray, q: int) -> np.ndarray:
    """Split the degree-q principal lattice into q^2 linear triangles (local node ids)."""
    ij = np.rint(ref_nodes * q).astype(int)
    index = {(int(a), int(b)): n for n, (a, b) in enumerate(ij)}
    out = []
    for j in range(q):
        for i in range(q - j):
            out.append((index[i, j], index[i + 1, j], index[i, j + 1]))
            if i + j < q - 1:
                out.append((index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]))
    return np.array(out)


def write_vtk(fn: LagrangeFunction, path, name: str = "kappa_h") -> None:
    """Legacy ASCII unstructured grid; higher-degree elements are drawn as
    linear sub-triangles on the nodal lattice."""
    sp = fn.space
    sub = _lattice_subtriangles(sp.ref_nodes, sp.q)
    cells = sp.local_to_node[:, sub].reshape(-1, 3)
    pts = sp.node_coords
    vals = fn.nodal_values()
    out = [
        "# vtk DataFile Version 3.0",
        name,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {len(pts)} double",
    ]
    out += [f"{x!r} {y!r} 0.0" for x, y in pts.tolist()]
    out.append(f"CELLS {len(cells)} {4 * len(cells)}")
    out += [f"3 {a} {b} {c}" for a, b, c in cells.tolist()]
    out.append(f"CELL_TYPES {len(cells)}")
    out += ["5"] * len(cells)
    out += [f"POINT_DATA {len(pts)}", f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
    out += [repr(v) for v in vals.tolist()]
    Path(path).write_text("\n".join(out) + "\n")
