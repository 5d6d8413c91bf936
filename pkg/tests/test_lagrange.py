import numpy as np
import pytest

from curvregge import geometry
from curvregge.fields import ConstantField
from curvregge.lagrange import LagrangeSpace, normal_derivative_jump, reference_nodes, write_nodal_csv
from curvregge.mesh import Mesh, build_uniform_square_mesh
from curvregge.verify import random_spd


@pytest.mark.parametrize("q", [1, 2, 3])
def test_kronecker_property(mesh4, q):
    sp = LagrangeSpace(mesh4, q)
    (phi,) = sp.reference_basis(reference_nodes(q))
    assert np.allclose(phi, np.eye(sp.n_local), atol=1e-12)


def test_q1_n2_single_dof():
    assert LagrangeSpace(build_uniform_square_mesh(2), 1).dim == 1


def test_q2_single_triangle_no_dofs():
    m = Mesh.from_arrays([[0, 0], [1, 0], [0, 1]], [[0, 1, 2]])
    assert LagrangeSpace(m, 2).dim == 0


@pytest.mark.parametrize("q, n, dim", [(1, 4, 9), (2, 4, 49), (3, 4, 121)])
def test_interior_lattice_count(q, n, dim):
    assert LagrangeSpace(build_uniform_square_mesh(n), q).dim == dim == (q * n - 1) ** 2


@pytest.mark.parametrize("q", [1, 2, 3])
def test_partition_of_unity(q, rng):
    sp = LagrangeSpace(build_uniform_square_mesh(2), q)
    phi, dphi = sp.reference_basis(rng.dirichlet(np.ones(3), 10)[:, 1:], order=1)
    assert np.allclose(phi.sum(-1), 1.0)
    assert np.allclose(dphi.sum(-2), 0.0)


@pytest.mark.parametrize("q", [1, 2, 3])
def test_local_polynomial_derivatives(mesh4, rng, q):
    sp = LagrangeSpace(mesh4, q)
    cells = np.arange(mesh4.n_triangles)
    # coefficients of an arbitrary degree-q polynomial through local nodal values
    a = rng.standard_normal(3)
    u = lambda x, y: a[0] * x**q + a[1] * x * y ** (q - 1) + a[2] * y  # noqa: E731
    ux = lambda x, y: q * a[0] * x ** (q - 1) + a[1] * y ** (q - 1)  # noqa: E731
    uy = lambda x, y: a[1] * (q - 1) * x * y ** max(q - 2, 0) + a[2]  # noqa: E731
    xy_nodes = sp.node_coords[sp.local_to_node]
    nodal = u(xy_nodes[..., 0], xy_nodes[..., 1])
    pts = rng.dirichlet(np.ones(3), 5)[:, 1:]
    phi, dphi, hphi = sp.physical_basis(cells, pts)
    xy = mesh4.to_physical(cells, pts)
    assert np.allclose(np.einsum("cqi,ci->cq", phi, nodal), u(xy[..., 0], xy[..., 1]))
    grad = np.einsum("cqik,ci->cqk", dphi, nodal)
    assert np.allclose(grad[..., 0], ux(xy[..., 0], xy[..., 1]))
    assert np.allclose(grad[..., 1], uy(xy[..., 0], xy[..., 1]))
    if q == 1:
        assert np.all(hphi == 0)


def test_hat_gradient_length(mesh4):
    sp = LagrangeSpace(mesh4, 1)
    _, dphi, _ = sp.physical_basis(np.arange(mesh4.n_triangles), np.array([[0.2, 0.2]]))
    p = mesh4.vertices[mesh4.triangles]
    for k in range(3):
        opposite = np.linalg.norm(p[:, (k + 2) % 3] - p[:, (k + 1) % 3], axis=1)
        assert np.allclose(np.linalg.norm(dphi[:, 0, k], axis=1), opposite / (2 * mesh4.areas))


def test_q2_hessian_finite_differences(mesh4, rng):
    sp = LagrangeSpace(mesh4, 2)
    f = sp.function(rng.standard_normal(sp.dim))
    cell = 9
    B = mesh4.jacobians[cell]
    p0 = mesh4.vertices[mesh4.triangles[cell, 0]]
    ref = np.array([0.3, 0.3])
    _, _, hess = f.eval_with_derivatives([cell], ref[None])
    h = 1e-4
    Binv = np.linalg.inv(B)

    def grad_at(x):
        r = Binv @ (x - p0)
        return f.eval_with_derivatives([cell], r[None])[1][0, 0]

    x0 = p0 + B @ ref
    fd = np.column_stack([(grad_at(x0 + h * e) - grad_at(x0 - h * e)) / (2 * h) for e in np.eye(2)])
    assert np.allclose(hess[0, 0], fd, atol=1e-7)
    # constant per element
    _, _, hess2 = f.eval_with_derivatives([cell], np.array([[0.1, 0.6]]))
    assert np.allclose(hess, hess2)


def test_value_at_own_node(mesh4):
    sp = LagrangeSpace(mesh4, 2)
    dof = 7
    node = sp.dof_to_node[dof]
    cell, loc = np.argwhere(sp.local_to_node == node)[0]
    v, _, _ = sp.basis_function(dof).evaluate_bary(cell, np.r_[1 - sp.ref_nodes[loc].sum(), sp.ref_nodes[loc]])
    assert v == pytest.approx(1.0)


def test_zero_on_boundary(mesh4, rng):
    sp = LagrangeSpace(mesh4, 3)
    f = sp.function(rng.standard_normal(sp.dim))
    assert np.all(f.nodal_values()[sp.boundary_nodes] == 0)


def test_evaluate_bary_outside(mesh4):
    with pytest.raises(ValueError):
        LagrangeSpace(mesh4, 1).basis_function(0).evaluate_bary(0, [0.5, 0.6, -0.1])


def test_vertex_dof_boundary(mesh4):
    with pytest.raises(ValueError):
        LagrangeSpace(mesh4, 1).vertex_dof(0)


def test_rejects_degree(mesh4):
    with pytest.raises(ValueError):
        LagrangeSpace(mesh4, 4)


def _affine_everywhere(sp, a, b, c):
    xy = sp.node_coords[sp.dof_to_node]
    return sp.function(a * xy[:, 0] + b * xy[:, 1] + c)


def test_jump_of_affine_function_vanishes(mesh4, rng):
    # affine on interior nodes; the boundary zero breaks it only on elements touching the boundary
    sp = LagrangeSpace(mesh4, 2)
    v = _affine_everywhere(sp, 0.7, -0.3, 0.2)
    metric = ConstantField(random_spd(rng, ()))
    touching = np.zeros(mesh4.n_triangles, dtype=bool)
    touching[np.any(sp.boundary_nodes[sp.local_to_node], axis=1)] = True
    checked = 0
    for e in np.flatnonzero(~mesh4.boundary_edges):
        if np.any(touching[mesh4.edge_triangles[e]]):
            continue
        assert np.abs(normal_derivative_jump(v, e, metric, [0.1, 0.5, 0.9])).max() < 1e-12
        checked += 1
    assert checked > 0


def test_jump_matches_one_sided_formula(mesh4):
    # Euclidean metric, hat function phi_i, edge e = [i, j] of triangle (i, j, k):
    # outward derivative across e is (|e| - |ik| cos theta_i) / (2 A)
    sp = LagrangeSpace(mesh4, 1)
    P = mesh4.vertices
    i = int(mesh4.interior_vertices[4])
    phi = sp.basis_function(sp.vertex_dof(i))
    metric = ConstantField(np.eye(2))
    for e in np.flatnonzero(np.any(mesh4.edges == i, axis=1)):
        j = int(mesh4.edges[e].sum() - i)
        expected = 0.0
        for side in range(2):
            t = mesh4.edge_triangles[e, side]
            k = int(mesh4.triangles[t].sum() - i - j)
            b = np.linalg.norm(P[j] - P[i])
            a = np.linalg.norm(P[k] - P[i])
            cos = (P[k] - P[i]) @ (P[j] - P[i]) / (a * b)
            expected += (b - a * cos) / (2 * mesh4.areas[t])
        got = normal_derivative_jump(phi, e, metric, [0.25, 0.75])
        assert np.allclose(got, expected, atol=1e-12)


def test_jump_symmetric_under_relabel(mesh4, rng):
    sp = LagrangeSpace(mesh4, 1)
    swapped = Mesh.from_arrays(mesh4.vertices, mesh4.triangles[::-1])
    sp2 = LagrangeSpace(swapped, 1)
    c = rng.standard_normal(sp.dim)
    metric = ConstantField(random_spd(rng, ()))
    e = int(np.flatnonzero(~mesh4.boundary_edges)[3])
    assert np.array_equal(swapped.edges[e], mesh4.edges[e])
    assert set(swapped.edge_triangles[e]) == {mesh4.n_triangles - 1 - t for t in mesh4.edge_triangles[e]}
    s = [0.2, 0.7]
    j1 = normal_derivative_jump(sp.function(c), e, metric, s)
    j2 = normal_derivative_jump(sp2.function(c), e, metric, s)
    assert np.allclose(j1, j2, atol=1e-13)


def test_tangential_derivative_continuous(mesh4, rng):
    from curvregge.regge import edge_reference_points

    sp = LagrangeSpace(mesh4, 3)
    v = sp.function(rng.standard_normal(sp.dim))
    g = random_spd(rng, ())
    s = np.array([0.1, 0.4, 0.8])
    worst = 0.0
    for e in np.flatnonzero(~mesh4.boundary_edges):
        tau = mesh4.vertices[mesh4.edges[e, 1]] - mesh4.vertices[mesh4.edges[e, 0]]
        tg = geometry.edge_frame(g, tau).tau_g
        vals = []
        for side in range(2):
            cell, k = mesh4.edge_triangles[e, side], mesh4.edge_local[e, side]
            ref = edge_reference_points(mesh4, [cell], [k], [e], s)
            _, grad, _ = v.eval_with_derivatives([cell], ref)
            vals.append(grad[0] @ tg)  # tau_g^T g grad_g v = tau_g^T grad v
        worst = max(worst, np.abs(vals[0] - vals[1]).max())
    assert worst < 1e-11


def test_normal_derivative_simplification(rng):
    g = random_spd(rng, (50,))
    grad = rng.standard_normal((50, 2))
    fr = geometry.edge_frame(g, rng.standard_normal((50, 2)))
    full = np.einsum("ni,nij,njk,nk->n", fr.n_g, g, geometry.inv2(g), grad)
    assert np.allclose(full, np.einsum("ni,ni->n", fr.n_g, grad), atol=1e-13)


def test_nodal_csv(mesh4, tmp_path, rng):
    sp = LagrangeSpace(mesh4, 1)
    f = sp.function(rng.standard_normal(sp.dim))
    path = tmp_path / "k.csv"
    write_nodal_csv(f, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "node_id,x,y,value"
    assert len(lines) == sp.n_nodes + 1
