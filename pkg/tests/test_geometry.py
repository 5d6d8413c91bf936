import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from curvregge import geometry
from curvregge.verify import brute_force_curvature, random_spd, random_symmetric, random_unit

# symbolic oracle (Brioschi/graph-surface formula evaluated in sympy), frozen
CURVATURE_ORACLE = [
    ((0.0, 0.0), 1.0, (0.0, 0.0)),
    ((0.5, 0.5), 0.27890794531357421, (-0.64192016101510485, -0.64192016101510485)),
    ((0.3, -0.7), 0.22769101672974701, (-0.31905619830396775, 0.81557748644685035)),
    ((1.0, 0.2), 0.0, (-0.87255643863673293, 0.0)),
    ((-0.9, 0.4), 0.064335565242580203, (0.62989055606169053, -0.11324243062105926)),
]


@pytest.mark.parametrize("point, kappa, grad", CURVATURE_ORACLE)
def test_exact_curvature_against_symbolic_oracle(point, kappa, grad):
    assert geometry.exact_test_curvature(*point) == pytest.approx(kappa, abs=1e-15)
    assert geometry.exact_test_curvature_gradient(*point) == pytest.approx(grad, abs=1e-14)


def test_exact_curvature_vanishes_on_boundary():
    s = np.linspace(-1, 1, 11)
    assert np.allclose(geometry.exact_test_curvature(np.ones_like(s), s), 0)
    assert np.allclose(geometry.exact_test_curvature(s, -np.ones_like(s)), 0)


def test_exact_curvature_matches_brute_force(rng):
    x, y = rng.uniform(-1, 1, (2, 100))
    assert np.abs(geometry.exact_test_curvature(x, y) - brute_force_curvature(x, y)).max() < 1e-6


def test_test_metric_derivatives_by_finite_differences(rng):
    x, y = rng.uniform(-1, 1, (2, 20))
    _, dg = geometry.eval_test_metric(x, y)
    h = 1e-6
    fd_x = (geometry.eval_test_metric(x + h, y)[0] - geometry.eval_test_metric(x - h, y)[0]) / (2 * h)
    fd_y = (geometry.eval_test_metric(x, y + h)[0] - geometry.eval_test_metric(x, y - h)[0]) / (2 * h)
    assert np.allclose(dg[..., 0], fd_x, atol=1e-8)
    assert np.allclose(dg[..., 1], fd_y, atol=1e-8)


def test_inv2_det2(rng):
    a = random_spd(rng, (50,))
    assert np.allclose(geometry.inv2(a) @ a, np.eye(2), atol=1e-13)
    assert np.allclose(geometry.det2(a), np.linalg.det(a))


def test_sym_eigvalsh(rng):
    a = random_symmetric(rng, (50,))
    assert np.allclose(geometry.sym_eigvalsh(a), np.linalg.eigvalsh(a), atol=1e-13)


def test_christoffel_constant_metric_is_zero(rng):
    g = random_spd(rng, (10,))
    assert np.all(geometry.christoffel(g, np.zeros((10, 2, 2, 2))) == 0)


def test_christoffel_conformal():
    # g = e^{2x} delta at x = 0.3: Gamma^1_11 = 1, Gamma^1_22 = -1, Gamma^2_12 = Gamma^2_21 = 1
    x = 0.3
    g = np.exp(2 * x) * np.eye(2)
    dg = np.zeros((2, 2, 2))
    dg[0, 0, 0] = dg[1, 1, 0] = 2 * np.exp(2 * x)
    gamma = geometry.christoffel(g, dg)
    expected = np.zeros((2, 2, 2))
    expected[0, 0, 0] = 1
    expected[0, 1, 1] = -1
    expected[1, 0, 1] = expected[1, 1, 0] = 1
    assert np.allclose(gamma, expected, atol=1e-14)


def test_christoffel_test_metric_by_finite_differences():
    # independent assembly of the formula from finite-difference metric derivatives at the origin-ish point
    x0, y0, h = 0.4, -0.2, 1e-6
    g, dg = geometry.eval_test_metric(x0, y0)
    fd = np.stack(
        [
            (geometry.eval_test_metric(x0 + h, y0)[0] - geometry.eval_test_metric(x0 - h, y0)[0]) / (2 * h),
            (geometry.eval_test_metric(x0, y0 + h)[0] - geometry.eval_test_metric(x0, y0 - h)[0]) / (2 * h),
        ],
        axis=-1,
    )
    ginv = np.linalg.inv(g)
    oracle = np.zeros((2, 2, 2))
    for k in range(2):
        for i in range(2):
            for j in range(2):
                oracle[k, i, j] = 0.5 * sum(
                    ginv[k, l] * (fd[l, i, j] + fd[l, j, i] - fd[i, j, l]) for l in range(2)
                )
    gamma = geometry.christoffel(g, dg)
    assert np.allclose(gamma, oracle, atol=1e-8)
    assert np.allclose(gamma, np.swapaxes(gamma, -1, -2))


def test_christoffel_rejects_non_spd():
    with pytest.raises(geometry.NotSPDError):
        geometry.christoffel(np.diag([1.0, -1.0]), np.zeros((2, 2, 2)))


def test_hessian_flat_is_euclidean(rng):
    d2v = random_symmetric(rng, ())
    assert np.array_equal(geometry.hessian_g(d2v, rng.standard_normal(2), np.zeros((2, 2, 2))), d2v)


def test_hessian_affine(rng):
    gamma = rng.standard_normal((2, 2, 2))
    dv = rng.standard_normal(2)
    assert np.allclose(geometry.hessian_g(np.zeros((2, 2)), dv, gamma), -np.einsum("kij,k->ij", gamma, dv))


def test_hessian_quadratic_conformal():
    # v = x^2 + x y under g = e^{2x} delta at (x, y) = (0.3, 0.5), by hand
    x, y = 0.3, 0.5
    dv = np.array([2 * x + y, x])
    d2v = np.array([[2.0, 1.0], [1.0, 0.0]])
    gamma = np.zeros((2, 2, 2))
    gamma[0, 0, 0], gamma[0, 1, 1], gamma[1, 0, 1], gamma[1, 1, 0] = 1, -1, 1, 1
    expected = np.array([[2 - dv[0], 1 - dv[1]], [1 - dv[1], dv[0]]])
    assert np.allclose(geometry.hessian_g(d2v, dv, gamma), expected)


def test_s_g_examples():
    assert np.allclose(geometry.s_g(np.eye(2), np.eye(2)), -np.eye(2))
    assert np.allclose(geometry.s_g(np.diag([1.0, 0.0]), np.eye(2)), np.diag([0.0, -1.0]))


def test_s_g_trace_flip(rng):
    g = random_spd(rng, (100,))
    s = random_symmetric(rng, (100,))
    tr = lambda m: geometry.trace2(geometry.inv2(g) @ m)  # noqa: E731
    assert np.allclose(tr(geometry.s_g(s, g)), -tr(s), atol=1e-12)


@pytest.mark.parametrize(
    "g, tau, tau_g, n_g",
    [
        (np.eye(2), [1.0, 0.0], [1.0, 0.0], [0.0, -1.0]),
        (4 * np.eye(2), [1.0, 0.0], [0.5, 0.0], [0.0, -0.5]),
        (4 * np.eye(2), [3.0, 0.0], [0.5, 0.0], [0.0, -0.5]),
    ],
)
def test_edge_frame_examples(g, tau, tau_g, n_g):
    fr = geometry.edge_frame(g, tau)
    assert np.allclose(fr.tau_g, tau_g)
    assert np.allclose(fr.n_g, n_g)


def test_edge_frame_rejects_non_spd():
    with pytest.raises(geometry.NotSPDError):
        geometry.edge_frame(np.diag([1.0, 0.0]), [1.0, 0.0])


spd_params = st.tuples(
    st.floats(0, np.pi), st.floats(-2.0, 2.0), st.floats(-2.0, 2.0), st.floats(0, 2 * np.pi)
)


@settings(max_examples=200, deadline=None)
@given(spd_params, arrays(np.float64, 3, elements=st.floats(-5, 5)))
def test_frame_identities(params, svec):
    theta, l1, l2, phi = params
    c, s = np.cos(theta), np.sin(theta)
    R = np.array([[c, -s], [s, c]])
    g = R @ np.diag(np.exp([l1, l2])) @ R.T
    sigma = np.array([[svec[0], svec[1]], [svec[1], svec[2]]])
    fr = geometry.edge_frame(g, [np.cos(phi), np.sin(phi)])
    scale = np.linalg.norm(g) * np.linalg.norm(geometry.inv2(g))
    tol = 1e-12 * scale
    assert abs(fr.tau_g @ g @ fr.tau_g - 1) <= tol
    assert abs(fr.n_g @ g @ fr.n_g - 1) <= tol
    assert abs(fr.tau_g @ g @ fr.n_g) <= tol
    outer = np.outer(fr.tau_g, fr.tau_g) + np.outer(fr.n_g, fr.n_g)
    assert np.allclose(outer, geometry.inv2(g), atol=tol * np.linalg.norm(geometry.inv2(g)))
    nsn = fr.n_g @ geometry.s_g(sigma, g) @ fr.n_g
    tst = fr.tau_g @ sigma @ fr.tau_g
    assert nsn == pytest.approx(-tst, abs=1e-12 * scale * (1 + np.abs(sigma).max()))
    gn = g @ fr.n_g
    assert abs(gn[0] * fr.n[1] - gn[1] * fr.n[0]) <= tol * np.linalg.norm(gn)
    assert gn @ fr.n > 0


def test_frame_orthonormality_bulk(rng):
    g = random_spd(rng, (10_000,))
    fr = geometry.edge_frame(g, random_unit(rng, (10_000,)))
    ip = lambda a, b: np.einsum("ni,nij,nj->n", a, g, b)  # noqa: E731
    assert np.abs(ip(fr.tau_g, fr.tau_g) - 1).max() <= 1e-12
    assert np.abs(ip(fr.n_g, fr.n_g) - 1).max() <= 1e-12
    assert np.abs(ip(fr.tau_g, fr.n_g)).max() <= 1e-12


def test_spd_mask_tolerance():
    assert geometry.spd_mask(np.diag([1.0, 1e-13])) == np.False_
    assert geometry.spd_mask(np.diag([1.0, 1e-11])) == np.True_
