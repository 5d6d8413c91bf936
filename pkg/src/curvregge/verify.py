"""Property suites run by ``curvregge verify``.

Each property is a function ``(quad) -> PropertyResult`` registered under a
short name; :func:`run_properties` runs a selection and reports pass/fail.
"""

from __future__ import annotations

import contextlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import assembly, geometry
from .assembly import Assembler
from .curvature import angle_defects, discrete_curvature, verify_linearization
from .fields import ConstantField, graph_surface_metric, polynomial_field
from .lagrange import LagrangeSpace
from .mesh import Mesh, build_uniform_square_mesh, perturb_interior_vertices
from .quadrature import QuadratureConfig, gauss_legendre_01
from .regge import ReggeFunction, ReggeSpace, edge_reference_points


@dataclass
class PropertyResult:
    name: str
    passed: bool
    value: float
    tolerance: float
    detail: str = ""

    def line(self) -> str:
        state = "PASS" if self.passed else "FAIL"
        extra = f" ({self.detail})" if self.detail else ""
        return f"[{state}] {self.name}: {self.value:.3e} (tol {self.tolerance:.1e}){extra}"


def _result(name, value, tol, detail="", lower=None):
    value = float(value)
    ok = bool(np.isfinite(value) and value <= tol) if lower is None else bool(lower <= value <= tol)
    return PropertyResult(name, ok, value, tol, detail)


def random_spd(rng, size, spread: float = 3.0):
    """Random SPD matrices R diag(l) R^T with eigenvalues in [1/spread, spread]."""
    theta = rng.uniform(0, np.pi, size)
    c, s = np.cos(theta), np.sin(theta)
    R = np.stack([np.stack([c, -s], -1), np.stack([s, c], -1)], -2)
    lam = np.exp(rng.uniform(-np.log(spread), np.log(spread), size + (2,)))
    return np.einsum("...ij,...j,...kj->...ik", R, lam, R)


def random_symmetric(rng, size):
    a = rng.standard_normal(size + (2, 2))
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def random_unit(rng, size):
    phi = rng.uniform(0, 2 * np.pi, size)
    return np.stack([np.cos(phi), np.sin(phi)], -1)


def random_regge_metric(space: ReggeSpace, rng, spread: float = 0.2, attempts: int = 100) -> ReggeFunction:
    """Euclidean dofs scaled edge-wise by 1 + U(-spread, spread), redrawn until SPD."""
    for _ in range(attempts):
        g = space.function(1.0 + spread * rng.uniform(-1, 1, space.dim))
        if g.check_spd(4).is_spd:
            return g
    raise RuntimeError("could not draw an SPD Regge metric; lower the spread")


def test_mesh(n: int = 4, seed: int = 42) -> Mesh:
    return perturb_interior_vertices(build_uniform_square_mesh(n), 0.2, seed)


test_mesh.__test__ = False  # not a pytest test


# --- pointwise geometry ---------------------------------------------------------


def prop_frame(quad=None, samples: int = 10_000, seed: int = 0) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = random_spd(rng, (samples,))
    fr = geometry.edge_frame(g, random_unit(rng, (samples,)))
    inner = lambda a, b: np.einsum("ni,nij,nj->n", a, g, b)  # noqa: E731
    err = max(
        np.abs(inner(fr.tau_g, fr.tau_g) - 1).max(),
        np.abs(inner(fr.n_g, fr.n_g) - 1).max(),
        np.abs(inner(fr.tau_g, fr.n_g)).max(),
    )
    return _result("frame-orthonormality", err, 1e-12)


def prop_frame_completeness(quad=None, samples: int = 10_000, seed: int = 1) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = random_spd(rng, (samples,))
    fr = geometry.edge_frame(g, random_unit(rng, (samples,)))
    outer = fr.tau_g[:, :, None] * fr.tau_g[:, None, :] + fr.n_g[:, :, None] * fr.n_g[:, None, :]
    return _result("frame-completeness", np.abs(outer - geometry.inv2(g)).max(), 1e-12)


def prop_nsn(quad=None, samples: int = 10_000, seed: int = 2) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = random_spd(rng, (samples,))
    sigma = random_symmetric(rng, (samples,))
    fr = geometry.edge_frame(g, random_unit(rng, (samples,)))
    lhs = np.einsum("ni,nij,nj->n", fr.n_g, geometry.s_g(sigma, g), fr.n_g)
    rhs = -np.einsum("ni,nij,nj->n", fr.tau_g, sigma, fr.tau_g)
    return _result("nSn-identity", np.abs(lhs - rhs).max(), 1e-12)


def prop_normal_parallel(quad=None, samples: int = 10_000, seed: int = 3) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = random_spd(rng, (samples,))
    fr = geometry.edge_frame(g, random_unit(rng, (samples,)))
    gn = np.einsum("nij,nj->ni", g, fr.n_g)
    cross = gn[:, 0] * fr.n[:, 1] - gn[:, 1] * fr.n[:, 0]
    along = np.einsum("ni,ni->n", gn, fr.n)
    err = max(np.abs(cross).max(), 0.0 if np.all(along > 0) else np.inf)
    return _result("g-normal-parallel", err, 1e-12)


def prop_christoffel_constant(quad=None, seed: int = 4) -> PropertyResult:
    rng = np.random.default_rng(seed)
    g = random_spd(rng, (100,))
    gamma = geometry.christoffel(g, np.zeros((100, 2, 2, 2)))
    return _result("christoffel-constant", np.abs(gamma).max(), 0.0)


def brute_force_curvature(x, y, h: float = 1e-4):
    """Brioschi formula for the test metric with central-difference derivatives."""

    def comp(xx, yy):
        g, _ = geometry.eval_test_metric(xx, yy)
        return g[..., 0, 0], g[..., 0, 1], g[..., 1, 1]

    E, F, G = comp(x, y)
    Ex, Fx, Gx = [(a - b) / (2 * h) for a, b in zip(comp(x + h, y), comp(x - h, y))]
    Ey, Fy, Gy = [(a - b) / (2 * h) for a, b in zip(comp(x, y + h), comp(x, y - h))]
    pxx, pyy = comp(x + h, y), comp(x - h, y)
    qxx, qyy = comp(x, y + h), comp(x, y - h)
    Gxx = (pxx[2] - 2 * G + pyy[2]) / h**2
    Eyy = (qxx[0] - 2 * E + qyy[0]) / h**2
    Fxy = (
        comp(x + h, y + h)[1] - comp(x + h, y - h)[1] - comp(x - h, y + h)[1] + comp(x - h, y - h)[1]
    ) / (4 * h**2)
    a = np.stack(
        [
            np.stack([-0.5 * Eyy + Fxy - 0.5 * Gxx, 0.5 * Ex, Fx - 0.5 * Ey], -1),
            np.stack([Fy - 0.5 * Gx, E, F], -1),
            np.stack([0.5 * Gy, F, G], -1),
        ],
        -2,
    )
    b = np.stack(
        [
            np.stack([np.zeros_like(E), 0.5 * Ey, 0.5 * Gx], -1),
            np.stack([0.5 * Ey, E, F], -1),
            np.stack([0.5 * Gx, F, G], -1),
        ],
        -2,
    )
    return (np.linalg.det(a) - np.linalg.det(b)) / (E * G - F**2) ** 2


def prop_curvature_formula(quad=None, seed: int = 5) -> PropertyResult:
    rng = np.random.default_rng(seed)
    x, y = rng.uniform(-1, 1, (2, 100))
    err = np.abs(geometry.exact_test_curvature(x, y) - brute_force_curvature(x, y)).max()
    return _result("test-curvature-formula", err, 1e-6)


# --- discrete curvature ------------------------------------------------------------


def prop_angle_defect(quad=None, n_metrics: int = 50, seed: int = 7) -> PropertyResult:
    quad = quad or QuadratureConfig()
    rng = np.random.default_rng(seed)
    mesh = test_mesh(4)
    space = ReggeSpace(mesh, 0)
    lag = LagrangeSpace(mesh, 1)
    worst = 0.0
    for _ in range(n_metrics):
        g = random_regge_metric(space, rng)
        res = discrete_curvature(g, 1, quad=quad, space=lag)
        rep = angle_defects(g)
        worst = max(worst, np.abs(res.pairings()[lag.node_to_dof[rep.vertices]] - rep.defects).max())
    return _result("angle-defect", worst, 1e-9, f"{n_metrics} random metrics, r=0 q=1")


def linearization_slopes(quad=None, n_pairs: int = 20, eps=(1e-2, 5e-3, 2.5e-3), seed: int = 11):
    """Fitted log-log slope of |fd - b_h/2| against eps, one per random pair."""
    rng = np.random.default_rng(seed)
    mesh = test_mesh(4)
    space = ReggeSpace(mesh, 0)
    asm = Assembler(LagrangeSpace(mesh, 1), quad)
    interior = mesh.interior_vertices
    slopes, gaps = [], []
    for k in range(n_pairs):
        g = space.identity() if k == 0 else random_regge_metric(space, rng)
        sigma = space.random_function(rng, 0.3)
        vertex = int(interior[rng.integers(len(interior))])
        d = [verify_linearization(g, sigma, vertex, e, assembler=asm).discrepancy for e in eps]
        slopes.append(np.polyfit(np.log(eps), np.log(d), 1)[0])
        gaps.append(d[-1])
    return np.array(slopes), np.array(gaps)


def prop_linearization(quad=None) -> PropertyResult:
    slopes, _ = linearization_slopes(quad)
    dev = np.abs(slopes - 2.0).max()
    return _result("linearization", dev, 0.2, f"slopes in [{slopes.min():.3f}, {slopes.max():.3f}], |slope - 2|")


def prop_edge_length(quad=None, seed: int = 13) -> PropertyResult:
    """<tau_g^T sigma tau_g, 1>_{g,e} = 2 d/dt length_e(g + t sigma) at t = 0."""
    quad = quad or QuadratureConfig()
    rng = np.random.default_rng(seed)
    mesh = test_mesh(4)
    space = ReggeSpace(mesh, 0)
    g = random_regge_metric(space, rng)
    sigma = space.random_function(rng, 0.3)
    s, w = gauss_legendre_01(quad.edge_points)
    edges = np.arange(mesh.n_edges)
    cells = mesh.edge_triangles[:, 0]
    ref = edge_reference_points(mesh, cells, mesh.edge_local[:, 0], edges, s)
    tau = mesh.vertices[mesh.edges[:, 1]] - mesh.vertices[mesh.edges[:, 0]]
    tau /= np.linalg.norm(tau, axis=1, keepdims=True)
    dl = w[None, :] * mesh.edge_lengths[:, None]

    def length(fn):
        G = fn.evaluate(mesh, cells, ref)
        return np.sum(np.sqrt(np.einsum("ei,epij,ej->ep", tau, G, tau)) * dl, axis=1)

    fr = geometry.edge_frame(g.evaluate(mesh, cells, ref), tau[:, None, :])
    tst = np.einsum("epi,epij,epj->ep", fr.tau_g, sigma.evaluate(mesh, cells, ref), fr.tau_g)
    pairing = np.sum(tst * np.sqrt(np.einsum("ei,epij,ej->ep", tau, g.evaluate(mesh, cells, ref), tau)) * dl, axis=1)
    h = 1e-5
    fd = (length(g + h * sigma) - length(g - h * sigma)) / (2 * h)
    return _result("edge-length-derivative", np.abs(pairing - 2 * fd).max(), 1e-8)


def prop_flat(quad=None, seed: int = 17, degrees=((0, 1), (0, 2), (1, 1), (1, 2), (2, 1), (2, 2))) -> PropertyResult:
    quad = quad or QuadratureConfig()
    rng = np.random.default_rng(seed)
    mesh = test_mesh(4)
    worst = 0.0
    from .analysis import l2_error

    for r, q in degrees:
        g = ReggeSpace(mesh, r).interpolate(ConstantField(random_spd(rng, ())))
        res = discrete_curvature(g, q, quad=quad)
        worst = max(worst, l2_error(res.kappa, lambda x, y: np.zeros_like(x), quad))
    return _result("flat-metric", worst, 1e-9, "max L2 norm of kappa_h")


def consistency_gap(q: int, n: int = 8, quad=None) -> float:
    """max_i |b_h(delta; [[0,0],[0,x^2]], phi_i) - int -2 phi_i dx|."""
    quad = quad or QuadratureConfig()
    mesh = test_mesh(n)
    lag = LagrangeSpace(mesh, q)
    sigma = polynomial_field({(1, 1): {(2, 0): 1.0}})
    b = assembly.assemble_b_h(ConstantField(np.eye(2)), sigma, lag, quad)
    asm = Assembler(lag, quad)
    local = -2.0 * np.einsum("cqi,cq->ci", asm.phi, asm.tri_weights)
    exact = asm.scatter(local, np.zeros((len(asm.facet_cells), lag.n_local)))
    return float(np.abs(b - exact).max())


def prop_consistency(quad=None) -> PropertyResult:
    gap = max(consistency_gap(q, quad=quad) for q in (1, 2))
    return _result("consistency", gap, 1e-10, "G = delta, sigma = x^2 dy dy, q = 1, 2")


def integral_formula_gap(q: int = 1, n: int = 8, quad=None) -> float:
    """max_i |rhs_i - int kappa(g) phi_i mu(g)| for the analytic test metric."""
    quad = quad or QuadratureConfig()
    mesh = test_mesh(n)
    lag = LagrangeSpace(mesh, q)
    asm = Assembler(lag, quad)
    g = graph_surface_metric()
    rhs = asm.curvature_rhs(g)
    xy = mesh.to_physical(asm.cells, asm.tri_pts)
    gv, _ = geometry.eval_test_metric(xy[..., 0], xy[..., 1])
    dens = geometry.exact_test_curvature(xy[..., 0], xy[..., 1]) * geometry.volume_density(gv) * asm.tri_weights
    exact = asm.scatter(np.einsum("cqi,cq->ci", asm.phi, dens), np.zeros((len(asm.facet_cells), lag.n_local)))
    return float(np.abs(rhs - exact).max())


def prop_integral_formula(quad=None) -> PropertyResult:
    return _result("integral-formula", integral_formula_gap(quad=quad), 1e-6, "analytic test metric, n = 8")


PROPERTIES: dict[str, Callable[..., PropertyResult]] = {
    "frame": prop_frame,
    "frame-completeness": prop_frame_completeness,
    "nsn": prop_nsn,
    "normal-parallel": prop_normal_parallel,
    "christoffel": prop_christoffel_constant,
    "curvature-formula": prop_curvature_formula,
    "angle-defect": prop_angle_defect,
    "linearization": prop_linearization,
    "edge-length": prop_edge_length,
    "flat": prop_flat,
    "consistency": prop_consistency,
    "integral-formula": prop_integral_formula,
}


def run_properties(names=None, quad=None, echo=print) -> list[PropertyResult]:
    names = list(PROPERTIES) if not names else list(names)
    unknown = [n for n in names if n not in PROPERTIES]
    if unknown:
        raise KeyError(f"unknown properties {unknown}; choose from {sorted(PROPERTIES)}")
    out = []
    for name in names:
        res = PROPERTIES[name](quad)
        if echo:
            echo(res.line())
        out.append(res)
    return out


@contextlib.contextmanager
def injected_fault(kind: str = "edge-sign"):
    """Temporarily corrupt the assembly; used to check that the suites catch it."""
    if kind != "edge-sign":
        raise ValueError(f"unknown fault {kind!r}")
    saved = assembly._EDGE_TERM_SIGN
    assembly._EDGE_TERM_SIGN = -saved
    try:
        yield
    finally:
        assembly._EDGE_TERM_SIGN = saved
