"""Pointwise Riemannian algebra on 2x2 symmetric matrices.

Every function broadcasts over leading axes: a metric has shape (..., 2, 2)
and a metric gradient has shape (..., 2, 2, 2) with ``dg[..., i, j, k]`` the
derivative of ``g_ij`` with respect to ``x^k``. Christoffel symbols are stored
as ``gamma[..., k, i, j]`` for Gamma^k_ij.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

J = np.array([[0.0, 1.0], [-1.0, 0.0]])
IDENTITY = np.eye(2)
SPD_RTOL = 1e-12


class NotSPDError(ValueError):
    """A matrix that must be symmetric positive definite is not."""


def det2(a):
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def inv2(a):
    """Adjugate over determinant."""
    d = det2(a)
    out = np.empty(np.shape(a))
    out[..., 0, 0] = a[..., 1, 1]
    out[..., 1, 1] = a[..., 0, 0]
    out[..., 0, 1] = -a[..., 0, 1]
    out[..., 1, 0] = -a[..., 1, 0]
    return out / d[..., None, None]


def trace2(a):
    return a[..., 0, 0] + a[..., 1, 1]


def sym_eigvalsh(a):
    """Eigenvalues (ascending) of symmetric 2x2 matrices, closed form."""
    mean = 0.5 * (a[..., 0, 0] + a[..., 1, 1])
    half_diff = 0.5 * (a[..., 0, 0] - a[..., 1, 1])
    rad = np.hypot(half_diff, a[..., 0, 1])
    return np.stack([mean - rad, mean + rad], axis=-1)


def spd_mask(g, rtol: float = SPD_RTOL):
    """True where min eigenvalue > rtol * max eigenvalue (and max > 0)."""
    lam = sym_eigvalsh(g)
    return (lam[..., 1] > 0) & (lam[..., 0] > rtol * lam[..., 1])


def require_spd(g, what: str = "metric"):
    ok = spd_mask(g)
    if not np.all(ok):
        bad = np.argwhere(~ok)[0]
        raise NotSPDError(f"{what} is not positive definite at sample index {tuple(bad)}")


def christoffel(g, dg, check: bool = True):
    """Christoffel symbols of the second kind,
    Gamma^k_ij = 1/2 g^{kl} (d_j g_li + d_i g_lj - d_l g_ij)."""
    if check:
        require_spd(g)
    ginv = inv2(g)
    # lowered[l, i, j] = d_j g_li + d_i g_lj - d_l g_ij
    lowered = dg + np.swapaxes(dg, -1, -2) - np.moveaxis(dg, -1, -3)
    return 0.5 * np.einsum("...kl,...lij->...kij", ginv, lowered)


def hessian_g(d2v, dv, gamma):
    """Riemannian Hessian d_i d_j v - Gamma^k_ij d_k v."""
    return d2v - np.einsum("...kij,...k->...ij", gamma, dv)


def s_g(sigma, g):
    """S_g sigma = sigma - g tr(g^{-1} sigma)."""
    tr = trace2(inv2(g) @ sigma)
    return sigma - g * tr[..., None, None]


class EdgeFrame(NamedTuple):
    tau: np.ndarray
    n: np.ndarray
    tau_g: np.ndarray
    n_g: np.ndarray


def edge_frame(g, tau, check: bool = True) -> EdgeFrame:
    """Euclidean and g-orthonormal tangent/normal pairs for edge direction tau.

    ``tau`` is normalised first; ``n = J tau`` is the Euclidean normal on the
    right of tau (outward when tau runs counterclockwise).
    """
    if check:
        require_spd(g)
    tau = np.asarray(tau, dtype=float)
    tau = tau / np.linalg.norm(tau, axis=-1, keepdims=True)
    tau = np.broadcast_to(tau, np.shape(g)[:-1])
    n = tau @ J.T
    gtau = np.einsum("...ij,...j->...i", g, tau)
    len_t = np.sqrt(np.einsum("...i,...i->...", tau, gtau))
    sqrt_det = np.sqrt(det2(g))
    tau_g = tau / len_t[..., None]
    n_g = (gtau @ J.T) / (len_t * sqrt_det)[..., None]
    return EdgeFrame(tau, n, tau_g, n_g)


def volume_density(g):
    """sqrt(det g), the density of mu(g) against dx."""
    return np.sqrt(det2(g))


# --- the graph metric of z = f(x, y) with f = x^2/2 - x^4/12 + y^2/2 - y^4/12 ---


def _test_surface_derivatives(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    fx = x - x**3 / 3.0
    fy = y - y**3 / 3.0
    fxx = 1.0 - x**2
    fyy = 1.0 - y**2
    return fx, fy, fxx, fyy


def eval_test_metric(x, y):
    """Metric delta + grad f grad f^T and its exact first derivatives.

    Returns ``(g, dg)`` with shapes (..., 2, 2) and (..., 2, 2, 2).
    """
    fx, fy, fxx, fyy = _test_surface_derivatives(x, y)
    grad = np.stack([fx, fy], axis=-1)
    g = IDENTITY + grad[..., :, None] * grad[..., None, :]
    # hess f is diagonal: d_k f_i = delta_ik f_kk
    h = np.stack([fxx, fyy], axis=-1)
    dgrad = np.zeros(grad.shape + (2,))
    dgrad[..., 0, 0] = h[..., 0]
    dgrad[..., 1, 1] = h[..., 1]
    # d_k g_ij = f_ik f_j + f_i f_jk
    dg = dgrad[..., :, None, :] * grad[..., None, :, None] + grad[..., :, None, None] * dgrad[..., None, :, :]
    return g, dg


def exact_test_curvature(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    denom = 9.0 + x**2 * (x**2 - 3.0) ** 2 + y**2 * (y**2 - 3.0) ** 2
    return 81.0 * (1.0 - x**2) * (1.0 - y**2) / denom**2


def exact_test_curvature_gradient(x, y):
    """Closed-form gradient of :func:`exact_test_curvature`, shape (..., 2)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    px = x**2 * (x**2 - 3.0) ** 2
    py = y**2 * (y**2 - 3.0) ** 2
    dpx = 2 * x * (x**2 - 3.0) ** 2 + 4 * x**3 * (x**2 - 3.0)
    dpy = 2 * y * (y**2 - 3.0) ** 2 + 4 * y**3 * (y**2 - 3.0)
    D = 9.0 + px + py
    num = 81.0 * (1.0 - x**2) * (1.0 - y**2)
    dnum_x = -162.0 * x * (1.0 - y**2)
    dnum_y = -162.0 * y * (1.0 - x**2)
    kx = dnum_x / D**2 - 2.0 * num * dpx / D**3
    ky = dnum_y / D**2 - 2.0 * num * dpy / D**3
    return np.stack([kx, ky], axis=-1)
