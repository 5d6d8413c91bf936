"""Quadrature rules on the reference triangle, its edges, and [0, 1]."""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi, roots_legendre


@dataclass(frozen=True)
class QuadratureConfig:
    tri_degree: int = 10
    edge_points: int = 8
    t_points: int = 10

    def __post_init__(self):
        if self.tri_degree < 1 or self.edge_points < 1 or self.t_points < 1:
            raise ValueError(f"quadrature sizes must be positive, got {self}")

    def doubled(self) -> "QuadratureConfig":
        return replace(
            self,
            tri_degree=2 * self.tri_degree,
            edge_points=2 * self.edge_points,
            t_points=2 * self.t_points,
        )


@lru_cache(maxsize=None)
def gauss_legendre_01(n: int) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss-Legendre rule on [0, 1]."""
    x, w = roots_legendre(n)
    return 0.5 * (x + 1.0), 0.5 * w


@lru_cache(maxsize=None)
def triangle_rule(degree: int) -> tuple[np.ndarray, np.ndarray]:
    """Collapsed (conical product) Gauss rule on the reference triangle
    ``{xi, eta >= 0, xi + eta <= 1}``, exact for polynomials of total degree
    ``degree``. Returns points (Q, 2) and weights summing to 1/2.

    Gauss-Jacobi in the collapsed direction absorbs the Duffy Jacobian, so
    ``ceil((degree + 1) / 2)`` points per direction suffice.
    """
    n = max(1, (degree + 2) // 2)
    xj, wj = roots_jacobi(n, 1.0, 0.0)
    u = 0.5 * (xj + 1.0)
    wu = 0.25 * wj
    v, wv = gauss_legendre_01(n)
    U, Vv = np.meshgrid(u, v, indexing="ij")
    W = np.outer(wu, wv)
    pts = np.column_stack([U.ravel(), (Vv * (1.0 - U)).ravel()])
    pts.setflags(write=False)
    w = W.ravel()
    w.setflags(write=False)
    return pts, w
