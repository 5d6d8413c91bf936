"""Monomials xi^a eta^b on the reference triangle and their derivatives."""

from __future__ import annotations

from functools import lru_cache

import numpy as np


@lru_cache(maxsize=None)
def exponents(degree: int) -> np.ndarray:
    """All (a, b) with a + b <= degree, ordered by total degree."""
    return np.array([(a, d - a) for d in range(degree + 1) for a in range(d, -1, -1)], dtype=int)


def _powers(x, p):
    # x**p with the convention that negative powers are multiplied by zero
    return np.where(p >= 0, x ** np.maximum(p, 0), 0.0)


def monomials(degree: int, pts, order: int = 0):
    """Monomial values and derivatives at reference points.

    ``pts`` has shape (..., 2). Returns a list ``[V, D, H][: order + 1]`` with
    V (..., m), D (..., m, 2) first derivatives and H (..., m, 2, 2) second
    derivatives, m = number of monomials.
    """
    pts = np.asarray(pts, dtype=float)
    ab = exponents(degree)
    a, b = ab[:, 0], ab[:, 1]
    xi = pts[..., 0, None]
    eta = pts[..., 1, None]
    out = [_powers(xi, a) * _powers(eta, b)]
    if order >= 1:
        dxi = a * _powers(xi, a - 1) * _powers(eta, b)
        deta = b * _powers(xi, a) * _powers(eta, b - 1)
        out.append(np.stack([dxi, deta], axis=-1))
    if order >= 2:
        hxx = a * (a - 1) * _powers(xi, a - 2) * _powers(eta, b)
        hxy = a * b * _powers(xi, a - 1) * _powers(eta, b - 1)
        hyy = b * (b - 1) * _powers(xi, a) * _powers(eta, b - 2)
        H = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
        out.append(H)
    return out
