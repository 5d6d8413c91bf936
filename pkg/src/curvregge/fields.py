"""Symmetric-matrix fields that can be sampled element by element.

Anything with an ``evaluate(mesh, cells, ref_pts, derivatives=False)`` method
works as a metric or perturbation field in :mod:`curvregge.assembly`:

* ``cells``: triangle indices, shape (C,)
* ``ref_pts``: reference points, shape (Q, 2) shared by all cells or (C, Q, 2)
* returns values (C, Q, 2, 2), plus physical gradients (C, Q, 2, 2, 2) when
  ``derivatives`` is true.

:class:`curvregge.regge.ReggeFunction` implements the same method.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from . import geometry


class AnalyticField:
    """Field given pointwise by ``func(x, y) -> (value, gradient)``."""

    def __init__(self, func: Callable, name: str = "analytic"):
        self.func = func
        self.name = name

    def at(self, x, y):
        return self.func(x, y)

    def evaluate(self, mesh, cells, ref_pts, derivatives: bool = False):
        xy = mesh.to_physical(cells, ref_pts)
        val, grad = self.func(xy[..., 0], xy[..., 1])
        return (val, grad) if derivatives else val

    def minus_identity(self) -> "AnalyticField":
        func = self.func

        def shifted(x, y):
            val, grad = func(x, y)
            return val - geometry.IDENTITY, grad

        return AnalyticField(shifted, name=f"{self.name} - delta")

    def __repr__(self):
        return f"AnalyticField({self.name})"


class ConstantField(AnalyticField):
    def __init__(self, matrix):
        matrix = np.asarray(matrix, dtype=float)
        if matrix.shape != (2, 2) or not np.allclose(matrix, matrix.T):
            raise ValueError("constant field must be a symmetric 2x2 matrix")
        self.matrix = matrix

        def func(x, y):
            shape = np.shape(x)
            return (
                np.broadcast_to(matrix, shape + (2, 2)).copy(),
                np.zeros(shape + (2, 2, 2)),
            )

        super().__init__(func, name=f"constant {matrix.tolist()}")


def graph_surface_metric() -> AnalyticField:
    """Induced metric of the graph z = x^2/2 - x^4/12 + y^2/2 - y^4/12."""
    return AnalyticField(geometry.eval_test_metric, name="gexact")


def polynomial_field(coeffs) -> AnalyticField:
    """Symmetric field whose components are polynomials in (x, y).

    ``coeffs`` maps component ``(i, j)`` with ``i <= j`` to a dict
    ``{(a, b): c}`` meaning ``c * x**a * y**b``.
    """

    def func(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        val = np.zeros(x.shape + (2, 2))
        grad = np.zeros(x.shape + (2, 2, 2))
        for (i, j), terms in coeffs.items():
            for (a, b), c in terms.items():
                v = c * x**a * y**b
                dx = c * a * x ** max(a - 1, 0) * y**b if a else 0.0
                dy = c * b * x**a * y ** max(b - 1, 0) if b else 0.0
                for p, q in {(i, j), (j, i)}:
                    val[..., p, q] += v
                    grad[..., p, q, 0] += dx
                    grad[..., p, q, 1] += dy
        return val, grad

    return AnalyticField(func, name=f"polynomial {coeffs}")
