from math import factorial

import numpy as np
import pytest

from curvregge.quadrature import QuadratureConfig, gauss_legendre_01, triangle_rule


def _monomial_integral(a, b):
    # int over the reference triangle of xi^a eta^b
    return factorial(a) * factorial(b) / factorial(a + b + 2)


@pytest.mark.parametrize("degree", [1, 2, 5, 10, 20])
def test_triangle_rule_exactness(degree):
    pts, w = triangle_rule(degree)
    assert w.sum() == pytest.approx(0.5, abs=1e-15)
    assert np.all(w > 0)
    assert np.all(pts >= 0) and np.all(pts.sum(axis=1) <= 1)
    for a in range(degree + 1):
        for b in range(degree + 1 - a):
            got = np.sum(w * pts[:, 0] ** a * pts[:, 1] ** b)
            assert got == pytest.approx(_monomial_integral(a, b), rel=1e-12, abs=1e-16)


def test_default_triangle_rule_size():
    pts, _ = triangle_rule(10)
    assert len(pts) == 36


@pytest.mark.parametrize("n", [1, 4, 8])
def test_gauss_legendre_exactness(n):
    x, w = gauss_legendre_01(n)
    for k in range(2 * n):
        assert np.sum(w * x**k) == pytest.approx(1 / (k + 1), rel=1e-13)


def test_config_doubling():
    assert QuadratureConfig().doubled() == QuadratureConfig(20, 16, 20)


def test_config_rejects_zero():
    with pytest.raises(ValueError):
        QuadratureConfig(edge_points=0)
