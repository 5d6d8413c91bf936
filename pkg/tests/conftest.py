import numpy as np
import pytest

from curvregge.mesh import build_uniform_square_mesh, perturb_interior_vertices


@pytest.fixture(scope="session")
def mesh4():
    return perturb_interior_vertices(build_uniform_square_mesh(4), 0.2, 42)


@pytest.fixture(scope="session")
def mesh8():
    return perturb_interior_vertices(build_uniform_square_mesh(8), 0.2, 42)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
