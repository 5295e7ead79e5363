import numpy as np
import pytest

import twistband as tb


@pytest.fixture(scope="session")
def rect_mesh():
    return tb.build_mesh(tb.preset("rectangle"), 0.02)


@pytest.fixture(scope="session")
def rect_modes(rect_mesh):
    problem = tb.assemble_neumann_forms(rect_mesh)
    return tb.solve_transverse_modes(problem, 8, mesh=rect_mesh)


@pytest.fixture(scope="session")
def rect_coupling(rect_modes):
    return tb.coupling_matrices(rect_modes, 8)


@pytest.fixture(scope="session")
def sin_twist():
    return tb.trig_twist([{"freq": 1, "sin": 1.0}], 1.0)


@pytest.fixture(scope="session")
def linear_twist():
    return tb.polynomial_twist([0.0, 0.5], 0.0, 1.0)


@pytest.fixture(scope="session")
def cos_w():
    grid = tb.periodic_grid(1.0, 1024)
    return tb.SampledPotential(grid=grid, values=np.cos(2 * np.pi * grid), kind="W",
                               c1=1.0, c2=0.0, profile_description="cos(2 pi s)", period=1.0)
