import numpy as np
import pytest

from hnls.core import EquationParams, Field, make_grid


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid_small():
    return make_grid(np.pi, 64)


@pytest.fixture
def gaussian_grid():
    return make_grid(40.0, 1024)


@pytest.fixture
def gaussian(gaussian_grid):
    return Field.from_function(gaussian_grid, lambda x: np.exp(-x**2 / 4))


@pytest.fixture
def full_params():
    return EquationParams(a=1.0, b=0.5, lam=1.0, beta=1.0)


def random_field(grid, rng, decay=True):
    vals = rng.standard_normal(grid.n_points) + 1j * rng.standard_normal(grid.n_points)
    if decay:
        vals = vals * np.exp(-grid.x**2 / 8)
    return Field(vals, grid)
