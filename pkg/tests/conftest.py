import math

import numpy as np
import pytest

from loglab.gaussian import gaussian_field
from loglab.grid import Field, Grid


def rescaled_gaussian(state, scaler, t, grid):
    """Exact Gaussian solution carried to the rescaled frame.

    The physical solution is sampled on a grid whose nodes are exactly
    tau * y_j, so no interpolation enters the oracle.
    """
    tau, taud = float(scaler.tau(t)), float(scaler.taudot(t))
    wide = Grid(grid.dim, grid.n, grid.length * tau)
    u = gaussian_field(state, t, wide).values
    mass = abs(state.b0) ** 2 * math.prod(math.sqrt(math.pi / a) for a in state.alpha0)
    ratio = math.sqrt(mass / math.pi ** (grid.dim / 2))
    theta = float(scaler.theta(t, grid.dim, ratio))
    chirp = np.exp(-0.5j * taud * tau * grid.r2 - 1j * theta)
    return Field(grid, tau ** (grid.dim / 2) / ratio * u * chirp)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
