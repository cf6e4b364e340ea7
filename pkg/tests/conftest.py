"""Shared fixtures: small meshes and data simulated from the FEM model."""

import numpy as np
import pytest

from parapost.forward_fem import assemble, solve_full
from parapost.models.boundary import BoundaryPrior, BoundarySeries
from parapost.models.coefficients import CoefficientField, InitialCondition
from parapost.models.mesh import SpatialMesh, TimeGrid
from parapost.models.observations import ObservationSet


def cooling_boundary(grid, start=100.0):
    """Smooth boundary values that relax away from ``start``."""
    t = grid.times
    return BoundarySeries(
        start - 30.0 * (1.0 - np.exp(-3.0 * t)),
        start - 20.0 * (1.0 - np.exp(-2.0 * t)),
        start,
        start,
    )


@pytest.fixture
def mesh():
    return SpatialMesh.uniform(6)


@pytest.fixture
def grid():
    return TimeGrid(1.0, 10)


@pytest.fixture
def simulate():
    """Return a function drawing readings from the FEM forward model.

    The function returns the observation set and the true boundary
    series.
    """

    def simulate(
        theta=1.0,
        sigma=0.5,
        elements=6,
        steps=10,
        t_end=1.0,
        seed=0,
        coeffs=None,
    ):
        mesh = SpatialMesh.uniform(elements)
        grid = TimeGrid(t_end, steps)
        initial = InitialCondition.constant(100.0, mesh)
        bseries = cooling_boundary(grid)

        if coeffs is None:
            coeffs = CoefficientField.constant(theta, mesh)

        clean = solve_full(
            assemble(mesh, coeffs, grid.dt), initial, bseries, steps
        ).nodal()
        rng = np.random.default_rng(seed)
        Y = clean + sigma * rng.standard_normal(clean.shape)

        return ObservationSet(Y, sigma, mesh, grid, initial), bseries

    return simulate


@pytest.fixture
def data_prior():
    """Return a function building a boundary prior centred on readings."""

    def data_prior(obs, sigma_p=0.5):
        return BoundaryPrior(obs.Y_L, obs.Y_R, sigma_p)

    return data_prior
