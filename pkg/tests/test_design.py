"""Tests for experimental setups, divergences and expected information gain."""

import numpy as np
import pytest
from scipy.integrate import trapezoid

from parapost.constants import COMBINED, SENSOR_SUBSET, TIME_WINDOWS
from parapost.design import (
    EigEstimate,
    ExperimentalSetup,
    eig_grid,
    expected_information_gain,
    information_divergence,
    restrict_observations,
    setup_mask,
)
from parapost.exceptions import EigError, SetupError
from parapost.models.coefficients import CoefficientField
from parapost.models.mesh import SpatialMesh, TimeGrid
from parapost.models.observations import ObservationSet
from parapost.posterior_scalar import (
    LaplacePosterior,
    LognormalPrior,
    ScalarInference,
    grid_posterior,
)
from parapost.synth_data import DatasetGenerator, DatasetSpec, RobinProblem


@pytest.fixture(scope="module")
def generator():
    mesh = SpatialMesh.uniform(4)
    prob = RobinProblem(
        CoefficientField.constant(1.0, mesh), mesh, TimeGrid(1.0, 10)
    )
    return DatasetGenerator(
        prob, DatasetSpec.equispaced(10, 0.1, seed=1, count=5)
    )


@pytest.fixture
def inference():
    return ScalarInference(LognormalPrior(0.0, 0.5), 0.5, bracket=(0.3, 3.0))


class TestSetups:
    def test_es1_masks(self):
        mesh, grid = SpatialMesh.uniform(4), TimeGrid(1.0, 9)
        setups = ExperimentalSetup.es1()

        assert [s.label for s in setups] == ["window1", "window2", "window3"]
        for k, setup in enumerate(setups):
            expected = np.zeros((3, 9), dtype=bool)
            expected[:, 3 * k : 3 * k + 3] = True
            np.testing.assert_array_equal(
                setup_mask(setup, mesh, grid), expected
            )

    def test_es1_columns_at_sixty_steps(self):
        mesh, grid = SpatialMesh.uniform(6), TimeGrid(1.0, 60)

        for setup in ExperimentalSetup.es1():
            mask = setup_mask(setup, mesh, grid)
            assert mask.any(axis=0).sum() == 20

    def test_windows_partition_times(self):
        mesh, grid = SpatialMesh.uniform(4), TimeGrid(1.0, 12)
        masks = [
            setup_mask(s, mesh, grid) for s in ExperimentalSetup.es1(count=4)
        ]

        np.testing.assert_array_equal(np.sum(masks, axis=0), 1)

    def test_es2_masks(self):
        mesh, grid = SpatialMesh.uniform(4), TimeGrid(1.0, 9)
        setups = ExperimentalSetup.es2(mesh.interior_labels)

        assert [s.kind for s in setups] == [SENSOR_SUBSET] * 3
        mask = setup_mask(setups[1], mesh, grid)
        np.testing.assert_array_equal(mask[1], True)
        assert mask.sum() == 9

    def test_es3_order(self):
        mesh, grid = SpatialMesh.uniform(4), TimeGrid(1.0, 9)
        setups = ExperimentalSetup.es3(mesh.interior_labels)

        assert len(setups) == 9
        assert setups[0].label == "window1:TC2"
        assert setups[1].label == "window1:TC3"
        assert setups[3].label == "window2:TC2"

        mask = setup_mask(setups[5], mesh, grid)
        assert mask.sum() == 3
        np.testing.assert_array_equal(mask[2, 3:6], True)

    def test_full_setup(self):
        mesh, grid = SpatialMesh.uniform(4), TimeGrid(1.0, 9)
        setup = ExperimentalSetup.full()

        assert setup.kind == COMBINED
        assert setup_mask(setup, mesh, grid).all()

    @pytest.mark.parametrize(
        "windows",
        [[(0.5, 0.2)], [(0.0, 0.5), (0.4, 1.0)], [(-0.1, 0.5)]],
    )
    def test_rejects_bad_windows(self, windows):
        with pytest.raises(SetupError):
            ExperimentalSetup(TIME_WINDOWS, windows=windows)

    def test_rejects_unknown_kind(self):
        with pytest.raises(SetupError):
            ExperimentalSetup("random")

    def test_rejects_boundary_sensor(self):
        setup = ExperimentalSetup(SENSOR_SUBSET, sensors=["TC1"])

        with pytest.raises(SetupError):
            setup_mask(setup, SpatialMesh.uniform(4), TimeGrid(1.0, 9))

    def test_restrict_keeps_boundaries(self, simulate):
        obs, _ = simulate()
        setup = ExperimentalSetup(TIME_WINDOWS, windows=[(0.0, 0.3)])
        restricted = restrict_observations(obs, setup)

        assert restricted.mask.sum() == 5 * 3
        assert restricted.observed_count == 15 + 2 * 10
        np.testing.assert_array_equal(restricted.Y, obs.Y)

    def test_restrict_to_nothing(self, simulate):
        obs, _ = simulate()
        setup = ExperimentalSetup(TIME_WINDOWS, windows=[(2.0, 3.0)])

        with pytest.raises(SetupError):
            restrict_observations(obs, setup)

    def test_window_ignores_later_readings(self, simulate):
        obs, _ = simulate(steps=30)
        setup = ExperimentalSetup.es1()[0]
        inference = ScalarInference.default(boundary_mean="data")

        later = np.array(obs.Y)
        later[:, 10:] += 5.0
        changed = ObservationSet(
            later, obs.sigma, obs.mesh, obs.grid, obs.initial
        )

        restricted = restrict_observations(obs, setup)
        moved = restrict_observations(changed, setup)

        assert not restricted.mask[:, 10:].any()
        assert inference.log_posterior(moved)(1.0) == pytest.approx(
            inference.log_posterior(restricted)(1.0), rel=1e-9
        )

    def test_restricted_boundary_prior(self, simulate):
        obs, _ = simulate(steps=30)
        inference = ScalarInference.default()
        full = inference.boundary_prior(obs)

        for setup in ExperimentalSetup.es1():
            prior = inference.boundary_prior(
                restrict_observations(obs, setup)
            )
            np.testing.assert_array_equal(prior.mu_L, full.mu_L)
            np.testing.assert_array_equal(prior.mu_R, full.mu_R)


class TestInformationDivergence:
    def test_gaussian_closed_form(self):
        prior = LaplacePosterior(0.0, 1.0)
        posterior = LaplacePosterior(0.5, 0.25)
        expected = np.log(2.0) + (0.25 + 0.25) / 2.0 - 0.5

        assert information_divergence(prior, posterior) == pytest.approx(
            expected, rel=1e-8
        )

    @pytest.mark.parametrize("seed", range(10))
    def test_random_gaussian_pairs(self, seed):
        rng = np.random.default_rng(seed)
        m0, m1 = rng.normal(0.0, 1.0, 2)
        s0 = rng.uniform(0.5, 2.0)
        s1 = s0 * rng.uniform(0.05, 1.0)
        expected = (
            np.log(s0 / s1) + (s1 ** 2 + (m1 - m0) ** 2) / (2 * s0 ** 2) - 0.5
        )

        found = information_divergence(
            LaplacePosterior(m0, s0 ** 2), LaplacePosterior(m1, s1 ** 2)
        )

        assert found == pytest.approx(expected, abs=1e-8)

    @pytest.mark.parametrize("seed", range(10))
    def test_monte_carlo_lognormal_prior(self, seed):
        rng = np.random.default_rng(100 + seed)
        prior = LognormalPrior(rng.uniform(-0.1, 0.2), rng.uniform(0.05, 0.3))
        posterior = LaplacePosterior(
            rng.uniform(0.8, 1.2), rng.uniform(0.01, 0.05) ** 2
        )

        theta = rng.normal(posterior.mean, posterior.sd, 100000)
        terms = posterior.logpdf(theta) - prior.logpdf(theta)
        std_error = terms.std(ddof=1) / np.sqrt(terms.size)

        assert abs(information_divergence(prior, posterior) - terms.mean()) < (
            4.0 * std_error
        )

    def test_zero_for_identical_densities(self):
        density = LaplacePosterior(1.0, 0.04)
        assert information_divergence(density, density) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_lognormal_prior(self):
        prior = LognormalPrior(0.0, 0.3)
        posterior = LaplacePosterior(1.0, 0.05 ** 2)
        theta = np.linspace(0.4, 1.6, 200001)
        p = posterior.pdf(theta)
        expected = trapezoid(
            p * (posterior.logpdf(theta) - prior.logpdf(theta)), theta
        )

        assert information_divergence(prior, posterior) == pytest.approx(
            expected, rel=1e-6
        )

    def test_grid_posterior(self):
        prior = LaplacePosterior(0.0, 1.0)
        grid = grid_posterior(
            LaplacePosterior(0.5, 0.25).logpdf, np.linspace(-3.0, 4.0, 4001)
        )

        assert information_divergence(prior, grid) == pytest.approx(
            np.log(2.0) - 0.25, rel=1e-4
        )


class TestEigEstimate:
    def test_from_divergences(self):
        estimate = EigEstimate.from_divergences([1.0, 2.0, 3.0], dropped=1)

        assert estimate.mean == 2.0
        assert estimate.std_error == pytest.approx(1.0 / np.sqrt(3.0))
        assert estimate.replications == 3
        assert estimate.dropped == 1


class TestExpectedInformationGain:
    def test_needs_replications(self, generator, inference):
        with pytest.raises(EigError):
            expected_information_gain(
                ExperimentalSetup.full(), generator, 1, 1, inference
            )

    def test_estimate(self, generator, inference):
        setup = ExperimentalSetup.full()
        estimate = expected_information_gain(
            setup, generator, 5, seed=3, inference=inference
        )
        again = expected_information_gain(
            setup, generator, 5, seed=3, inference=inference
        )

        assert estimate.replications + estimate.dropped == 5
        assert estimate.mean > 0
        assert estimate.std_error >= 0
        np.testing.assert_array_equal(estimate.divergences, again.divergences)

    @pytest.mark.slow
    def test_grid_uses_common_seeds(self, generator, inference):
        setups = ExperimentalSetup.es1(count=2)
        results = eig_grid(setups, generator, 4, seed=8, inference=inference)

        assert [s for s, _ in results] == setups
        single = expected_information_gain(
            setups[1], generator, 4, seed=8, inference=inference
        )
        np.testing.assert_array_equal(
            results[1][1].divergences, single.divergences
        )

    def test_default_inference(self, generator):
        setup = ExperimentalSetup.full()
        estimate = expected_information_gain(setup, generator, 3, seed=1)
        explicit = expected_information_gain(
            setup, generator, 3, seed=1, inference=ScalarInference.default()
        )

        assert estimate.mean > 0
        np.testing.assert_array_equal(
            estimate.divergences, explicit.divergences
        )

    @pytest.mark.slow
    def test_grid_default_inference(self, generator):
        setups = ExperimentalSetup.es1(count=2)
        results = eig_grid(setups, generator, 3, seed=1)

        assert [s.label for s, _ in results] == ["window1", "window2"]
        assert all(e.mean > 0 for _, e in results)

    def test_grid_needs_setups(self, generator, inference):
        with pytest.raises(SetupError):
            eig_grid([], generator, 4, seed=8, inference=inference)
