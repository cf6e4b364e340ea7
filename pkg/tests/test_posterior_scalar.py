"""Tests for scalar posteriors, MAP search and the Laplace fit."""

import numpy as np
import pytest
from scipy import stats

from parapost.constants import KNOWN_BC, MARGINAL
from parapost.exceptions import (
    BracketError,
    CurvatureError,
    DomainError,
    GridError,
)
from parapost.posterior_scalar import (
    GridPosterior,
    LaplacePosterior,
    LogPosterior,
    LognormalPrior,
    ScalarInference,
    grid_posterior,
    laplace_fit,
    log_posterior,
    map_estimate,
    sample_posterior,
)


def quadratic(center, variance):
    def f(theta):
        return -((theta - center) ** 2) / (2.0 * variance)

    return f


class TestLognormalPrior:
    def test_mode(self):
        prior = LognormalPrior(0.1, 0.3)
        theta = np.linspace(0.5, 2.0, 200001)

        assert prior.mode == pytest.approx(
            theta[np.argmax(prior.logpdf(theta))], abs=1e-5
        )

    def test_matches_scipy(self):
        prior = LognormalPrior(0.1, 0.1)
        expected = stats.norm.logpdf(np.log(1.2), 0.1, 0.1) - np.log(1.2)
        assert prior.logpdf(1.2) == pytest.approx(expected, rel=1e-12)

    def test_outside_support(self):
        prior = LognormalPrior(0.0, 1.0)
        assert prior.logpdf(0.0) == -np.inf
        assert prior.logpdf(-1.0) == -np.inf

    def test_bounds(self):
        lo, hi = LognormalPrior(0.0, 0.1).bounds()
        assert 0 < lo < 1 < hi

    def test_rejects_bad_tau(self):
        with pytest.raises(DomainError):
            LognormalPrior(0.0, 0.0)


class TestMapAndLaplace:
    def test_map_of_quadratic(self):
        theta_hat = map_estimate(quadratic(0.83, 0.01), (0.5, 1.5))
        assert theta_hat == pytest.approx(0.83, abs=1e-7)

    def test_bracket_error(self):
        with pytest.raises(BracketError) as info:
            map_estimate(lambda t: t, (0.5, 1.5), scan_points=11)

        assert info.value.grid.size == 11
        np.testing.assert_allclose(info.value.values, info.value.grid)

    def test_laplace_of_quadratic(self):
        f = quadratic(0.83, 0.01)
        fit = laplace_fit(f, 0.83)

        assert fit.theta_hat == 0.83
        assert fit.variance == pytest.approx(0.01, rel=1e-6)
        assert fit.log_norm_const == pytest.approx(
            0.5 * np.log(2 * np.pi * 0.01), rel=1e-6
        )

    def test_curvature_error(self):
        with pytest.raises(CurvatureError):
            laplace_fit(lambda t: (t - 1.0) ** 2, 1.0)

    def test_laplace_rejects_bad_variance(self):
        with pytest.raises(DomainError):
            LaplacePosterior(1.0, 0.0)


class TestGridPosterior:
    def test_gaussian_moments(self):
        grid = np.linspace(0.5, 1.5, 4001)
        post = grid_posterior(quadratic(1.02, 0.05 ** 2), grid)

        assert post.mass == pytest.approx(1.0, abs=1e-12)
        assert post.mean == pytest.approx(1.02, abs=1e-8)
        assert post.sd == pytest.approx(0.05, rel=1e-5)
        assert post.tv_distance(LaplacePosterior(1.02, 0.05 ** 2)) < 1e-5

    def test_truncated_grid(self):
        with pytest.raises(GridError):
            grid_posterior(quadratic(1.0, 0.1), np.linspace(0.9, 1.1, 101))

    def test_pdf_off_grid_is_zero(self):
        post = GridPosterior(np.linspace(0.0, 1.0, 11), np.zeros(11))
        assert post.pdf(2.0) == 0.0
        assert post.logpdf(2.0) == -np.inf
        assert post.pdf(0.5) == pytest.approx(1.0)


class TestSampling:
    def test_distribution(self):
        post = LaplacePosterior(1.0, 0.05 ** 2)
        draws = sample_posterior(post, 100000, seed=42)

        assert draws.size == 100000
        assert stats.kstest(draws, stats.norm(1.0, 0.05).cdf).statistic < 0.01

    def test_positive_and_reproducible(self):
        post = LaplacePosterior(0.05, 0.1 ** 2)
        draws = sample_posterior(post, 500, seed=7)

        assert np.all(draws > 0)
        np.testing.assert_array_equal(draws, sample_posterior(post, 500, 7))

    def test_rejects_zero_count(self):
        with pytest.raises(DomainError):
            sample_posterior(LaplacePosterior(1.0, 0.01), 0, seed=1)


class TestLogPosterior:
    def test_rejects_nonpositive_theta(self, simulate, data_prior):
        obs, _ = simulate()
        post = LogPosterior(obs, LognormalPrior(0.0, 1.0), data_prior(obs))

        with pytest.raises(DomainError):
            post(0.0)

    def test_marginal_needs_prior(self, simulate):
        obs, _ = simulate()
        with pytest.raises(DomainError):
            LogPosterior(obs, LognormalPrior(0.0, 1.0), None, MARGINAL)

    def test_unknown_mode(self, simulate, data_prior):
        obs, _ = simulate()
        with pytest.raises(DomainError):
            LogPosterior(
                obs, LognormalPrior(0.0, 1.0), data_prior(obs), "profile"
            )

    def test_prior_plus_likelihood(self, simulate, data_prior):
        obs, _ = simulate()
        prior_theta = LognormalPrior(0.1, 0.1)
        post = LogPosterior(obs, prior_theta, data_prior(obs))

        assert log_posterior(
            1.1, obs, data_prior(obs), prior_theta
        ) == pytest.approx(
            float(prior_theta.logpdf(1.1)) + post.log_likelihood(1.1)
        )

    def test_known_bc_ignores_boundary_prior(self, simulate, data_prior):
        obs, bseries = simulate()
        prior_theta = LognormalPrior(0.0, 1.0)
        a = LogPosterior(
            obs, prior_theta, data_prior(obs, 0.1), KNOWN_BC, bseries
        )
        b = LogPosterior(
            obs, prior_theta, data_prior(obs, 5.0), KNOWN_BC, bseries
        )

        assert a(0.9) == b(0.9)


class TestFit:
    @pytest.mark.parametrize("mode", [MARGINAL, KNOWN_BC])
    def test_recovers_theta(self, simulate, mode):
        obs, bseries = simulate(theta=1.0, sigma=0.05, steps=20, seed=42)
        inference = ScalarInference(
            LognormalPrior(0.0, 1.0), 0.5, bracket=(0.5, 1.5), mode=mode
        )
        fit = inference.fit(
            obs, known_boundary=bseries if mode == KNOWN_BC else None
        )

        assert fit.laplace.sd < 0.05
        assert abs(fit.theta_hat - 1.0) < 4 * fit.laplace.sd
        assert fit.laplace.mean == fit.theta_hat

    def test_laplace_close_to_grid(self, simulate):
        obs, _ = simulate(theta=0.9, sigma=0.2, steps=20, seed=1)
        inference = ScalarInference(LognormalPrior(0.0, 1.0), 0.5)
        fit = inference.fit(obs)
        sd = fit.laplace.sd
        grid = grid_posterior(
            fit.log_posterior,
            np.linspace(fit.theta_hat - 8 * sd, fit.theta_hat + 8 * sd, 801),
        )

        assert grid.tv_distance(fit.laplace) < 0.05
        assert grid.mean == pytest.approx(fit.theta_hat, abs=0.5 * sd)

    def test_default_settings(self):
        inference = ScalarInference.default(mode=KNOWN_BC)

        assert inference.prior_theta.nu == 0.1
        assert inference.prior_theta.tau == 0.1
        assert inference.sigma_p == 0.5
        assert inference.bracket == (0.5, 1.5)
        assert inference.mode == KNOWN_BC
