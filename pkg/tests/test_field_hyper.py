"""Tests for the lognormal field hyperposterior."""

import numpy as np
import pytest
from scipy import stats

from parapost.exceptions import (
    CurvatureError,
    DomainError,
    GridError,
    SampleCountError,
)
from parapost.field_hyper import (
    HyperPosteriorGrid,
    HyperPrior,
    SeCovariance,
    combine_cell,
    hyper_log_posterior_grid,
    sample_field,
    whitened_reparam,
)

SITES = np.linspace(1.0 / 12.0, 11.0 / 12.0, 6)


def _prior():
    return HyperPrior(0.0, 1.0, 0.5, 0.05, 0.5)


def _quadratic_table(center, covariance, mu_grid, eta_grid):
    precision = np.linalg.inv(covariance)
    mu, eta = np.meshgrid(mu_grid, eta_grid, indexing="ij")
    d = np.stack([mu - center[0], eta - center[1]], axis=-1)
    log_density = -0.5 * np.einsum("...i,ij,...j->...", d, precision, d)

    return HyperPosteriorGrid(
        mu_grid, eta_grid, log_density, np.zeros_like(log_density)
    )


class TestSeCovariance:
    def test_unit_covariance(self):
        cov = SeCovariance(2.0, 0.25, [0.0, 0.5])

        np.testing.assert_allclose(
            cov.unit, [[1.0, np.exp(-0.5)], [np.exp(-0.5), 1.0]]
        )
        np.testing.assert_allclose(cov.K, 4.0 * cov.unit)

    def test_factor(self):
        cov = SeCovariance(1.0, 0.1, SITES)
        L = cov.factor()

        np.testing.assert_allclose(L @ L.T, cov.unit, atol=1e-8)
        np.testing.assert_array_equal(np.triu(L, 1), 0.0)

    def test_factor_of_nearly_singular_covariance(self):
        L = SeCovariance(1.0, 1e7, SITES).factor()
        assert np.all(np.isfinite(L))

    @pytest.mark.parametrize("eta, length", [(-1.0, 0.1), (1.0, 0.0)])
    def test_rejects_bad_parameters(self, eta, length):
        with pytest.raises(DomainError):
            SeCovariance(eta, length, SITES)


class TestFieldDraws:
    def test_zero_magnitude(self):
        z = np.random.default_rng(42).standard_normal((4, 6))
        cov = SeCovariance(1.0, 0.1, SITES)

        np.testing.assert_allclose(
            whitened_reparam(0.3, 0.0, z, cov), np.exp(0.3)
        )

    def test_accepts_covariance_or_factor(self):
        z = np.random.default_rng(42).standard_normal(6)
        cov = SeCovariance(1.0, 0.1, SITES)

        np.testing.assert_array_equal(
            whitened_reparam(0.1, 0.4, z, cov),
            whitened_reparam(0.1, 0.4, z, cov.factor()),
        )

    def test_log_field_covariance(self):
        cov = SeCovariance(0.5, 0.05, SITES)
        logs = np.log(sample_field(cov, 0.2, seed=42, count=20000))

        np.testing.assert_allclose(logs.mean(axis=0), 0.2, atol=0.02)
        np.testing.assert_allclose(np.cov(logs.T), cov.K, atol=0.02)

    def test_long_length_is_nearly_constant(self):
        field = sample_field(SeCovariance(0.5, 1e7, SITES), 0.0, seed=3)
        assert np.ptp(np.log(field)) < 0.01

    def test_reproducible(self):
        cov = SeCovariance(0.5, 0.1, SITES)
        np.testing.assert_array_equal(
            sample_field(cov, 0.0, seed=9), sample_field(cov, 0.0, seed=9)
        )


class TestHyperPrior:
    def test_logpdf(self):
        hp = _prior()
        expected = stats.norm.logpdf(0.3, 0.0, 1.0) + np.log(
            2.0 / (np.pi * 0.5 * (1.0 + (0.2 / 0.5) ** 2))
        )

        assert hp.logpdf(0.3, 0.2) == pytest.approx(expected, rel=1e-12)
        assert hp.logpdf(0.3, -0.1) == -np.inf

    def test_lengths_in_range(self):
        lengths = _prior().sample_lengths(np.random.default_rng(42), 500)
        assert np.all((lengths >= 0.05) & (lengths <= 0.5))

    def test_rejects_empty_length_range(self):
        with pytest.raises(DomainError):
            HyperPrior(0.0, 1.0, 0.5, 0.5, 0.5)


class TestCombineCell:
    def test_all_invalid(self):
        log_mean, log_se = combine_cell(np.full((3, 4), -np.inf))

        assert log_mean == -np.inf
        assert np.isnan(log_se)

    def test_equal_values(self):
        log_mean, log_se = combine_cell(np.full((8, 8), -12.5))

        assert log_mean == pytest.approx(-12.5, rel=1e-14)
        assert log_se == 0.0

    def test_matches_direct_average(self):
        values = np.random.default_rng(42).normal(-3.0, 1.0, (8, 10))
        log_mean, _ = combine_cell(values)

        assert log_mean == pytest.approx(np.log(np.exp(values).mean()))

    def test_invalid_draws_count_as_zero(self):
        values = np.array([[0.0, -np.inf], [0.0, -np.inf]])
        log_mean, _ = combine_cell(values)

        assert log_mean == pytest.approx(np.log(0.5))


class TestHyperLaplace:
    def test_quadratic_table(self):
        center = np.array([0.13, 0.57])
        covariance = np.array([[0.04, 0.01], [0.01, 0.02]])
        grid = _quadratic_table(
            center,
            covariance,
            np.linspace(-1.0, 1.0, 21),
            np.linspace(0.1, 1.1, 21),
        )
        fit = grid.laplace()

        np.testing.assert_allclose(fit.mean, center, atol=1e-9)
        np.testing.assert_allclose(fit.covariance, covariance, rtol=1e-8)
        assert grid.local_maxima() == [tuple(grid.map_index)]
        assert grid.invalid_fraction == 0.0
        assert len(list(grid.rows())) == 441

    def test_map_on_edge(self):
        grid = _quadratic_table(
            [2.0, 0.5],
            np.eye(2),
            np.linspace(-1.0, 1.0, 11),
            np.linspace(0.0, 1.0, 11),
        )

        with pytest.raises(GridError):
            grid.laplace()

    def test_map_next_to_invalid_cell(self):
        mu_grid = np.linspace(-1.0, 1.0, 11)
        eta_grid = np.linspace(0.0, 1.0, 11)
        grid = _quadratic_table([0.0, 0.5], np.eye(2), mu_grid, eta_grid)
        table = np.array(grid.log_density)
        table[6, 5] = -np.inf

        with pytest.raises(GridError):
            HyperPosteriorGrid(
                mu_grid, eta_grid, table, np.zeros_like(table)
            ).laplace()

    def test_nonuniform_grid(self):
        grid = _quadratic_table(
            [1.0, 1.0],
            np.eye(2),
            np.geomspace(0.1, 10.0, 11),
            np.linspace(0.0, 2.0, 11),
        )

        with pytest.raises(GridError):
            grid.laplace()

    def test_saddle(self):
        table = np.full((5, 5), -10.0)
        table[2, 2] = 0.0
        table[1, 2] = table[3, 2] = table[2, 1] = table[2, 3] = -1.0
        table[1, 1] = table[3, 3] = -0.05
        table[1, 3] = table[3, 1] = -9.0
        grid = HyperPosteriorGrid(
            np.arange(5.0), np.arange(5.0), table, np.zeros((5, 5))
        )

        assert grid.local_maxima() == [(2, 2)]
        with pytest.raises(CurvatureError):
            grid.laplace()


class TestHyperGrid:
    def test_needs_samples(self, simulate, data_prior):
        obs, _ = simulate()

        with pytest.raises(SampleCountError):
            hyper_log_posterior_grid(
                obs, _prior(), [0.0], [0.1], 4, 8, prior_b=data_prior(obs)
            )

    def test_needs_boundary_prior(self, simulate):
        obs, _ = simulate()

        with pytest.raises(DomainError):
            hyper_log_posterior_grid(obs, _prior(), [0.0], [0.1], 8, 8)

    def test_without_interior_data_follows_prior(self, simulate, data_prior):
        obs, _ = simulate()
        obs = obs.with_mask(np.zeros_like(obs.mask))
        hp = _prior()
        mu_grid, eta_grid = [-0.2, 0.1], [0.1, 0.4]

        grid = hyper_log_posterior_grid(
            obs, hp, mu_grid, eta_grid, 8, 8, seed=1, prior_b=data_prior(obs)
        )
        mu, eta = np.meshgrid(mu_grid, eta_grid, indexing="ij")
        offset = grid.log_density - hp.logpdf(mu, eta)

        np.testing.assert_allclose(offset, offset[0, 0], rtol=1e-12)
        np.testing.assert_allclose(grid.log_se, 0.0, atol=1e-12)

    def test_reproducible(self, simulate, data_prior):
        obs, _ = simulate(theta=1.2)
        args = (obs, _prior(), [-0.1, 0.2], [0.1, 0.3], 8, 8)

        prior_b = data_prior(obs)

        first = hyper_log_posterior_grid(*args, seed=4, prior_b=prior_b)
        again = hyper_log_posterior_grid(*args, seed=4, prior_b=prior_b)

        np.testing.assert_array_equal(first.log_density, again.log_density)
        assert first.lengths.size == 8
        assert np.all(np.isfinite(first.log_density))

    @pytest.mark.slow
    def test_workers_match_serial(self, simulate, data_prior):
        obs, _ = simulate(theta=1.2)
        args = (obs, _prior(), [-0.1, 0.2], [0.1, 0.3], 8, 8)

        serial = hyper_log_posterior_grid(
            *args, seed=4, prior_b=data_prior(obs)
        )
        pooled = hyper_log_posterior_grid(
            *args, seed=4, prior_b=data_prior(obs), workers=2
        )

        np.testing.assert_array_equal(serial.log_density, pooled.log_density)
