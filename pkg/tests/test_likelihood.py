"""Tests for the joint and boundary-marginalized likelihoods."""

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import dblquad

from parapost.exceptions import DomainError
from parapost.forward_fem import assemble, build_propagators
from parapost.likelihood import (
    FD,
    joint_log_likelihood,
    marginal_log_likelihood,
    marginal_parts,
    propagators_for,
)
from parapost.models.boundary import BoundaryPrior, BoundarySeries
from parapost.models.coefficients import CoefficientField
from parapost.models.observations import ObservationSet


def stacked_design(props, obs):
    """Write the readings as y = c + G b + noise with b = (T_L, T_R).

    Masked interior readings are left out; the boundary readings come
    last.
    """
    N = props.step_count
    det = props.initial_response(obs.initial)
    interior = obs.interior()
    G, c, y = [], [], []

    for n in range(N):
        for i in range(props.size):
            if obs.mask[i, n]:
                G.append(np.concatenate([props.AL[n][i], props.AR[n][i]]))
                c.append(det[n, i])
                y.append(interior[i, n])

    eye, zero = np.eye(N), np.zeros((N, N))
    G = np.vstack(
        [np.array(G), np.hstack([eye, zero]), np.hstack([zero, eye])]
    )
    c = np.concatenate([c, np.zeros(2 * N)])
    y = np.concatenate([y, obs.Y_L, obs.Y_R])

    return G, c, y


def stacked_gaussian_logpdf(props, obs, prior):
    """Log density of the observed readings as one Gaussian vector.

    With b = (T_L, T_R) ~ N(mu, sigma_p^2 I) and readings y = c + G b +
    noise, y ~ N(c + G mu, sigma^2 I + sigma_p^2 G G').
    """
    G, c, y = stacked_design(props, obs)
    mu = np.concatenate([prior.mu_L, prior.mu_R])
    cov = obs.sigma ** 2 * np.eye(y.size) + prior.sigma_p ** 2 * G @ G.T

    return stats.multivariate_normal(c + G @ mu, cov).logpdf(y)


def random_problem(simulate, rng, max_elements=8, max_steps=20):
    """Readings, a boundary prior and propagators of a random instance."""
    elements = int(rng.integers(2, max_elements + 1))
    steps = int(rng.integers(1, max_steps + 1))
    obs, bseries = simulate(
        theta=rng.uniform(0.7, 1.3),
        sigma=rng.uniform(0.1, 1.0),
        elements=elements,
        steps=steps,
        seed=int(rng.integers(2 ** 31)),
    )

    mask = rng.random(obs.mask.shape) < 0.7
    mask[0, -1] = True
    obs = obs.with_mask(mask)

    prior = BoundaryPrior(
        bseries.T_L + rng.normal(0.0, 0.5, steps),
        bseries.T_R + rng.normal(0.0, 0.5, steps),
        rng.uniform(0.05, 2.0),
    )
    props = propagators_for(rng.uniform(0.5, 1.5), obs.mesh, obs.grid)

    return obs, prior, props


class TestJointLikelihood:
    def test_matches_direct_sum(self, simulate):
        obs, bseries = simulate(theta=1.1, sigma=0.4)
        props = propagators_for(1.1, obs.mesh, obs.grid)
        solution = props.interior_solution(obs.initial, bseries).T

        expected = (
            stats.norm.logpdf(obs.interior(), solution, 0.4).sum()
            + stats.norm.logpdf(obs.Y_L, bseries.T_L, 0.4).sum()
            + stats.norm.logpdf(obs.Y_R, bseries.T_R, 0.4).sum()
        )

        assert joint_log_likelihood(props, obs, bseries) == pytest.approx(
            expected, rel=1e-12
        )

    def test_masked_readings_are_ignored(self, simulate, data_prior):
        obs, bseries = simulate()
        mask = np.ones_like(obs.mask)
        mask[2, 4:] = False
        Y = np.array(obs.Y)
        Y[3, 4:] += 50.0

        masked = obs.with_mask(mask)
        shifted = ObservationSet(
            Y, obs.sigma, obs.mesh, obs.grid, obs.initial, mask
        )
        props = propagators_for(1.0, obs.mesh, obs.grid)
        prior = data_prior(obs)

        assert joint_log_likelihood(props, shifted, bseries) == pytest.approx(
            joint_log_likelihood(props, masked, bseries), rel=1e-13
        )

        expected = marginal_parts(props, masked, prior).log_value
        found = marginal_parts(props, shifted, prior).log_value
        assert found == pytest.approx(expected, rel=1e-13)

    def test_dimension_mismatch(self, simulate):
        obs, bseries = simulate()
        props = propagators_for(1.0, obs.mesh, obs.grid.truncated(5))

        with pytest.raises(DomainError):
            joint_log_likelihood(props, obs, bseries)


class TestMarginalLikelihood:
    @pytest.mark.parametrize("sigma_p", [0.05, 0.5, 5.0])
    def test_matches_stacked_gaussian(self, simulate, sigma_p):
        obs, bseries = simulate(elements=4, steps=5, sigma=0.3, seed=3)
        prior = BoundaryPrior(
            bseries.T_L + 0.2, bseries.T_R - 0.1, sigma_p
        )
        props = propagators_for(0.8, obs.mesh, obs.grid)

        assert marginal_parts(props, obs, prior).log_value == pytest.approx(
            stacked_gaussian_logpdf(props, obs, prior), rel=1e-9
        )

    def test_matches_stacked_gaussian_with_mask(self, simulate):
        obs, bseries = simulate(elements=4, steps=6, sigma=0.3, seed=5)
        mask = np.zeros_like(obs.mask)
        mask[1, 2:5] = True
        mask[2, 5] = True
        obs = obs.with_mask(mask)
        prior = BoundaryPrior(bseries.T_L, bseries.T_R, 0.5)
        props = propagators_for(1.2, obs.mesh, obs.grid)

        assert marginal_parts(props, obs, prior).log_value == pytest.approx(
            stacked_gaussian_logpdf(props, obs, prior), rel=1e-9
        )

    @pytest.mark.parametrize("seed", range(10))
    def test_random_instances_match_stacked_gaussian(self, simulate, seed):
        rng = np.random.default_rng(seed)
        obs, prior, props = random_problem(simulate, rng)

        assert marginal_parts(props, obs, prior).log_value == pytest.approx(
            stacked_gaussian_logpdf(props, obs, prior), rel=1e-9
        )

    @pytest.mark.parametrize("seed", range(5))
    def test_completing_the_square(self, simulate, seed):
        rng = np.random.default_rng(100 + seed)
        obs, prior, props = random_problem(simulate, rng, max_steps=10)
        N = props.step_count
        G, c, y = stacked_design(props, obs)
        mu = np.concatenate([prior.mu_L, prior.mu_R])

        # Joint times prior is the evidence times the boundary posterior
        precision = (
            G.T @ G / obs.sigma ** 2 + np.eye(2 * N) / prior.sigma_p ** 2
        )
        mean = np.linalg.solve(
            precision,
            G.T @ (y - c) / obs.sigma ** 2 + mu / prior.sigma_p ** 2,
        )
        cov = np.linalg.inv(precision)
        posterior = stats.multivariate_normal(mean, (cov + cov.T) / 2.0)
        log_evidence = marginal_parts(props, obs, prior).log_value

        for b in posterior.rvs(size=3, random_state=rng).reshape(3, -1):
            bseries = BoundarySeries(
                b[:N], b[N:], obs.initial.left, obs.initial.right
            )
            joint = (
                joint_log_likelihood(props, obs, bseries)
                + stats.norm.logpdf(b, mu, prior.sigma_p).sum()
            )

            assert joint - log_evidence == pytest.approx(
                posterior.logpdf(b), abs=1e-7
            )

    def test_monte_carlo_average(self, simulate):
        obs, bseries = simulate(elements=3, steps=3, sigma=0.5, seed=21)
        prior = BoundaryPrior(bseries.T_L + 0.1, bseries.T_R - 0.1, 0.3)
        props = propagators_for(1.0, obs.mesh, obs.grid)
        rng = np.random.default_rng(42)
        M = 200000

        T_L = rng.normal(prior.mu_L, prior.sigma_p, (M, 3))
        T_R = rng.normal(prior.mu_R, prior.sigma_p, (M, 3))
        solution = (
            props.initial_response(obs.initial)[None]
            + np.einsum("nik,mk->mni", props.AL, T_L)
            + np.einsum("nik,mk->mni", props.AR, T_R)
        )
        log_w = (
            stats.norm.logpdf(obs.interior().T, solution, 0.5).sum(axis=(1, 2))
            + stats.norm.logpdf(obs.Y_L, T_L, 0.5).sum(axis=1)
            + stats.norm.logpdf(obs.Y_R, T_R, 0.5).sum(axis=1)
        )
        w = np.exp(log_w - log_w.max())
        estimate = log_w.max() + np.log(w.mean())
        std_error = w.std(ddof=1) / (w.mean() * np.sqrt(M))

        exact = marginal_parts(props, obs, prior).log_value
        assert abs(estimate - exact) < 4.0 * std_error

    def test_single_step_matches_quadrature(self, simulate):
        obs, _ = simulate(elements=2, steps=1, sigma=0.5, seed=11)
        prior = BoundaryPrior([obs.Y_L[0] + 0.3], [obs.Y_R[0] - 0.4], 0.6)
        props = propagators_for(1.0, obs.mesh, obs.grid)
        mu_L, mu_R = prior.mu_L[0], prior.mu_R[0]

        def integrand(T_R, T_L):
            joint = joint_log_likelihood(
                props, obs, BoundarySeries([T_L], [T_R], 100.0, 100.0)
            )
            return np.exp(
                joint
                + stats.norm.logpdf(T_L, mu_L, 0.6)
                + stats.norm.logpdf(T_R, mu_R, 0.6)
            )

        value, _ = dblquad(
            integrand,
            mu_L - 8.0,
            mu_L + 8.0,
            mu_R - 8.0,
            mu_R + 8.0,
            epsabs=1e-14,
            epsrel=1e-10,
        )

        assert marginal_parts(props, obs, prior).log_value == pytest.approx(
            np.log(value), rel=1e-7
        )

    def test_tight_prior_recovers_known_boundary(self, simulate):
        obs, bseries = simulate(sigma=0.3)
        props = propagators_for(1.0, obs.mesh, obs.grid)
        prior = BoundaryPrior(bseries.T_L, bseries.T_R, 1e-6)

        assert marginal_parts(props, obs, prior).log_value == pytest.approx(
            joint_log_likelihood(props, obs, bseries), abs=1e-6
        )

    def test_blocks(self, simulate, data_prior):
        obs, _ = simulate()
        props = propagators_for(1.0, obs.mesh, obs.grid)
        parts = marginal_parts(props, obs, data_prior(obs))
        N = obs.step_count

        diagonal = (parts.D_sigma2 + parts.D_sigmap2) * np.eye(N)
        precision = diagonal + parts.Delta_L * parts.D_sigma2
        np.testing.assert_allclose(
            parts.Lambda0 @ precision, np.eye(N), atol=1e-10
        )
        np.testing.assert_allclose(parts.Lambda1, parts.Lambda1.T, atol=1e-12)
        np.testing.assert_allclose(parts.t_R1, parts.t_R2 + parts.t_R3)
        np.testing.assert_allclose(parts.Delta_L, parts.Delta_L.T)
        assert parts.logdet_lambda0 < 0

    def test_reflection_symmetry(self, simulate, data_prior):
        obs, _ = simulate(seed=8)
        prior = data_prior(obs, 0.4)

        assert marginal_log_likelihood(
            1.1, obs.mirrored(), prior.mirrored()
        ) == pytest.approx(marginal_log_likelihood(1.1, obs, prior), rel=1e-9)

    def test_lumped_fem_matches_fd(self, simulate, data_prior):
        obs, _ = simulate(seed=4)
        prior = data_prior(obs)

        assert marginal_log_likelihood(
            0.9, obs, prior, lumped=True
        ) == pytest.approx(
            marginal_log_likelihood(0.9, obs, prior, solver=FD), rel=1e-10
        )

    def test_field_input(self, simulate, data_prior):
        obs, _ = simulate()
        field = CoefficientField.constant(1.05, obs.mesh)

        assert marginal_log_likelihood(
            field, obs, data_prior(obs)
        ) == pytest.approx(
            marginal_log_likelihood(1.05, obs, data_prior(obs)), rel=1e-14
        )

    def test_prior_length_mismatch(self, simulate, data_prior):
        obs, _ = simulate()
        props = build_propagators(
            assemble(obs.mesh, CoefficientField.constant(1.0, obs.mesh), 0.1),
            10,
        )

        with pytest.raises(DomainError):
            marginal_parts(props, obs, data_prior(obs).truncated(5))

    def test_fd_needs_constant_diffusion(self, simulate, data_prior):
        obs, _ = simulate()
        field = CoefficientField(np.linspace(0.8, 1.2, 6))

        with pytest.raises(DomainError):
            marginal_log_likelihood(field, obs, data_prior(obs), solver=FD)

    def test_unknown_solver(self, simulate, data_prior):
        obs, _ = simulate()

        with pytest.raises(DomainError):
            marginal_log_likelihood(1.0, obs, data_prior(obs), solver="fv")
