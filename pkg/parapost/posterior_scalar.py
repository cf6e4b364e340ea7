"""Posterior inference for a constant diffusion coefficient."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
import numpy as np
from scipy import stats
from scipy.integrate import trapezoid
from scipy.optimize import minimize_scalar
from parapost.constants import (
    DEFAULT_PRIOR_NU,
    DEFAULT_PRIOR_TAU,
    DEFAULT_SIGMA_P,
    GRID_EDGE_TOLERANCE,
    HESSIAN_MIN_STEP,
    HESSIAN_RELATIVE_STEP,
    KNOWN_BC,
    LAPLACE_SUPPORT_WIDTH,
    MAP_RELATIVE_TOLERANCE,
    MAP_SCAN_POINTS,
    MARGINAL,
    POSTERIOR_MODES,
)
from parapost.exceptions import (
    BracketError,
    CurvatureError,
    DomainError,
    GridError,
)
from parapost.likelihood import (
    FEM,
    joint_log_likelihood,
    marginal_parts,
    propagators_for,
)
from parapost.models.boundary import BoundaryPrior

logger = logging.getLogger(__name__)


class LognormalPrior(object):
    """log(theta) ~ N(nu, tau^2).

    Attributes:
        nu (float): The location of log(theta).
        tau (float): The scale of log(theta).
        support (tuple): (0, inf).
    """

    support = (0.0, np.inf)

    def __init__(self, nu, tau):
        """Initialize the prior.

        Raises:
            :class:`parapost.exceptions.DomainError`: tau is not
                positive.
        """
        if not (np.isfinite(tau) and tau > 0):
            raise DomainError("tau must be positive, got {}".format(tau))

        self.nu = float(nu)
        self.tau = float(tau)
        self.distribution = stats.lognorm(s=self.tau, scale=np.exp(self.nu))

    def __repr__(self):
        return "LognormalPrior(nu={}, tau={})".format(self.nu, self.tau)

    @property
    def mode(self):
        """float: exp(nu - tau^2)."""
        return float(np.exp(self.nu - self.tau ** 2))

    def logpdf(self, theta):
        """Log density; -inf for theta <= 0."""
        return self.distribution.logpdf(theta)

    def pdf(self, theta):
        """Density."""
        return self.distribution.pdf(theta)

    def bounds(self, tail=1e-15):
        """Return an interval holding all but ``tail`` of the mass."""
        return tuple(
            float(v) for v in self.distribution.ppf([tail, 1.0 - tail])
        )


class LaplacePosterior(object):
    """A Gaussian N(theta_hat, variance) fitted at the MAP.

    Attributes:
        theta_hat (float): The MAP estimate.
        variance (float): Minus the inverse curvature of the log
            posterior at the MAP.
        log_norm_const (float): The Laplace estimate of the log
            evidence.
        support (tuple): (-inf, inf).
    """

    support = (-np.inf, np.inf)

    def __init__(self, theta_hat, variance, log_norm_const=np.nan):
        if not (np.isfinite(variance) and variance > 0):
            raise DomainError(
                "variance must be positive, got {}".format(variance)
            )

        self.theta_hat = float(theta_hat)
        self.variance = float(variance)
        self.log_norm_const = float(log_norm_const)
        self.distribution = stats.norm(self.theta_hat, self.sd)

    def __repr__(self):
        return "LaplacePosterior(theta_hat={}, sd={})".format(
            self.theta_hat, self.sd
        )

    @property
    def sd(self):
        """float: The standard deviation."""
        return float(np.sqrt(self.variance))

    @property
    def mean(self):
        """float: The mean, equal to theta_hat."""
        return self.theta_hat

    def logpdf(self, theta):
        return self.distribution.logpdf(theta)

    def pdf(self, theta):
        return self.distribution.pdf(theta)

    def bounds(self, width=LAPLACE_SUPPORT_WIDTH):
        """Return theta_hat -/+ width standard deviations."""
        return (
            self.theta_hat - width * self.sd,
            self.theta_hat + width * self.sd,
        )


class GridPosterior(object):
    """A density normalized on a grid with the trapezoid rule.

    Attributes:
        grid (:class:`numpy.ndarray`): Increasing points.
        log_values (:class:`numpy.ndarray`): The unnormalized log
            density at the points.
        density (:class:`numpy.ndarray`): The normalized density.
        support (tuple): The grid range.
    """

    def __init__(self, grid, log_values):
        self.grid = np.asarray(grid, dtype=float)
        self.log_values = np.asarray(log_values, dtype=float)

        shifted = np.exp(self.log_values - np.max(self.log_values))
        self.log_norm_const = float(
            np.max(self.log_values) + np.log(trapezoid(shifted, self.grid))
        )
        self.density = shifted / trapezoid(shifted, self.grid)
        self.support = (float(self.grid[0]), float(self.grid[-1]))

    @property
    def mass(self):
        """float: The trapezoid integral of the density."""
        return float(trapezoid(self.density, self.grid))

    @property
    def mean(self):
        """float: The posterior mean."""
        return float(trapezoid(self.grid * self.density, self.grid))

    @property
    def sd(self):
        """float: The posterior standard deviation."""
        spread = (self.grid - self.mean) ** 2 * self.density
        second = trapezoid(spread, self.grid)
        return float(np.sqrt(second))

    def pdf(self, theta):
        """Linearly interpolated density, zero off the grid."""
        return np.interp(theta, self.grid, self.density, left=0.0, right=0.0)

    def logpdf(self, theta):
        with np.errstate(divide="ignore"):
            return np.log(self.pdf(theta))

    def bounds(self):
        return self.support

    def tv_distance(self, other):
        """Total variation distance to a density with a ``pdf`` method.

        Args:
            other: An object with a vectorized ``pdf`` method.

        Returns:
            float: Half the integral of the absolute difference.
        """
        return float(
            0.5
            * trapezoid(
                np.abs(self.density - other.pdf(self.grid)), self.grid
            )
        )


class LogPosterior(object):
    """The unnormalized log posterior of a constant theta.

    In "marginal" mode the boundary values are integrated out against
    their Gaussian prior. In "known-bc" mode they are fixed at known
    values and the boundary prior is not used.

    Attributes:
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        prior_theta (:class:`LognormalPrior`): The prior on theta.
        prior_b (:class:`parapost.models.boundary.BoundaryPrior`): The
            boundary prior, used in marginal mode.
        mode (str): "known-bc" or "marginal".
        known_boundary (:class:`parapost.models.boundary.BoundarySeries`):
            The boundary values used in known-bc mode.
        lumped (bool): Lump the FEM mass matrix.
        solver (str): "fem" or "fd".
    """

    def __init__(
        self,
        obs,
        prior_theta,
        prior_b=None,
        mode=MARGINAL,
        known_boundary=None,
        lumped=False,
        solver=FEM,
    ):
        if mode not in POSTERIOR_MODES:
            raise DomainError(
                "Unknown mode {!r}; use one of {}".format(
                    mode, POSTERIOR_MODES
                )
            )

        if mode == MARGINAL and prior_b is None:
            raise DomainError("Marginal mode needs a boundary prior")

        if known_boundary is None:
            known_boundary = obs.observed_boundary_series()

        self.obs = obs
        self.prior_theta = prior_theta
        self.prior_b = prior_b
        self.mode = mode
        self.known_boundary = known_boundary
        self.lumped = lumped
        self.solver = solver

    def log_likelihood(self, theta):
        """Log likelihood of theta under the current mode."""
        props = propagators_for(
            theta,
            self.obs.mesh,
            self.obs.grid,
            lumped=self.lumped,
            solver=self.solver,
        )

        if self.mode == KNOWN_BC:
            return joint_log_likelihood(props, self.obs, self.known_boundary)

        return marginal_parts(props, self.obs, self.prior_b).log_value

    def __call__(self, theta):
        """Evaluate the log posterior.

        Raises:
            :class:`parapost.exceptions.DomainError`: theta <= 0.
        """
        if not theta > 0:
            raise DomainError("theta must be positive, got {}".format(theta))

        return float(self.prior_theta.logpdf(theta)) + self.log_likelihood(
            theta
        )


def log_posterior(theta, obs, prior_b, prior_theta, mode=MARGINAL, **kwargs):
    """Evaluate the unnormalized log posterior at one theta.

    Args:
        theta (float): The diffusion coefficient, positive.
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        prior_b (:class:`parapost.models.boundary.BoundaryPrior`): The
            boundary prior.
        prior_theta (:class:`LognormalPrior`): The prior on theta.
        mode (str, optional): "marginal" or "known-bc".
        **kwargs: Passed on to :class:`LogPosterior`.

    Returns:
        float: The log posterior.
    """
    return LogPosterior(obs, prior_theta, prior_b, mode, **kwargs)(theta)


def map_estimate(log_posterior, bracket, scan_points=MAP_SCAN_POINTS):
    """Maximize a scalar log posterior inside a bracket.

    A coarse scan locates the cell holding the maximum, which bounded
    Brent iteration then refines.

    Args:
        log_posterior (callable): The function to maximize.
        bracket (tuple): (lo, hi) search interval.
        scan_points (int, optional): Points in the coarse scan.

    Returns:
        float: The maximizer.

    Raises:
        :class:`parapost.exceptions.BracketError`: The scan maximum is
            at an end of the bracket.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    grid = np.linspace(lo, hi, scan_points)
    values = np.array([log_posterior(t) for t in grid])
    values = np.where(np.isnan(values), -np.inf, values)
    best = int(np.argmax(values))

    if best in (0, scan_points - 1) or not np.isfinite(values[best]):
        raise BracketError(
            "No interior maximum in [{}, {}]: scan peaks at {}".format(
                lo, hi, grid[best]
            ),
            grid=grid,
            values=values,
        )

    left, right = grid[best - 1], grid[best + 1]
    result = minimize_scalar(
        lambda t: -log_posterior(t),
        bounds=(left, right),
        method="bounded",
        options={"xatol": MAP_RELATIVE_TOLERANCE * abs(grid[best])},
    )

    theta_hat = float(result.x)
    if -result.fun < values[best]:
        theta_hat = float(grid[best])

    logger.debug("MAP %.10g in [%g, %g]", theta_hat, left, right)

    return theta_hat


def second_derivative(f, x, h):
    """Central second difference with one Richardson extrapolation."""
    f0 = f(x)

    def central(step):
        return (f(x + step) - 2.0 * f0 + f(x - step)) / step ** 2

    return (4.0 * central(h / 2) - central(h)) / 3.0


def laplace_fit(log_posterior, theta_hat):
    """Fit a Gaussian at the MAP from the log posterior curvature.

    Args:
        log_posterior (callable): The log posterior.
        theta_hat (float): The MAP estimate.

    Returns:
        :class:`LaplacePosterior`: The fit.

    Raises:
        :class:`parapost.exceptions.CurvatureError`: The second
            derivative is not negative.
    """
    h = max(HESSIAN_MIN_STEP, HESSIAN_RELATIVE_STEP * abs(theta_hat))
    curvature = second_derivative(log_posterior, theta_hat, h)

    if not (np.isfinite(curvature) and curvature < 0):
        raise CurvatureError(
            "Second derivative {} at {} is not negative".format(
                curvature, theta_hat
            )
        )

    variance = -1.0 / curvature
    log_norm_const = log_posterior(theta_hat) + 0.5 * np.log(
        2 * np.pi * variance
    )

    return LaplacePosterior(theta_hat, variance, log_norm_const)


def grid_posterior(log_posterior, grid, edge_tolerance=GRID_EDGE_TOLERANCE):
    """Normalize a log posterior on a grid.

    Args:
        log_posterior (callable): The log posterior.
        grid (array-like): Increasing points spanning the bulk.
        edge_tolerance (float, optional): Largest allowed density at
            either end, relative to the peak.

    Returns:
        :class:`GridPosterior`: The normalized density.

    Raises:
        :class:`parapost.exceptions.GridError`: The grid cuts off
            significant mass.
    """
    grid = np.asarray(grid, dtype=float)
    log_values = np.array([log_posterior(t) for t in grid])

    if not np.any(np.isfinite(log_values)):
        raise GridError("Log posterior is not finite anywhere on the grid")

    posterior = GridPosterior(grid, log_values)
    peak = np.max(posterior.density)

    edge = max(posterior.density[0], posterior.density[-1])
    if edge > edge_tolerance * peak:
        raise GridError(
            "Grid [{}, {}] truncates the density".format(grid[0], grid[-1])
        )

    return posterior


def sample_posterior(post, count, seed):
    """Draw positive samples from a Laplace posterior.

    Args:
        post (:class:`LaplacePosterior`): The posterior.
        count (int): The number of samples, at least 1.
        seed (int or :class:`numpy.random.SeedSequence`): The seed.

    Returns:
        :class:`numpy.ndarray`: ``count`` draws, all positive.
    """
    if count < 1:
        raise DomainError("Need at least one sample, got {}".format(count))

    rng = np.random.default_rng(seed)
    samples = np.empty(0)

    while samples.size < count:
        draws = rng.normal(post.theta_hat, post.sd, size=count)
        samples = np.concatenate([samples, draws[draws > 0]])

    return samples[:count]


class ScalarFit(object):
    """The outcome of :meth:`ScalarInference.fit`.

    Attributes:
        log_posterior (:class:`LogPosterior`): The log posterior.
        theta_hat (float): The MAP estimate.
        laplace (:class:`LaplacePosterior`): The Laplace fit.
    """

    def __init__(self, log_posterior, theta_hat, laplace):
        self.log_posterior = log_posterior
        self.theta_hat = theta_hat
        self.laplace = laplace


class ScalarInference(object):
    """Settings for fitting theta to an observation set.

    Attributes:
        prior_theta (:class:`LognormalPrior`): The prior on theta.
        sigma_p (float): The boundary prior standard deviation.
        bracket (tuple): The MAP search interval.
        mode (str): "marginal" or "known-bc".
        boundary_mean (str): "spline" or "data".
        knots (int): Interior spline knots of the boundary mean.
        lumped (bool): Lump the FEM mass matrix.
    """

    def __init__(
        self,
        prior_theta,
        sigma_p,
        bracket=(0.5, 1.5),
        mode=MARGINAL,
        boundary_mean="spline",
        knots=4,
        lumped=False,
    ):
        self.prior_theta = prior_theta
        self.sigma_p = sigma_p
        self.bracket = tuple(bracket)
        self.mode = mode
        self.boundary_mean = boundary_mean
        self.knots = knots
        self.lumped = lumped

    @classmethod
    def default(cls, **kwargs):
        """Build settings with the default lognormal and boundary priors.

        Keyword arguments override the remaining settings.
        """
        return cls(
            LognormalPrior(DEFAULT_PRIOR_NU, DEFAULT_PRIOR_TAU),
            DEFAULT_SIGMA_P,
            **kwargs
        )

    def boundary_prior(self, obs):
        """Return the boundary prior centred on the readings of obs."""
        return BoundaryPrior.from_observations(
            obs, self.sigma_p, mean=self.boundary_mean, knots=self.knots
        )

    def log_posterior(self, obs, known_boundary=None):
        """Return the log posterior of theta given obs."""
        return LogPosterior(
            obs,
            self.prior_theta,
            self.boundary_prior(obs),
            mode=self.mode,
            known_boundary=known_boundary,
            lumped=self.lumped,
        )

    def fit(self, obs, known_boundary=None):
        """Find the MAP and Laplace fit.

        Args:
            obs (:class:`parapost.models.observations.ObservationSet`):
                The readings.
            known_boundary (:class:`parapost.models.boundary.BoundarySeries`, optional):
                Boundary values for known-bc mode.

        Returns:
            :class:`ScalarFit`: The fit.
        """
        log_post = self.log_posterior(obs, known_boundary)
        theta_hat = map_estimate(log_post, self.bracket)

        return ScalarFit(log_post, theta_hat, laplace_fit(log_post, theta_hat))
