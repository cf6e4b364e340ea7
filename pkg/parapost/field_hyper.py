"""Hyperparameter inference for a lognormal diffusion field.

log(theta) at the element midpoints is Gaussian with mean mu and
squared-exponential covariance eta^2 exp(-|x - x'|^2 / (2 length)). The
length scale is integrated out by Monte Carlo and the posterior of
(mu, eta) is tabulated on a grid.
"""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
from concurrent.futures import ProcessPoolExecutor
import numpy as np
from scipy import stats
from scipy.linalg import LinAlgError, cholesky
from scipy.special import logsumexp
from parapost.constants import (
    DEFAULT_LENGTH_SAMPLES,
    DEFAULT_Z_SAMPLES,
    JITTER_FACTOR,
    JITTER_MAX,
    JITTER_START,
    MIN_HYPER_SAMPLES,
)
from parapost.exceptions import (
    CovarianceError,
    CurvatureError,
    DomainError,
    GridError,
    NumericalError,
    SampleCountError,
)
from parapost.likelihood import marginal_log_likelihood
from parapost.models.coefficients import CoefficientField
from parapost.models.resource import frozen_array

logger = logging.getLogger(__name__)


class SeCovariance(object):
    """A squared-exponential covariance on a set of sites.

    Attributes:
        eta (float): The magnitude.
        length (float): The length scale.
        sites (:class:`numpy.ndarray`): The site positions.
    """

    def __init__(self, eta, length, sites):
        if not (eta >= 0 and length > 0):
            raise DomainError(
                "Need eta >= 0 and length > 0, got {} and {}".format(
                    eta, length
                )
            )

        self.eta = float(eta)
        self.length = float(length)
        self.sites = frozen_array(sites)

    @property
    def unit(self):
        """:class:`numpy.ndarray`: The covariance with eta = 1."""
        distance = self.sites[:, None] - self.sites[None, :]
        return np.exp(-(distance ** 2) / (2.0 * self.length))

    @property
    def K(self):
        """:class:`numpy.ndarray`: The covariance matrix."""
        return self.eta ** 2 * self.unit

    def factor(self):
        """Return the lower Cholesky factor of the unit covariance.

        Jitter starts at 1e-10 on the diagonal and grows tenfold up to
        1e-6.

        Returns:
            :class:`numpy.ndarray`: L with L L' = unit + jitter I.

        Raises:
            :class:`parapost.exceptions.CovarianceError`: Factorization
                failed at the largest jitter.
        """
        unit = self.unit
        identity = np.eye(unit.shape[0])
        jitter = JITTER_START

        while jitter <= JITTER_MAX * (1 + 1e-9):
            try:
                return cholesky(unit + jitter * identity, lower=True)
            except LinAlgError:
                logger.debug("Cholesky failed with jitter %g", jitter)
                jitter *= JITTER_FACTOR

        raise CovarianceError(
            "Covariance with length {} on {} sites is not positive "
            "definite with jitter up to {}".format(
                self.length, unit.shape[0], JITTER_MAX
            )
        )


def whitened_reparam(mu, eta, z, factor):
    """Map standard normal variables to a field.

    Args:
        mu (float): The mean of log(theta).
        eta (float): The magnitude.
        z (:class:`numpy.ndarray`): Standard normals, shape (..., s).
        factor (:class:`numpy.ndarray` or :class:`SeCovariance`): The
            unit covariance factor, or a covariance to factor.

    Returns:
        :class:`numpy.ndarray`: exp(mu + eta L z), shaped like z.
    """
    if isinstance(factor, SeCovariance):
        factor = factor.factor()

    return np.exp(mu + eta * (np.asarray(z) @ factor.T))


def sample_field(cov, mu, seed, count=None):
    """Draw a lognormal field.

    Args:
        cov (:class:`SeCovariance`): The covariance of log(theta).
        mu (float): The mean of log(theta).
        seed (int or :class:`numpy.random.SeedSequence`): The seed.
        count (int, optional): Draw this many fields at once.

    Returns:
        :class:`numpy.ndarray`: s positive values, or (count, s).
    """
    rng = np.random.default_rng(seed)
    shape = (cov.sites.size,) if count is None else (count, cov.sites.size)

    return whitened_reparam(
        mu, cov.eta, rng.standard_normal(shape), cov.factor()
    )


class HyperPrior(object):
    """mu ~ N(loc, scale^2), eta ~ half-Cauchy(scale), length ~ U(lo, hi).

    Attributes:
        mu (:class:`scipy.stats.rv_continuous`): The prior on mu.
        eta (:class:`scipy.stats.rv_continuous`): The prior on eta.
        length (:class:`scipy.stats.rv_continuous`): The prior on the
            length scale.
    """

    def __init__(self, mu_loc, mu_scale, eta_scale, length_low, length_high):
        if not (
            mu_scale > 0 and eta_scale > 0 and length_high > length_low > 0
        ):
            raise DomainError("Hyperprior scales and ranges must be positive")

        self.settings = {
            "mu_loc": float(mu_loc),
            "mu_scale": float(mu_scale),
            "eta_scale": float(eta_scale),
            "length_low": float(length_low),
            "length_high": float(length_high),
        }
        self.mu = stats.norm(mu_loc, mu_scale)
        self.eta = stats.halfcauchy(scale=eta_scale)
        self.length = stats.uniform(length_low, length_high - length_low)

    def logpdf(self, mu, eta):
        """Joint log density of (mu, eta); -inf for eta < 0."""
        return self.mu.logpdf(mu) + self.eta.logpdf(eta)

    def sample_lengths(self, rng, count):
        """Draw length scales."""
        return self.length.rvs(size=count, random_state=rng)


class SampleBank(object):
    """Shared draws of L(length_i) z_ij, reused across the grid.

    Attributes:
        lengths (:class:`numpy.ndarray`): The M_l length draws.
        whitened (:class:`numpy.ndarray`): (M_l, M_z, s) correlated
            standard normal fields.
    """

    def __init__(self, lengths, whitened):
        self.lengths = frozen_array(lengths)
        self.whitened = frozen_array(whitened)

    @classmethod
    def draw(cls, hp, sites, length_samples, z_samples, seed):
        """Draw a bank.

        Args:
            hp (:class:`HyperPrior`): The hyperprior.
            sites (:class:`numpy.ndarray`): The field sites.
            length_samples (int): M_l.
            z_samples (int): M_z.
            seed (int or :class:`numpy.random.SeedSequence`): The seed.

        Returns:
            :class:`SampleBank`: The bank.
        """
        rng = np.random.default_rng(seed)
        lengths = hp.sample_lengths(rng, length_samples)
        z = rng.standard_normal((length_samples, z_samples, len(sites)))

        whitened = np.empty_like(z)
        for i, length in enumerate(lengths):
            factor = SeCovariance(1.0, length, sites).factor()
            whitened[i] = z[i] @ factor.T

        return cls(lengths, whitened)


def _cell_log_likelihoods(obs, prior_b, mu, eta, whitened, lumped):
    """Log likelihoods of every bank field at one (mu, eta)."""
    fields = np.exp(mu + eta * whitened)
    flat = fields.reshape(-1, fields.shape[-1])
    values = np.empty(flat.shape[0])

    for k, field in enumerate(flat):
        try:
            values[k] = marginal_log_likelihood(
                CoefficientField(field), obs, prior_b, lumped=lumped
            )
        except NumericalError:
            values[k] = -np.inf

    return values.reshape(fields.shape[:2])


def combine_cell(log_likelihoods):
    """Average likelihoods of one cell in log space.

    Args:
        log_likelihoods (:class:`numpy.ndarray`): (M_l, M_z) values.

    Returns:
        tuple: The log of the mean likelihood and a delta-method
        standard error of it from batch means over the length draws.
        Both are -inf and nan when every value is -inf.
    """
    if not np.any(np.isfinite(log_likelihoods)):
        return -np.inf, np.nan

    count = log_likelihoods.size
    log_mean = logsumexp(log_likelihoods) - np.log(count)

    weights = np.exp(log_likelihoods - np.max(log_likelihoods))
    batches = weights.mean(axis=1)
    if batches.size > 1 and batches.mean() > 0:
        log_se = batches.std(ddof=1) / (np.sqrt(batches.size) * batches.mean())
    else:
        log_se = np.nan

    return float(log_mean), float(log_se)


def _grid_row(task):
    """Evaluate one mu row of the grid; picklable for worker processes."""
    obs, prior_b, hp, mu, eta_grid, whitened, lumped = task
    row = np.empty(len(eta_grid))
    errors = np.empty(len(eta_grid))

    for j, eta in enumerate(eta_grid):
        log_mean, log_se = combine_cell(
            _cell_log_likelihoods(obs, prior_b, mu, eta, whitened, lumped)
        )
        row[j] = hp.logpdf(mu, eta) + log_mean
        errors[j] = log_se

    return row, errors


class HyperLaplace(object):
    """A Gaussian fit of the (mu, eta) posterior.

    Attributes:
        mean (:class:`numpy.ndarray`): (mu, eta).
        covariance (:class:`numpy.ndarray`): 2 x 2 covariance.
    """

    def __init__(self, mean, covariance):
        self.mean = frozen_array(mean)
        self.covariance = frozen_array(covariance)

    @property
    def sd(self):
        """:class:`numpy.ndarray`: Marginal standard deviations."""
        return np.sqrt(np.diag(self.covariance))


class HyperPosteriorGrid(object):
    """The unnormalized log posterior of (mu, eta) on a grid.

    Attributes:
        mu_grid (:class:`numpy.ndarray`): The mu values (rows).
        eta_grid (:class:`numpy.ndarray`): The eta values (columns).
        log_density (:class:`numpy.ndarray`): Log values; -inf marks an
            invalid cell.
        log_se (:class:`numpy.ndarray`): Monte Carlo standard errors of
            the log values.
        lengths (:class:`numpy.ndarray`): The length draws used.
    """

    def __init__(self, mu_grid, eta_grid, log_density, log_se, lengths=None):
        self.mu_grid = frozen_array(mu_grid)
        self.eta_grid = frozen_array(eta_grid)
        self.log_density = frozen_array(log_density)
        self.log_se = frozen_array(log_se)
        self.lengths = None if lengths is None else frozen_array(lengths)

    @property
    def valid(self):
        """:class:`numpy.ndarray`: Cells with a finite log value."""
        return np.isfinite(self.log_density)

    @property
    def invalid_fraction(self):
        """float: The share of invalid cells."""
        return float(1.0 - self.valid.mean())

    @property
    def map_index(self):
        """tuple: The (i, j) index of the largest valid cell."""
        table = np.where(self.valid, self.log_density, -np.inf)
        return np.unravel_index(int(np.argmax(table)), table.shape)

    @property
    def map_pair(self):
        """tuple: The (mu, eta) of the largest cell."""
        i, j = self.map_index
        return float(self.mu_grid[i]), float(self.eta_grid[j])

    def local_maxima(self):
        """Return the (i, j) of cells larger than all their neighbours."""
        table = np.where(self.valid, self.log_density, -np.inf)
        padded = np.pad(table, 1, constant_values=-np.inf)
        rows, columns = table.shape
        peaks = np.isfinite(table)

        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == 0 and dj == 0:
                    continue
                neighbour = padded[
                    1 + di : 1 + di + rows, 1 + dj : 1 + dj + columns
                ]
                peaks &= table > neighbour

        return [tuple(int(v) for v in ij) for ij in np.argwhere(peaks)]

    def rows(self):
        """Yield (mu, eta, log_density, log_se) in row-major order."""
        for i, mu in enumerate(self.mu_grid):
            for j, eta in enumerate(self.eta_grid):
                yield (
                    float(mu),
                    float(eta),
                    float(self.log_density[i, j]),
                    float(self.log_se[i, j]),
                )

    def laplace(self):
        """Fit a Gaussian at the MAP; see :func:`hyper_laplace`."""
        return hyper_laplace(self)


def hyper_log_posterior_grid(
    obs,
    hp,
    mu_grid,
    eta_grid,
    length_samples=DEFAULT_LENGTH_SAMPLES,
    z_samples=DEFAULT_Z_SAMPLES,
    seed=None,
    prior_b=None,
    lumped=False,
    workers=1,
):
    """Tabulate the (mu, eta) posterior with the length scale integrated out.

    Each cell holds the log hyperprior plus the log of the average
    likelihood over a bank of length draws and whitened fields shared by
    every cell.

    Args:
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        hp (:class:`HyperPrior`): The hyperprior.
        mu_grid (array-like): The mu values.
        eta_grid (array-like): The eta values.
        length_samples (int, optional): M_l, at least 8.
        z_samples (int, optional): M_z, at least 8.
        seed (int or :class:`numpy.random.SeedSequence`, optional): The
            bank seed.
        prior_b (:class:`parapost.models.boundary.BoundaryPrior`): The
            boundary prior of the marginal likelihood.
        lumped (bool, optional): Lump the FEM mass matrix.
        workers (int, optional): Worker processes. Defaults to 1.

    Returns:
        :class:`HyperPosteriorGrid`: The table.

    Raises:
        :class:`parapost.exceptions.SampleCountError`: Fewer than 8
            samples of either kind.
    """
    if min(length_samples, z_samples) < MIN_HYPER_SAMPLES:
        raise SampleCountError(
            "Need at least {} length and z samples, got {} and {}".format(
                MIN_HYPER_SAMPLES, length_samples, z_samples
            )
        )

    if prior_b is None:
        raise DomainError("The marginal likelihood needs a boundary prior")

    mu_grid = np.asarray(mu_grid, dtype=float)
    eta_grid = np.asarray(eta_grid, dtype=float)
    bank = SampleBank.draw(
        hp, obs.mesh.midpoints, length_samples, z_samples, seed
    )

    tasks = [
        (obs, prior_b, hp, mu, eta_grid, bank.whitened, lumped)
        for mu in mu_grid
    ]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_grid_row, tasks))
    else:
        results = [_grid_row(task) for task in tasks]

    grid = HyperPosteriorGrid(
        mu_grid,
        eta_grid,
        np.array([r[0] for r in results]),
        np.array([r[1] for r in results]),
        bank.lengths,
    )

    if grid.invalid_fraction > 0:
        logger.warning(
            "%.1f%% of hyperposterior cells are invalid",
            100 * grid.invalid_fraction,
        )

    return grid


def _spacing(values, name):
    steps = np.diff(values)

    if steps.size < 2 or not np.allclose(steps, steps[0], rtol=1e-9, atol=0):
        raise GridError("The {} grid must be uniform".format(name))

    return steps[0]


def hyper_laplace(grid):
    """Fit a Gaussian to a hyperposterior table at its MAP.

    The negative Hessian comes from central differences on the grid and
    the mean from one Newton step off the MAP cell.

    Args:
        grid (:class:`HyperPosteriorGrid`): The table.

    Returns:
        :class:`HyperLaplace`: The fit.

    Raises:
        :class:`parapost.exceptions.GridError`: The MAP is on the edge
            of the grid or next to an invalid cell.
        :class:`parapost.exceptions.CurvatureError`: The negative
            Hessian is not positive definite.
    """
    dm = _spacing(grid.mu_grid, "mu")
    de = _spacing(grid.eta_grid, "eta")
    i, j = grid.map_index
    f = grid.log_density

    if i in (0, f.shape[0] - 1) or j in (0, f.shape[1] - 1):
        raise GridError(
            "MAP {} lies on the edge of the grid".format(grid.map_pair)
        )

    patch = f[i - 1 : i + 2, j - 1 : j + 2]
    if not np.all(np.isfinite(patch)):
        raise GridError("MAP {} borders invalid cells".format(grid.map_pair))

    f_mm = (patch[2, 1] - 2 * patch[1, 1] + patch[0, 1]) / dm ** 2
    f_ee = (patch[1, 2] - 2 * patch[1, 1] + patch[1, 0]) / de ** 2
    f_me = (patch[2, 2] - patch[2, 0] - patch[0, 2] + patch[0, 0]) / (
        4 * dm * de
    )
    hessian = -np.array([[f_mm, f_me], [f_me, f_ee]])

    try:
        np.linalg.cholesky(hessian)
    except np.linalg.LinAlgError:
        raise CurvatureError(
            "Negative Hessian {} at the MAP is not positive "
            "definite".format(hessian.tolist())
        )

    gradient = np.array(
        [
            (patch[2, 1] - patch[0, 1]) / (2 * dm),
            (patch[1, 2] - patch[1, 0]) / (2 * de),
        ]
    )
    covariance = np.linalg.inv(hessian)
    mean = np.array(grid.map_pair) + covariance @ gradient

    return HyperLaplace(mean, 0.5 * (covariance + covariance.T))
