"""Classes for Dirichlet boundary series and their Gaussian priors."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
import numpy as np
from scipy.interpolate import LSQUnivariateSpline
from parapost.constants import DEFAULT_SPLINE_KNOTS
from parapost.exceptions import DomainError
from .resource import frozen_array

logger = logging.getLogger(__name__)

# Ways of centring the boundary prior
SPLINE_MEAN = "spline"
DATA_MEAN = "data"
BOUNDARY_MEANS = (SPLINE_MEAN, DATA_MEAN)


class BoundarySeries(object):
    """Left and right boundary values at t_0..t_N.

    Attributes:
        T_L (:class:`numpy.ndarray`): Left values at t_1..t_N.
        T_R (:class:`numpy.ndarray`): Right values at t_1..t_N.
        T_L0 (float): The left value at t_0.
        T_R0 (float): The right value at t_0.
    """

    def __init__(self, T_L, T_R, T_L0, T_R0):
        """Initialize the series.

        Args:
            T_L (array-like): Left values at t_1..t_N.
            T_R (array-like): Right values at t_1..t_N.
            T_L0 (float): The left value at t_0.
            T_R0 (float): The right value at t_0.

        Raises:
            :class:`parapost.exceptions.DomainError`: The series have
                different lengths.
        """
        T_L = np.atleast_1d(np.asarray(T_L, dtype=float))
        T_R = np.atleast_1d(np.asarray(T_R, dtype=float))

        if T_L.shape != T_R.shape or T_L.ndim != 1:
            raise DomainError(
                "Boundary series lengths differ: {} and {}".format(
                    T_L.shape, T_R.shape
                )
            )

        self.T_L = frozen_array(T_L)
        self.T_R = frozen_array(T_R)
        self.T_L0 = float(T_L0)
        self.T_R0 = float(T_R0)

    @classmethod
    def constant(cls, left, right, step_count):
        """Return series that hold constant values for all time."""
        return cls(
            np.full(step_count, float(left)),
            np.full(step_count, float(right)),
            left,
            right,
        )

    @property
    def step_count(self):
        """int: The number of time steps N."""
        return self.T_L.size

    def left_history(self):
        """Return the left values at t_0..t_N."""
        return np.concatenate([[self.T_L0], self.T_L])

    def right_history(self):
        """Return the right values at t_0..t_N."""
        return np.concatenate([[self.T_R0], self.T_R])

    def truncated(self, step_count):
        """Return the series up to t_n."""
        return BoundarySeries(
            self.T_L[:step_count], self.T_R[:step_count], self.T_L0, self.T_R0
        )

    def mirrored(self):
        """Return the series with left and right exchanged."""
        return BoundarySeries(self.T_R, self.T_L, self.T_R0, self.T_L0)


class BoundaryPrior(object):
    """Independent Gaussian priors T_{L,n} ~ N(mu_L,n, sigma_p^2).

    Attributes:
        mu_L (:class:`numpy.ndarray`): Left prior means.
        mu_R (:class:`numpy.ndarray`): Right prior means.
        sigma_p (float): The prior standard deviation.
    """

    def __init__(self, mu_L, mu_R, sigma_p):
        """Initialize the prior.

        Args:
            mu_L (array-like): Left prior means at t_1..t_N.
            mu_R (array-like): Right prior means at t_1..t_N.
            sigma_p (float): The prior standard deviation.

        Raises:
            :class:`parapost.exceptions.DomainError`: sigma_p is not
                positive, or the means are not finite vectors of equal
                length.
        """
        mu_L = np.atleast_1d(np.asarray(mu_L, dtype=float))
        mu_R = np.atleast_1d(np.asarray(mu_R, dtype=float))

        try:
            assert np.isfinite(sigma_p) and sigma_p > 0
            assert mu_L.shape == mu_R.shape and mu_L.ndim == 1
            assert np.all(np.isfinite(mu_L)) and np.all(np.isfinite(mu_R))
        except AssertionError:
            raise DomainError(
                "Boundary prior needs sigma_p > 0 and finite means of equal "
                "length, got sigma_p={}".format(sigma_p)
            )

        self.mu_L = frozen_array(mu_L)
        self.mu_R = frozen_array(mu_R)
        self.sigma_p = float(sigma_p)

    @classmethod
    def from_observations(
        cls, obs, sigma_p, mean=SPLINE_MEAN, knots=DEFAULT_SPLINE_KNOTS
    ):
        """Centre a prior on the observed boundary readings.

        Args:
            obs (:class:`parapost.models.observations.ObservationSet`):
                The observations.
            sigma_p (float): The prior standard deviation.
            mean (str, optional): "spline" for a least squares cubic
                spline fit of the readings, "data" for the readings
                themselves. Defaults to "spline".
            knots (int, optional): The number of equispaced interior
                knots of the spline. Defaults to 4.

        Returns:
            :class:`BoundaryPrior`: The prior.

        Raises:
            :class:`parapost.exceptions.DomainError`: Unknown mean.
        """
        if mean == DATA_MEAN:
            return cls(obs.Y_L, obs.Y_R, sigma_p)

        if mean != SPLINE_MEAN:
            raise DomainError(
                "Unknown boundary mean {!r}; use one of {}".format(
                    mean, BOUNDARY_MEANS
                )
            )

        times = obs.grid.times

        return cls(
            spline_fit(times, obs.Y_L, knots),
            spline_fit(times, obs.Y_R, knots),
            sigma_p,
        )

    @property
    def step_count(self):
        """int: The number of time steps N."""
        return self.mu_L.size

    def truncated(self, step_count):
        """Return the prior up to t_n."""
        return BoundaryPrior(
            self.mu_L[:step_count], self.mu_R[:step_count], self.sigma_p
        )

    def mirrored(self):
        """Return the prior with left and right exchanged."""
        return BoundaryPrior(self.mu_R, self.mu_L, self.sigma_p)


def spline_fit(times, values, knots=DEFAULT_SPLINE_KNOTS):
    """Least squares cubic spline fit evaluated at the data times.

    Series too short for the requested knots are returned unchanged.

    Args:
        times (:class:`numpy.ndarray`): Increasing sample times.
        values (:class:`numpy.ndarray`): Sample values.
        knots (int, optional): The number of equispaced interior knots.
            Defaults to 4.

    Returns:
        :class:`numpy.ndarray`: The fitted values at the sample times.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)

    # A cubic spline with k interior knots has k + 4 coefficients
    if knots < 0 or times.size < knots + 5:
        logger.debug(
            "%d samples cannot support %d knots; using raw readings",
            times.size,
            knots,
        )
        return values.copy()

    interior = np.linspace(times[0], times[-1], knots + 2)[1:-1]

    try:
        spline = LSQUnivariateSpline(times, values, interior, k=3)
    except ValueError as error:
        logger.warning("Spline fit failed (%s); using raw readings", error)
        return values.copy()

    return spline(times)
