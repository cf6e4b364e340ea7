"""Predictive densities of future interior readings."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid, trapezoid
from parapost.constants import (
    MIN_PREDICTIVE_SAMPLES,
    PREDICTIVE_GRID_POINTS,
    PREDICTIVE_GRID_WIDTH,
)
from parapost.exceptions import QueryError, SampleCountError
from parapost.forward_fem import assemble, solve_full
from parapost.models.boundary import BoundarySeries
from parapost.models.coefficients import CoefficientField
from parapost.models.resource import frozen_array
from parapost.posterior_scalar import sample_posterior

logger = logging.getLogger(__name__)


class PredictiveQuery(object):
    """What to predict and under which future boundary values.

    Attributes:
        history_horizon (int): n; readings at t_1..t_n are history.
        steps_ahead (int): k; the prediction is for t_{n+k}.
        future_T_L (:class:`numpy.ndarray`): Left values at
            t_{n+1}..t_{n+k}.
        future_T_R (:class:`numpy.ndarray`): Right values at
            t_{n+1}..t_{n+k}.
        target_sensors (list): Interior sensor labels.
    """

    def __init__(
        self, history_horizon, steps_ahead, future_boundaries, target_sensors
    ):
        """Initialize a query.

        Args:
            history_horizon (int): n, at least 1.
            steps_ahead (int): k, at least 1.
            future_boundaries (tuple): (T_L, T_R), each k values.
            target_sensors (list): Interior sensor labels.

        Raises:
            :class:`parapost.exceptions.QueryError`: Bad horizon, no
                sensors or bad future boundaries.
        """
        future_T_L, future_T_R = (
            np.atleast_1d(np.asarray(v, dtype=float))
            for v in future_boundaries
        )

        # Validate that the query is well formed
        try:
            assert history_horizon >= 1 and steps_ahead >= 1
            assert future_T_L.shape == future_T_R.shape == (steps_ahead,)
            assert np.all(np.isfinite(future_T_L))
            assert np.all(np.isfinite(future_T_R))
        except AssertionError:
            raise QueryError(
                "Need n >= 1, k >= 1 and k finite future boundary values; "
                "got n={}, k={}, T_L={}, T_R={}".format(
                    history_horizon,
                    steps_ahead,
                    future_T_L.tolist(),
                    future_T_R.tolist(),
                )
            )

        if not target_sensors:
            raise QueryError("No target sensors given")

        self.history_horizon = int(history_horizon)
        self.steps_ahead = int(steps_ahead)
        self.future_T_L = frozen_array(future_T_L)
        self.future_T_R = frozen_array(future_T_R)
        self.target_sensors = list(target_sensors)

    @classmethod
    def from_observations(cls, obs, history_time, steps_ahead, target_sensors):
        """Query the readings that follow ``history_time`` in obs.

        The future boundary values are the observed boundary readings.
        """
        n = obs.grid.index_of(history_time)
        future = slice(n, n + steps_ahead)

        return cls(
            n,
            steps_ahead,
            (obs.Y_L[future], obs.Y_R[future]),
            target_sensors,
        )

    @property
    def total_steps(self):
        """int: n + k."""
        return self.history_horizon + self.steps_ahead


class PredictiveTable(object):
    """The predictive density of one sensor on a value grid.

    Attributes:
        sensor (str): The sensor label.
        time (float): The predicted time t_{n+k}.
        values (:class:`numpy.ndarray`): The value grid.
        density (:class:`numpy.ndarray`): The density on the grid.
        conditional_means (:class:`numpy.ndarray`): The mixture
            component means, one per posterior sample.
    """

    def __init__(self, sensor, time, values, density, conditional_means):
        self.sensor = sensor
        self.time = float(time)
        self.values = frozen_array(values)
        self.density = frozen_array(density)
        self.conditional_means = frozen_array(conditional_means)

    @property
    def mass(self):
        """float: The trapezoid integral of the density."""
        return float(trapezoid(self.density, self.values))


class PredictiveSummary(object):
    """Moments and a central 95% interval of a predictive table."""

    def __init__(self, sensor, time, mean, sd, lower, upper):
        self.sensor = sensor
        self.time = time
        self.mean = mean
        self.sd = sd
        self.lower = lower
        self.upper = upper

    def to_dict(self):
        return {
            "sensor": self.sensor,
            "time": self.time,
            "mean": self.mean,
            "sd": self.sd,
            "lower": self.lower,
            "upper": self.upper,
        }


def history_boundaries(obs, n, prior_b=None):
    """Posterior means of the boundary values at t_1..t_n.

    Each value combines the prior mean and the reading with weights
    1 / sigma_p^2 and 1 / sigma^2. Without a prior the readings are used
    as they are.

    Returns:
        tuple: (T_L, T_R), each n values.
    """
    Y_L, Y_R = obs.Y_L[:n], obs.Y_R[:n]

    if prior_b is None:
        return Y_L, Y_R

    w_prior = 1.0 / prior_b.sigma_p ** 2
    w_data = 1.0 / obs.sigma ** 2

    def blend(mu, y):
        return (w_prior * mu[:n] + w_data * y) / (w_prior + w_data)

    return blend(prior_b.mu_L, Y_L), blend(prior_b.mu_R, Y_R)


def query_boundary_series(query, obs, prior_b=None):
    """The boundary series over t_1..t_{n+k} used for prediction."""
    T_L, T_R = history_boundaries(obs, query.history_horizon, prior_b)

    return BoundarySeries(
        np.concatenate([T_L, query.future_T_L]),
        np.concatenate([T_R, query.future_T_R]),
        obs.initial.left,
        obs.initial.right,
    )


def _validate_query(query, obs):
    if query.total_steps > obs.step_count:
        raise QueryError(
            "n + k = {} exceeds the {} observation times".format(
                query.total_steps, obs.step_count
            )
        )

    interior = obs.mesh.interior_labels
    unknown = [s for s in query.target_sensors if s not in interior]
    if unknown:
        raise QueryError(
            "Sensors {} are not interior sensors {}".format(unknown, interior)
        )


def conditional_means(theta, query, obs, prior_b=None, lumped=False):
    """Forward solve for one theta at the target sensors.

    Returns:
        :class:`numpy.ndarray`: (sensors, k) interior temperatures at
        t_{n+1}..t_{n+k}.
    """
    _validate_query(query, obs)

    sys = assemble(
        obs.mesh,
        CoefficientField.constant(theta, obs.mesh),
        obs.grid.dt,
        lumped=lumped,
    )
    history = solve_full(
        sys,
        obs.initial,
        query_boundary_series(query, obs, prior_b),
        query.total_steps,
    )
    rows = [obs.mesh.interior_labels.index(s) for s in query.target_sensors]

    return history.interior[rows, query.history_horizon :]


def predictive_density(
    query,
    obs,
    post,
    M,
    seed=None,
    prior_b=None,
    lumped=False,
    grid_points=PREDICTIVE_GRID_POINTS,
):
    """Mixture density of the readings at t_{n+k}.

    Each posterior sample theta_i yields a Gaussian N(m_i, sigma^2) at
    each sensor, with m_i the forward solve from the initial condition
    under the query's boundary values. The density is their average on
    a grid reaching 10 sigma past the extreme means.

    Args:
        query (:class:`PredictiveQuery`): The query.
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings; supply the mesh, grid, sigma and history.
        post (:class:`parapost.posterior_scalar.LaplacePosterior`): A
            posterior fitted to t_1..t_n.
        M (int): Posterior samples, at least 10.
        seed (int, optional): The sampling seed.
        prior_b (:class:`parapost.models.boundary.BoundaryPrior`, optional):
            The boundary prior blended into the history boundaries.
        lumped (bool, optional): Lump the FEM mass matrix.
        grid_points (int, optional): Points of each value grid.

    Returns:
        list: A :class:`PredictiveTable` per target sensor.

    Raises:
        :class:`parapost.exceptions.SampleCountError`: M < 10.
        :class:`parapost.exceptions.QueryError`: The query does not fit
            the readings.
    """
    if M < MIN_PREDICTIVE_SAMPLES:
        raise SampleCountError(
            "Need at least {} samples, got {}".format(
                MIN_PREDICTIVE_SAMPLES, M
            )
        )

    _validate_query(query, obs)

    thetas = sample_posterior(post, M, seed)
    means = np.array(
        [
            conditional_means(theta, query, obs, prior_b, lumped)[:, -1]
            for theta in thetas
        ]
    )
    time = obs.grid.times[query.total_steps - 1]
    sigma = obs.sigma
    tables = []

    for k, sensor in enumerate(query.target_sensors):
        component_means = means[:, k]
        values = np.linspace(
            component_means.min() - PREDICTIVE_GRID_WIDTH * sigma,
            component_means.max() + PREDICTIVE_GRID_WIDTH * sigma,
            grid_points,
        )
        density = stats.norm.pdf(
            values[:, None], component_means[None, :], sigma
        ).mean(axis=1)
        tables.append(
            PredictiveTable(sensor, time, values, density, component_means)
        )

        logger.debug(
            "Predictive %s at t=%g: mixture of %d around %.6g",
            sensor,
            time,
            M,
            component_means.mean(),
        )

    return tables


def predictive_summary(tables):
    """Moments and central 95% intervals of predictive tables.

    Args:
        tables (list): :class:`PredictiveTable` instances.

    Returns:
        list: A :class:`PredictiveSummary` per table.
    """
    summaries = []

    for table in tables:
        x, p = table.values, table.density
        mean = trapezoid(x * p, x)
        sd = np.sqrt(trapezoid((x - mean) ** 2 * p, x))
        cdf = cumulative_trapezoid(p, x, initial=0.0)
        cdf /= cdf[-1]
        lower, upper = np.interp([0.025, 0.975], cdf, x)

        summaries.append(
            PredictiveSummary(
                table.sensor,
                table.time,
                float(mean),
                float(sd),
                float(lower),
                float(upper),
            )
        )

    return summaries
