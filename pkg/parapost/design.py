"""Information divergence and expected information gain of setups."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import itertools
import logging
from concurrent.futures import ProcessPoolExecutor
import numpy as np
from scipy.integrate import quad
from parapost.constants import (
    COMBINED,
    DEFAULT_REPLICATIONS,
    LAPLACE_TV_THRESHOLD,
    MAX_DROPPED_FRACTION,
    SENSOR_SUBSET,
    SETUP_KINDS,
    SPOT_CHECK_GRID_POINTS,
    SPOT_CHECK_WIDTH,
    TIME_WINDOWS,
)
from parapost.exceptions import (
    BracketError,
    CurvatureError,
    EigError,
    GridError,
    QuadratureError,
    SetupError,
)
from parapost.posterior_scalar import ScalarInference, grid_posterior

logger = logging.getLogger(__name__)

# Slack when matching observation times to window ends
WINDOW_TOLERANCE = 1e-12

# Replication failures that drop the replication instead of aborting
DROPPABLE_ERRORS = (BracketError, CurvatureError, GridError)


class ExperimentalSetup(object):
    """Which readings an experiment records.

    A window (a, b) keeps the observation times t with a < t <= b, so
    windows that share an end never share a time. ``None`` for either
    selection means everything.

    Attributes:
        kind (str): "time_windows", "sensor_subset" or "combined".
        windows (list): Sorted (a, b) pairs, or None.
        sensors (list): Interior sensor labels, or None.
        label (str): A name for tables.
    """

    def __init__(self, kind, windows=None, sensors=None, label=None):
        """Initialize a setup.

        Raises:
            :class:`parapost.exceptions.SetupError`: Unknown kind, or
                windows that are reversed, negative or overlapping.
        """
        if kind not in SETUP_KINDS:
            raise SetupError(
                "Unknown setup kind {!r}; use one of {}".format(
                    kind, SETUP_KINDS
                )
            )

        if windows is not None:
            windows = sorted((float(a), float(b)) for a, b in windows)

            # Validate that windows are ordered and disjoint
            try:
                for a, b in windows:
                    assert 0 <= a < b
                for (_, b), (a, _) in zip(windows, windows[1:]):
                    assert b <= a
            except AssertionError:
                raise SetupError(
                    "Windows {} must be non-empty, non-negative and "
                    "non-overlapping".format(windows)
                )

        self.kind = kind
        self.windows = windows
        self.sensors = None if sensors is None else list(sensors)
        self.label = label if label is not None else kind

    def __repr__(self):
        return "ExperimentalSetup({!r}, windows={}, sensors={})".format(
            self.kind, self.windows, self.sensors
        )

    @classmethod
    def full(cls):
        """The setup that keeps every reading."""
        return cls(COMBINED, label="full")

    @staticmethod
    def equal_windows(t_end=1.0, count=3):
        """Split [0, t_end] into ``count`` equal windows."""
        edges = np.linspace(0.0, t_end, count + 1)
        return list(zip(edges[:-1], edges[1:]))

    @classmethod
    def es1(cls, t_end=1.0, count=3):
        """One setup per time window, all interior sensors."""
        return [
            cls(TIME_WINDOWS, windows=[w], label="window{}".format(k + 1))
            for k, w in enumerate(cls.equal_windows(t_end, count))
        ]

    @classmethod
    def es2(cls, labels):
        """One setup per interior sensor, all times."""
        return [cls(SENSOR_SUBSET, sensors=[s], label=s) for s in labels]

    @classmethod
    def es3(cls, labels, t_end=1.0, count=3):
        """One setup per (window, sensor) pair, windows outermost."""
        windows = cls.equal_windows(t_end, count)

        return [
            cls(
                COMBINED,
                windows=[w],
                sensors=[s],
                label="window{}:{}".format(k + 1, s),
            )
            for (k, w), s in itertools.product(enumerate(windows), labels)
        ]


def setup_mask(setup, mesh, grid):
    """Return the (I - 1) x N interior mask a setup selects.

    Raises:
        :class:`parapost.exceptions.SetupError`: A sensor is not an
            interior sensor of the mesh.
    """
    interior = mesh.interior_labels

    if setup.sensors is None:
        rows = np.ones(len(interior), dtype=bool)
    else:
        unknown = [s for s in setup.sensors if s not in interior]
        if unknown:
            raise SetupError(
                "Sensors {} are not interior sensors {}".format(
                    unknown, interior
                )
            )
        rows = np.isin(interior, setup.sensors)

    if setup.windows is None:
        columns = np.ones(grid.step_count, dtype=bool)
    else:
        columns = np.zeros(grid.step_count, dtype=bool)
        for a, b in setup.windows:
            columns |= (grid.times > a + WINDOW_TOLERANCE) & (
                grid.times <= b + WINDOW_TOLERANCE
            )

    return np.outer(rows, columns)


def restrict_observations(obs, setup):
    """Keep only the interior readings a setup records.

    Boundary rows are always kept.

    Args:
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        setup (:class:`ExperimentalSetup`): The setup.

    Returns:
        :class:`parapost.models.observations.ObservationSet`: The
        readings with a narrowed interior mask.

    Raises:
        :class:`parapost.exceptions.SetupError`: No interior reading is
            left.
    """
    mask = obs.mask & setup_mask(setup, obs.mesh, obs.grid)

    if not mask.any():
        raise SetupError(
            "Setup {!r} selects no interior reading".format(setup)
        )

    return obs.with_mask(mask)


def _center(density):
    mode = getattr(density, "mode", None)
    return float(mode if mode is not None else density.mean)


def information_divergence(prior, posterior):
    """KL divergence of a posterior from a prior.

    Integrates p log(p / q) with adaptive quadrature over the
    posterior's bulk, cut to the prior's support.

    Args:
        prior: The prior; needs ``logpdf`` and ``support``.
        posterior: The posterior; needs ``logpdf``, ``bounds`` and a
            ``mode`` or ``mean``.

    Returns:
        float: The divergence, at least zero.

    Raises:
        :class:`parapost.exceptions.QuadratureError`: The integrand or
            the integral is not finite.
    """
    lo, hi = posterior.bounds()
    lo = max(lo, prior.support[0])
    hi = min(hi, prior.support[1])
    center = min(max(_center(posterior), lo), hi)

    def integrand(theta):
        log_p = float(posterior.logpdf(theta))
        if log_p == -np.inf:
            return 0.0

        value = np.exp(log_p) * (log_p - float(prior.logpdf(theta)))
        if not np.isfinite(value):
            raise QuadratureError(
                "Divergence integrand is {} at {}".format(value, theta)
            )

        return value

    with np.errstate(divide="ignore", over="ignore"):
        value, error = quad(
            integrand,
            lo,
            hi,
            points=[center] if lo < center < hi else None,
            epsabs=1e-13,
            epsrel=1e-11,
            limit=200,
        )

    if not np.isfinite(value):
        raise QuadratureError(
            "Divergence quadrature returned {}".format(value)
        )

    logger.debug("KL %.6g (quadrature error %.2g)", value, error)

    return max(float(value), 0.0)


class EigEstimate(object):
    """A Monte Carlo estimate of the expected information gain.

    Attributes:
        mean (float): The mean divergence.
        std_error (float): The sample sd over sqrt(replications).
        replications (int): Replications kept.
        dropped (int): Replications dropped.
        divergences (:class:`numpy.ndarray`): The kept divergences in
            replication order.
    """

    def __init__(
        self, mean, std_error, replications, dropped=0, divergences=None
    ):
        self.mean = float(mean)
        self.std_error = float(std_error)
        self.replications = int(replications)
        self.dropped = int(dropped)
        self.divergences = divergences

    def __repr__(self):
        return "EigEstimate(mean={:.6g}, std_error={:.3g}, n={})".format(
            self.mean, self.std_error, self.replications
        )

    @classmethod
    def from_divergences(cls, divergences, dropped=0):
        divergences = np.asarray(divergences, dtype=float)
        return cls(
            divergences.mean(),
            divergences.std(ddof=1) / np.sqrt(divergences.size),
            divergences.size,
            dropped,
            divergences,
        )


def _posterior(log_post, fit, use_grid):
    """The Laplace fit, or a grid density around it."""
    laplace = fit.laplace
    if not use_grid:
        return laplace

    # Stay clear of theta = 0, where assembly fails
    lo = max(
        laplace.theta_hat - SPOT_CHECK_WIDTH * laplace.sd,
        1e-3 * laplace.theta_hat,
    )
    hi = laplace.theta_hat + SPOT_CHECK_WIDTH * laplace.sd

    return grid_posterior(
        log_post, np.linspace(lo, hi, SPOT_CHECK_GRID_POINTS)
    )


def _replicate(task):
    """Divergence of one synthetic replication, or None when dropped."""
    setup, generator, inference, seed, use_grid = task
    obs = restrict_observations(generator.draw(seed), setup)

    try:
        fit = inference.fit(obs)
        posterior = _posterior(fit.log_posterior, fit, use_grid)
    except DROPPABLE_ERRORS as err:
        logger.info("Dropping replication: %s", err)
        return None

    return information_divergence(inference.prior_theta, posterior)


def laplace_is_adequate(setup, generator, inference, seed):
    """Compare the Laplace fit with a grid density on one replication.

    Returns:
        bool: Whether their total variation distance is at most 0.05.

    Raises:
        :class:`parapost.exceptions.SetupError`: The setup selects no
            reading.
    """
    obs = restrict_observations(generator.draw(seed), setup)

    try:
        fit = inference.fit(obs)
        grid = _posterior(fit.log_posterior, fit, True)
    except DROPPABLE_ERRORS as err:
        logger.info("Spot check failed, keeping Laplace: %s", err)
        return True

    tv = grid.tv_distance(fit.laplace)
    logger.debug("Spot check TV(Laplace, grid) = %.4g", tv)

    return tv <= LAPLACE_TV_THRESHOLD


def expected_information_gain(
    setup,
    generator,
    replications=DEFAULT_REPLICATIONS,
    seed=None,
    inference=None,
    workers=1,
):
    """Average the divergence over datasets drawn from a generator.

    Each replication draws a dataset with its own child seed, restricts
    it to the setup, fits the posterior and measures the divergence from
    the prior. The Laplace fit is used unless a spot check on the first
    replication finds it off by more than 0.05 in total variation, in
    which case every replication uses a grid density.

    Args:
        setup (:class:`ExperimentalSetup`): The setup.
        generator (:class:`parapost.synth_data.DatasetGenerator`): The
            dataset source.
        replications (int, optional): At least 2. Defaults to 200.
        seed (int, optional): The master seed.
        inference (:class:`parapost.posterior_scalar.ScalarInference`, optional):
            How to fit each dataset. Defaults to
            :meth:`parapost.posterior_scalar.ScalarInference.default`.
        workers (int, optional): Worker processes. Defaults to 1.

    Returns:
        :class:`EigEstimate`: The estimate.

    Raises:
        :class:`parapost.exceptions.SetupError`: The setup selects no
            reading.
        :class:`parapost.exceptions.EigError`: More than 20% of the
            replications were dropped.
    """
    if replications < 2:
        raise EigError(
            "Need at least 2 replications, got {}".format(replications)
        )

    if inference is None:
        inference = ScalarInference.default()

    seeds = np.random.SeedSequence(seed).spawn(replications)
    use_grid = not laplace_is_adequate(setup, generator, inference, seeds[0])
    if use_grid:
        logger.info(
            "Laplace fit is inadequate for %s; using grids", setup.label
        )

    tasks = [(setup, generator, inference, s, use_grid) for s in seeds]

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = list(executor.map(_replicate, tasks))
    else:
        results = [_replicate(task) for task in tasks]

    divergences = [r for r in results if r is not None]
    dropped = replications - len(divergences)

    if dropped > MAX_DROPPED_FRACTION * replications or len(divergences) < 2:
        raise EigError(
            "{} of {} replications dropped for {}".format(
                dropped, replications, setup.label
            )
        )

    estimate = EigEstimate.from_divergences(divergences, dropped)
    logger.info("EIG %s: %r", setup.label, estimate)

    return estimate


def eig_grid(
    setups,
    generator,
    replications=DEFAULT_REPLICATIONS,
    seed=None,
    inference=None,
    workers=1,
):
    """Estimate the EIG of several setups with common random numbers.

    Every setup sees the same replication seeds, so differences between
    setups are not blurred by different datasets.

    Returns:
        list: (setup, :class:`EigEstimate`) pairs in input order.

    Raises:
        :class:`parapost.exceptions.SetupError`: No setups.
    """
    if not setups:
        raise SetupError("Need at least one setup")

    if inference is None:
        inference = ScalarInference.default()

    return [
        (
            setup,
            expected_information_gain(
                setup, generator, replications, seed, inference, workers
            ),
        )
        for setup in setups
    ]
