"""Synthetic datasets from a Robin-cooled rod.

The rod obeys T_t = (a T_x)_x on [x_L, x_R] with

    T_x(x_L, t) = beta (T(x_L, t) - T_out)
    T_x(x_R, t) = beta (T_out - T(x_R, t))

and T(x, 0) = T0, where beta = h / kappa. Readings are sampled from a
Crank-Nicolson reference solution on a refined grid and perturbed with
Gaussian noise.
"""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
import math
import numpy as np
from scipy.linalg import solve_banded
from parapost.constants import CSV_SIGNIFICANT_DIGITS, MIN_REFERENCE_REFINEMENT
from parapost.exceptions import AlignmentError, ReferenceSolveError
from parapost.field_hyper import SeCovariance, sample_field
from parapost.models.boundary import BoundarySeries
from parapost.models.coefficients import CoefficientField, InitialCondition
from parapost.models.mesh import SpatialMesh, TimeGrid
from parapost.models.observations import ObservationSet, TruthRecord, quantize
from parapost.models.resource import frozen_array

logger = logging.getLogger(__name__)

# Dataset kinds
CONSTANT_THETA = "A"
RANDOM_FIELD = "B"


class RobinProblem(object):
    """A cooling problem with Robin conditions on both ends.

    Attributes:
        theta_field (:class:`parapost.models.coefficients.CoefficientField`):
            Diffusion per element of ``mesh``; only ``a`` is used.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The uniform
            coarse mesh the reference grid refines.
        grid (:class:`parapost.models.mesh.TimeGrid`): The coarse time
            grid the reference grid refines.
        h_over_kappa (float): The Robin coefficient beta.
        t_out (float): The ambient temperature.
        t0 (float): The initial temperature.
        resolution (int): The minimum refinement in x and t.
    """

    def __init__(
        self,
        theta_field,
        mesh,
        grid,
        h_over_kappa=1.0,
        t_out=20.0,
        t0=100.0,
        resolution=MIN_REFERENCE_REFINEMENT,
    ):
        self.theta_field = theta_field
        self.mesh = mesh
        self.grid = grid
        self.h_over_kappa = float(h_over_kappa)
        self.t_out = float(t_out)
        self.t0 = float(t0)
        self.resolution = int(resolution)

    def metadata(self):
        """Return the generator settings as a JSON-ready dict."""
        return {
            "h_over_kappa": self.h_over_kappa,
            "t_out": self.t_out,
            "t0": self.t0,
            "resolution": self.resolution,
            "elements": self.mesh.element_count,
            "steps": self.grid.step_count,
            "t_end": self.grid.t_end,
        }


class DatasetSpec(object):
    """What to observe and how noisily.

    Attributes:
        sensors (:class:`numpy.ndarray`): Sensor positions.
        N (int): The number of observation times.
        sigma_d (float): The noise standard deviation, >= 0.
        seed (int): The noise seed.
        sigma (float): The noise level attached to the observation set
            for inference; defaults to sigma_d.
        precision (int): Significant digits readings are rounded to, or
            None to keep them unrounded.
    """

    def __init__(
        self,
        sensors,
        N,
        sigma_d,
        seed,
        sigma=None,
        precision=CSV_SIGNIFICANT_DIGITS,
    ):
        if not sigma_d >= 0:
            raise ValueError("sigma_d must be >= 0, got {}".format(sigma_d))

        self.sensors = frozen_array(sensors)
        self.N = int(N)
        self.sigma_d = float(sigma_d)
        self.seed = seed
        self.sigma = self.sigma_d if sigma is None else float(sigma)
        self.precision = precision

    @classmethod
    def equispaced(
        cls, N, sigma_d, seed, count=7, x_left=0.0, x_right=1.0, **kwargs
    ):
        """Return a spec with ``count`` equispaced sensors."""
        sensors = np.linspace(x_left, x_right, count)

        return cls(sensors, N, sigma_d, seed, **kwargs)


class ReferenceSolution(object):
    """Reference temperatures at the coarse times on the fine nodes.

    Attributes:
        x (:class:`numpy.ndarray`): The fine nodes.
        times (:class:`numpy.ndarray`): t_0..t_N of the coarse grid.
        values (:class:`numpy.ndarray`): (N + 1, J + 1) temperatures.
        time_refinement (int): Fine steps per coarse step.
    """

    def __init__(self, x, times, values, time_refinement):
        self.x = frozen_array(x)
        self.times = frozen_array(times)
        self.values = frozen_array(values)
        self.time_refinement = time_refinement

    def node_index(self, position, tolerance=1e-9):
        """Return the fine node at a position.

        Raises:
            :class:`parapost.exceptions.AlignmentError`: No fine node
                lies at the position.
        """
        spacing = self.x[1] - self.x[0]
        index = int(round((position - self.x[0]) / spacing))

        if not 0 <= index < self.x.size or abs(
            self.x[index] - position
        ) > tolerance * spacing:
            raise AlignmentError(
                "Sensor at {} is not a reference grid node".format(position)
            )

        return index

    def time_index(self, time, tolerance=1e-9):
        """Return the stored time row at a time.

        Raises:
            :class:`parapost.exceptions.AlignmentError`: The time is not
                stored.
        """
        spacing = self.times[1] - self.times[0]
        index = int(round((time - self.times[0]) / spacing))

        if not 0 <= index < self.times.size or abs(
            self.times[index] - time
        ) > tolerance * spacing:
            raise AlignmentError(
                "Time {} is not a reference grid time".format(time)
            )

        return index

    def sample(self, positions, times):
        """Return readings at positions (rows) and times (columns)."""
        rows = [self.time_index(t) for t in times]
        columns = [self.node_index(x) for x in positions]

        return self.values[np.ix_(rows, columns)].T


def _robin_operator(a, spacing, beta, t_out):
    """Return the diagonals of L and the forcing f in T' = L T + f."""
    n = a.size + 1
    scale = 1.0 / spacing ** 2

    lower = np.empty(n - 1)
    upper = np.empty(n - 1)
    main = np.empty(n)

    # Interior nodes: flux form with element values a_{i -/+ 1/2}
    lower[:-1] = a[:-1] * scale
    upper[1:] = a[1:] * scale
    main[1:-1] = -(a[:-1] + a[1:]) * scale

    # Ghost nodes eliminated with the central Robin difference
    upper[0] = 2.0 * a[0] * scale
    main[0] = -2.0 * a[0] * scale * (1.0 + spacing * beta)
    lower[-1] = 2.0 * a[-1] * scale
    main[-1] = -2.0 * a[-1] * scale * (1.0 + spacing * beta)

    forcing = np.zeros(n)
    forcing[0] = 2.0 * a[0] * beta * t_out / spacing
    forcing[-1] = 2.0 * a[-1] * beta * t_out / spacing

    return lower, main, upper, forcing


def reference_solve(prob):
    """Solve a Robin problem with Crank-Nicolson on a refined grid.

    Space is refined by ``prob.resolution``. Time is refined by at
    least as much and further until the scheme is monotone, so the
    reference keeps the discrete maximum principle.

    Args:
        prob (:class:`RobinProblem`): The problem.

    Returns:
        :class:`ReferenceSolution`: Temperatures at the coarse times.

    Raises:
        :class:`parapost.exceptions.ReferenceSolveError`: The problem
            cannot be refined.
    """
    try:
        assert prob.resolution >= MIN_REFERENCE_REFINEMENT
        assert prob.h_over_kappa > 0
        assert prob.mesh.is_uniform
        assert np.all(prob.theta_field.a > 0)
        assert prob.theta_field.element_count == prob.mesh.element_count
    except AssertionError:
        raise ReferenceSolveError(
            "Reference solve needs resolution >= {}, h/kappa > 0, a uniform "
            "mesh and positive diffusion on every element".format(
                MIN_REFERENCE_REFINEMENT
            )
        )

    refinement = prob.resolution
    a = np.repeat(prob.theta_field.a, refinement)
    spacing = prob.mesh.dx / refinement
    beta = prob.h_over_kappa
    lower, main, upper, forcing = _robin_operator(a, spacing, beta, prob.t_out)

    # Monotone when dt_f * |L_ii| / 2 <= 1
    coarse_dt = prob.grid.dt
    monotone = int(math.ceil(0.5 * coarse_dt * np.max(-main)))
    steps = max(refinement, monotone)
    dt = coarse_dt / steps

    banded = np.zeros((3, main.size))
    banded[0, 1:] = -0.5 * dt * upper
    banded[1] = 1.0 - 0.5 * dt * main
    banded[2, :-1] = -0.5 * dt * lower

    logger.debug(
        "Reference grid: %d nodes, %d steps per observation",
        main.size,
        steps,
    )

    state = np.full(main.size, prob.t0)
    history = np.empty((prob.grid.step_count + 1, main.size))
    history[0] = state

    for n in range(1, prob.grid.step_count + 1):
        for _ in range(steps):
            explicit = state + 0.5 * dt * main * state + dt * forcing
            explicit[:-1] += 0.5 * dt * upper * state[1:]
            explicit[1:] += 0.5 * dt * lower * state[:-1]
            state = solve_banded((1, 1), banded, explicit)

        history[n] = state

    if not np.all(np.isfinite(history)):
        raise ReferenceSolveError("Reference solution is not finite")

    x = prob.mesh.x_left + spacing * np.arange(main.size)
    times = np.concatenate([[0.0], prob.grid.times])

    return ReferenceSolution(x, times, history, steps)


class DatasetGenerator(object):
    """Noisy replicates of one reference solution.

    The noise-free readings are computed once; :meth:`draw` adds fresh
    noise for each seed.

    Attributes:
        prob (:class:`RobinProblem`): The problem.
        spec (:class:`DatasetSpec`): The observation spec.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The sensor
            mesh.
        grid (:class:`parapost.models.mesh.TimeGrid`): The observation
            times.
        clean (:class:`numpy.ndarray`): Noise-free readings.
    """

    def __init__(self, prob, spec, reference=None):
        if reference is None:
            reference = reference_solve(prob)

        self.prob = prob
        self.spec = spec
        self.mesh = SpatialMesh(spec.sensors)
        self.grid = TimeGrid(prob.grid.t_end, spec.N)
        self.clean = frozen_array(
            reference.sample(self.mesh.nodes, self.grid.times)
        )
        self.initial = InitialCondition.constant(prob.t0, self.mesh)

    def draw(self, seed=None):
        """Draw one noisy observation set.

        Args:
            seed (int or :class:`numpy.random.SeedSequence`, optional):
                The noise seed. Defaults to the spec's seed.

        Returns:
            :class:`parapost.models.observations.ObservationSet`: The
            readings.
        """
        seed = self.spec.seed if seed is None else seed
        rng = np.random.default_rng(seed)
        readings = self.clean + self.spec.sigma_d * rng.standard_normal(
            self.clean.shape
        )

        if self.spec.precision is not None:
            readings = quantize(readings, self.spec.precision)

        return ObservationSet(
            readings, self.spec.sigma, self.mesh, self.grid, self.initial
        )

    def boundary_truth(self):
        """Return the noise-free boundary readings as (T_L, T_R)."""
        return self.clean[0], self.clean[-1]

    def truth_record(self, kind, theta):
        """Return the truth sidecar of this generator's datasets."""
        T_L, T_R = self.boundary_truth()
        metadata = self.prob.metadata()
        metadata.update(
            sigma_d=self.spec.sigma_d,
            sensors=[float(x) for x in self.spec.sensors],
        )

        return TruthRecord(
            kind=kind,
            theta=theta,
            boundary=BoundarySeries(T_L, T_R, self.prob.t0, self.prob.t0),
            seed=self.spec.seed,
            metadata=metadata,
        )


def make_dataset(prob, spec):
    """Sample a reference solution at the sensors and add noise.

    Args:
        prob (:class:`RobinProblem`): The problem.
        spec (:class:`DatasetSpec`): The observation spec.

    Returns:
        :class:`parapost.models.observations.ObservationSet`: The
        readings.

    Raises:
        :class:`parapost.exceptions.AlignmentError`: A sensor or time is
            off the reference grid.
    """
    return DatasetGenerator(prob, spec).draw()


def random_field_problem(
    hyper,
    seed,
    mesh,
    grid,
    h_over_kappa=1.0,
    t_out=20.0,
    t0=100.0,
    resolution=MIN_REFERENCE_REFINEMENT,
):
    """Draw a lognormal diffusion field and pose its cooling problem.

    Args:
        hyper (tuple): (mu, eta, length) of the field prior.
        seed (int): The seed of the field draw.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The coarse
            mesh; one field value per element.
        grid (:class:`parapost.models.mesh.TimeGrid`): The coarse grid.
        h_over_kappa (float, optional): The Robin coefficient.
        t_out (float, optional): The ambient temperature.
        t0 (float, optional): The initial temperature.
        resolution (int, optional): The reference refinement.

    Returns:
        tuple: The :class:`RobinProblem` and the field, one value per
        element.
    """
    mu, eta, length = hyper
    field = sample_field(SeCovariance(eta, length, mesh.midpoints), mu, seed)
    prob = RobinProblem(
        CoefficientField(field),
        mesh,
        grid,
        h_over_kappa=h_over_kappa,
        t_out=t_out,
        t0=t0,
        resolution=resolution,
    )

    return prob, field


def make_dataset_B(
    spec,
    seed,
    hyper=(0.0, 0.1, 5.0),
    mesh=None,
    grid=None,
    h_over_kappa=1.0,
    t_out=20.0,
    t0=100.0,
    resolution=MIN_REFERENCE_REFINEMENT,
):
    """Generate a dataset whose diffusion is a lognormal field draw.

    Args:
        spec (:class:`DatasetSpec`): The observation spec.
        seed (int): The seed of the field draw.
        hyper (tuple, optional): (mu, eta, length) of the field prior.
        mesh (:class:`parapost.models.mesh.SpatialMesh`, optional): The
            coarse mesh. Defaults to the sensor mesh.
        grid (:class:`parapost.models.mesh.TimeGrid`, optional): The
            coarse time grid. Defaults to N steps on [0, 1].
        h_over_kappa (float, optional): The Robin coefficient.
        t_out (float, optional): The ambient temperature.
        t0 (float, optional): The initial temperature.
        resolution (int, optional): The reference refinement.

    Returns:
        tuple: The :class:`parapost.models.observations.ObservationSet`
        and the field, one value per element.
    """
    mesh = SpatialMesh(spec.sensors) if mesh is None else mesh
    grid = TimeGrid(1.0, spec.N) if grid is None else grid
    prob, field = random_field_problem(
        hyper, seed, mesh, grid, h_over_kappa, t_out, t0, resolution
    )

    return make_dataset(prob, spec), field
