"""Classes for spatial meshes and time grids."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import numpy as np
from parapost.constants import SENSOR_PREFIX
from parapost.exceptions import DomainError
from .resource import frozen_array


class SpatialMesh(object):
    """A 1D mesh of nodes x_0 < x_1 < ... < x_I.

    Attributes:
        nodes (:class:`numpy.ndarray`): The I + 1 node positions.
        x_left (float): The left end of the domain.
        x_right (float): The right end of the domain.
        element_count (int): The number of elements I.
        node_count (int): The number of nodes I + 1.
        widths (:class:`numpy.ndarray`): The I element widths.
    """

    def __init__(self, nodes):
        """Initialize the mesh.

        Args:
            nodes (array-like): Strictly increasing node positions,
                at least three of them.

        Raises:
            :class:`parapost.exceptions.DomainError`: The nodes are
                not strictly increasing or there are too few.
        """
        nodes = np.asarray(nodes, dtype=float)

        # Validate that we have a proper mesh
        try:
            assert nodes.ndim == 1 and nodes.size >= 3
            assert np.all(np.isfinite(nodes))
            assert np.all(np.diff(nodes) > 0)
        except AssertionError:
            raise DomainError(
                "Mesh nodes must be a strictly increasing sequence of at "
                "least 3 finite positions"
            )

        self.nodes = frozen_array(nodes)
        self.x_left = float(nodes[0])
        self.x_right = float(nodes[-1])
        self.node_count = nodes.size
        self.element_count = nodes.size - 1
        self.widths = frozen_array(np.diff(nodes))

    @classmethod
    def uniform(cls, element_count, x_left=0.0, x_right=1.0):
        """Return a uniform mesh.

        Args:
            element_count (int): The number of elements I.
            x_left (float, optional): The left end. Defaults to 0.
            x_right (float, optional): The right end. Defaults to 1.

        Returns:
            :class:`SpatialMesh`: A mesh with I + 1 equispaced nodes.
        """
        return cls(np.linspace(x_left, x_right, int(element_count) + 1))

    def __eq__(self, other):
        return isinstance(other, SpatialMesh) and np.array_equal(
            self.nodes, other.nodes
        )

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "SpatialMesh(I={}, [{}, {}])".format(
            self.element_count, self.x_left, self.x_right
        )

    @property
    def length(self):
        """float: The length of the domain."""
        return self.x_right - self.x_left

    @property
    def is_uniform(self):
        """bool: Whether all elements have the same width."""
        return bool(
            np.allclose(self.widths, self.widths[0], rtol=1e-12, atol=0.0)
        )

    @property
    def dx(self):
        """float: The element width of a uniform mesh.

        Raises:
            :class:`parapost.exceptions.DomainError`: The mesh is not
                uniform.
        """
        if not self.is_uniform:
            raise DomainError("Mesh is not uniform")

        return self.length / self.element_count

    @property
    def interior_nodes(self):
        """:class:`numpy.ndarray`: The I - 1 interior node positions."""
        return self.nodes[1:-1]

    @property
    def midpoints(self):
        """:class:`numpy.ndarray`: The I element midpoints."""
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    @property
    def labels(self):
        """list: Sensor labels TC1..TC{I+1}, left to right."""
        return [
            "{}{}".format(SENSOR_PREFIX, i + 1) for i in range(self.node_count)
        ]

    @property
    def interior_labels(self):
        """list: Sensor labels of the interior nodes."""
        return self.labels[1:-1]

    def left_lift(self, x=None):
        """Evaluate the affine lift attached to the left boundary.

        Args:
            x (array-like, optional): Positions. Defaults to the nodes.

        Returns:
            :class:`numpy.ndarray`: (x_R - x) / (x_R - x_L).
        """
        x = self.nodes if x is None else np.asarray(x, dtype=float)
        return (self.x_right - x) / self.length

    def right_lift(self, x=None):
        """Evaluate the affine lift attached to the right boundary.

        Args:
            x (array-like, optional): Positions. Defaults to the nodes.

        Returns:
            :class:`numpy.ndarray`: (x - x_L) / (x_R - x_L).
        """
        x = self.nodes if x is None else np.asarray(x, dtype=float)
        return (x - self.x_left) / self.length

    def mirrored(self):
        """Return the mesh reflected about the domain midpoint."""
        return SpatialMesh(self.x_left + self.x_right - self.nodes[::-1])


class TimeGrid(object):
    """A uniform grid t_n = n * dt, n = 1..N, on (0, t_end].

    Attributes:
        t_end (float): The final time.
        step_count (int): The number of steps N.
        dt (float): The step size t_end / N.
        times (:class:`numpy.ndarray`): The observation times t_1..t_N.
    """

    def __init__(self, t_end, step_count):
        """Initialize the grid.

        Args:
            t_end (float): The final time, positive.
            step_count (int): The number of steps, at least 1.

        Raises:
            :class:`parapost.exceptions.DomainError`: Invalid
                arguments.
        """
        try:
            assert np.isfinite(t_end) and t_end > 0
            assert int(step_count) == step_count and step_count >= 1
        except AssertionError:
            raise DomainError(
                "Time grid needs t_end > 0 and step_count >= 1, got "
                "t_end={} and step_count={}".format(t_end, step_count)
            )

        self.t_end = float(t_end)
        self.step_count = int(step_count)
        self.dt = self.t_end / self.step_count
        self.times = frozen_array(
            self.dt * np.arange(1, self.step_count + 1)
        )

    def __eq__(self, other):
        return (
            isinstance(other, TimeGrid)
            and self.t_end == other.t_end
            and self.step_count == other.step_count
        )

    def __ne__(self, other):
        return not self == other

    def __repr__(self):
        return "TimeGrid(t_end={}, N={})".format(self.t_end, self.step_count)

    def truncated(self, step_count):
        """Return the grid covering only the first steps.

        Args:
            step_count (int): The number of steps to keep.

        Returns:
            :class:`TimeGrid`: A grid with the same dt.
        """
        return TimeGrid(self.dt * step_count, step_count)

    def index_of(self, time, tolerance=1e-9):
        """Return the step number n with t_n equal to a given time.

        Args:
            time (float): A time on the grid.
            tolerance (float, optional): Allowed relative mismatch in
                units of dt. Defaults to 1e-9.

        Returns:
            int: The step number n in 1..N.

        Raises:
            :class:`parapost.exceptions.DomainError`: The time is not
                on the grid.
        """
        n = int(round(time / self.dt))

        if not (1 <= n <= self.step_count) or abs(
            n * self.dt - time
        ) > tolerance * self.dt:
            raise DomainError(
                "Time {} is not on the grid {}".format(time, self)
            )

        return n
