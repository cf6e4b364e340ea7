"""Classes for observation sets, truth records, and their files."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import csv
import json
import numpy as np
from parapost.constants import CSV_SIGNIFICANT_DIGITS, TIME_COLUMN
from parapost.exceptions import DomainError
from .boundary import BoundarySeries
from .coefficients import InitialCondition
from .mesh import SpatialMesh, TimeGrid
from .resource import Model, ModelManager, frozen_array


def format_reading(value, digits=CSV_SIGNIFICANT_DIGITS):
    """Format a number as a positional decimal.

    Args:
        value (float): The number.
        digits (int, optional): Significant digits. Defaults to 10.

    Returns:
        str: The formatted number.
    """
    return np.format_float_positional(
        float(value), precision=digits, unique=False, fractional=False
    )


def quantize(values, digits=CSV_SIGNIFICANT_DIGITS):
    """Round values to the precision they are written to disk with.

    Args:
        values (array-like): The values.
        digits (int, optional): Significant digits. Defaults to 10.

    Returns:
        :class:`numpy.ndarray`: Values that survive a write and read
        unchanged.
    """
    values = np.asarray(values, dtype=float)
    flat = [float(format_reading(v, digits)) for v in values.ravel()]

    return np.array(flat).reshape(values.shape)


class ObservationSet(Model):
    """Noisy readings at every mesh node and observation time.

    Row j of Y holds the readings of sensor TC{j+1} (node x_j). The
    interior mask marks which interior readings are observed; boundary
    rows are always observed.

    Attributes:
        Y (:class:`numpy.ndarray`): The (I + 1) x N readings.
        sigma (float): The measurement noise standard deviation.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The sensor
            mesh.
        grid (:class:`parapost.models.mesh.TimeGrid`): The observation
            times.
        initial (:class:`parapost.models.coefficients.InitialCondition`):
            The known initial condition.
        mask (:class:`numpy.ndarray`): The (I - 1) x N boolean
            interior mask.
        manager (:class:`parapost.models.observations.ObservationSetManager`):
            The manager which spawned this observation set.
    """

    def __init__(
        self, Y, sigma, mesh, grid, initial, mask=None, manager=None
    ):
        """Initialize an observation set.

        Args:
            Y (array-like): The (I + 1) x N readings.
            sigma (float): The measurement noise standard deviation.
            mesh (:class:`parapost.models.mesh.SpatialMesh`): The sensor
                mesh.
            grid (:class:`parapost.models.mesh.TimeGrid`): The
                observation times.
            initial (:class:`parapost.models.coefficients.InitialCondition`):
                The known initial condition.
            mask (array-like, optional): The (I - 1) x N interior mask.
                Defaults to everything observed.
            manager (:class:`parapost.models.observations.ObservationSetManager`, optional):
                The manager which spawned this observation set.

        Raises:
            :class:`parapost.exceptions.DomainError`: sigma is not
                positive or the shapes do not match the mesh and grid.
        """
        # Call the parent constructor
        super(ObservationSet, self).__init__(manager)

        Y = np.asarray(Y, dtype=float)
        shape = (mesh.node_count, grid.step_count)

        if mask is None:
            mask = np.ones((mesh.node_count - 2, grid.step_count), dtype=bool)

        mask = np.asarray(mask, dtype=bool)

        try:
            assert np.isfinite(sigma) and sigma > 0
        except AssertionError:
            raise DomainError("sigma must be positive, got {}".format(sigma))

        try:
            assert Y.shape == shape
            assert mask.shape == (shape[0] - 2, shape[1])
            assert initial.g.shape == (mesh.node_count,)
        except AssertionError:
            raise DomainError(
                "Readings {}, mask {} and initial condition {} do not match "
                "the mesh and time grid {}".format(
                    Y.shape, mask.shape, initial.g.shape, shape
                )
            )

        self.Y = frozen_array(Y)
        self.sigma = float(sigma)
        self.mesh = mesh
        self.grid = grid
        self.initial = initial
        self.mask = frozen_array(mask, dtype=bool)

    @classmethod
    def from_parts(
        cls, interior, Y_L, Y_R, sigma, mesh, grid, initial, mask=None
    ):
        """Assemble an observation set from interior and boundary rows.

        Args:
            interior (array-like): The (I - 1) x N interior readings.
            Y_L (array-like): The left boundary readings.
            Y_R (array-like): The right boundary readings.
            sigma (float): The noise standard deviation.
            mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
            grid (:class:`parapost.models.mesh.TimeGrid`): The grid.
            initial (:class:`parapost.models.coefficients.InitialCondition`):
                The initial condition.
            mask (array-like, optional): The interior mask.

        Returns:
            :class:`ObservationSet`: The observation set.
        """
        Y = np.vstack([np.atleast_2d(Y_L), np.atleast_2d(interior), Y_R])

        return cls(Y, sigma, mesh, grid, initial, mask=mask)

    def __repr__(self):
        return "ObservationSet({!r}, {!r}, sigma={})".format(
            self.mesh, self.grid, self.sigma
        )

    def interior(self):
        """Return the (I - 1) x N interior readings."""
        return self.Y[1:-1]

    @property
    def Y_L(self):
        """:class:`numpy.ndarray`: The left boundary readings."""
        return self.Y[0]

    @property
    def Y_R(self):
        """:class:`numpy.ndarray`: The right boundary readings."""
        return self.Y[-1]

    @property
    def Y0(self):
        """:class:`numpy.ndarray`: The known interior initial state."""
        return self.initial.interior

    @property
    def labels(self):
        """list: The sensor labels TC1..TC{I+1}."""
        return self.mesh.labels

    @property
    def step_count(self):
        """int: The number of observation times N."""
        return self.grid.step_count

    @property
    def observed_count(self):
        """int: The number of observed readings, boundaries included."""
        return int(self.mask.sum()) + 2 * self.grid.step_count

    def observed_boundary_series(self):
        """Return the boundary readings as a boundary series."""
        return BoundarySeries(
            self.Y_L, self.Y_R, self.initial.left, self.initial.right
        )

    def with_sigma(self, sigma):
        """Return a copy with a different noise level."""
        return ObservationSet(
            self.Y, sigma, self.mesh, self.grid, self.initial, self.mask
        )

    def with_mask(self, mask):
        """Return a copy with a different interior mask."""
        return ObservationSet(
            self.Y, self.sigma, self.mesh, self.grid, self.initial, mask
        )

    def truncate(self, step_count):
        """Return the observations at t_1..t_n only.

        Args:
            step_count (int): The number n of times to keep.

        Returns:
            :class:`ObservationSet`: The truncated observations.

        Raises:
            :class:`parapost.exceptions.DomainError`: n is not in
                1..N.
        """
        if not 1 <= step_count <= self.grid.step_count:
            raise DomainError(
                "Cannot truncate {} steps to {}".format(
                    self.grid.step_count, step_count
                )
            )

        return ObservationSet(
            self.Y[:, :step_count],
            self.sigma,
            self.mesh,
            self.grid.truncated(step_count),
            self.initial,
            self.mask[:, :step_count],
        )

    def mirrored(self):
        """Return the observations of the reflected problem."""
        return ObservationSet(
            self.Y[::-1],
            self.sigma,
            self.mesh.mirrored(),
            self.grid,
            self.initial.mirrored(),
            self.mask[::-1],
        )


class ObservationSetManager(ModelManager):
    """Manager for observation CSV files.

    The file has a header ``t,TC1,...,TC{I+1}`` and one row per
    observation time. Sensors are taken to be equispaced on the domain.
    """

    model = ObservationSet

    def get(self, path, sigma, initial_value, x_left=0.0, x_right=1.0):
        """Read an observation set.

        Args:
            path (str): The CSV file.
            sigma (float): The noise standard deviation to attach.
            initial_value (float or array-like): The known initial
                condition, constant or nodal.
            x_left (float, optional): The left end of the domain.
            x_right (float, optional): The right end of the domain.

        Returns:
            :class:`ObservationSet`: The observations.
        """
        with open(self.resolve(path), newline="") as f:
            data = self.parse(f, path)

        mesh = SpatialMesh.uniform(data["Y"].shape[0] - 1, x_left, x_right)
        g = np.broadcast_to(
            np.asarray(initial_value, dtype=float), (mesh.node_count,)
        )

        data.update(
            sigma=sigma,
            mesh=mesh,
            initial=InitialCondition(g),
        )

        return self.data_to_model_instance(data)

    def parse(self, stream, path):
        """Parse observation CSV rows.

        Args:
            stream (file): The open CSV file.
            path (str): The path, for diagnostics.

        Returns:
            dict: The readings ``Y`` and time grid ``grid``.
        """
        reader = csv.reader(stream)
        rows = [row for row in reader if row]

        # Validate that the header is what we write
        self.validate_field(len(rows) >= 2, path, "line 1", "no data rows")
        header = rows[0]
        expected = [TIME_COLUMN] + [
            "TC{}".format(i + 1) for i in range(len(header) - 1)
        ]
        self.validate_field(
            header == expected and len(header) >= 4,
            path,
            "line 1",
            "expected header {}, got {}".format(
                ",".join(expected), ",".join(header)
            ),
        )

        values = []
        for line_number, row in enumerate(rows[1:], start=2):
            self.validate_field(
                len(row) == len(header),
                path,
                "line {}".format(line_number),
                "expected {} fields, got {}".format(len(header), len(row)),
            )

            try:
                parsed = [float(v) for v in row]
            except ValueError as error:
                parsed = None
                message = str(error)

            self.validate_field(
                parsed is not None and np.all(np.isfinite(parsed)),
                path,
                "line {}".format(line_number),
                "non-numeric reading"
                if parsed is not None
                else "non-numeric reading ({})".format(message),
            )
            values.append(parsed)

        table = np.array(values)
        times = table[:, 0]

        # Validate that times are t_n = n * dt
        step_count = times.size
        dt = times[-1] / step_count
        self.validate_field(
            dt > 0
            and np.allclose(
                times, dt * np.arange(1, step_count + 1), rtol=0, atol=1e-8
            ),
            path,
            "column t",
            "times must be t_n = n * dt for n = 1..N",
        )

        return {"Y": table[:, 1:].T, "grid": TimeGrid(times[-1], step_count)}

    def serialize(self, model, stream):
        """Write an observation set as CSV.

        Args:
            model (:class:`ObservationSet`): The observations.
            stream (file): The open file.
        """
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow([TIME_COLUMN] + model.labels)

        for n, t in enumerate(model.grid.times):
            writer.writerow(
                [format_reading(t)]
                + [format_reading(v) for v in model.Y[:, n]]
            )


class TruthRecord(Model):
    """The generating truth behind a synthetic dataset.

    Attributes:
        kind (str): "A" for constant theta, "B" for a random field.
        theta (list): The diffusion coefficient per element.
        boundary (:class:`parapost.models.boundary.BoundarySeries`):
            The noise-free boundary values at the observation times.
        seed (int): The seed the noise was drawn with.
        metadata (dict): Generator settings.
        manager (:class:`parapost.models.observations.TruthManager`):
            The manager which spawned this record.
    """

    def __init__(self, kind, theta, boundary, seed, metadata, manager=None):
        """Initialize a truth record."""
        # Call the parent constructor
        super(TruthRecord, self).__init__(manager)

        self.kind = kind
        self.theta = [float(v) for v in np.atleast_1d(theta)]
        self.boundary = boundary
        self.seed = seed
        self.metadata = metadata

    def to_dict(self):
        """Return the JSON document for this record."""
        return {
            "kind": self.kind,
            "theta": self.theta,
            "boundary": {
                "T_L": [float(v) for v in self.boundary.T_L],
                "T_R": [float(v) for v in self.boundary.T_R],
                "T_L0": self.boundary.T_L0,
                "T_R0": self.boundary.T_R0,
            },
            "seed": self.seed,
            "metadata": self.metadata,
        }


class TruthManager(ModelManager):
    """Manager for truth sidecar JSON files."""

    model = TruthRecord

    def parse(self, stream, path):
        """Parse a truth sidecar.

        Args:
            stream (file): The open JSON file.
            path (str): The path, for diagnostics.

        Returns:
            dict: Keyword arguments for :class:`TruthRecord`.
        """
        try:
            document = json.load(stream)
        except ValueError as error:
            document = None
            message = str(error)

        self.validate_field(
            isinstance(document, dict),
            path,
            "document",
            "not a JSON object"
            if document is not None
            else "invalid JSON ({})".format(message),
        )

        for key in ("kind", "theta", "boundary", "seed", "metadata"):
            self.validate_field(
                key in document, path, "field {}".format(key), "missing"
            )

        boundary = document["boundary"]
        for key in ("T_L", "T_R", "T_L0", "T_R0"):
            self.validate_field(
                key in boundary,
                path,
                "field boundary.{}".format(key),
                "missing",
            )

        return {
            "kind": document["kind"],
            "theta": document["theta"],
            "boundary": BoundarySeries(
                boundary["T_L"],
                boundary["T_R"],
                boundary["T_L0"],
                boundary["T_R0"],
            ),
            "seed": document["seed"],
            "metadata": document["metadata"],
        }

    def serialize(self, model, stream):
        """Write a truth record as JSON."""
        json.dump(model.to_dict(), stream, sort_keys=True, indent=2)
        stream.write("\n")
