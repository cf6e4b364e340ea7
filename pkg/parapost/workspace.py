"""Contains the workspace that reads and writes run artifacts."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import csv
import json
import logging
import os
import numbers
from parapost.constants import RESOLVED_CONFIG_FILENAME
from parapost.exceptions import DataFormatError
from parapost.models.observations import (
    ObservationSetManager,
    TruthManager,
    format_reading,
)

logger = logging.getLogger(__name__)

# Keys every JSON report must carry
REPORT_SCHEMAS = {
    "fit-report": (
        "mode",
        "theta_hat",
        "laplace_mean",
        "laplace_sd",
        "log_evidence",
        "grid_mean",
        "grid_sd",
        "tv_distance",
        "theta_ref",
        "physical_mean",
        "physical_sd",
        "sigma",
        "seed",
    ),
    "predictive-summary": (
        "history_time",
        "steps_ahead",
        "samples",
        "seed",
        "sensors",
    ),
    "field-laplace": (
        "map",
        "mean",
        "covariance",
        "local_maxima",
        "invalid_fraction",
        "length_samples",
        "z_samples",
        "seed",
    ),
}


class Workspace(object):
    """A directory holding the inputs and outputs of a run.

    Example:

        >>> from parapost.workspace import Workspace
        >>> workspace = Workspace("runs/dataset-a")
        >>> obs = workspace.observations.get(
        ...     "observations.csv", sigma=0.56, initial_value=100.0)

    Attributes:
        out_dir (str): The directory relative paths resolve against.
        observations (:class:`parapost.models.observations.ObservationSetManager`):
            A manager for observation CSV files.
        truths (:class:`parapost.models.observations.TruthManager`):
            A manager for truth sidecar files.
    """

    def __init__(self, out_dir, create=True):
        """Initialize the workspace.

        Args:
            out_dir (str): The output directory.
            create (bool, optional): Create the directory if it does not
                exist. Defaults to True.
        """
        self.out_dir = out_dir

        if create and not os.path.isdir(out_dir):
            os.makedirs(out_dir)

        # Add in model managers
        self.observations = ObservationSetManager(_workspace=self)
        self.truths = TruthManager(_workspace=self)

    def resolve(self, path):
        """Return a path joined to the workspace unless it is absolute."""
        if os.path.isabs(path):
            return path

        return os.path.join(self.out_dir, path)

    @staticmethod
    def validate_report(schema, document):
        """Check a report against its schema.

        Raises:
            :class:`parapost.exceptions.DataFormatError`: Keys are
                missing or unexpected.
        """
        expected = set(REPORT_SCHEMAS[schema])
        found = set(document)

        try:
            assert expected == found
        except AssertionError:
            raise DataFormatError(
                "Report {} does not match its schema:\n"
                "missing: {}\nunexpected: {}".format(
                    schema,
                    sorted(expected - found),
                    sorted(found - expected),
                )
            )

    def write_report(self, name, document, schema=None):
        """Write a JSON document with sorted keys.

        Args:
            name (str): The file name.
            document (dict): The document.
            schema (str, optional): A key of :data:`REPORT_SCHEMAS` to
                check the document against.

        Returns:
            str: The path written.
        """
        if schema is not None:
            self.validate_report(schema, document)

        path = self.resolve(name)
        with open(path, "w") as f:
            json.dump(document, f, sort_keys=True, indent=2)
            f.write("\n")

        logger.info("Wrote %s", path)

        return path

    def write_table(self, name, header, rows):
        """Write a CSV table; floats get 10 significant digits.

        Args:
            name (str): The file name.
            header (list): The column names.
            rows (iterable): Rows of the same length as the header.

        Returns:
            str: The path written.
        """
        path = self.resolve(name)

        with open(path, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)

            for row in rows:
                writer.writerow([_format_cell(v) for v in row])

        logger.info("Wrote %s", path)

        return path

    def write_config(self, config):
        """Echo a resolved configuration next to the outputs."""
        return self.write_report(RESOLVED_CONFIG_FILENAME, config.to_dict())


def _format_cell(value):
    if isinstance(value, numbers.Real) and not isinstance(value, (bool, int)):
        return format_reading(value)

    return value
