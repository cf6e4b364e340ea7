"""Contains base classes for models and related classes."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import numpy as np
from parapost.exceptions import DataFormatError


def frozen_array(values, dtype=float):
    """Return a read-only copy of an array-like.

    Args:
        values (array-like): The values to copy.
        dtype (type, optional): The dtype of the copy. Defaults to
            float.

    Returns:
        :class:`numpy.ndarray`: A copy whose write flag is cleared.
    """
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)

    return array


class Model(object):
    """Base class for representing a model.

    Attributes:
        manager (:class:`parapost.models.resource.ModelManager`):
            The manager which spawned this model instance, or None for
            models built in memory.
    """

    def __init__(self, manager=None):
        """Initialize the model.

        Args:
            manager (:class:`parapost.models.resource.ModelManager`, optional):
                The manager which spawned this model instance.
        """
        self.manager = manager

    def put(self, path):
        """Write this model to a file through its manager.

        Args:
            path (str): The file to write.

        Returns:
            str: The path written.
        """
        return self.manager.put(self, path)


class ModelManager(object):
    """Base class for a model manager.

    Managers read and write models from files in a workspace.

    Attributes:
        _workspace (:class:`parapost.workspace.Workspace`): The
            workspace the manager belongs to.
        model (:class:`parapost.models.resource.Model`): The model
            being used.
    """

    model = Model

    def __init__(self, _workspace=None):
        """Save the workspace so the manager can resolve paths.

        Args:
            _workspace (:class:`parapost.workspace.Workspace`, optional):
                The workspace the manager belongs to.
        """
        self._workspace = _workspace

    def resolve(self, path):
        """Resolve a path relative to the workspace.

        Args:
            path (str): A file path.

        Returns:
            str: The path, joined to the workspace directory if it is
            relative and a workspace is attached.
        """
        if self._workspace is None:
            return path

        return self._workspace.resolve(path)

    def get(self, path):
        """Read a model instance from a file.

        Args:
            path (str): The file to read.

        Returns:
            :class:`parapost.models.resource.Model`:
                A :class:`parapost.models.resource.Model` subclass
                instance representing the file's contents.
        """
        with open(self.resolve(path)) as f:
            data = self.parse(f, path)

        return self.data_to_model_instance(data)

    def put(self, model, path):
        """Write a model instance to a file.

        Args:
            model (:class:`parapost.models.resource.Model`): The
                model to write.
            path (str): The file to write.

        Returns:
            str: The resolved path written.
        """
        resolved = self.resolve(path)

        with open(resolved, "w", newline="") as f:
            self.serialize(model, f)

        return resolved

    def parse(self, stream, path):
        """Parse raw data from an open file.

        Args:
            stream (file): The open file.
            path (str): The path, for diagnostics.

        Returns:
            dict: Keyword arguments for the model constructor.
        """
        raise NotImplementedError

    def serialize(self, model, stream):
        """Serialize a model to an open file.

        Args:
            model (:class:`parapost.models.resource.Model`): The
                model to write.
            stream (file): The open file.
        """
        raise NotImplementedError

    def data_to_model_instance(self, data):
        """Convert parsed file data to a model.

        Args:
            data (dict): The parsed data.

        Returns:
            :class:`parapost.models.resource.Model`:
                A :class:`parapost.models.resource.Model` subclass
                instance representing the parsed data.
        """
        # Add in this manager to the data
        data["manager"] = self

        # Instantiate a model
        return self.model(**data)

    @staticmethod
    def validate_field(condition, path, location, message):
        """Validates a condition on parsed file contents.

        Args:
            condition (bool): Whether the contents are valid.
            path (str): The file being parsed.
            location (str): Where in the file the problem is, for
                example "line 3" or "field theta".
            message (str): What is wrong.

        Raises:
            :class:`parapost.exceptions.DataFormatError`: The
                condition failed.
        """
        try:
            assert condition
        except AssertionError:
            msg = "Could not parse {path} at {location}:\n{message}".format(
                path=path, location=location, message=message
            )
            raise DataFormatError(msg)
