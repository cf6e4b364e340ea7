"""Contains exceptions used throughout the program."""


class ParapostError(Exception):
    """Base class for all parapost errors."""

    pass


class ConfigError(ParapostError):
    """A run configuration is malformed or inconsistent."""

    pass


class BadEnvironmentError(ConfigError):
    """The user has an improperly configured environment."""

    pass


class DataFormatError(ParapostError):
    """An observation or truth file could not be parsed."""

    pass


class DomainError(ParapostError, ValueError):
    """An argument lies outside the domain of a density or model."""

    pass


class SetupError(ParapostError):
    """An experimental setup selects nothing or names unknown sensors."""

    pass


class QueryError(ParapostError):
    """A predictive query is empty or exceeds the time grid."""

    pass


class AlignmentError(ParapostError):
    """Sensors or observation times do not lie on the reference grid."""

    pass


class SampleCountError(ParapostError):
    """Too few Monte Carlo samples were requested."""

    pass


class NumericalError(ParapostError):
    """A numerical procedure failed."""

    pass


class AssemblyError(NumericalError):
    """The coefficients are not admissible for assembly."""

    pass


class SolveError(NumericalError):
    """A linear system was singular."""

    pass


class BracketError(NumericalError):
    """No interior maximum was found in the search bracket.

    Attributes:
        grid (:class:`numpy.ndarray`): The scanned points.
        values (:class:`numpy.ndarray`): The function values at the
            scanned points.
    """

    def __init__(self, message, grid=None, values=None):
        """Initialize the error.

        Args:
            message (str): The error message.
            grid (:class:`numpy.ndarray`, optional): The scanned points.
            values (:class:`numpy.ndarray`, optional): The function
                values at the scanned points.
        """
        super(BracketError, self).__init__(message)

        self.grid = grid
        self.values = values


class CurvatureError(NumericalError):
    """The log density is not concave at the mode."""

    pass


class GridError(NumericalError):
    """A grid does not contain the bulk of a density."""

    pass


class QuadratureError(NumericalError):
    """A quadrature integrand was not finite."""

    pass


class CovarianceError(NumericalError):
    """A covariance matrix could not be factorized."""

    pass


class ReferenceSolveError(NumericalError):
    """The reference solver could not be set up."""

    pass


class EigError(NumericalError):
    """Too many replications failed while estimating information gain."""

    pass
