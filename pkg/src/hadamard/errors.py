"""Exception hierarchy shared by all modules.

The CLI maps these onto exit codes: schema problems exit with 2, domain and
numerical failures with 3, and non-unique projections (violation witnesses)
with 4.
"""


class HadamardError(Exception):
    """Base class for every error raised by the toolkit."""


class SchemaError(HadamardError):
    """A scene description is malformed or references an unknown catalog id."""


class ChartDomainError(HadamardError):
    """A point lies outside the chart domain of the metric model."""


class DimensionError(HadamardError):
    """An operation was called with an unsupported dimension."""


class DegenerateError(HadamardError):
    """Degenerate input such as a singular tangent plane or x == y."""


class IntegrationError(HadamardError):
    """Geodesic integration left the chart or the step size underflowed."""

    def __init__(self, message, exit_time=None):
        super().__init__(message)
        self.exit_time = exit_time


class ConvergenceError(HadamardError):
    """An iterative solver stopped before meeting its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class RangeError(HadamardError):
    """A requested distance exceeds the integration budget."""


class EmptySetError(HadamardError):
    """A closed set has no members inside the search region."""


class NonUniqueProjection(HadamardError):
    """The metric projection is multivalued at a point.

    This is the numerical signature of a weak convexity failure, so the
    exception carries the probe and every distinct minimizer found.
    """

    def __init__(self, point, minimizers, distance):
        super().__init__(
            f"projection of {list(point)} is not unique "
            f"({len(minimizers)} minimizers at distance {distance:.9g})")
        self.point = point
        self.minimizers = minimizers
        self.distance = distance
