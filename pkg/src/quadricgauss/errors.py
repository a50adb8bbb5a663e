"""Exception hierarchy shared by all modules."""


class GeometryError(ValueError):
    """Base class for every domain error raised by the package."""


class NotAnImmersionError(GeometryError):
    pass


class DegenerateMetricError(NotAnImmersionError):
    """Metric handed to the eigensolver is not positive definite."""


class InvalidChartPointError(GeometryError):
    pass


class NotOnStiefelError(GeometryError):
    pass


class BaseMismatchError(GeometryError):
    pass


class FrameNotAdaptedError(GeometryError):
    """The supplied frame does not diagonalize the almost product structure."""


class UndefinedCotError(GeometryError):
    pass


class InvariantUndefinedError(GeometryError):
    pass


class NotLagrangianError(GeometryError):
    """Loop integrals of the connection form do not vanish."""


class DegenerateParameterError(GeometryError):
    """The requested parallel parameter makes the real part of the lift singular."""


class StepUnderflowError(GeometryError):
    pass


class InvalidParameterError(GeometryError):
    pass
