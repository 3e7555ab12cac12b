"""Exception hierarchy shared by all pinnbands modules."""


class PinnbandsError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(PinnbandsError):
    """Invalid user-facing configuration: bad layer sizes, unknown problem id,
    non-covering partitions, unsupported method/problem combinations."""


class ShapeError(PinnbandsError):
    """Array dimensions inconsistent with the network or grid they are used with."""


class UnsupportedOrderError(PinnbandsError):
    """Derivative tracking requested beyond second order / two coordinates."""


class TapeMismatchError(PinnbandsError):
    """A backward pass received a tape recorded with different parameters."""


class TrainingDivergedError(PinnbandsError):
    """Loss or gradients became non-finite during optimization."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch


class DomainError(PinnbandsError):
    """Evaluation point outside the domain an object was built for."""


class ConditioningError(PinnbandsError):
    """A symmetric positive definite solve failed numerically."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}
