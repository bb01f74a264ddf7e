"""Exception hierarchy shared by every module of the package."""


class InvflowError(Exception):
    """Base class for all errors raised by invflow."""


class ValidationError(InvflowError, ValueError):
    """Malformed input: bad shapes, out-of-range indices, unreadable files."""


class NonManifold(ValidationError):
    pass


class Disconnected(ValidationError):
    pass


class DegenerateFace(ValidationError):
    pass


class EmptyOrFullSubset(ValidationError):
    pass


class NonPositiveRadius(ValidationError):
    pass


class NonPositiveLength(ValidationError):
    pass


class NotInOmega(InvflowError):
    """The radius vector violates a strict triangle inequality on some face."""


class QuadratureFailure(InvflowError):
    pass


class StepFailure(InvflowError):
    pass


class NonFiniteState(InvflowError):
    pass


class VelocityBoundViolation(InvflowError):
    """The flow field exceeded its a-priori bound; this signals a bug."""


class LineSearchFailure(InvflowError):
    pass


class MaxIterations(InvflowError):
    pass


class InsufficientTail(InvflowError):
    pass


class SubsetBudgetExceeded(InvflowError):
    pass
