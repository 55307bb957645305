"""Exception types shared across the package."""


class HerglotzError(Exception):
    """Base class for numerical and domain failures raised by herglotz."""


class OutOfDomain(HerglotzError, ValueError):
    """Argument outside the domain of the operation."""


class OutOfRange(HerglotzError, ValueError):
    """Value outside the attainable range of a map."""


class JumpTangency(HerglotzError, ValueError):
    """Turning parameter inside a jump gap: the ray would be tangent to a jump surface."""


class HerglotzViolation(HerglotzError, ValueError):
    """The wave speed fails the Herglotz or jump condition."""


class QuadratureFailure(HerglotzError, ArithmeticError):
    """Adaptive quadrature did not reach its tolerance within budget."""


class ContractionFailure(HerglotzError, ArithmeticError):
    """No admissible layer width makes the Neumann iteration contract."""


class NotConverged(HerglotzError, ArithmeticError):
    """An iteration exhausted its budget."""


class DomainMismatch(HerglotzError, ValueError):
    """Inputs live on incompatible grids or domains."""


class DivisionByZero(HerglotzError, ZeroDivisionError):
    """A factor that is divided out gets too close to zero."""


class StepTooLarge(HerglotzError, ArithmeticError):
    """ODE step too coarse: conserved quantities drifted beyond tolerance."""


class NotPeriodic(HerglotzError, ValueError):
    """The geodesic through the given tip does not close up."""


class IllConditioned(HerglotzError, ArithmeticError):
    """A diagonal factor is too small to divide by."""


class ProjectionResidual(HerglotzError, ArithmeticError):
    """Re-projection onto a finite basis left too much energy outside it."""


class AliasRisk(UserWarning):
    """Energy near the truncation mode suggests aliasing."""
