"""Exception types raised across the package."""


class TierbidError(Exception):
    """Base class for all package errors."""


class DimensionError(TierbidError, ValueError):
    """Decision arrays do not line up with the file population."""


class InvalidInputError(TierbidError, ValueError):
    """A value violates a documented domain invariant."""


class InstabilityError(TierbidError, ArithmeticError):
    """Offered load on a tier reaches its service rate; the queue diverges."""


class UndefinedMomentsError(TierbidError, ArithmeticError):
    """Service-time moments requested for a tier that receives no traffic."""


class InfeasibleInstanceError(TierbidError):
    """The solver could not produce a decision satisfying the original constraints."""


class InstanceTooLargeError(TierbidError):
    """Brute-force enumeration refused because the instance exceeds the cost guard."""
