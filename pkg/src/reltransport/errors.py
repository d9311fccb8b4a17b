"""Exception types raised by the transport-coefficient library."""


class TransportError(Exception):
    """Base class for all library errors."""


class DomainError(TransportError, ValueError):
    """An argument lies outside the domain where a quantity is defined."""


class NonConvergence(TransportError, RuntimeError):
    """A quadrature could not reach its tolerance within the subdivision budget."""


class SingularSystem(TransportError, ArithmeticError):
    """A determinant used as a denominator is (numerically) zero or has the wrong sign."""


class MissingTheta(TransportError, KeyError):
    """A moment table does not contain an entry required by an assembly."""


class RecurrenceMismatch(TransportError, ArithmeticError):
    """Recurrence-built and quadrature-built moments disagree beyond tolerance."""


class IdentityViolation(TransportError, ArithmeticError):
    """A scalar combination that must vanish identically does not."""
