"""Exception hierarchy.

Domain errors (bad geometry, inconsistent measurement data) derive from
:class:`DomainError`; the CLI maps them to exit status 1.
"""


class SimplexNeumannError(Exception):
    """Base class for all package errors."""


class DomainError(SimplexNeumannError, ValueError):
    """Input is well-formed but mathematically inadmissible."""


class DegenerateSimplex(DomainError):
    pass


class IdenticallyZeroMode(DomainError):
    pass


class InvalidCoefficients(DomainError):
    pass


class NoSuchTriangle(DomainError):
    pass


class InconsistentData(DomainError):
    pass


class EpsilonTooLarge(DomainError):
    pass


class ResourceLimit(SimplexNeumannError):
    pass


class NumericalBreakdown(SimplexNeumannError, ArithmeticError):
    pass
