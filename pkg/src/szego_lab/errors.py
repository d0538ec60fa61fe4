"""Exception hierarchy shared by every module."""


class SzegoLabError(Exception):
    """Base class for library errors."""


class ParameterError(SzegoLabError, ValueError):
    """Invalid numeric parameter (resolution, exponent, radius, ...)."""


class ConfigurationError(SzegoLabError):
    """Inconsistent object configuration (grid mismatch, bad group action, unknown id)."""


class DomainError(SzegoLabError, ValueError):
    """Point or parameter outside the domain where an operation is defined."""


class PreconditionError(SzegoLabError, ValueError):
    """Input data violates an operation's precondition."""


class NumericalConsistencyError(SzegoLabError):
    """A numerical identity that must hold up to rounding was violated."""


class UnderResolvedError(SzegoLabError):
    """The discretization is too coarse for the requested quantity."""


class AdmissibilityError(SzegoLabError):
    """The weight fails the hypotheses needed to construct an admissible g."""


class NearSingularDivisionError(NumericalConsistencyError):
    """Division by a boundary function that (nearly) vanishes at some nodes."""

    def __init__(self, message, nodes):
        super().__init__(message)
        self.nodes = list(nodes)
