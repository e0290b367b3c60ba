"""Exception types shared across the package.

The CLI maps these onto exit codes: invalid parameters or malformed
data exit 2, numerical failures exit 3. Flag-level problems are handled
by the argument parser itself and exit 1.
"""


class TumornetError(Exception):
    """Base class for all package errors."""


class DomainError(TumornetError, ValueError):
    """A value violates a documented precondition or invariant."""


class UsageError(TumornetError, ValueError):
    """An operation was invoked with an unusable parameter combination."""


class ScalingError(DomainError):
    """A feature falls outside its declared scaling bound."""


class FormatError(TumornetError, ValueError):
    """Malformed, truncated, or version-incompatible serialized data."""


class CoverageError(TumornetError, ValueError):
    """An evaluation grid fails the density mass-coverage requirement."""


class NumericalError(TumornetError, ArithmeticError):
    """A numerical procedure could not produce a result."""


class SingularityError(NumericalError):
    """A closed-form expression hit a zero denominator."""


class DivergenceError(NumericalError):
    """Training loss became non-finite."""
