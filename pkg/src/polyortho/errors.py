"""Exception hierarchy. The CLI maps these onto exit codes."""


class PolyOrthoError(Exception):
    """Base class for all package errors."""


class InvalidInput(PolyOrthoError, ValueError):
    """Malformed or degenerate input (exit code 2)."""


class UnsupportedTopology(InvalidInput):
    """Polygon topology the built-in triangulator does not handle (holes)."""


class InvalidFamily(InvalidInput):
    """A reduction family whose leading forms are rank deficient."""


class NumericalFailure(PolyOrthoError, ArithmeticError):
    """A numerical kernel could not meet its contract (exit code 3)."""


class NonUnisolvent(NumericalFailure):
    """Interpolation or collocation system is numerically singular."""


class InfeasibleRule(NumericalFailure):
    """The requested node set cannot support the requested exactness."""


class NoRule(NumericalFailure):
    """No rule of the requested kind exists on this domain."""


class NoCommonZero(NumericalFailure):
    """A strict computation required a common zero that is not available."""
