"""Orthonormal polynomials over polygons via exact Bernstein-Bezier integration,
and quadrature rules derived from them."""

__version__ = "0.1.0"

from .errors import (
    InfeasibleRule,
    InvalidFamily,
    InvalidInput,
    NoCommonZero,
    NonUnisolvent,
    NoRule,
    NumericalFailure,
    PolyOrthoError,
    UnsupportedTopology,
)

__all__ = [
    "__version__",
    "PolyOrthoError",
    "InvalidInput",
    "UnsupportedTopology",
    "NumericalFailure",
    "NonUnisolvent",
    "InvalidFamily",
    "InfeasibleRule",
    "NoRule",
    "NoCommonZero",
]
