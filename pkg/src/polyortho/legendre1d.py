"""Monic Legendre polynomials on [-1, 1], reduction by odd/even families, and
the quadratures that follow from them.

Odd-mode reduction writes ``p = sum_j q_j P_{2j-1} + R`` with linear ``q_j``
and a constant ``R``; since every ``P_{2j-1}`` is odd and orthogonal to the
constants, ``int p = 2 R + sum_j int q_j P_{2j-1}`` and only the ``x`` part of
``q_1`` survives (``int x P_1 = 2/3``). Even-mode reduction writes
``p = sum_k c_k P_{2k} + l`` with linear ``c_k`` and ``l``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .errors import InvalidInput, NonUnisolvent, NumericalFailure
from .numkernels import solve_linear

__all__ = [
    "legendre_monic",
    "LegendreReduction",
    "reduce_legendre",
    "OnePointResult",
    "one_point_integral",
    "even_quadrature",
    "even_quadrature_weights",
    "even_odd_split",
    "integrate_poly1",
    "apply_even_rule",
]


@lru_cache(maxsize=None)
def _monic_coeffs(n: int) -> tuple:
    if n < 0:
        raise InvalidInput("Legendre degree must be >= 0")
    prev, cur = np.zeros(1), np.array([1.0])
    for k in range(n):
        nxt = np.zeros(k + 2)
        nxt[1:] = cur  # x * P_k
        if k >= 1:
            nxt[: k] -= k * k / (4.0 * k * k - 1.0) * prev
        prev, cur = cur, nxt
    return tuple(cur)


def legendre_monic(n: int) -> Polynomial:
    """Monic Legendre polynomial ``P_n`` (leading coefficient 1).

    Uses ``P_{k+1} = x P_k - k^2 / (4 k^2 - 1) P_{k-1}``.
    """
    return Polynomial(np.array(_monic_coeffs(n)))


def integrate_poly1(p: Polynomial) -> float:
    """Exact integral over [-1, 1]."""
    q = p.integ()
    return float(q(1.0) - q(-1.0))


def _coef(p: Polynomial, n: int) -> float:
    c = p.coef
    return float(c[n]) if n < len(c) else 0.0


@dataclass(frozen=True)
class LegendreReduction:
    """``p = sum_j quotients[j] * families[j] + residual``.

    ``degrees[j]`` is the Legendre degree multiplied by ``quotients[j]``.
    """

    parity: str
    degrees: tuple
    quotients: tuple
    residual: Polynomial

    def reconstruct(self) -> Polynomial:
        out = Polynomial([0.0]) + self.residual
        for n, q in zip(self.degrees, self.quotients):
            out = out + q * legendre_monic(n)
        return out

    def quotient(self, degree: int) -> Polynomial:
        for n, q in zip(self.degrees, self.quotients):
            if n == degree:
                return q
        return Polynomial([0.0])


def reduce_legendre(p, parity: str) -> LegendreReduction:
    """Leading-coefficient elimination against odd or even monic Legendre polynomials.

    Each step removes the two top coefficients ``x^{2j}``, ``x^{2j-1}`` (odd
    mode, family member ``P_{2j-1}`` with quotient ``a x + b``) or ``x^{2k+1}``,
    ``x^{2k}`` (even mode, member ``P_{2k}``).
    """
    if parity not in ("odd", "even"):
        raise InvalidInput("parity must be 'odd' or 'even'")
    rem = Polynomial(np.asarray(p.coef if isinstance(p, Polynomial) else p, dtype=float))
    deg = len(rem.coef) - 1
    degrees, quotients = [], []
    if parity == "odd":
        # top member used: the odd n with n + 1 >= deg
        top = deg if deg % 2 == 1 else deg - 1
        for n in range(top, 0, -2):
            a = _coef(rem, n + 1)
            b = _coef(rem, n)
            q = Polynomial([b, a])
            rem = rem - q * legendre_monic(n)
            degrees.append(n)
            quotients.append(q)
        residual = Polynomial([_coef(rem, 0)])
        leftover = rem - residual
    else:
        top = deg if deg % 2 == 0 else deg - 1
        for n in range(top, 1, -2):
            a = _coef(rem, n + 1)
            b = _coef(rem, n)
            q = Polynomial([b, a])
            rem = rem - q * legendre_monic(n)
            degrees.append(n)
            quotients.append(q)
        residual = Polynomial([_coef(rem, 0), _coef(rem, 1)])
        leftover = rem - residual
    scale = max(np.max(np.abs(np.atleast_1d(p.coef if isinstance(p, Polynomial) else p))), 1.0)
    if np.max(np.abs(leftover.coef)) > 1e-11 * scale:
        raise NumericalFailure("Legendre reduction left a non-negligible remainder")
    return LegendreReduction(parity, tuple(degrees), tuple(quotients), residual)


@dataclass(frozen=True)
class OnePointResult:
    """``value`` is the exact integral; ``applicable`` tells whether the bare
    ``2 p(0)`` rule already equals it (final level-1 quotient constant)."""

    value: float
    applicable: bool
    q1: float
    two_p0: float


def one_point_integral(p) -> OnePointResult:
    """Integral over [-1, 1] from the odd-mode reduction.

    When the quotient of ``P_1`` has no ``x`` part the integral is ``2 p(0)``;
    otherwise the correction ``2 q1 / 3`` (``q1`` the ``x`` coefficient of that
    quotient) is added.
    """
    poly = Polynomial(np.asarray(p.coef if isinstance(p, Polynomial) else p, dtype=float))
    red = reduce_legendre(poly, "odd")
    q1 = _coef(red.quotient(1), 1)
    two_p0 = 2.0 * float(poly(0.0))
    scale = max(float(np.max(np.abs(poly.coef))), 1e-300)
    applicable = abs(q1) <= 1e-12 * scale
    value = two_p0 if applicable else two_p0 + 2.0 * q1 / 3.0
    return OnePointResult(value, applicable, q1, two_p0)


def _even_system(nodes: np.ndarray) -> np.ndarray:
    """Row i: ``P_{2j-1}(x_i)`` for j = 1..d."""
    d = len(nodes)
    A = np.empty((d, d))
    for j in range(1, d + 1):
        A[:, j - 1] = legendre_monic(2 * j - 1)(nodes)
    return A


def _check_nodes(nodes) -> np.ndarray:
    x = np.asarray(nodes, dtype=float).ravel()
    if len(x) == 0:
        raise InvalidInput("at least one node is required")
    if np.any(x <= 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
        raise InvalidInput("nodes must lie in (0, 1]")
    if len(np.unique(x)) != len(x):
        raise NonUnisolvent("nodes must be distinct")
    return x


def even_quadrature_weights(nodes) -> tuple:
    """Weights ``(w0, w)`` with ``int f = w0 f(0) + sum_i w_i f(x_i)`` for even f of degree <= 2d.

    ``(f(x_i) - f(0)) / x_i = sum_j q_j P_{2j-1}(x_i)`` determines
    ``q_1``, and ``int f = 2 q_1 / 3 + 2 f(0)``. So ``w_i = (2/3) (A^{-1})_{0i} / x_i``
    and ``w0 = 2 - sum_i w_i``.
    """
    x = _check_nodes(nodes)
    A = _even_system(x)
    e0 = np.zeros(len(x))
    e0[0] = 1.0
    row = solve_linear(A.T, e0)  # first row of A^{-1}
    w = (2.0 / 3.0) * row / x
    w0 = 2.0 - float(np.sum(w))
    return w0, w


def even_quadrature(nodes, fvals, f0: float) -> float:
    """Integral over [-1, 1] of an even function from its values at ``nodes`` and 0."""
    x = _check_nodes(nodes)
    fv = np.asarray(fvals, dtype=float).ravel()
    if fv.shape != x.shape:
        raise InvalidInput("need one function value per node")
    A = _even_system(x)
    q = solve_linear(A, (fv - f0) / x)
    return 2.0 * q[0] / 3.0 + 2.0 * f0


def even_odd_split(f: Callable) -> tuple:
    """``(f_e, f_o)`` with ``f_e(x) = (f(x) + f(-x)) / 2`` and ``f_o`` the odd part."""

    def f_even(x):
        return 0.5 * (f(x) + f(-np.asarray(x)))

    def f_odd(x):
        return 0.5 * (f(x) - f(-np.asarray(x)))

    return f_even, f_odd


def apply_even_rule(f: Callable, nodes: Sequence[float]) -> float:
    """Apply the even rule to the even part of ``f`` (the odd part integrates to zero)."""
    fe, _ = even_odd_split(f)
    w0, w = even_quadrature_weights(nodes)
    x = np.asarray(nodes, dtype=float)
    return float(w0 * fe(0.0) + np.dot(w, fe(x)))
