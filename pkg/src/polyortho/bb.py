"""Bernstein-Bezier patches and power-form bivariate polynomials.

Multi-indices ``(i, j, k)`` with ``i + j + k = d`` are always enumerated in the
canonical order: descending ``i``, then descending ``j``; so ``(d, 0, 0)`` comes
first and ``(0, 0, d)`` last. Power-form coefficients use graded-lex order
``1, x, y, x^2, xy, y^2, x^3, ...``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import InvalidInput
from .geometry import barycentric

__all__ = [
    "ConditioningWarning",
    "dim",
    "multi_indices",
    "index_of",
    "BBPatch",
    "SplineVector",
    "PowerPoly2",
    "bernstein_values",
    "bb_eval",
    "degree_raise",
    "raise_matrix",
    "raise_spline",
    "bb_to_power",
    "bb_power_matrix",
    "power_to_bb",
    "power_eval",
    "power_arith",
    "monomial_exponents",
]


class ConditioningWarning(UserWarning):
    """Monomial-basis conversion at a degree where conditioning degrades."""


def dim(d: int) -> int:
    """Dimension ``(d+1)(d+2)/2`` of bivariate polynomials of degree <= d."""
    return (d + 1) * (d + 2) // 2


@lru_cache(maxsize=None)
def multi_indices(d: int) -> tuple:
    return tuple((i, j, d - i - j) for i in range(d, -1, -1) for j in range(d - i, -1, -1))


@lru_cache(maxsize=None)
def _index_map(d: int) -> dict:
    return {mi: n for n, mi in enumerate(multi_indices(d))}


def index_of(mi, d: int | None = None) -> int:
    if d is None:
        d = sum(mi)
    return _index_map(d)[tuple(mi)]


@lru_cache(maxsize=None)
def monomial_exponents(d: int) -> tuple:
    """Exponents ``(a, b)`` of ``x^a y^b`` in graded-lex order up to degree d."""
    return tuple((n - b, b) for n in range(d + 1) for b in range(n + 1))


def _mono_index(a: int, b: int) -> int:
    n = a + b
    return n * (n + 1) // 2 + b


@dataclass(frozen=True)
class BBPatch:
    tri: np.ndarray
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        tri = np.asarray(self.tri, dtype=float).reshape(3, 2)
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if self.degree < 0 or len(c) != dim(self.degree):
            raise InvalidInput(f"degree-{self.degree} patch needs {dim(max(self.degree, 0))} coefficients, got {len(c)}")
        e1, e2 = tri[1] - tri[0], tri[2] - tri[0]
        scale = max(float(np.max(np.abs(tri))), 1e-300)
        if abs(e1[0] * e2[1] - e1[1] * e2[0]) <= 1e-14 * scale * scale:
            raise InvalidInput("degenerate (zero-area) triangle")
        object.__setattr__(self, "tri", tri)
        object.__setattr__(self, "coeffs", c)


@dataclass(frozen=True)
class SplineVector:
    """Per-triangle BB coefficient blocks concatenated in triangle order."""

    triangulation: object
    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        n = self.triangulation.n_triangles
        if len(c) != n * dim(self.degree):
            raise InvalidInput(f"spline vector needs {n} blocks of {dim(self.degree)} coefficients")
        object.__setattr__(self, "coeffs", c)

    def block(self, t: int) -> np.ndarray:
        D = dim(self.degree)
        return self.coeffs[t * D:(t + 1) * D]

    def patch(self, t: int) -> BBPatch:
        return BBPatch(self.triangulation.triangle(t), self.degree, self.block(t))


@dataclass(frozen=True, eq=False)
class PowerPoly2:
    """Bivariate polynomial in the monomial basis (graded-lex coefficients)."""

    degree: int
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).ravel()
        if self.degree < 0:
            raise InvalidInput("negative degree")
        if len(c) < dim(self.degree):
            c = np.concatenate([c, np.zeros(dim(self.degree) - len(c))])
        if len(c) != dim(self.degree):
            raise InvalidInput(f"degree-{self.degree} polynomial needs {dim(self.degree)} coefficients, got {len(c)}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_terms(cls, terms: dict, degree: int | None = None) -> "PowerPoly2":
        """Build from ``{(a, b): coefficient}`` for monomials ``x^a y^b``."""
        if degree is None:
            degree = max((a + b for a, b in terms), default=0)
        c = np.zeros(dim(degree))
        for (a, b), v in terms.items():
            c[_mono_index(a, b)] += v
        return cls(degree, c)

    @classmethod
    def constant(cls, value: float) -> "PowerPoly2":
        return cls(0, [value])

    @classmethod
    def monomial(cls, a: int, b: int) -> "PowerPoly2":
        return cls.from_terms({(a, b): 1.0})

    def coeff(self, a: int, b: int) -> float:
        if a + b > self.degree:
            return 0.0
        return float(self.coeffs[_mono_index(a, b)])

    def terms(self) -> dict:
        return {e: float(v) for e, v in zip(monomial_exponents(self.degree), self.coeffs) if v != 0.0}

    def raised(self, degree: int) -> "PowerPoly2":
        if degree < self.degree:
            raise InvalidInput("cannot lower the storage degree")
        c = np.zeros(dim(degree))
        c[: len(self.coeffs)] = self.coeffs
        return PowerPoly2(degree, c)

    def homogeneous(self, n: int) -> np.ndarray:
        """Coefficients of the degree-n layer, ordered ``x^n, x^(n-1) y, ..., y^n``."""
        if n > self.degree:
            return np.zeros(n + 1)
        s = n * (n + 1) // 2
        return self.coeffs[s:s + n + 1].copy()

    def true_degree(self, tol: float = 0.0) -> int:
        nz = np.nonzero(np.abs(self.coeffs) > tol)[0]
        if len(nz) == 0:
            return 0
        idx = int(nz[-1])
        return monomial_exponents(self.degree)[idx][0] + monomial_exponents(self.degree)[idx][1]

    def trimmed(self, tol: float = 0.0) -> "PowerPoly2":
        d = self.true_degree(tol)
        return PowerPoly2(d, self.coeffs[: dim(d)])

    def derivative(self, var: str) -> "PowerPoly2":
        out = {}
        for (a, b), v in zip(monomial_exponents(self.degree), self.coeffs):
            if var == "x" and a > 0:
                out[(a - 1, b)] = out.get((a - 1, b), 0.0) + a * v
            elif var == "y" and b > 0:
                out[(a, b - 1)] = out.get((a, b - 1), 0.0) + b * v
        return PowerPoly2.from_terms(out, max(self.degree - 1, 0))

    def __eq__(self, other):
        if not isinstance(other, PowerPoly2):
            return NotImplemented
        return self.degree == other.degree and np.array_equal(self.coeffs, other.coeffs)

    __hash__ = None

    def __call__(self, x, y=None):
        if y is None:
            return power_eval(self, x)
        q = np.stack(np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float)), axis=-1)
        return power_eval(self, q)

    def __add__(self, other):
        return power_arith(self, _coerce(other), "add")

    __radd__ = __add__

    def __neg__(self):
        return power_arith(self, -1.0, "scale")

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, PowerPoly2):
            return power_arith(self, other, "mul")
        return power_arith(self, float(other), "scale")

    __rmul__ = __mul__

    def to_dict(self) -> dict:
        return {"degree": self.degree, "coeffs": self.coeffs.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "PowerPoly2":
        return cls(int(data["degree"]), data["coeffs"])


def _coerce(v) -> PowerPoly2:
    if isinstance(v, PowerPoly2):
        return v
    return PowerPoly2.constant(float(v))


def power_eval(p: PowerPoly2, q) -> np.ndarray | float:
    """Evaluate at point(s) ``q``: nested Horner in x per power of y, then in y."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    x, y = q[:, 0], q[:, 1]
    d = p.degree
    acc = np.zeros(len(q))
    for b in range(d, -1, -1):
        # inner Horner over x^a for a = d-b .. 0 at fixed y-power b
        inner = np.zeros(len(q))
        for a in range(d - b, -1, -1):
            inner = inner * x + p.coeffs[_mono_index(a, b)]
        acc = acc * y + inner
    return float(acc[0]) if single else acc


def power_arith(a: PowerPoly2, b, op: str) -> PowerPoly2:
    """``add`` (coefficient-wise), ``scale`` (b is a scalar) or ``mul`` (product)."""
    if op == "add":
        d = max(a.degree, b.degree)
        return PowerPoly2(d, a.raised(d).coeffs + b.raised(d).coeffs)
    if op == "scale":
        return PowerPoly2(a.degree, a.coeffs * float(b))
    if op == "mul":
        d = a.degree + b.degree
        out = np.zeros(dim(d))
        ea, eb = monomial_exponents(a.degree), monomial_exponents(b.degree)
        for (i1, j1), c1 in zip(ea, a.coeffs):
            if c1 == 0.0:
                continue
            for (i2, j2), c2 in zip(eb, b.coeffs):
                if c2 != 0.0:
                    out[_mono_index(i1 + i2, j1 + j2)] += c1 * c2
        return PowerPoly2(d, out)
    raise InvalidInput(f"unknown operation {op!r}")


def bernstein_values(d: int, bary: np.ndarray) -> np.ndarray:
    """Matrix of all degree-d Bernstein polynomials at the given barycentric rows."""
    b = np.atleast_2d(np.asarray(bary, dtype=float))
    out = np.empty((len(b), dim(d)))
    for n, (i, j, k) in enumerate(multi_indices(d)):
        coef = math.factorial(d) / (math.factorial(i) * math.factorial(j) * math.factorial(k))
        out[:, n] = coef * b[:, 0] ** i * b[:, 1] ** j * b[:, 2] ** k
    return out


def bb_eval(p: BBPatch, q) -> np.ndarray | float:
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    vals = bernstein_values(p.degree, barycentric(p.tri, np.atleast_2d(q))) @ p.coeffs
    return float(vals[0]) if single else vals


@lru_cache(maxsize=None)
def raise_matrix(d: int) -> np.ndarray:
    """Matrix E with ``E @ c`` the degree-(d+1) coefficients of degree-d ``c``."""
    E = np.zeros((dim(d + 1), dim(d)))
    for row, (i, j, k) in enumerate(multi_indices(d + 1)):
        for src, w in (((i - 1, j, k), i), ((i, j - 1, k), j), ((i, j, k - 1), k)):
            if w:
                E[row, index_of(src, d)] += w / (d + 1)
    E.setflags(write=False)
    return E


def degree_raise(p: BBPatch) -> BBPatch:
    return BBPatch(p.tri, p.degree + 1, raise_matrix(p.degree) @ p.coeffs)


def raise_spline(s: SplineVector) -> SplineVector:
    N = s.triangulation.n_triangles
    blocks = s.coeffs.reshape(N, dim(s.degree))
    raised = blocks @ raise_matrix(s.degree).T
    return SplineVector(s.triangulation, s.degree + 1, raised.ravel())


def _barycentric_affine(tri: np.ndarray) -> np.ndarray:
    """Rows give b_i = r[i,0] + r[i,1] x + r[i,2] y."""
    (x1, y1), (x2, y2), (x3, y3) = tri
    det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    if det == 0:
        raise InvalidInput("degenerate (zero-area) triangle")
    return np.array([
        [x2 * y3 - x3 * y2, y2 - y3, x3 - x2],
        [x3 * y1 - x1 * y3, y3 - y1, x1 - x3],
        [x1 * y2 - x2 * y1, y1 - y2, x2 - x1],
    ]) / det


def _power_list(base: PowerPoly2, n: int) -> list:
    out = [PowerPoly2.constant(1.0)]
    for _ in range(n):
        out.append(out[-1] * base)
    return out


def bb_power_matrix(tri, d: int) -> np.ndarray:
    """Column n holds the power-form coefficients of the n-th Bernstein polynomial."""
    if d > 10:
        warnings.warn(f"power-form conversion at degree {d} is poorly conditioned", ConditioningWarning, stacklevel=2)
    r = _barycentric_affine(np.asarray(tri, dtype=float))
    pw = [_power_list(PowerPoly2(1, r[i]), d) for i in range(3)]
    T = np.zeros((dim(d), dim(d)))
    for n, (i, j, k) in enumerate(multi_indices(d)):
        coef = math.factorial(d) / (math.factorial(i) * math.factorial(j) * math.factorial(k))
        T[:, n] = coef * (pw[0][i] * pw[1][j] * pw[2][k]).raised(d).coeffs
    return T


def bb_to_power(p: BBPatch) -> PowerPoly2:
    """Expand the barycentric form into monomials (compensated summation)."""
    T = bb_power_matrix(p.tri, p.degree)
    coeffs = [math.fsum(T[r] * p.coeffs) for r in range(T.shape[0])]
    return PowerPoly2(p.degree, coeffs)


def _multinomial_power(lin: list, n: int) -> dict:
    """(sum_i lin[i] * b_i)^n as ``{(e1, e2, e3): coefficient}``."""
    out = {}
    for (e1, e2, e3) in multi_indices(n):
        coef = math.factorial(n) / (math.factorial(e1) * math.factorial(e2) * math.factorial(e3))
        v = coef * lin[0] ** e1 * lin[1] ** e2 * lin[2] ** e3
        if v != 0.0:
            out[(e1, e2, e3)] = v
    return out


def _mul_forms(f: dict, g: dict) -> dict:
    out = {}
    for a, u in f.items():
        for b, v in g.items():
            key = (a[0] + b[0], a[1] + b[1], a[2] + b[2])
            out[key] = out.get(key, 0.0) + u * v
    return out


def power_to_bb(p: PowerPoly2, tri, degree: int | None = None) -> BBPatch:
    """Exact conversion by homogenization: x, y, 1 become linear forms in b1, b2, b3.

    ``degree`` (>= ``p.degree``) selects the BB degree of the result.
    """
    tri = np.asarray(tri, dtype=float)
    d = p.degree if degree is None else degree
    if d < p.degree:
        raise InvalidInput("target BB degree below polynomial degree")
    xs, ys = tri[:, 0].tolist(), tri[:, 1].tolist()
    ones = [1.0, 1.0, 1.0]
    xpow = [_multinomial_power(xs, n) for n in range(d + 1)]
    ypow = [_multinomial_power(ys, n) for n in range(d + 1)]
    opow = [_multinomial_power(ones, n) for n in range(d + 1)]
    acc = {}
    for (a, b), c in zip(monomial_exponents(p.degree), p.coeffs):
        if c == 0.0:
            continue
        form = _mul_forms(_mul_forms(xpow[a], ypow[b]), opow[d - a - b])
        for key, v in form.items():
            acc.setdefault(key, []).append(c * v)
    coeffs = np.zeros(dim(d))
    for n, (i, j, k) in enumerate(multi_indices(d)):
        if (i, j, k) in acc:
            binom = math.factorial(d) / (math.factorial(i) * math.factorial(j) * math.factorial(k))
            coeffs[n] = math.fsum(acc[(i, j, k)]) / binom
    return BBPatch(tri, d, coeffs)


def polys_to_spline_matrix(polys: Iterable[PowerPoly2], triangulation, degree: int) -> np.ndarray:
    """Stack power polynomials as spline coefficient columns at a common degree."""
    cols = []
    for p in polys:
        blocks = [power_to_bb(p, triangulation.triangle(t), degree).coeffs for t in range(triangulation.n_triangles)]
        cols.append(np.concatenate(blocks))
    return np.stack(cols, axis=1) if cols else np.zeros((triangulation.n_triangles * dim(degree), 0))
