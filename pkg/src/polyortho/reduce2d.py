"""Bivariate polynomial reduction against degree levels of orthogonal polynomials.

Reducing ``p`` by a family ``{P_j}`` of degree ``m`` whose leading forms span
the homogeneous degree-m polynomials removes one homogeneous layer at a time,
from ``deg p`` down to ``m``; what is left has degree ``< m``. Cascades repeat
this over the odd levels (ending at level 1 with a constant residual) or the
even levels (ending at level 2 with a linear residual). Because level ``l``
is orthogonal to every polynomial of degree ``< l``, only the level-1
quotients and the residual contribute to the integral.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import integrate_power
from .bb import PowerPoly2, dim
from .errors import InvalidFamily, InvalidInput, NoCommonZero
from .geometry import Domain

__all__ = [
    "ReductionResult",
    "MomentTable",
    "moments",
    "reduce_by_level",
    "cascade_reduce",
    "integrate_via_reduction",
    "ReductionIntegral",
]

_MONOS2 = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


@dataclass(frozen=True)
class ReductionResult:
    """``p = sum over levels of sum_j q_j P_{level, j} + residual``.

    Attributes
    ----------
    levels : tuple of (int, tuple of PowerPoly2, tuple of PowerPoly2)
        ``(level degree, quotients, family)`` from the highest level down.
    residual : PowerPoly2
    """

    levels: tuple
    residual: PowerPoly2
    meta: dict = field(default_factory=dict, compare=False)

    def reconstruct(self) -> PowerPoly2:
        acc = self.residual
        for _, quotients, family in self.levels:
            for q, P in zip(quotients, family):
                acc = acc + q * P
        return acc

    def reconstruction_error(self, p: PowerPoly2, n_points: int = 30, seed: int = 0, radius: float | None = None) -> float:
        """Max relative mismatch between ``p`` and the reconstruction at random points."""
        rng = np.random.default_rng(seed)
        r = radius if radius is not None else 1.0
        pts = rng.uniform(-r, r, size=(n_points, 2))
        a = p(pts)
        b = self.reconstruct()(pts)
        return float(np.max(np.abs(a - b)) / max(np.max(np.abs(a)), np.max(np.abs(p.coeffs)), 1e-300))

    def quotients_at(self, level: int) -> tuple:
        for lv, qs, _ in self.levels:
            if lv == level:
                return qs
        return ()

    @property
    def level1_linear(self) -> np.ndarray:
        """Rows ``(a_j, b_j, c_j)`` of the level-1 quotients ``a_j x + b_j y + c_j``."""
        qs = self.quotients_at(1)
        return np.array([[q.coeff(1, 0), q.coeff(0, 1), q.coeff(0, 0)] for q in qs]).reshape(-1, 3)

    def quotient_degrees(self) -> dict:
        return {lv: max((q.true_degree(1e-14 * max(1.0, float(np.max(np.abs(q.coeffs))))) for q in qs), default=0)
                for lv, qs, _ in self.levels}


@dataclass(frozen=True)
class MomentTable:
    """Domain moments used by the reduction formulas.

    ``quad`` holds the integrals of ``1, x, y, x^2, xy, y^2``; ``alpha[j]`` and
    ``beta[j]`` are the integrals of ``x P_{1,j}`` and ``y P_{1,j}``.
    """

    area: float
    mx: float
    my: float
    quad: tuple
    alpha: tuple
    beta: tuple

    def to_dict(self) -> dict:
        return {"area": self.area, "mx": self.mx, "my": self.my, "quad": list(self.quad),
                "alpha": list(self.alpha), "beta": list(self.beta)}


def moments(domain: Domain, basis=None, level1: Sequence[PowerPoly2] | None = None) -> MomentTable:
    """Exact moments of ``domain``; level-1 polynomials from ``basis`` or ``level1``."""
    if level1 is None:
        if basis is None:
            raise InvalidInput("moments needs a graded basis or an explicit level-1 family")
        level1 = basis.level(1)
    if len(level1) != 2:
        raise InvalidInput("level 1 must have exactly two members")
    quad = tuple(integrate_power(PowerPoly2.monomial(a, b), domain) for a, b in _MONOS2)
    x, y = PowerPoly2.monomial(1, 0), PowerPoly2.monomial(0, 1)
    alpha = tuple(integrate_power(x * P, domain) for P in level1)
    beta = tuple(integrate_power(y * P, domain) for P in level1)
    return MomentTable(quad[0], quad[1], quad[2], quad, alpha, beta)


def _layer_index(n: int) -> int:
    return n * (n + 1) // 2


def _lead_matrix(family: Sequence[PowerPoly2], m: int) -> np.ndarray:
    """Column j: top-layer coefficients (x^m ... y^m) of family member j."""
    return np.column_stack([P.homogeneous(m) for P in family])


def _product_layer_matrix(lead: np.ndarray, m: int, k: int) -> np.ndarray:
    """Map from quotient layer-k coefficients (all members) to the product's layer m+k.

    Unknown ordering: member j, then monomials x^k ... y^k.
    """
    n_fam = lead.shape[1]
    out = np.zeros((m + k + 1, n_fam * (k + 1)))
    for j in range(n_fam):
        for s in range(k + 1):  # x^(k-s) y^s
            out[s:s + m + 1, j * (k + 1) + s] += lead[:, j]
    return out


def reduce_by_level(p: PowerPoly2, family: Sequence[PowerPoly2], strict: bool = True) -> ReductionResult:
    """Reduce ``p`` by one degree level; the residual has degree below the level.

    Layers ``deg p`` down to ``m`` are matched in turn, each by a minimum-norm
    least-squares solve for the quotient increment of that layer.

    Parameters
    ----------
    p : PowerPoly2
    family : sequence of m+1 polynomials of degree m
    strict : bool
        Enforce ``deg p <= 2m - 1`` (quotients of degree ``<= m - 1``).
    """
    fam = list(family)
    if not fam:
        raise InvalidFamily("empty family")
    m = max(P.degree for P in fam)
    if len(fam) != m + 1:
        raise InvalidFamily(f"a level-{m} family needs {m + 1} members, got {len(fam)}")
    lead = _lead_matrix(fam, m)
    sv = np.linalg.svd(lead, compute_uv=False)
    if sv[-1] <= 1e-10 * max(sv[0], 1e-300):
        raise InvalidFamily(f"leading forms of the level-{m} family are linearly dependent")
    n = p.true_degree(0.0)
    if strict and n > 2 * m - 1 and m > 0:
        raise InvalidInput(f"degree {n} exceeds 2*{m}-1 for a single-level reduction")
    top = max(n - m, 0)
    rem = p.raised(max(n, m))
    quotients = [PowerPoly2(top, np.zeros(dim(top))) for _ in fam]
    for layer in range(n, m - 1, -1):
        k = layer - m
        target = rem.homogeneous(layer)
        if not np.any(target):
            continue
        A = _product_layer_matrix(lead, m, k)
        sol, *_ = np.linalg.lstsq(A, target, rcond=None)
        sol = sol.reshape(len(fam), k + 1)
        for j, P in enumerate(fam):
            inc = np.zeros(dim(top))
            inc[_layer_index(k):_layer_index(k) + k + 1] = sol[j]
            step = PowerPoly2(top, inc)
            quotients[j] = quotients[j] + step
            rem = rem - step * P
        rem = rem.raised(max(rem.degree, n))
    rem_c = rem.coeffs
    res_deg = max(m - 1, 0)
    residual = PowerPoly2(res_deg, rem_c[: dim(res_deg)]) if m > 0 else PowerPoly2(0, [0.0])
    leftover = rem_c[dim(res_deg):] if m > 0 else rem_c
    quotients = tuple(q.raised(top) if q.degree < top else PowerPoly2(top, q.coeffs[: dim(top)]) for q in quotients)
    meta = {"leftover": float(np.max(np.abs(leftover))) if leftover.size else 0.0, "quotient_degree": top}
    return ReductionResult(((m, quotients, tuple(fam)),), residual, meta)


def _level_family(basis, level: int) -> list:
    fam = basis.level(level) if hasattr(basis, "level") else basis[level]
    return list(fam)


def cascade_reduce(p: PowerPoly2, basis, parity: str) -> ReductionResult:
    """Cascade over odd (…, 3, 1) or even (…, 4, 2) levels.

    ``basis`` is a graded :class:`~polyortho.orthobasis.OrthoBasis` or a mapping
    ``level -> family``. The odd cascade ends with a constant residual, the
    even cascade with a linear one.
    """
    if parity not in ("odd", "even"):
        raise InvalidInput("parity must be 'odd' or 'even'")
    n = p.true_degree(0.0)
    floor = 1 if parity == "odd" else 2
    top = n if (n % 2 == (1 if parity == "odd" else 0)) else n - 1
    levels = []
    rem = p
    leftover = 0.0
    for lv in range(top, floor - 1, -2):
        fam = _level_family(basis, lv)
        r = reduce_by_level(rem, fam, strict=False)
        levels.extend(r.levels)
        leftover = max(leftover, r.meta["leftover"])
        rem = r.residual
    res_deg = 0 if parity == "odd" else 1
    if rem.degree > res_deg:
        if rem.true_degree(0.0) > res_deg:
            raise InvalidInput("residual degree exceeds the cascade bound")
        rem = PowerPoly2(res_deg, rem.coeffs[: dim(res_deg)])
    elif rem.degree < res_deg:
        rem = rem.raised(res_deg)
    return ReductionResult(tuple(levels), rem, {"leftover": leftover, "parity": parity})


@dataclass(frozen=True)
class ReductionIntegral:
    value: float
    parity: str
    used_common_zero: bool
    reduction: ReductionResult

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "parity": self.parity,
            "used_common_zero": self.used_common_zero,
            "residual": self.reduction.residual.to_dict(),
            "level1": self.reduction.level1_linear.tolist(),
        }


def integrate_via_reduction(
    p: PowerPoly2,
    basis,
    mt: MomentTable,
    parity: str,
    common_zero=None,
    strict: bool = False,
    details: bool = False,
):
    """Integral of ``p`` from its reduction and precomputed moments.

    Odd: ``R A + sum_j (a_j alpha_j + b_j beta_j)``, or with a common zero
    ``p_0`` of all odd levels, ``p(p_0) A + sum_j (a_j alpha_j + b_j beta_j)``.
    Even: ``a mx + b my + c A`` from the linear residual ``a x + b y + c``.

    With ``strict=True`` the odd mode requires ``common_zero``.
    """
    red = cascade_reduce(p, basis, parity)
    used = False
    if parity == "odd":
        lin = red.level1_linear
        corr = math.fsum(a * al + b * be for (a, b, _), al, be in zip(lin, mt.alpha, mt.beta)) if len(lin) else 0.0
        if common_zero is not None:
            value = float(p(np.asarray(common_zero, dtype=float))) * mt.area + corr
            used = True
        else:
            if strict:
                raise NoCommonZero("odd-mode strict integration needs a common zero of the odd levels")
            value = red.residual.coeff(0, 0) * mt.area + corr
    else:
        R = red.residual
        value = math.fsum([R.coeff(1, 0) * mt.mx, R.coeff(0, 1) * mt.my, R.coeff(0, 0) * mt.area])
    out = ReductionIntegral(float(value), parity, used, red)
    return out if details else out.value
