"""Quadrature rules built from orthonormal polynomials over a polygon.

* ``interp_rule``: interpolate at D_d nodes in the orthonormal basis; the
  coefficient of the constant member (scaled to integrate to one) is the
  integral, so the weights are one row of the inverse collocation matrix.
* ``moment_match_rule``: fewer (or more) nodes, weights matching the integrals
  of every basis member; accepted only when the match is exact.
* ``one_point_rule``: the intersection of the two level-1 zero lines.
* ``even_reduction_rule``: for centrally symmetric domains, the ``b_1``
  coefficient of an interpolated reduction against levels 3 and 1.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .assembly import integrate_power
from .bb import PowerPoly2, dim, monomial_exponents
from .errors import InfeasibleRule, InvalidInput, NonUnisolvent, NoRule
from .geometry import Domain, Location, classify_points, polygon_metrics
from .numkernels import RCOND_MIN, condition_estimate

__all__ = [
    "QuadratureRule",
    "interp_rule",
    "moment_match_rule",
    "one_point_rule",
    "even_reduction_rule",
    "EvenReductionRule",
    "certify_exactness",
    "apply_rule",
    "exactness_errors",
    "domain_hash",
]

MOMENT_MATCH_TOL = 1e-10
EXACTNESS_RTOL = 1e-9


def domain_hash(domain: Domain) -> str:
    text = json.dumps(domain.to_dict(), sort_keys=True)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class QuadratureRule:
    domain: Domain
    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float).reshape(-1, 2)
        weights = np.asarray(self.weights, dtype=float).ravel()
        if len(nodes) != len(weights):
            raise InvalidInput(f"{len(nodes)} nodes but {len(weights)} weights")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __call__(self, f: Callable) -> float:
        return apply_rule(self, f)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "nodes": self.nodes.tolist(),
            "weights": self.weights.tolist(),
            "exact_degree": int(self.exact_degree),
            "domain_hash": domain_hash(self.domain),
            "domain": self.domain.to_dict(),
        }

    @classmethod
    def from_dict(cls, data: dict, domain: Domain | None = None) -> "QuadratureRule":
        from .geometry import domain_from_dict

        dom = domain if domain is not None else domain_from_dict(data["domain"])
        return cls(dom, data["nodes"], data["weights"], int(data.get("exact_degree", -1)), str(data["kind"]))


def _evaluate(f: Callable, nodes: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(f(nodes[:, 0], nodes[:, 1]), dtype=float)
        if vals.shape == (len(nodes),):
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(f(x, y)) for x, y in nodes])


def apply_rule(rule: QuadratureRule, f: Callable) -> float:
    """``sum_i w_i f(node_i)``; ``f`` is called as ``f(x, y)`` (vectorized if it can be)."""
    vals = _evaluate(f, rule.nodes)
    return math.fsum(rule.weights * vals)


def _scale(domain: Domain) -> float:
    xmin, ymin, xmax, ymax = polygon_metrics(domain).bbox
    return max(abs(xmin), abs(ymin), abs(xmax), abs(ymax), 1e-300)


def exactness_errors(rule: QuadratureRule, domain: Domain, max_degree: int, rtol: float = EXACTNESS_RTOL) -> dict:
    """``{(a, b): (error, tolerance)}`` for every monomial of degree <= max_degree.

    The tolerance is relative to ``A * s**(a+b)``, a bound on the monomial's
    integral (``s`` the largest bounding-box coordinate), so that it does not
    become vacuous on small domains.
    """
    A = polygon_metrics(domain).area
    s = _scale(domain)
    out = {}
    for a, b in monomial_exponents(max_degree):
        mono = PowerPoly2.monomial(a, b)
        exact = integrate_power(mono, domain)
        q = math.fsum(rule.weights * mono(rule.nodes))
        out[(a, b)] = (abs(q - exact), rtol * A * s ** (a + b))
    return out


def certify_exactness(rule: QuadratureRule, domain: Domain, max_degree: int, rtol: float = EXACTNESS_RTOL) -> int:
    """Largest n <= max_degree with every monomial of degree <= n integrated exactly; -1 if none."""
    errs = exactness_errors(rule, domain, max_degree, rtol)
    best = -1
    for n in range(max_degree + 1):
        ok = all(errs[(a, n - a)][0] <= errs[(a, n - a)][1] for a in range(n + 1))
        if not ok:
            break
        best = n
    return best


def _basis_members(basis, d: int) -> list:
    """Members of levels <= d of a graded basis (or a plain list of polynomials)."""
    if hasattr(basis, "levels"):
        polys = [p for p, lv in zip(basis.powers, basis.levels) if lv <= d]
    else:
        polys = list(basis)
    if len(polys) != dim(d):
        raise InvalidInput(f"need {dim(d)} basis polynomials of degree <= {d}, got {len(polys)}")
    return polys


def _dependent_nodes(B: np.ndarray) -> list:
    """Indices of the nodes carrying the near-null combination of the collocation rows."""
    u, s, _ = np.linalg.svd(B)
    v = np.abs(u[:, -1])
    return sorted(int(i) for i in np.nonzero(v > 0.1 * v.max())[0])


def interp_rule(basis, nodes, domain: Domain | None = None, d: int | None = None, certify_to: int | None = None) -> QuadratureRule:
    """Interpolatory rule on ``dim(d)`` nodes from a graded orthonormal basis.

    With the constant member rescaled to integrate to one, the integral of the
    interpolant is its coefficient ``c_1``; the weights are the matching row
    of the inverse collocation matrix.
    """
    domain = domain if domain is not None else basis.domain
    d = basis.degree if d is None else d
    polys = _basis_members(basis, d)
    X = np.asarray(nodes, dtype=float).reshape(-1, 2)
    if len(X) != dim(d):
        raise InvalidInput(f"degree {d} interpolation needs {dim(d)} nodes, got {len(X)}")
    A = polygon_metrics(domain).area
    integrals = np.array([integrate_power(p, domain) for p in polys])
    # rescale: constant-direction member integrates to 1, the rest to 0
    k0 = int(np.argmax(np.abs(integrals)))
    cols = []
    for k, p in enumerate(polys):
        if k == k0:
            cols.append(p(X) / integrals[k0])
        else:
            cols.append(p(X) - integrals[k] / integrals[k0] * polys[k0](X))
    B = np.column_stack(cols)
    rcond = condition_estimate(B)
    if rcond < RCOND_MIN:
        raise NonUnisolvent(f"nodes {_dependent_nodes(B)} are (nearly) dependent for degree {d}; rcond={rcond:.2e}")
    e = np.zeros(len(X))
    e[k0] = 1.0
    w = np.linalg.solve(B.T, e)
    top = certify_to if certify_to is not None else min(2 * d + 2, 12)
    rule = QuadratureRule(domain, X, w, -1, "interp", {"rcond": rcond, "area": A})
    return QuadratureRule(domain, X, w, certify_exactness(rule, domain, top), "interp", rule.meta)


def moment_match_rule(basis, nodes, d: int | None = None, domain: Domain | None = None, certify_to: int | None = None) -> QuadratureRule:
    """Weights matching the integral of every basis member of degree <= d.

    Solved in the least-squares sense (minimum norm when underdetermined) and
    accepted only if the moment residual is at most 1e-10.
    """
    domain = domain if domain is not None else basis.domain
    d = basis.degree if d is None else d
    polys = _basis_members(basis, d)
    X = np.asarray(nodes, dtype=float).reshape(-1, 2)
    if len(X) < 1:
        raise InvalidInput("at least one node is required")
    B = np.stack([p(X) for p in polys])  # (members, nodes)
    rhs = np.array([integrate_power(p, domain) for p in polys])
    w, *_ = np.linalg.lstsq(B, rhs, rcond=None)
    resid = float(np.max(np.abs(B @ w - rhs)))
    if resid > MOMENT_MATCH_TOL * max(1.0, float(np.max(np.abs(rhs)))):
        raise InfeasibleRule(f"{len(X)} nodes cannot integrate degree {d} exactly (moment residual {resid:.2e})")
    top = certify_to if certify_to is not None else min(2 * d + 2, 12)
    rule = QuadratureRule(domain, X, w, -1, "moment_match", {"moment_residual": resid})
    return QuadratureRule(domain, X, w, certify_exactness(rule, domain, top), "moment_match", rule.meta)


def one_point_rule(domain: Domain, level1) -> QuadratureRule:
    """``A f(p)`` with ``p`` the intersection of the two level-1 zero lines."""
    fam = level1.level(1) if hasattr(level1, "level") else list(level1)
    if len(fam) != 2:
        raise InvalidInput("one_point_rule needs exactly two level-1 polynomials")
    M = np.array([[P.coeff(1, 0), P.coeff(0, 1)] for P in fam])
    rhs = -np.array([P.coeff(0, 0) for P in fam])
    if condition_estimate(M) < RCOND_MIN:
        raise NoRule("the level-1 zero lines are parallel")
    node = np.linalg.solve(M, rhs)
    where = classify_points(domain, node[None, :])[0]
    if where == 0:
        raise NoRule(f"zero-line intersection {node.tolist()} lies outside the domain")
    A = polygon_metrics(domain).area
    rule = QuadratureRule(domain, node[None, :], [A], -1, "one_point", {"location": Location.INSIDE.value if where == 1 else Location.BOUNDARY.value})
    return QuadratureRule(domain, rule.nodes, rule.weights, certify_exactness(rule, domain, 4), "one_point", rule.meta)


@dataclass(frozen=True)
class EvenReductionRule:
    """``Q(f) = beta1 * sum_i w_i (f(n_i) - f(0)) + f(0) * area``."""

    domain: Domain
    nodes: np.ndarray
    w: np.ndarray
    beta1: float
    area: float
    meta: dict = field(default_factory=dict, compare=False)

    def __call__(self, f: Callable) -> float:
        f0 = float(_evaluate(f, np.zeros((1, 2)))[0])
        vals = _evaluate(f, self.nodes)
        return self.beta1 * math.fsum(self.w * (vals - f0)) + f0 * self.area

    def as_rule(self) -> QuadratureRule:
        """The same functional as an ordinary rule with the origin as an extra node."""
        nodes = np.vstack([np.zeros((1, 2)), self.nodes])
        weights = np.concatenate([[self.area - self.beta1 * float(np.sum(self.w))], self.beta1 * self.w])
        return QuadratureRule(self.domain, nodes, weights, -1, "even_reduction", dict(self.meta))


def even_reduction_rule(
    domain: Domain,
    level1: Sequence[PowerPoly2],
    level3: Sequence[PowerPoly2],
    nodes,
    area: float | None = None,
    beta1: float | None = None,
) -> EvenReductionRule:
    """Rule for even functions on a centrally symmetric domain.

    Interpolate ``f - f(0)`` at the nodes by
    ``sum_i (c_i x + d_i y) P_{3,i} + b_1 y P_{1,1}`` (the other level-1
    coefficients pinned to zero) and keep only ``b_1``: all other terms
    integrate to zero, ``y P_{1,1}`` integrates to ``beta_1``. ``b_1`` is read
    off the minimum-norm solution; the node system's null space has no
    ``b_1`` component whenever it has rank equal to the node count.
    """
    l1 = list(level1)
    l3 = list(level3)
    if len(l1) != 2 or len(l3) != 4:
        raise InvalidInput("need two level-1 and four level-3 polynomials")
    X = np.asarray(nodes, dtype=float).reshape(-1, 2)
    if len(np.unique(np.round(X, 14), axis=0)) != len(X):
        raise NonUnisolvent("nodes must be distinct")
    x, y = X[:, 0], X[:, 1]
    cols = []
    for P in l3:
        v = P(X)
        cols.extend([x * v, y * v])
    cols.append(y * l1[1](X))
    K = np.column_stack(cols)
    sv = np.linalg.svd(K, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0] or np.linalg.matrix_rank(K) < len(X):
        raise NonUnisolvent("interpolation system at these nodes is rank deficient")
    w = np.linalg.pinv(K)[-1]
    ypoly = PowerPoly2.monomial(0, 1)
    b1 = integrate_power(ypoly * l1[1], domain) if beta1 is None else float(beta1)
    A = polygon_metrics(domain).area if area is None else float(area)
    return EvenReductionRule(domain, X, w, b1, A, {"singular_values": sv.tolist()})
