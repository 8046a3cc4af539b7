"""Orthonormal polynomial bases over polygons via constrained null spaces.

A degree-d polynomial on a triangulated polygon is a C^d spline of degree d,
so its Bernstein-Bezier coefficients ``c`` live in the kernel of the
smoothness matrix ``H``. With the block mass matrix factored as
``M = R^T R`` the substitution ``c1 = R c`` turns ``C^T M C = I`` into
``C1^T C1 = I``; an orthonormal null-space basis of ``H R^{-1}`` therefore
gives an L2-orthonormal polynomial basis after mapping back with ``R^{-1}``.
Complements of lower-degree spaces add the orthogonality rows
``(R C_prev)^T`` before taking the null space.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .assembly import gram_exact, l2_gram, mass_matrix, smoothness_matrix
from .bb import BBPatch, PowerPoly2, SplineVector, bb_eval, bb_to_power, dim, polys_to_spline_matrix, raise_matrix
from .errors import InvalidInput, NumericalFailure
from .geometry import (
    Domain,
    Polygon,
    Triangulation,
    as_triangulation,
    coverage_weights,
    domain_from_dict,
    domain_points,
    polygon_metrics,
)
from .numkernels import factor_blocks, orthonormal_nullspace

__all__ = [
    "OrthoBasis",
    "build_basis",
    "build_complement",
    "build_graded",
    "canonicalize",
    "verify_gram_riemann",
    "span_residual",
    "project",
]

log = logging.getLogger(__name__)

GRAM_TOL = 1e-9
POWER_AGREEMENT_TOL = 1e-9


@dataclass(frozen=True)
class OrthoBasis:
    """Orthonormal polynomials over a triangulated domain.

    Attributes
    ----------
    domain : Polygon or Triangulation
        The domain the basis was requested on.
    triangulation : Triangulation
        Triangulation used for the Bernstein-Bezier computations.
    degree : int
        Storage degree of ``coeffs``; every member has degree <= this.
    kind : {"full", "complement", "graded"}
    coeffs : ndarray, shape (N * D_degree, m)
        Spline coefficients, one column per member.
    powers : tuple of PowerPoly2
        Power forms, each stored at its own level degree.
    levels : tuple of int
        Degree level of each member (all equal to ``degree`` for a full basis).
    gram_residual : float
        ``max |C^T M C - I|`` under exact integration.
    """

    domain: Domain
    triangulation: Triangulation
    degree: int
    kind: str
    coeffs: np.ndarray
    powers: tuple
    levels: tuple
    gram_residual: float
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return len(self.powers)

    @property
    def members(self) -> list:
        """``(SplineVector, PowerPoly2)`` pairs."""
        return [
            (SplineVector(self.triangulation, self.degree, self.coeffs[:, n]), p)
            for n, p in enumerate(self.powers)
        ]

    def level(self, ell: int) -> list:
        """Power forms of the members on degree level ``ell``."""
        out = [p for p, lv in zip(self.powers, self.levels) if lv == ell]
        if not out:
            raise InvalidInput(f"basis has no level {ell} (levels present: {sorted(set(self.levels))})")
        return out

    @property
    def available_levels(self) -> list:
        return sorted(set(self.levels))

    def to_dict(self) -> dict:
        return {
            "domain": self.domain.to_dict(),
            "triangulation": self.triangulation.to_dict(),
            "degree": self.degree,
            "kind": self.kind,
            "levels": list(self.levels),
            "members": [p.to_dict() for p in self.powers],
            "gram_residual": self.gram_residual,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "OrthoBasis":
        domain = domain_from_dict(data["domain"])
        tri = Triangulation.from_dict(data["triangulation"]) if "triangulation" in data else as_triangulation(domain)
        powers = tuple(PowerPoly2.from_dict(m) for m in data["members"])
        degree = int(data["degree"])
        levels = tuple(int(v) for v in data.get("levels", [degree] * len(powers)))
        C = polys_to_spline_matrix(powers, tri, degree)
        G = gram_exact(C, mass_matrix(tri, degree))
        res = float(np.max(np.abs(G - np.eye(len(powers))))) if powers else 0.0
        return cls(domain, tri, degree, str(data["kind"]), C, powers, levels, res)


def _row_normalize(A: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0
    return A[keep] / norms[keep, None]


def _anchor_triangle(tri: Triangulation) -> int:
    """Triangle with the largest inradius; extrapolating its power form is best conditioned."""
    best, best_r = 0, -1.0
    for t in range(tri.n_triangles):
        v = tri.triangle(t)
        per = sum(np.linalg.norm(v[i] - v[(i + 1) % 3]) for i in range(3))
        r = 2.0 * tri.areas[t] / per
        if r > best_r * (1 + 1e-12):
            best, best_r = t, r
    return best


def _extract_powers(tri: Triangulation, d: int, C: np.ndarray) -> tuple:
    """Power forms from the anchor triangle, cross-checked against every other triangle.

    Agreement is measured on values at the degree-max(d,1) domain points of
    each triangle, relative to the largest such value; comparing monomial
    coefficients directly would mostly measure the conditioning of the
    power basis on thin triangles.
    """
    D = dim(d)
    k = max(d, 1)
    pts = [domain_points(tri.triangle(t), k) for t in range(tri.n_triangles)]
    a = _anchor_triangle(tri)
    out = []
    for n in range(C.shape[1]):
        col = C[:, n]
        p = bb_to_power(BBPatch(tri.triangle(a), d, col[a * D:(a + 1) * D]))
        ref = [bb_eval(BBPatch(tri.triangle(t), d, col[t * D:(t + 1) * D]), pts[t]) for t in range(tri.n_triangles)]
        scale = max(max(float(np.max(np.abs(v))) for v in ref), 1e-300)
        for t in range(tri.n_triangles):
            err = float(np.max(np.abs(p(pts[t]) - ref[t]))) / scale
            if err > POWER_AGREEMENT_TOL:
                raise NumericalFailure(
                    f"member {n}: power form from triangle {a} misses triangle {t} by {err:.2e}"
                )
        out.append(p)
    return tuple(out)


def _gram_residual(C: np.ndarray, tri: Triangulation, d: int) -> float:
    if C.shape[1] == 0:
        return 0.0
    G = gram_exact(C, mass_matrix(tri, d))
    return float(np.max(np.abs(G - np.eye(C.shape[1]))))


def _lead_columns(degree: int, level: int, full: bool) -> np.ndarray:
    """Power-coefficient columns used to fix the rotation of one level."""
    if full:
        return np.arange(dim(degree))
    s = level * (level + 1) // 2
    return np.arange(s, s + level + 1)


def _canonical_rotation(Y: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Orthogonal ``U`` such that ``U @ Y[:, cols]`` is upper triangular with a positive diagonal."""
    L = Y[:, cols]
    Q, R = np.linalg.qr(L, mode="complete")
    k = Y.shape[0]
    diag = np.diag(R)[: min(k, len(cols))]
    signs = np.ones(k)
    signs[: len(diag)] = np.where(diag < 0, -1.0, 1.0)
    return (Q * signs[None, :]).T


def canonicalize(b: OrthoBasis) -> OrthoBasis:
    """Fix the rotation ambiguity inside each degree level.

    Members of a level are rotated so that their leading power coefficients
    (the top homogeneous layer, or all coefficients for a full basis) form an
    upper-triangular matrix with positive diagonal. The result depends only
    on the span of the level, so it is idempotent and basis-independent.
    """
    full = b.kind == "full"
    C = b.coeffs.copy()
    powers = list(b.powers)
    for lv in sorted(set(b.levels)):
        idx = [n for n, l in enumerate(b.levels) if l == lv]
        deg = max(powers[n].degree for n in idx)
        Y = np.stack([powers[n].raised(deg).coeffs for n in idx])
        U = _canonical_rotation(Y, _lead_columns(deg, lv, full))
        Yr = U @ Y
        C[:, idx] = C[:, idx] @ U.T
        for row, n in enumerate(idx):
            powers[n] = PowerPoly2(deg, Yr[row])
    return OrthoBasis(
        b.domain, b.triangulation, b.degree, b.kind, C, tuple(powers), b.levels,
        _gram_residual(C, b.triangulation, b.degree), dict(b.meta),
    )


def build_basis(domain: Domain, d: int) -> OrthoBasis:
    """Orthonormal basis of all polynomials of degree <= d over ``domain``."""
    if d < 0:
        raise InvalidInput("degree must be >= 0")
    tri = as_triangulation(domain)
    M = mass_matrix(tri, d)
    F = factor_blocks(M)
    H = smoothness_matrix(tri, d, d)
    Hs = _row_normalize(F.right_solve(H.rows)) if H.shape[0] else np.zeros((0, tri.n_triangles * dim(d)))
    C1 = orthonormal_nullspace(Hs)
    if C1.shape[1] != dim(d):
        raise NumericalFailure(f"null space has dimension {C1.shape[1]}, expected {dim(d)}")
    C = F.solve(C1)
    powers = _extract_powers(tri, d, C)
    raw = OrthoBasis(domain, tri, d, "full", C, powers, (d,) * len(powers), _gram_residual(C, tri, d))
    out = canonicalize(raw)
    log.info("full basis d=%d on %d triangles: gram residual %.2e", d, tri.n_triangles, out.gram_residual)
    return out


def _raise_coeffs(C: np.ndarray, n_tri: int, d: int, target: int) -> np.ndarray:
    out = C
    for k in range(d, target):
        E = raise_matrix(k)
        blocks = out.reshape(n_tri, dim(k), -1)
        out = np.einsum("ij,njm->nim", E, blocks).reshape(n_tri * dim(k + 1), -1)
    return out


def build_complement(prev: OrthoBasis, tri: Triangulation | None = None) -> OrthoBasis:
    """Orthonormal basis of the degree-(d+1) polynomials orthogonal to ``prev``.

    ``prev`` must span all polynomials of degree <= d (a full or graded basis).
    """
    if prev.kind == "complement":
        raise InvalidInput("build_complement needs a full or graded basis of the lower degree")
    tri = prev.triangulation if tri is None else tri
    if tri.n_triangles * dim(prev.degree) != prev.coeffs.shape[0]:
        raise InvalidInput("triangulation does not match the previous basis")
    d = prev.degree
    if len(prev) != dim(d):
        raise InvalidInput(f"previous basis has {len(prev)} members, a basis of degree {d} needs {dim(d)}")
    e = d + 1
    M = mass_matrix(tri, e)
    F = factor_blocks(M)
    H = smoothness_matrix(tri, e, e)
    C_prev = _raise_coeffs(prev.coeffs, tri.n_triangles, d, e)
    rows = [F.apply(C_prev).T]
    if H.shape[0]:
        rows.insert(0, F.right_solve(H.rows))
    Hs = _row_normalize(np.vstack(rows))
    C1 = orthonormal_nullspace(Hs)
    if C1.shape[1] != e + 1:
        raise NumericalFailure(f"complement has dimension {C1.shape[1]}, expected {e + 1}")
    C = F.solve(C1)
    powers = _extract_powers(tri, e, C)
    raw = OrthoBasis(prev.domain, tri, e, "complement", C, powers, (e,) * (e + 1), _gram_residual(C, tri, e))
    out = canonicalize(raw)
    cross = C_prev.T @ M.matmul(out.coeffs)
    out.meta["prev_cross"] = float(np.max(np.abs(cross))) if cross.size else 0.0
    return out


def _merge(lower: OrthoBasis, upper: OrthoBasis) -> OrthoBasis:
    tri = lower.triangulation
    C = np.hstack([_raise_coeffs(lower.coeffs, tri.n_triangles, lower.degree, upper.degree), upper.coeffs])
    return OrthoBasis(
        lower.domain, tri, upper.degree, "graded", C,
        lower.powers + upper.powers, lower.levels + upper.levels,
        _gram_residual(C, tri, upper.degree),
    )


def build_graded(domain: Domain, d: int) -> OrthoBasis:
    """Degree-graded orthonormal basis: level l is orthogonal to all degree < l."""
    if d < 0:
        raise InvalidInput("degree must be >= 0")
    g = build_basis(domain, 0)
    g = OrthoBasis(g.domain, g.triangulation, 0, "graded", g.coeffs, g.powers, (0,), g.gram_residual)
    for _ in range(d):
        g = _merge(g, build_complement(g))
    if g.gram_residual > GRAM_TOL:
        raise NumericalFailure(f"graded basis Gram residual {g.gram_residual:.2e} exceeds {GRAM_TOL:g}")
    return g


def verify_gram_riemann(b: OrthoBasis, n: int = 1001) -> float:
    """Largest deviation from the identity of a grid-sum Gram matrix.

    The bounding box is mapped onto ``[0,1]^2`` and sampled at ``i/(n-1)``.
    Each sample carries the cell area times the fraction of a small disc
    around it that lies in the domain (1 inside, 1/2 on an edge, the interior
    angle over 2 pi at a corner).
    """
    if n < 2:
        raise InvalidInput("grid size must be >= 2")
    xmin, ymin, xmax, ymax = polygon_metrics(b.triangulation).bbox
    t = np.linspace(0.0, 1.0, n)
    gx = xmin + (xmax - xmin) * t
    gy = ymin + (ymax - ymin) * t
    cell = (xmax - xmin) * (ymax - ymin) / (n - 1) ** 2
    m = len(b)
    G = np.zeros((m, m))
    chunk = max(1, 200_000 // n)
    for r0 in range(0, n, chunk):
        X, Y = np.meshgrid(gx, gy[r0:r0 + chunk], indexing="xy")
        pts = np.column_stack([X.ravel(), Y.ravel()])
        w = coverage_weights(b.triangulation, pts)
        keep = w > 0
        if not np.any(keep):
            continue
        pts, w = pts[keep], w[keep] * cell
        V = np.column_stack([p(pts) for p in b.powers])
        G += V.T @ (w[:, None] * V)
    return float(np.max(np.abs(G - np.eye(m))))


def project(polys: Sequence[PowerPoly2], basis_polys: Sequence[PowerPoly2], domain: Domain) -> list:
    """Orthogonal projection of each polynomial onto ``span(basis_polys)``.

    The spanning set need not be orthonormal.
    """
    B = list(basis_polys)
    G = l2_gram(B, domain)
    X = l2_gram(B, domain, list(polys))
    coef = np.linalg.lstsq(G, X, rcond=None)[0]
    out = []
    for n in range(len(polys)):
        acc = PowerPoly2.constant(0.0)
        for q, c in zip(B, coef[:, n]):
            acc = acc + q * float(c)
        out.append(acc)
    return out


def span_residual(polys: Sequence[PowerPoly2], basis_polys: Sequence[PowerPoly2], domain: Domain) -> np.ndarray:
    """Relative L2 distance ``||p - proj p|| / ||p||`` for each polynomial."""
    proj = project(polys, basis_polys, domain)
    res = []
    for p, q in zip(polys, proj):
        nrm = np.sqrt(max(l2_gram([p], domain)[0, 0], 0.0))
        diff = np.sqrt(max(l2_gram([p - q], domain)[0, 0], 0.0))
        res.append(diff / nrm if nrm > 0 else 0.0)
    return np.asarray(res)
