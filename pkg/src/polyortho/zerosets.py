"""Zero curves of polynomials over a polygon and common zeros of a family."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from skimage import measure

from .bb import PowerPoly2
from .geometry import Domain, classify_points, polygon_metrics

__all__ = ["ContourSet", "CommonZeroReport", "zero_contours", "common_zeros", "level_contours"]


@dataclass(frozen=True)
class ContourSet:
    """Polylines (arrays of shape (n, 2)) on the zero set of ``poly`` inside the domain."""

    poly: PowerPoly2
    polylines: list
    sup_norm: float
    meta: dict = field(default_factory=dict, compare=False)

    def max_residual(self) -> float:
        """``max |p(q)| / ||p||_inf`` over all emitted vertices (0 when empty)."""
        if not self.polylines:
            return 0.0
        pts = np.vstack(self.polylines)
        return float(np.max(np.abs(self.poly(pts)))) / max(self.sup_norm, 1e-300)

    def to_dict(self) -> dict:
        return {"polylines": [pl.tolist() for pl in self.polylines]}


@dataclass(frozen=True)
class CommonZeroReport:
    """``zeros``: accepted common zeros with their ``sum_j P_j^2`` residuals.

    ``global_min`` is the smallest value of ``sum_j P_j^2`` found by the grid
    scan and the descents started from it; a positive value is evidence, at
    grid resolution, that the family has no common zero in the domain.
    """

    zeros: list
    residuals: list
    global_min: tuple
    meta: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "zeros": [list(map(float, z)) for z in self.zeros],
            "residuals": [float(r) for r in self.residuals],
            "global_min": {"point": list(map(float, self.global_min[0])), "value": float(self.global_min[1])},
        }


def _grid(domain: Domain, n: int):
    xmin, ymin, xmax, ymax = polygon_metrics(domain).bbox
    xs = np.linspace(xmin, xmax, n)
    ys = np.linspace(ymin, ymax, n)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    pts = np.column_stack([X.ravel(), Y.ravel()])
    inside = classify_points(domain, pts).reshape(n, n) > 0
    return xs, ys, pts, inside


def _bisect_on_segments(p: PowerPoly2, a: np.ndarray, b: np.ndarray, iters: int = 60) -> np.ndarray:
    """Vectorized bisection for a sign change of ``p`` on each segment ``[a_i, b_i]``."""
    fa = p(a)
    lo, hi = a.copy(), b.copy()
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        fm = p(mid)
        same = np.sign(fm) == np.sign(fa)
        lo = np.where(same[:, None], mid, lo)
        fa = np.where(same, fm, fa)
        hi = np.where(same[:, None], hi, mid)
    return 0.5 * (lo + hi)


def zero_contours(p: PowerPoly2, domain: Domain, grid_n: int = 512) -> ContourSet:
    """Zero set of ``p`` inside ``domain`` by marching squares plus bisection.

    Contours are traced on the bounding-box grid with cells restricted to the
    domain; each vertex, which lies on a grid edge with a sign change, is then
    moved to the root of ``p`` on that edge by bisection.
    """
    xs, ys, pts, inside = _grid(domain, grid_n)
    vals = p(pts).reshape(grid_n, grid_n)
    sup = float(np.max(np.abs(vals[inside]))) if np.any(inside) else 0.0
    if sup == 0.0:
        return ContourSet(p, [], sup)
    raw = measure.find_contours(vals, 0.0, mask=inside)
    dx = xs[1] - xs[0]
    dy = ys[1] - ys[0]
    lines = []
    for c in raw:
        r, col = c[:, 0], c[:, 1]
        r0 = np.clip(np.floor(r).astype(int), 0, grid_n - 1)
        c0 = np.clip(np.floor(col).astype(int), 0, grid_n - 1)
        on_row = np.isclose(r, np.round(r), rtol=0.0, atol=1e-9)
        # endpoints of the grid edge carrying each vertex
        ra = np.where(on_row, np.round(r).astype(int), r0)
        ca = np.where(on_row, c0, np.round(col).astype(int))
        rb = np.where(on_row, ra, np.minimum(ra + 1, grid_n - 1))
        cb = np.where(on_row, np.minimum(ca + 1, grid_n - 1), ca)
        a = np.column_stack([xs[ca], ys[ra]])
        b = np.column_stack([xs[cb], ys[rb]])
        q = np.column_stack([xs[0] + col * dx, ys[0] + r * dy])
        sa, sb = np.sign(p(a)), np.sign(p(b))
        ok = (sa * sb < 0)
        if np.any(ok):
            q[ok] = _bisect_on_segments(p, a[ok], b[ok])
        lines.append(q)
    return ContourSet(p, lines, sup, {"grid_n": grid_n})


def level_contours(family: Sequence[PowerPoly2], domain: Domain, grid_n: int = 512) -> list:
    return [zero_contours(p, domain, grid_n) for p in family]


def _descend(family: Sequence[PowerPoly2], grads: list, q0: np.ndarray, max_iter: int = 50) -> tuple:
    """Damped Gauss-Newton on ``S(q) = sum_j P_j(q)^2`` with Armijo backtracking."""
    q = q0.astype(float).copy()

    def resid(z):
        return np.array([float(P(z)) for P in family])

    F = resid(q)
    S = float(F @ F)
    for _ in range(max_iter):
        J = np.array([[float(gx(q)), float(gy(q))] for gx, gy in grads])
        g = J.T @ F
        if S == 0.0 or not np.any(g):
            break
        JTJ = J.T @ J
        mu = 1e-12 * max(np.trace(JTJ), 1e-300)
        step = -np.linalg.solve(JTJ + mu * np.eye(2), g)
        t = 1.0
        accepted = False
        while t > 1e-12:
            qn = q + t * step
            Fn = resid(qn)
            Sn = float(Fn @ Fn)
            if Sn <= S + 1e-4 * t * 2.0 * float(g @ step):
                accepted = True
                break
            t *= 0.5
        if not accepted:
            break
        done = np.linalg.norm(qn - q) <= 1e-15 * max(1.0, np.linalg.norm(q))
        q, F, S = qn, Fn, Sn
        if done:
            break
    return q, S


def common_zeros(family: Sequence[PowerPoly2], domain: Domain, tol: float = 1e-8, grid_n: int = 201, starts: int = 12) -> CommonZeroReport:
    """Common zeros of ``family`` inside ``domain``.

    ``S = sum_j P_j^2`` is scanned on a grid; the lowest grid-local minima
    seed damped Gauss-Newton descents. A point is accepted when ``S <= tol^2``
    and it lies in the domain; accepted points closer than ``1e-6`` times the
    diameter are merged.
    """
    fam = list(family)
    if not fam:
        raise ValueError("family must be nonempty")
    grads = [(P.derivative("x"), P.derivative("y")) for P in fam]
    xs, ys, pts, inside = _grid(domain, grid_n)
    S = np.zeros(len(pts))
    for P in fam:
        S += P(pts) ** 2
    S = S.reshape(grid_n, grid_n)
    Sm = np.where(inside, S, np.inf)
    # grid-local minima (8-neighbourhood)
    pad = np.pad(Sm, 1, constant_values=np.inf)
    neigh = np.stack([pad[1 + di:grid_n + 1 + di, 1 + dj:grid_n + 1 + dj]
                      for di in (-1, 0, 1) for dj in (-1, 0, 1) if (di, dj) != (0, 0)])
    is_min = np.isfinite(Sm) & np.all(Sm <= neigh, axis=0)
    cand = np.argwhere(is_min)
    order = np.argsort(Sm[is_min])[:starts]
    diam = polygon_metrics(domain).diameter
    best_pt = np.array([xs[0], ys[0]])
    best_val = np.inf
    if np.any(np.isfinite(Sm)):
        i, j = np.unravel_index(np.argmin(Sm), Sm.shape)
        best_pt, best_val = np.array([xs[j], ys[i]]), float(Sm[i, j])
    zeros, resids = [], []
    for k in order:
        i, j = cand[k]
        q, s = _descend(fam, grads, np.array([xs[j], ys[i]]))
        loc = classify_points(domain, q[None, :])[0]
        if loc == 0:
            continue
        if s < best_val:
            best_pt, best_val = q, s
        if s <= tol * tol and all(np.linalg.norm(q - z) > 1e-6 * diam for z in zeros):
            zeros.append(q)
            resids.append(s)
    return CommonZeroReport(zeros, resids, (best_pt, best_val), {"grid_n": grid_n})
