"""Polygons, triangulations, barycentric coordinates and point classification.

A *domain* throughout the package is either a :class:`Polygon` (triangulated on
demand by ear clipping) or an explicit :class:`Triangulation`. Polygons with
holes must be passed as explicit triangulations.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import InvalidInput, UnsupportedTopology

__all__ = [
    "Location",
    "Polygon",
    "Triangulation",
    "DomainMetrics",
    "Domain",
    "triangulate",
    "as_triangulation",
    "barycentric",
    "domain_points",
    "point_in_domain",
    "classify_points",
    "coverage_weights",
    "polygon_metrics",
    "signed_area",
    "regular_polygon",
    "rectangle",
    "l_domain",
    "domain_from_dict",
    "polygon_from_vertices",
]

# relative boundary tolerance (times the domain diameter)
BOUNDARY_RTOL = 1e-12


class Location(str, enum.Enum):
    INSIDE = "inside"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"


def _as_points(pts, name="points") -> np.ndarray:
    arr = np.array(pts, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidInput(f"{name} must be a sequence of (x, y) pairs")
    if not np.all(np.isfinite(arr)):
        raise InvalidInput(f"{name} contain NaN or Inf")
    return arr


def signed_area(ring) -> float:
    """Shoelace signed area; positive for counter-clockwise rings."""
    r = np.asarray(ring, dtype=float)
    x, y = r[:, 0], r[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _segments_cross(p1, p2, q1, q2) -> bool:
    """True if closed segments p1p2 and q1q2 intersect (including touching)."""

    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    def on_seg(a, b, c):
        return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0 > d2) or (d1 < 0 < d2)) and ((d3 > 0 > d4) or (d3 < 0 < d4)):
        return True
    if d1 == 0 and on_seg(q1, q2, p1):
        return True
    if d2 == 0 and on_seg(q1, q2, p2):
        return True
    if d3 == 0 and on_seg(p1, p2, q1):
        return True
    if d4 == 0 and on_seg(p1, p2, q2):
        return True
    return False


def _check_simple(ring: np.ndarray, name: str) -> None:
    n = len(ring)
    for i in range(n):
        a, b = ring[i], ring[(i + 1) % n]
        if np.array_equal(a, b):
            raise InvalidInput(f"{name} has repeated consecutive vertex {i}")
        for j in range(i + 1, n):
            # adjacent edges share an endpoint by construction
            if j == i + 1 or (i == 0 and j == n - 1):
                continue
            c, d = ring[j], ring[(j + 1) % n]
            if _segments_cross(a, b, c, d):
                raise InvalidInput(f"{name} is not simple: edges {i} and {j} intersect")


def _normalize_ring(ring, ccw: bool, name: str) -> np.ndarray:
    r = _as_points(ring, name)
    if len(r) > 1 and np.array_equal(r[0], r[-1]):
        r = r[:-1]
    if len(r) < 3:
        raise InvalidInput(f"{name} needs at least 3 vertices")
    a = signed_area(r)
    scale = float(np.ptp(r, axis=0).max()) if len(r) else 0.0
    if abs(a) <= 1e-14 * max(scale, 1e-300) ** 2:
        raise InvalidInput(f"{name} has zero area")
    if (a > 0) != ccw:
        r = r[::-1].copy()
    _check_simple(r, name)
    r.setflags(write=False)
    return r


@dataclass(frozen=True)
class Polygon:
    """Polygon with a counter-clockwise outer ring and clockwise holes.

    Input rings are re-oriented automatically.
    """

    outer: np.ndarray
    holes: tuple = ()

    def __post_init__(self):
        outer = _normalize_ring(self.outer, True, "outer ring")
        holes = tuple(_normalize_ring(h, False, f"hole {i}") for i, h in enumerate(self.holes))
        for i, h in enumerate(holes):
            for v in h:
                if _classify_rings([outer], v[None, :], _diam(outer))[0] != 1:
                    raise InvalidInput(f"hole {i} is not strictly inside the outer ring")
            for j in range(i):
                for v in h:
                    if _classify_rings([holes[j]], v[None, :], _diam(outer))[0] != 0:
                        raise InvalidInput(f"holes {j} and {i} overlap")
        object.__setattr__(self, "outer", outer)
        object.__setattr__(self, "holes", holes)

    @property
    def rings(self) -> list:
        return [self.outer, *self.holes]

    def to_dict(self) -> dict:
        return {
            "outer": self.outer.tolist(),
            "holes": [h.tolist() for h in self.holes],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Polygon":
        if "outer" not in data:
            raise InvalidInput("polygon JSON needs an 'outer' ring")
        return cls(data["outer"], tuple(data.get("holes", ())))


def _diam(pts: np.ndarray) -> float:
    pts = np.asarray(pts, dtype=float)
    if len(pts) < 2:
        return 0.0
    diff = pts[:, None, :] - pts[None, :, :]
    return float(np.sqrt((diff ** 2).sum(-1)).max())


@dataclass(frozen=True)
class Triangulation:
    """Conforming triangulation with counter-clockwise triangles.

    ``interior_edges`` holds ``((a, b), left, right)`` for every edge shared by
    two triangles, with ``a < b`` vertex indices.
    """

    points: np.ndarray
    tris: np.ndarray
    interior_edges: tuple = field(default=())
    boundary_edges: tuple = field(default=())

    @classmethod
    def from_arrays(cls, points, tris) -> "Triangulation":
        pts = _as_points(points)
        t = np.array(tris, dtype=np.int64)
        if t.ndim != 2 or t.shape[1] != 3 or len(t) == 0:
            raise InvalidInput("tris must be a non-empty list of index triples")
        if t.min() < 0 or t.max() >= len(pts):
            raise InvalidInput("triangle index out of range")
        diam = _diam(pts)
        t = t.copy()
        for n, (a, b, c) in enumerate(t):
            if len({a, b, c}) < 3:
                raise InvalidInput(f"triangle {n} repeats a vertex")
            ar = signed_area(pts[[a, b, c]])
            if abs(ar) <= 1e-14 * diam ** 2:
                raise InvalidInput(f"triangle {n} has zero area")
            if ar < 0:
                t[n] = (a, c, b)
        edges: dict = {}
        for n, tri in enumerate(t):
            for s in range(3):
                a, b = int(tri[s]), int(tri[(s + 1) % 3])
                edges.setdefault((min(a, b), max(a, b)), []).append(n)
        interior, boundary = [], []
        for e, owners in sorted(edges.items()):
            if len(owners) > 2:
                raise InvalidInput(f"edge {e} is shared by {len(owners)} triangles")
            if len(owners) == 2:
                interior.append((e, owners[0], owners[1]))
            else:
                boundary.append(e)
        # hanging vertices break conformity
        used = np.unique(t)
        tol = BOUNDARY_RTOL * 1e3 * diam
        for (a, b) in edges:
            pa, pb = pts[a], pts[b]
            ab = pb - pa
            L2 = float(ab @ ab)
            rel = pts[used] - pa
            s = rel @ ab / L2
            dist = np.abs(rel[:, 0] * ab[1] - rel[:, 1] * ab[0]) / math.sqrt(L2)
            bad = (s > 1e-12) & (s < 1 - 1e-12) & (dist <= tol)
            if np.any(bad):
                v = int(used[np.argmax(bad)])
                raise InvalidInput(f"vertex {v} lies inside edge {(a, b)}: triangulation is not conforming")
        pts.setflags(write=False)
        t.setflags(write=False)
        return cls(pts, t, tuple(interior), tuple(boundary))

    @property
    def n_triangles(self) -> int:
        return len(self.tris)

    def triangle(self, n: int) -> np.ndarray:
        return self.points[self.tris[n]]

    @property
    def areas(self) -> np.ndarray:
        v = self.points[self.tris]
        return 0.5 * (
            (v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
            - (v[:, 2, 0] - v[:, 0, 0]) * (v[:, 1, 1] - v[:, 0, 1])
        )

    def boundary_segments(self) -> np.ndarray:
        e = np.array(self.boundary_edges, dtype=np.int64).reshape(-1, 2)
        return self.points[e]

    def to_dict(self) -> dict:
        return {"points": self.points.tolist(), "tris": self.tris.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Triangulation":
        if "points" not in data or "tris" not in data:
            raise InvalidInput("triangulation JSON needs 'points' and 'tris'")
        return cls.from_arrays(data["points"], data["tris"])


Domain = Union[Polygon, Triangulation]


@dataclass(frozen=True)
class DomainMetrics:
    area: float
    diameter: float
    bbox: tuple  # (xmin, ymin, xmax, ymax)
    centroid: tuple


def domain_from_dict(data: dict) -> Domain:
    """Polygon or Triangulation, depending on which JSON keys are present."""
    if "points" in data:
        return Triangulation.from_dict(data)
    return Polygon.from_dict(data)


def _is_ear(pts, ring_idx, pos, scale) -> bool:
    m = len(ring_idx)
    a, b, c = ring_idx[pos - 1], ring_idx[pos], ring_idx[(pos + 1) % m]
    pa, pb, pc = pts[a], pts[b], pts[c]
    cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
    if cross <= 1e-13 * scale * scale:
        return False
    tri = np.array([pa, pb, pc])
    others = [v for v in ring_idx if v not in (a, b, c)]
    if not others:
        return True
    q = pts[others]
    same = np.all(q == pa, axis=1) | np.all(q == pb, axis=1) | np.all(q == pc, axis=1)
    bc = barycentric(tri, q)
    tol = 1e-12
    inside = np.all(bc >= -tol, axis=1) & ~same
    return not np.any(inside)


def triangulate(polygon: Polygon, start: int = 0) -> Triangulation:
    """Ear-clipping triangulation of a simple polygon.

    ``start`` rotates the vertex list before clipping, which yields a different
    (equally valid) triangulation; useful for independence checks.
    """
    if not isinstance(polygon, Polygon):
        raise InvalidInput("triangulate expects a Polygon")
    if polygon.holes:
        raise UnsupportedTopology(
            "polygons with holes are not triangulated automatically; "
            "pass an explicit triangulation ({'points': ..., 'tris': ...}) instead"
        )
    pts = polygon.outer
    n = len(pts)
    scale = _diam(pts)
    ring = [(i + start) % n for i in range(n)]
    tris = []
    while len(ring) > 3:
        for pos in range(len(ring)):
            if _is_ear(pts, ring, pos, scale):
                m = len(ring)
                tris.append((ring[pos - 1], ring[pos], ring[(pos + 1) % m]))
                del ring[pos]
                break
        else:
            raise InvalidInput("ear clipping found no ear; polygon is degenerate")
    if abs(signed_area(pts[ring])) <= 1e-13 * scale * scale:
        raise InvalidInput("ear clipping left a degenerate triangle")
    tris.append(tuple(ring))
    return Triangulation.from_arrays(pts, tris)


def as_triangulation(domain: Domain) -> Triangulation:
    if isinstance(domain, Triangulation):
        return domain
    if isinstance(domain, Polygon):
        return triangulate(domain)
    raise InvalidInput(f"not a domain: {type(domain).__name__}")


def barycentric(t, p) -> np.ndarray:
    """Barycentric coordinates of point(s) ``p`` with respect to triangle ``t``.

    ``p`` may be a single point (returns shape ``(3,)``) or an ``(m, 2)`` array.
    Points outside ``t`` get coordinates outside ``[0, 1]``.
    """
    v = np.asarray(t, dtype=float)
    q = np.asarray(p, dtype=float)
    single = q.ndim == 1
    q = np.atleast_2d(q)
    (x1, y1), (x2, y2), (x3, y3) = v
    det = (x2 - x1) * (y3 - y1) - (x3 - x1) * (y2 - y1)
    scale = max(abs(x2 - x1), abs(x3 - x1), abs(y2 - y1), abs(y3 - y1))
    if abs(det) <= 1e-14 * scale * scale or scale == 0:
        raise InvalidInput("degenerate (zero-area) triangle")
    x, y = q[:, 0], q[:, 1]
    b1 = ((x2 - x) * (y3 - y) - (x3 - x) * (y2 - y)) / det
    b2 = ((x3 - x) * (y1 - y) - (x1 - x) * (y3 - y)) / det
    b3 = ((x1 - x) * (y2 - y) - (x2 - x) * (y1 - y)) / det
    out = np.stack([b1, b2, b3], axis=1)
    return out[0] if single else out


def domain_points(t, d: int) -> np.ndarray:
    """Lattice points ``(i v1 + j v2 + k v3) / d`` in canonical multi-index order."""
    from .bb import multi_indices

    if d < 1:
        raise InvalidInput("domain points need d >= 1")
    v = np.asarray(t, dtype=float)
    mi = np.array(multi_indices(d), dtype=float)
    return mi @ v / d


def _boundary_segments(domain: Domain) -> np.ndarray:
    if isinstance(domain, Polygon):
        segs = []
        for r in domain.rings:
            segs.append(np.stack([r, np.roll(r, -1, axis=0)], axis=1))
        return np.concatenate(segs)
    return domain.boundary_segments()


def _classify_rings(rings, q, diam) -> np.ndarray:
    segs = np.concatenate([np.stack([r, np.roll(r, -1, axis=0)], axis=1) for r in rings])
    return _classify_segments(segs, q, diam)


def _classify_segments(segs: np.ndarray, q: np.ndarray, diam: float) -> np.ndarray:
    """0 outside, 1 inside, 2 boundary (even-odd rule over the segments)."""
    q = np.atleast_2d(np.asarray(q, dtype=float))
    tol = BOUNDARY_RTOL * diam
    x, y = q[:, 0][:, None], q[:, 1][:, None]
    a, b = segs[:, 0, :], segs[:, 1, :]
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    # distance to each segment
    dx, dy = bx - ax, by - ay
    L2 = dx * dx + dy * dy
    s = np.clip(((x - ax) * dx + (y - ay) * dy) / L2, 0.0, 1.0)
    dist2 = (x - (ax + s * dx)) ** 2 + (y - (ay + s * dy)) ** 2
    on_boundary = np.any(dist2 <= tol * tol, axis=1)
    # even-odd crossing count of a ray towards +x
    cond = (ay > y) != (by > y)
    with np.errstate(divide="ignore", invalid="ignore"):
        xint = ax + (y - ay) * dx / np.where(dy == 0, 1.0, dy)
    crossings = np.sum(cond & (x < xint), axis=1)
    out = (crossings % 2).astype(np.int8)
    out[on_boundary] = 2
    return out


def classify_points(domain: Domain, pts) -> np.ndarray:
    """Vectorized classification: array of 0 (outside), 1 (inside), 2 (boundary)."""
    segs = _boundary_segments(domain)
    diam = polygon_metrics(domain).diameter
    return _classify_segments(segs, np.asarray(pts, dtype=float), diam)


def point_in_domain(domain: Domain, p) -> Location:
    code = int(classify_points(domain, np.asarray(p, dtype=float)[None, :])[0])
    return (Location.OUTSIDE, Location.INSIDE, Location.BOUNDARY)[code]


def coverage_weights(domain: Domain, pts) -> np.ndarray:
    """Fraction of a small disc around each point that lies in the domain.

    1 strictly inside, 1/2 on an edge, interior angle / 2 pi at a corner and 0
    outside. Used as the per-sample weight of the Riemann verification sum.
    """
    tri = as_triangulation(domain)
    q = np.atleast_2d(np.asarray(pts, dtype=float))
    diam = polygon_metrics(tri).diameter
    tol = BOUNDARY_RTOL * diam
    w = np.zeros(len(q))
    for n in range(tri.n_triangles):
        v = tri.triangle(n)
        area = 0.5 * ((v[1, 0] - v[0, 0]) * (v[2, 1] - v[0, 1]) - (v[2, 0] - v[0, 0]) * (v[1, 1] - v[0, 1]))
        lo, hi = v.min(axis=0) - tol, v.max(axis=0) + tol
        box = np.all((q >= lo) & (q <= hi), axis=1)
        if not np.any(box):
            continue
        sel = np.nonzero(box)[0]
        b = barycentric(v, q[sel])
        # edge opposite vertex i has length |v[i+1]-v[i+2]|; height_i = 2A/len_i
        lens = np.array([np.linalg.norm(v[(i + 1) % 3] - v[(i + 2) % 3]) for i in range(3)])
        btol = tol * lens / (2 * area)
        zero = np.abs(b) <= btol
        pos = b > btol
        nz = zero.sum(axis=1)
        inside = np.all(pos | zero, axis=1)
        contrib = np.zeros(len(sel))
        contrib[inside & (nz == 0)] = 1.0
        contrib[inside & (nz == 1)] = 0.5
        corner = inside & (nz == 2)
        if np.any(corner):
            angles = np.empty(3)
            for i in range(3):
                e1 = v[(i + 1) % 3] - v[i]
                e2 = v[(i + 2) % 3] - v[i]
                angles[i] = math.atan2(abs(e1[0] * e2[1] - e1[1] * e2[0]), float(e1 @ e2))
            which = np.argmax(~zero[corner], axis=1)
            contrib[corner] = angles[which] / (2 * math.pi)
        w[sel] += contrib
    return w


def polygon_metrics(domain: Domain) -> DomainMetrics:
    if isinstance(domain, Polygon):
        area = signed_area(domain.outer) + sum(signed_area(h) for h in domain.holes)
        verts = np.concatenate(domain.rings)
        mx = my = 0.0
        for r in domain.rings:
            x, y = r[:, 0], r[:, 1]
            xn, yn = np.roll(x, -1), np.roll(y, -1)
            cr = x * yn - xn * y
            mx += float(np.sum((x + xn) * cr)) / 6.0
            my += float(np.sum((y + yn) * cr)) / 6.0
    elif isinstance(domain, Triangulation):
        areas = domain.areas
        area = float(areas.sum())
        cents = domain.points[domain.tris].mean(axis=1)
        mx, my = float(areas @ cents[:, 0]), float(areas @ cents[:, 1])
        verts = domain.points[np.unique(np.array(domain.boundary_edges).ravel())]
    else:
        raise InvalidInput(f"not a domain: {type(domain).__name__}")
    lo, hi = verts.min(axis=0), verts.max(axis=0)
    return DomainMetrics(
        area=float(area),
        diameter=_diam(verts),
        bbox=(float(lo[0]), float(lo[1]), float(hi[0]), float(hi[1])),
        centroid=(mx / area, my / area),
    )


def regular_polygon(n: int, radius: float = 1.0, phase: float = 0.0) -> Polygon:
    """Regular n-gon with vertices on the circle of ``radius`` starting at angle ``phase``."""
    ang = phase + 2 * np.pi * np.arange(n) / n
    return Polygon(np.stack([radius * np.cos(ang), radius * np.sin(ang)], axis=1))


def rectangle(x0: float, y0: float, x1: float, y1: float) -> Polygon:
    return Polygon([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])


def l_domain() -> Polygon:
    return Polygon([[0, 0], [2, 0], [2, 1], [1, 1], [1, 2], [0, 2]])


def polygon_from_vertices(vertices: Sequence) -> Polygon:
    return Polygon(vertices)
