"""Exact Bernstein integrals, block mass matrices and C^r smoothness constraints."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .bb import PowerPoly2, SplineVector, dim, index_of, multi_indices, polys_to_spline_matrix, power_to_bb
from .errors import InvalidInput
from .geometry import Domain, Triangulation, as_triangulation, barycentric

__all__ = [
    "MassMatrix",
    "SmoothnessMatrix",
    "bernstein_pair_integral",
    "mass_block",
    "mass_matrix",
    "smoothness_matrix",
    "integrate_spline",
    "integrate_power",
    "gram_exact",
    "l2_gram",
]


def bernstein_pair_integral(d: int, a: Sequence[int], b: Sequence[int], area: float) -> float:
    """Exact integral of ``B_a * B_b`` over a triangle of the given area."""
    if sum(a) != d or sum(b) != d or min(*a, *b) < 0:
        raise InvalidInput(f"multi-indices {tuple(a)}, {tuple(b)} do not have degree {d}")
    if area <= 0:
        raise InvalidInput("triangle area must be positive")
    num = math.comb(a[0] + b[0], a[0]) * math.comb(a[1] + b[1], a[1]) * math.comb(a[2] + b[2], a[2])
    den = math.comb(2 * d, d) * math.comb(2 * d + 2, 2)
    return num / den * area


@lru_cache(maxsize=None)
def _unit_block(d: int) -> np.ndarray:
    mi = multi_indices(d)
    D = len(mi)
    M = np.empty((D, D))
    for p in range(D):
        for q in range(p, D):
            M[p, q] = M[q, p] = bernstein_pair_integral(d, mi[p], mi[q], 1.0)
    M.setflags(write=False)
    return M


def mass_block(d: int, area: float) -> np.ndarray:
    if area <= 0:
        raise InvalidInput("triangle area must be positive")
    return _unit_block(d) * area


@dataclass(frozen=True)
class MassMatrix:
    degree: int
    blocks: np.ndarray  # (N, D, D)

    @property
    def n_blocks(self) -> int:
        return len(self.blocks)

    def dense(self) -> np.ndarray:
        import scipy.linalg

        return scipy.linalg.block_diag(*self.blocks)

    def matmul(self, c: np.ndarray) -> np.ndarray:
        """``M @ c`` for a vector or a column-stacked matrix."""
        N, D, _ = self.blocks.shape
        c = np.asarray(c, dtype=float)
        shape = c.shape
        cb = c.reshape(N, D, -1)
        return np.einsum("nij,njk->nik", self.blocks, cb).reshape(shape)


def mass_matrix(tri: Triangulation, d: int) -> MassMatrix:
    if d < 0:
        raise InvalidInput("degree must be >= 0")
    areas = tri.areas
    if np.any(areas <= 0):
        raise InvalidInput(f"triangle {int(np.argmin(areas))} has non-positive area")
    unit = _unit_block(d)
    return MassMatrix(d, areas[:, None, None] * unit[None, :, :])


@dataclass(frozen=True)
class SmoothnessMatrix:
    rows: sp.csr_matrix
    order: int
    degree: int

    @property
    def shape(self) -> tuple:
        return self.rows.shape

    def dense(self) -> np.ndarray:
        return self.rows.toarray()


def _local_column(tri_row, perm_vertices, local_mi, d, offset) -> int:
    """Column of the coefficient whose exponents are given per *global* vertex."""
    exps = [0, 0, 0]
    for v, e in zip(perm_vertices, local_mi):
        exps[list(tri_row).index(v)] = e
    return offset + index_of(tuple(exps), d)


def smoothness_matrix(tri: Triangulation, d: int, r: int) -> SmoothnessMatrix:
    """C^r conditions across every interior edge.

    For T = <v1, v2, v3> and T~ = <v4, v3, v2> sharing the edge <v2, v3>, the
    coefficient of T~ with exponents (m, j, k) at (v4, v3, v2) must equal the
    blossom of the polynomial on T at (v4^m, v3^j, v2^k):
    sum over nu+mu+kappa = m of B^m_{nu,mu,kappa}(lambda) c_{nu, mu+k, kappa+j},
    where lambda are the barycentric coordinates of v4 in T.
    """
    if not 0 <= r <= d:
        raise InvalidInput(f"smoothness order r={r} must satisfy 0 <= r <= d={d}")
    D = dim(d)
    rows, cols, vals = [], [], []
    nrow = 0
    for (a, b), t_left, t_right in tri.interior_edges:
        tl, tr = tri.tris[t_left], tri.tris[t_right]
        v1 = int(next(v for v in tl if v not in (a, b)))
        v4 = int(next(v for v in tr if v not in (a, b)))
        v2, v3 = a, b
        lam = barycentric(tri.points[[v1, v2, v3]], tri.points[v4])
        for m in range(r + 1):
            sub = multi_indices(m)
            weights = [
                math.factorial(m) / (math.factorial(n) * math.factorial(u) * math.factorial(k))
                * lam[0] ** n * lam[1] ** u * lam[2] ** k
                for (n, u, k) in sub
            ]
            for j in range(d - m, -1, -1):
                k = d - m - j
                rows.append(nrow)
                cols.append(_local_column(tr, (v4, v3, v2), (m, j, k), d, t_right * D))
                vals.append(1.0)
                for (nu, mu, ka), w in zip(sub, weights):
                    rows.append(nrow)
                    cols.append(_local_column(tl, (v1, v2, v3), (nu, mu + k, ka + j), d, t_left * D))
                    vals.append(-w)
                nrow += 1
    H = sp.csr_matrix((vals, (rows, cols)), shape=(nrow, tri.n_triangles * D))
    H.sum_duplicates()
    return SmoothnessMatrix(H, r, d)


def integrate_spline(s: SplineVector) -> float:
    """Each triangle contributes A_T / C(d+2, 2) times the sum of its coefficients."""
    tri = s.triangulation
    N, D = tri.n_triangles, dim(s.degree)
    sums = s.coeffs.reshape(N, D).sum(axis=1)
    return float(math.fsum(tri.areas * sums) / math.comb(s.degree + 2, 2))


def integrate_power(p: PowerPoly2, domain: Domain) -> float:
    """Exact integral of a power-form polynomial via its BB form on each triangle."""
    tri = as_triangulation(domain)
    parts = []
    for t in range(tri.n_triangles):
        patch = power_to_bb(p, tri.triangle(t))
        parts.append(tri.areas[t] * math.fsum(patch.coeffs) / math.comb(p.degree + 2, 2))
    return math.fsum(parts)


def gram_exact(coeffs: np.ndarray, m: MassMatrix) -> np.ndarray:
    """``C^T M C`` for spline coefficient columns ``C``."""
    C = np.asarray(coeffs, dtype=float)
    if C.ndim == 1:
        C = C[:, None]
    N, D, _ = m.blocks.shape
    if C.shape[0] != N * D:
        raise InvalidInput(f"coefficient rows {C.shape[0]} do not match mass matrix size {N * D}")
    G = C.T @ m.matmul(C)
    return 0.5 * (G + G.T)


def l2_gram(polys: Sequence[PowerPoly2], domain: Domain, others: Sequence[PowerPoly2] | None = None) -> np.ndarray:
    """Exact L2(domain) inner products between power-form polynomials."""
    tri = as_triangulation(domain)
    everything = list(polys) + list(others or [])
    deg = max((p.degree for p in everything), default=0)
    A = polys_to_spline_matrix(polys, tri, deg)
    M = mass_matrix(tri, deg)
    if others is None:
        return gram_exact(A, M)
    B = polys_to_spline_matrix(others, tri, deg)
    return A.T @ M.matmul(B)
