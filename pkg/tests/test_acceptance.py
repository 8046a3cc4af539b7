"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The lines are collected in ``RESULTS`` and repeated in the pytest terminal
summary (see ``conftest.pytest_terminal_summary``). Running this file as a
script executes every criterion and prints the same lines.
"""
import math
import time

import numpy as np
import pytest
from scipy.integrate import dblquad

from conftest import DOMAINS, FIXTURE_LEVELS, SYMMETRIC, fixture_span_tolerance
from polyortho.assembly import integrate_power, smoothness_matrix
from polyortho.bb import PowerPoly2, dim
from polyortho.fixtures import hexagon, hnodes, load_raw, parse_number, rule_arrays, table_domain, table_polys
from polyortho.geometry import (
    classify_points,
    domain_points,
    l_domain,
    polygon_from_vertices,
    polygon_metrics,
    rectangle,
    regular_polygon,
    triangulate,
)
from polyortho.legendre1d import even_quadrature, even_quadrature_weights
from polyortho.orthobasis import build_graded, span_residual, verify_gram_riemann
from polyortho.quadrature import (
    QuadratureRule,
    apply_rule,
    certify_exactness,
    even_reduction_rule,
    exactness_errors,
    interp_rule,
    one_point_rule,
)
from polyortho.reduce2d import integrate_via_reduction, moments
from polyortho.zerosets import common_zeros

RESULTS = {}
HEX_COS_EXACT = 2.093390032732584
_BASES = {}


def report(n, ok, detail):
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


def graded(name, d):
    if (name, d) not in _BASES:
        _BASES[(name, d)] = build_graded(DOMAINS[name], d)
    return _BASES[(name, d)]


def test_criterion_01_orthonormality_exact():
    t0 = time.perf_counter()
    worst = 0.0
    for name, dom in DOMAINS.items():
        for d in range(6):
            _BASES[(name, d)] = b = build_graded(dom, d)
            worst = max(worst, b.gram_residual)
    elapsed = time.perf_counter() - t0
    report(1, worst <= 1e-9 and elapsed <= 60, f"max |C^T M C - I| = {worst:.2e} (<= 1e-9), {elapsed:.1f} s (<= 60 s)")


def test_criterion_02_orthonormality_riemann():
    worst = 0.0
    for name in DOMAINS:
        for d in range(6):
            worst = max(worst, verify_gram_riemann(graded(name, d), 1001))
    l_dev = verify_gram_riemann(graded("l_domain", 2), 101)
    ok = worst <= 5e-3 and l_dev <= 5e-4
    report(2, ok, f"1001^2 max deviation {worst:.2e} (<= 5e-3); L-domain d=2 at 101^2: {l_dev:.2e} (<= 5e-4)")


def test_criterion_03_fixture_spans():
    parts, ok = [], True
    for name, (level, d) in sorted(FIXTURE_LEVELS.items()):
        dom = table_domain(name)
        g = build_graded(dom, d)
        target = g.level(level) if level is not None else list(g.powers)
        res = float(span_residual(table_polys(name), target, dom).max())
        tol = fixture_span_tolerance(name)
        ok &= res <= tol
        parts.append(f"{name} {res:.1e}/{tol:.0e}")
    report(3, ok, "; ".join(parts))


def test_criterion_04_quadrature_exactness():
    raw = load_raw()
    got = {}
    for name in ("quadrature2", "sformula2", "quintic"):
        dom = polygon_from_vertices(raw[name]["domain"]["outer"])
        nodes, w = rule_arrays(name)
        got[name] = certify_exactness(QuadratureRule(dom, nodes, w, -1, "moment_match"), dom, 8)
    ok = got == {"quadrature2": 2, "sformula2": 3, "quintic": 5}
    for name, node, weight in (("onepoint_square", (0, 0), 4.0), ("onepoint_triangle", (2 / 3, 1 / 3), 0.5)):
        dom = polygon_from_vertices(raw[name]["domain"]["outer"])
        rule = one_point_rule(dom, build_graded(dom, 1))
        n = certify_exactness(rule, dom, 8)
        got[name] = n
        ok &= n == 1 and np.allclose(rule.nodes[0], node, atol=1e-12) and abs(rule.weights[0] - weight) <= 1e-12
    report(4, ok, ", ".join(f"{k} -> {v}" for k, v in got.items()))


def test_criterion_05_magic1():
    raw = load_raw()["magic1"]
    dom = hexagon()
    area = polygon_metrics(dom).area
    nodes = domain_points(np.array(raw["triangle"], float), 3)
    rule = interp_rule(build_graded(dom, 3), nodes)
    cubic_err = max(e for (a, b), (e, _) in exactness_errors(rule, dom, 3).items())
    w = rule.weights
    small = sorted(int(i) for i in np.nonzero(np.abs(w) <= 1e-6 * np.abs(w).max())[0])
    # positions in the printed (row-by-row) node order
    printed = [(parse_number(a), parse_number(b)) for a, b in raw["nodes"]]
    small_printed = sorted(1 + min(range(10), key=lambda k: np.hypot(*(np.array(printed[k]) - nodes[i]))) for i in small)
    ok = abs(area - 2.598076211353319) <= 1e-12 and cubic_err <= 1e-8 and small_printed == raw["zero_positions"]
    report(5, ok, f"area {area:.15f}; cubic error {cubic_err:.1e} (<= 1e-8); near-zero weights at {small_printed} "
                  f"(reference {raw['zero_positions']})")


def test_criterion_06_legendre_even_rules():
    w0, w = even_quadrature_weights([1.0, 1 / math.sqrt(2)])
    werr = float(np.max(np.abs(np.array([w0, *w]) - [4 / 5, 2 / 15, 16 / 15])))
    x = np.array([0.25, 0.5, 0.75, 1.0])
    cos_err = abs(even_quadrature(x, np.cos(x), 1.0) - 2 * math.sin(1.0))
    exact_err = 0.0
    for d in range(1, 7):
        nodes = np.linspace(1.0 / d, 1.0, d)
        for k in range(0, 2 * d + 1, 2):
            val = even_quadrature(nodes, nodes ** k, 1.0 if k == 0 else 0.0)
            exact_err = max(exact_err, abs(val - 2.0 / (k + 1)))
    ok = werr <= 1e-12 and cos_err <= 1e-8 and exact_err <= 1e-10
    report(6, ok, f"weights error {werr:.1e} (<= 1e-12); |Q(cos) - 2 sin 1| = {cos_err:.2e} (<= 1e-8); "
                  f"even exactness d=1..6 error {exact_err:.1e} (<= 1e-10)")


def test_criterion_07_hexagon_even_rule():
    raw = load_raw()["Hquadrature"]
    dom = hexagon()
    rule = even_reduction_rule(dom, table_polys("Hd1"), table_polys("Hd3"), hnodes(),
                               area=parse_number(raw["area"]), beta1=parse_number(raw["beta1"]))
    err = abs(rule(lambda x, y: np.cos(x + y)) - HEX_COS_EXACT)
    quartic = max(abs(rule(lambda x, y, a=a: x ** a * y ** (4 - a)) - integrate_power(PowerPoly2.monomial(a, 4 - a), dom))
                  for a in range(5))
    g = graded("hexagon", 3)
    computed = even_reduction_rule(dom, g.level(1), g.level(3), hnodes())
    quartic_computed = max(abs(computed(lambda x, y, a=a: x ** a * y ** (4 - a))
                               - integrate_power(PowerPoly2.monomial(a, 4 - a), dom)) for a in range(5))
    ok = 1e-4 <= err <= 1e-3 and quartic <= 1e-8
    report(7, ok, f"|Q(cos(x+y)) - exact| = {err:.3e} (in [1e-4, 1e-3]); even quartic error with bundled tables "
                  f"{quartic:.1e} (<= 1e-8); with computed bases {quartic_computed:.1e}")


def _sup_on_domain(p, dom, n=201):
    xmin, ymin, xmax, ymax = polygon_metrics(dom).bbox
    X, Y = np.meshgrid(np.linspace(xmin, xmax, n), np.linspace(ymin, ymax, n))
    pts = np.column_stack([X.ravel(), Y.ravel()])
    pts = np.vstack([pts[classify_points(dom, pts) >= 0], dom.outer])
    return float(np.max(np.abs(p(pts))))


def test_criterion_08_reduction_equivalence():
    worst_ratio = 0.0
    worst_recon = 0.0
    for k, (name, dom) in enumerate(sorted(DOMAINS.items())):
        b = graded(name, 6)
        mt = moments(dom, b)
        rng = np.random.default_rng(1000 + k)
        for parity in ("odd", "even"):
            for i in range(50):
                deg = 1 + i % 6
                p = PowerPoly2(deg, rng.normal(size=dim(deg)))
                res = integrate_via_reduction(p, b, mt, parity, details=True)
                err = abs(res.value - integrate_power(p, dom))
                worst_ratio = max(worst_ratio, err / (1e-9 * mt.area * _sup_on_domain(p, dom)))
                worst_recon = max(worst_recon, res.reduction.reconstruction_error(p))
    ok = worst_ratio <= 1.0 and worst_recon <= 1e-9
    report(8, ok, f"max error / (1e-9 A ||p||) = {worst_ratio:.2e} (<= 1); reconstruction {worst_recon:.1e} (<= 1e-9)")


def test_criterion_09_xu_parity():
    ok, parts = True, []
    for name in SYMMETRIC:
        b = graded(name, 5)
        dom = DOMAINS[name]
        for lv in (1, 3, 5):
            rep = common_zeros(b.level(lv), dom)
            good = len(rep.zeros) == 1 and np.max(np.abs(rep.zeros[0])) <= 1e-8
            ok &= good
            if not good:
                parts.append(f"{name} level {lv}: {len(rep.zeros)} zeros")
        mins = []
        for lv in (2, 4):
            rep = common_zeros(b.level(lv), dom)
            ok &= not rep.zeros and rep.global_min[1] > 0
            mins.append(rep.global_min[1])
        parts.append(f"{name} even-level global_min {min(mins):.2e}")
    report(9, ok, "odd levels: single zero at origin; " + "; ".join(parts))


def _exp_integral(tri):
    a, b, c = tri
    jac = abs((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))

    def f(v, u):
        p = a + u * (b - a) + v * (c - a)
        return math.exp(p[0] + p[1])

    val, _ = dblquad(f, 0, 1, 0, lambda u: 1 - u, epsabs=1e-16, epsrel=1e-13)
    return jac * val


def convergence_slopes(H=0.5, corner=(0.2, 0.1)):
    """Log-error slopes of degree-d interp rules on shrinking triangles of diameter h."""
    shape = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
    shape /= max(np.linalg.norm(shape[i] - shape[j]) for i in range(3) for j in range(3))
    out = {}
    for d in (2, 3):
        hs, errs = [], []
        for k in range(3):
            h = H / 2 ** k
            tri = np.asarray(corner) + h * shape
            dom = polygon_from_vertices(tri)
            rule = interp_rule(build_graded(dom, d), domain_points(tri, d))
            errs.append(abs(apply_rule(rule, lambda x, y: np.exp(x + y)) - _exp_integral(tri)))
            hs.append(h)
        out[d] = (float(np.polyfit(np.log(hs), np.log(errs), 1)[0]), errs)
    return out


def test_criterion_10_convergence_order():
    slopes = convergence_slopes()
    ok = all(abs(s - (d + 2)) <= 0.5 for d, (s, _) in slopes.items())
    report(10, ok, "; ".join(f"d={d}: slope {s:.2f} (target {d + 2} +- 0.5)" for d, (s, _) in slopes.items()))


def test_criterion_11_nullity():
    tris = [triangulate(DOMAINS[name]) for name in sorted(DOMAINS)] + [triangulate(regular_polygon(8), start=3)]
    bad = []
    for tri in tris:
        for d in range(6):
            H = smoothness_matrix(tri, d, d).dense()
            rank = np.linalg.matrix_rank(H) if H.size else 0
            if tri.n_triangles * dim(d) - rank != dim(d):
                bad.append((tri.n_triangles, d))
    report(11, not bad, f"nullity == (d+1)(d+2)/2 on {len(tris)} triangulations, d=0..5" + (f"; mismatches {bad}" if bad else ""))


if __name__ == "__main__":
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                pass
