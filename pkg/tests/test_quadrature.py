import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import special_ortho_group

from conftest import DOMAINS, hex_area, unit_triangle
from polyortho.assembly import integrate_power
from polyortho.bb import PowerPoly2, monomial_exponents
from polyortho.errors import InfeasibleRule, InvalidInput, NonUnisolvent, NoRule
from polyortho.fixtures import hnodes, load_raw, parse_number, rule_arrays, table_polys
from polyortho.geometry import domain_points, polygon_from_vertices, rectangle
from polyortho.orthobasis import build_graded
from polyortho.quadrature import (
    QuadratureRule,
    apply_rule,
    certify_exactness,
    even_reduction_rule,
    exactness_errors,
    interp_rule,
    moment_match_rule,
    one_point_rule,
)

HEX_COS_EXACT = 2.0933900330820125  # scipy dblquad reference, see the orientation check in test_fixtures


def cos_sum(x, y):
    return np.cos(x + y)


def test_interp_triangle_vertices_give_sixths():
    tri = unit_triangle()
    rule = interp_rule(build_graded(tri, 1), [(0, 0), (1, 0), (1, 1)])
    np.testing.assert_allclose(rule.weights, [1 / 6] * 3, atol=1e-14)
    assert rule.exact_degree == 1
    assert rule.kind == "interp"


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_interp_degree_zero_single_node(name):
    dom = DOMAINS[name]
    b = build_graded(dom, 1)
    rule = interp_rule(b, [(0.1, 0.05)] if name != "l_domain" else [(0.5, 0.5)], d=0)
    assert rule.weights[0] == pytest.approx(integrate_power(PowerPoly2.constant(1.0), dom), rel=1e-12)


def test_magic1_hexagon_zero_weights_and_cubic_exactness():
    raw = load_raw()["magic1"]
    dom = DOMAINS["hexagon"]
    nodes = np.array([[parse_number(a), parse_number(b)] for a, b in raw["nodes"]])
    lattice = domain_points(np.array(raw["triangle"], float), 3)
    np.testing.assert_allclose(np.unique(nodes, axis=0), np.unique(lattice, axis=0), atol=1e-15)
    rule = interp_rule(build_graded(dom, 3), nodes)
    w = rule.weights
    zero = [k - 1 for k in raw["zero_positions"]]
    assert np.abs(w[zero]).max() <= 1e-6 * np.abs(w).max()
    assert rule.exact_degree >= 3
    printed = np.array([parse_number(v) for v in raw["weights"]])
    nz = [k for k in range(10) if k not in zero]
    np.testing.assert_allclose(w[nz], printed[nz], rtol=1e-2)


def test_interp_rule_errors():
    b = build_graded(unit_triangle(), 1)
    with pytest.raises(InvalidInput):
        interp_rule(b, [(0, 0), (1, 0)])
    with pytest.raises(NonUnisolvent, match=r"\[0, 1, 2\]"):
        interp_rule(b, [(0, 0), (0.5, 0.25), (1, 0.5)])


def test_moment_match_reference_rules():
    for name, d in (("quadrature2", 2), ("sformula2", 3), ("quintic", 5)):
        entry = load_raw()[name]
        dom = polygon_from_vertices(entry["domain"]["outer"])
        nodes, printed = rule_arrays(name)
        rule = moment_match_rule(build_graded(dom, d), nodes)
        np.testing.assert_allclose(rule.weights, printed, atol=1e-12)
        assert rule.exact_degree == entry["exact_degree"]


def test_moment_match_infeasible():
    b = build_graded(rectangle(0, 0, 1, 1), 3)
    with pytest.raises(InfeasibleRule):
        moment_match_rule(b, [(0, 0), (1, 1), (0.5, 0.5)])
    with pytest.raises(InvalidInput):
        moment_match_rule(b, np.zeros((0, 2)))


@pytest.mark.parametrize(
    "name, node, weight",
    [
        ("onepoint_square", (0.0, 0.0), 4.0),
        ("onepoint_triangle", (2 / 3, 1 / 3), 0.5),
    ],
)
def test_one_point_reference_rules(name, node, weight):
    dom = polygon_from_vertices(load_raw()[name]["domain"]["outer"])
    rule = one_point_rule(dom, build_graded(dom, 1))
    np.testing.assert_allclose(rule.nodes[0], node, atol=1e-13)
    assert rule.weights[0] == pytest.approx(weight, rel=1e-13)
    assert rule.exact_degree == 1


def test_one_point_hexagon():
    rule = one_point_rule(DOMAINS["hexagon"], build_graded(DOMAINS["hexagon"], 1))
    np.testing.assert_allclose(rule.nodes[0], (0, 0), atol=1e-13)
    assert rule.weights[0] == pytest.approx(hex_area(), rel=1e-13)


def test_one_point_outside_raises():
    # two level-1 lines meeting outside the domain
    lines = [PowerPoly2(1, [-5.0, 1.0, 0.0]), PowerPoly2(1, [0.0, 0.0, 1.0])]
    with pytest.raises(NoRule):
        one_point_rule(rectangle(0, 0, 1, 1), lines)
    with pytest.raises(NoRule):
        one_point_rule(rectangle(0, 0, 1, 1), [lines[0], lines[0] * 2.0])


def _fixture_even_rule():
    raw = load_raw()["Hquadrature"]
    rule = even_reduction_rule(DOMAINS["hexagon"], table_polys("Hd1"), table_polys("Hd3"), hnodes(),
                               area=parse_number(raw["area"]), beta1=parse_number(raw["beta1"]))
    return rule, raw


def test_even_rule_hexagon_fixture_error_band():
    rule, raw = _fixture_even_rule()
    assert 1e-4 <= abs(rule(cos_sum) - HEX_COS_EXACT) <= 1e-3


def test_even_rule_hexagon_reproduces_printed_weights():
    rule, raw = _fixture_even_rule()
    printed = np.array([parse_number(v) for v in raw["weights"]])
    np.testing.assert_allclose(rule.w, printed, rtol=5e-6)
    nodes = hnodes()
    f = cos_sum(nodes[:, 0], nodes[:, 1])
    from_printed = rule.beta1 * np.sum(printed * (f - 1.0)) + rule.area
    assert rule(cos_sum) == pytest.approx(from_printed, abs=1e-6)


@pytest.mark.xfail(strict=True, reason="the printed weights themselves evaluate to 2.09322, 5.8e-4 from the printed value")
def test_even_rule_hexagon_printed_value():
    rule, raw = _fixture_even_rule()
    assert abs(rule(cos_sum) - parse_number(raw["value_cos"])) <= 5e-4


def test_even_rule_computed_bases():
    dom = DOMAINS["hexagon"]
    b = build_graded(dom, 3)
    rule = even_reduction_rule(dom, b.level(1), b.level(3), hnodes())
    assert rule(lambda x, y: np.ones_like(x)) == pytest.approx(hex_area(), rel=1e-14)
    x4 = PowerPoly2.monomial(4, 0)
    assert rule(lambda x, y: x ** 4) == pytest.approx(integrate_power(x4, dom), abs=1e-8)
    for a in range(0, 5, 2):
        for c in range(0, 5 - a, 2):
            m = PowerPoly2.monomial(a, c)
            assert rule(lambda x, y: x ** a * y ** c) == pytest.approx(integrate_power(m, dom), abs=1e-8)
    as_rule = rule.as_rule()
    assert apply_rule(as_rule, cos_sum) == pytest.approx(rule(cos_sum), rel=1e-13)


def test_even_rule_errors():
    dom = DOMAINS["hexagon"]
    b = build_graded(dom, 3)
    pts = hnodes()
    with pytest.raises(NonUnisolvent):
        even_reduction_rule(dom, b.level(1), b.level(3), np.vstack([pts[:7], pts[:1]]))
    with pytest.raises(InvalidInput):
        even_reduction_rule(dom, b.level(1), b.level(2), pts)


def _lagrange_weights(nodes, domain, d):
    """Integrals of the Lagrange functions from a dense monomial solve."""
    exps = monomial_exponents(d)
    V = np.column_stack([nodes[:, 0] ** a * nodes[:, 1] ** b for a, b in exps])
    mono_int = np.array([integrate_power(PowerPoly2.monomial(a, b), domain) for a, b in exps])
    # L_i has monomial coefficients inv(V)[:, i]
    return np.linalg.solve(V, np.eye(len(nodes))).T @ mono_int


@pytest.mark.parametrize("name", sorted(DOMAINS))
@pytest.mark.parametrize("d", [1, 2, 3])
def test_interp_weights_are_lagrange_integrals(name, d):
    dom = DOMAINS[name]
    nodes = domain_points(np.array([(0.1, 0.1), (0.6, 0.15), (0.2, 0.55)]), d)
    rule = interp_rule(build_graded(dom, d), nodes)
    np.testing.assert_allclose(rule.weights, _lagrange_weights(nodes, dom, d), atol=1e-9)


@settings(max_examples=15, deadline=None)
@given(st.sampled_from(sorted(DOMAINS)), st.integers(0, 10_000))
def test_interp_weights_invariant_under_level_rotation(name, seed):
    dom = DOMAINS[name]
    d = 3
    b = build_graded(dom, d)
    nodes = domain_points(np.array([(0.1, 0.1), (0.6, 0.15), (0.2, 0.55)]), d)
    rotated = [b.level(0)[0]]
    for lv in range(1, d + 1):
        fam = b.level(lv)
        Q = special_ortho_group.rvs(len(fam), random_state=seed + lv)
        for row in Q:
            acc = PowerPoly2(lv, np.zeros_like(fam[0].coeffs))
            for c, P in zip(row, fam):
                acc = acc + c * P
            rotated.append(acc)
    w0 = interp_rule(b, nodes).weights
    w1 = interp_rule(rotated, nodes, domain=dom, d=d).weights
    np.testing.assert_allclose(w1, w0, atol=1e-9)


def test_certify_is_monotone():
    for name in ("quintic", "sformula2", "quadrature2", "onepoint_triangle"):
        entry = load_raw()[name]
        dom = polygon_from_vertices(entry["domain"]["outer"])
        nodes, w = rule_arrays(name)
        rule = QuadratureRule(dom, nodes, w, -1, "moment_match")
        n = certify_exactness(rule, dom, 8)
        assert n == entry["exact_degree"]
        errs = exactness_errors(rule, dom, 8)
        for (a, b), (err, tol) in errs.items():
            if a + b <= n:
                assert err <= tol
        assert any(err > tol for (a, b), (err, tol) in errs.items() if a + b == n + 1)


def test_certify_returns_minus_one_for_bad_constant():
    dom = rectangle(0, 0, 1, 1)
    rule = QuadratureRule(dom, [(0.5, 0.5)], [0.9], -1, "interp")
    assert certify_exactness(rule, dom, 3) == -1


def test_apply_rule_basics():
    dom = rectangle(-1, -1, 1, 1)
    rule = one_point_rule(dom, build_graded(dom, 1))
    assert apply_rule(rule, lambda x, y: np.ones_like(x)) == pytest.approx(rule.weights.sum())
    assert apply_rule(rule, lambda x, y: 3 * x - 2 * y + 1) == pytest.approx(4.0, abs=1e-13)


@pytest.mark.xfail(strict=True, reason="cubic interpolation error on cos(x+y) over the hexagon is about 4e-2 at these nodes")
def test_hexagon_interp_cubic_on_cos():
    dom = DOMAINS["hexagon"]
    nodes = domain_points(np.array([(0, 0), (0.25, 0), (0, 0.25)]), 3)
    rule = interp_rule(build_graded(dom, 3), nodes)
    assert abs(apply_rule(rule, cos_sum) - HEX_COS_EXACT) <= 1e-2


def test_rule_json_round_trip():
    dom = unit_triangle()
    rule = interp_rule(build_graded(dom, 2), domain_points(np.array([(0, 0), (1, 0), (1, 1)], float), 2))
    data = rule.to_dict()
    assert set(data) >= {"kind", "nodes", "weights", "exact_degree", "domain_hash"}
    back = QuadratureRule.from_dict(data, dom)
    np.testing.assert_array_equal(back.weights, rule.weights)
    np.testing.assert_array_equal(back.nodes, rule.nodes)
    assert back.exact_degree == rule.exact_degree
