import math

import numpy as np
import pytest

from conftest import DOMAINS, SYMMETRIC
from polyortho.bb import PowerPoly2
from polyortho.geometry import classify_points, polygon_from_vertices, rectangle
from polyortho.orthobasis import build_graded
from polyortho.zerosets import common_zeros, level_contours, zero_contours

SQ = rectangle(-1, -1, 1, 1)
_BASES = {}


def graded(name, d=5):
    if (name, d) not in _BASES:
        _BASES[(name, d)] = build_graded(DOMAINS[name], d)
    return _BASES[(name, d)]


def rotate_poly(p, theta):
    """``q(x, y) = p(R^{-1}(x, y))`` for the rotation ``R`` by ``theta``."""
    c, s = math.cos(theta), math.sin(theta)
    u = PowerPoly2(1, [0.0, c, s])   # first coordinate of R^{-1}(x, y)
    v = PowerPoly2(1, [0.0, -s, c])
    out = PowerPoly2.constant(0.0)
    for (a, b), coef in p.terms().items():
        term = PowerPoly2.constant(coef)
        for _ in range(a):
            term = term * u
        for _ in range(b):
            term = term * v
        out = out + term
    return out


def test_zero_line_of_x():
    cs = zero_contours(PowerPoly2.monomial(1, 0), SQ)
    pts = np.vstack(cs.polylines)
    assert np.abs(pts[:, 0]).max() <= 1e-6
    assert pts[:, 1].min() <= -1 + 1e-6 and pts[:, 1].max() >= 1 - 1e-6


def test_circle_contour():
    p = PowerPoly2.from_terms({(2, 0): 1.0, (0, 2): 1.0, (0, 0): -0.25})
    cs = zero_contours(p, SQ)
    assert len(cs.polylines) == 1
    line = cs.polylines[0]
    np.testing.assert_allclose(line[0], line[-1], atol=1e-9)
    assert np.abs(np.hypot(line[:, 0], line[:, 1]) - 0.5).max() <= 1e-4
    assert cs.to_dict()["polylines"][0][0] == line[0].tolist()


def test_no_sign_change_is_empty():
    p = PowerPoly2.from_terms({(2, 0): 1.0, (0, 0): 0.5})
    assert zero_contours(p, SQ).polylines == []
    assert zero_contours(PowerPoly2.constant(0.0), SQ).polylines == []


@pytest.mark.parametrize("name", sorted(DOMAINS))
def test_contour_residual_bound(name):
    b = graded(name)
    for lv in range(1, 6):
        for cs in level_contours(b.level(lv), DOMAINS[name], grid_n=256):
            assert cs.max_residual() <= 1e-6
            if cs.polylines:
                pts = np.vstack(cs.polylines)
                assert np.all(classify_points(DOMAINS[name], pts) >= 0)


def test_level1_square_single_zero():
    rep = common_zeros(graded("square11", 1).level(1), SQ)
    assert len(rep.zeros) == 1
    np.testing.assert_allclose(rep.zeros[0], (0, 0), atol=1e-8)
    assert rep.residuals[0] <= 1e-16


@pytest.mark.parametrize("name", SYMMETRIC)
def test_parity_of_common_zeros(name):
    b = graded(name)
    dom = DOMAINS[name]
    for lv in (1, 3, 5):
        rep = common_zeros(b.level(lv), dom)
        assert len(rep.zeros) == 1, lv
        np.testing.assert_allclose(rep.zeros[0], (0, 0), atol=1e-8)
    for lv in (2, 4):
        rep = common_zeros(b.level(lv), dom)
        assert rep.zeros == []
        assert rep.global_min[1] > 0
        d = rep.to_dict()
        assert d["zeros"] == [] and d["global_min"]["value"] > 0


@pytest.mark.parametrize("theta", [0.3, 1.1])
def test_rotation_covariance(theta):
    dom = DOMAINS["triangle"]
    fam = graded("triangle", 1).level(1)
    z0 = common_zeros(fam, dom).zeros
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    rdom = polygon_from_vertices(dom.outer @ R.T)
    rfam = [rotate_poly(P, theta) for P in fam]
    z1 = common_zeros(rfam, rdom).zeros
    assert len(z0) == len(z1) == 1
    np.testing.assert_allclose(z1[0], R @ z0[0], atol=1e-8)


def test_rotated_hexagon_level3_keeps_origin():
    theta = 0.37
    R = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
    dom = polygon_from_vertices(DOMAINS["hexagon"].outer @ R.T)
    fam = [rotate_poly(P, theta) for P in graded("hexagon").level(3)]
    rep = common_zeros(fam, dom)
    assert len(rep.zeros) == 1
    np.testing.assert_allclose(rep.zeros[0], (0, 0), atol=1e-8)


def test_common_zeros_needs_family():
    with pytest.raises(ValueError):
        common_zeros([], SQ)
