"""Bundled reference tables (published coefficient tables and quadrature rules).

Numbers are stored as strings: decimals exactly as printed, rationals as
``"p/q"``. They are truncated values of one particular orthonormal choice and
are meant for span and regression comparisons, not as exact ground truth.
"""
from __future__ import annotations

import json
from fractions import Fraction
from functools import lru_cache
from importlib import resources

import numpy as np

from .bb import PowerPoly2
from .errors import InvalidInput
from .geometry import Domain, domain_from_dict, regular_polygon

__all__ = ["load_raw", "parse_number", "table_polys", "table_domain", "rule_arrays", "hexagon", "hnodes", "FIXTURE_NAMES"]


def parse_number(s) -> float:
    """Parse ``"p/q"`` or a decimal string into a float (correctly rounded)."""
    if isinstance(s, (int, float)):
        return float(s)
    return float(Fraction(s.strip()))


@lru_cache(maxsize=1)
def load_raw() -> dict:
    text = resources.files("polyortho").joinpath("data/fixtures.json").read_text()
    return json.loads(text)


FIXTURE_NAMES = ("triangle_d1", "tab2", "opd1", "opd1a", "opd1b", "X", "tab9", "tab0", "Hd1", "Hd3")


def hexagon(phase: float = 0.0):
    """Regular hexagon inscribed in the unit circle; default has a vertex at (1, 0)."""
    return regular_polygon(6, 1.0, phase)


def table_domain(name: str) -> Domain:
    entry = load_raw()[name]
    dom = entry["domain"]
    if dom == "hexagon":
        return hexagon()
    return domain_from_dict(dom)


def table_polys(name: str) -> list:
    """Rows of a coefficient table as power-form polynomials."""
    raw = load_raw()
    if name not in raw or "rows" not in raw[name]:
        raise InvalidInput(f"unknown coefficient table {name!r}")
    entry = raw[name]
    mons = [tuple(m) for m in entry["monomials"]]
    out = []
    for row in entry["rows"]:
        out.append(PowerPoly2.from_terms({m: parse_number(v) for m, v in zip(mons, row)}))
    return out


def rule_arrays(name: str) -> tuple:
    """``(nodes (n, 2), weights (n,))`` of a bundled quadrature rule."""
    entry = load_raw()[name]
    nodes = np.array([[parse_number(a), parse_number(b)] for a, b in entry["nodes"]])
    weights = np.array([parse_number(w) for w in entry["weights"]])
    return nodes, weights


def hnodes() -> np.ndarray:
    e = load_raw()["Hnodes"]
    return np.column_stack([[parse_number(v) for v in e["x"]], [parse_number(v) for v in e["y"]]])
