"""Command-line interface: ``polyortho <command> [options]``.

Every command writes one JSON artifact (``--out``) and a run manifest next to
it recording input hashes, library versions and tolerances. Exit status is 0
on success, 2 for invalid input, 3 for numerical failure and 64 for an
unknown command.
"""
from __future__ import annotations

import argparse
import os
import sys
from dataclasses import asdict, dataclass, field

from .errors import InvalidInput, NumericalFailure

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_USAGE = 64

COMMANDS = ("triangulate", "basis", "complement", "verify", "quad", "quad1d", "integrate", "zeros", "moments")

_THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS")


@dataclass
class RunConfig:
    """Validated settings for one command invocation."""

    command: str
    inputs: dict = field(default_factory=dict)
    degree: int | None = None
    method: str | None = None
    graded: bool = False
    fixtures: bool = False
    level: int | None = None
    gram_tol: float = 1e-9
    exactness_tol: float = 1e-9
    zero_tol: float = 1e-8
    grid: int = 1001
    zero_grid: int = 512
    nodes: str | None = None
    triangle: str | None = None
    out: str = "out.json"
    seed: int = 0

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InvalidInput(f"unknown command {self.command!r}")
        for name in ("gram_tol", "exactness_tol", "zero_tol"):
            if not getattr(self, name) > 0:
                raise InvalidInput(f"{name.replace('_', '-')} must be positive")
        if self.degree is not None and not 0 <= self.degree <= 10:
            raise InvalidInput("degree must be in [0, 10]")
        if self.grid < 2 or self.zero_grid < 2:
            raise InvalidInput("grid sizes must be >= 2")


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="polyortho", description="Orthonormal polynomials and quadrature on polygons.")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--out", default=f"{name}.json", help="output JSON path (default: %(default)s)")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = add("triangulate", "ear-clipping triangulation of a polygon")
    sp.add_argument("--polygon", required=True)

    sp = add("basis", "orthonormal basis of degree d")
    sp.add_argument("--polygon", required=True)
    sp.add_argument("--degree", type=int, required=True)
    sp.add_argument("--graded", action="store_true", help="degree-graded basis")
    sp.add_argument("--gram-tol", type=float, default=1e-9)

    sp = add("complement", "next degree level orthogonal to an existing basis")
    sp.add_argument("--basis", required=True)
    sp.add_argument("--gram-tol", type=float, default=1e-9)

    sp = add("verify", "grid-sum check of a basis' orthonormality")
    sp.add_argument("--basis", required=True)
    sp.add_argument("--grid", type=int, default=1001)

    sp = add("quad", "quadrature rule on a polygon")
    sp.add_argument("--polygon", required=True)
    sp.add_argument("--method", required=True, choices=["interp", "moment", "onepoint", "evenred"])
    sp.add_argument("--degree", type=int, default=None)
    sp.add_argument("--basis", default=None, help="graded basis JSON (computed when omitted)")
    sp.add_argument("--nodes", default=None, help="nodes JSON ([[x,y],...] or {'nodes': ...}) or fixture:NAME")
    sp.add_argument("--triangle", default=None, help="x0,y0,x1,y1,x2,y2: use its domain points as nodes")
    sp.add_argument("--fixtures", action="store_true", help="use the bundled published tables where applicable")
    sp.add_argument("--exactness-tol", type=float, default=1e-9)

    sp = add("quad1d", "even-function rule on [-1, 1]")
    sp.add_argument("--nodes", required=True, help="comma separated nodes in (0, 1]")
    sp.add_argument("--degree", type=int, required=True)

    sp = add("integrate", "integral of a polynomial over a polygon")
    sp.add_argument("--polygon", required=True)
    sp.add_argument("--poly", required=True, help="PowerPoly2 JSON")
    sp.add_argument("--method", required=True, choices=["odd", "even", "exact"])

    sp = add("zeros", "zero curves and common zeros of a basis level")
    sp.add_argument("--basis", required=True)
    sp.add_argument("--level", type=int, required=True)
    sp.add_argument("--grid", type=int, default=512)
    sp.add_argument("--zero-tol", type=float, default=1e-8)

    sp = add("moments", "area, first and second moments, level-1 moments")
    sp.add_argument("--polygon", required=True)
    sp.add_argument("--basis", default=None)
    return p


def _config(ns: argparse.Namespace) -> RunConfig:
    inputs = {k: getattr(ns, k) for k in ("polygon", "basis", "poly") if getattr(ns, k, None)}
    nodes = getattr(ns, "nodes", None)
    if nodes and ns.command == "quad" and not nodes.startswith("fixture:"):
        inputs["nodes"] = nodes
    kw = dict(
        command=ns.command,
        inputs=inputs,
        degree=getattr(ns, "degree", None),
        method=getattr(ns, "method", None),
        graded=getattr(ns, "graded", False),
        fixtures=getattr(ns, "fixtures", False),
        level=getattr(ns, "level", None),
        nodes=nodes,
        triangle=getattr(ns, "triangle", None),
        out=ns.out,
        seed=ns.seed,
    )
    for name in ("gram_tol", "exactness_tol", "zero_tol"):
        if hasattr(ns, name):
            kw[name] = getattr(ns, name)
    if hasattr(ns, "grid"):
        kw["zero_grid" if ns.command == "zeros" else "grid"] = ns.grid
    return RunConfig(**kw)


# --- command implementations --------------------------------------------------

def _load_json(path):
    from .io import read_json

    try:
        return read_json(path)
    except FileNotFoundError:
        raise InvalidInput(f"file not found: {path}") from None
    except ValueError as exc:
        raise InvalidInput(f"{path}: malformed JSON ({exc})") from None


def _polygon(cfg):
    from .geometry import domain_from_dict

    data = _load_json(cfg.inputs["polygon"])
    if not isinstance(data, dict):
        raise InvalidInput("polygon JSON must be an object")
    return domain_from_dict(data)


def _basis(path):
    from .orthobasis import OrthoBasis

    data = _load_json(path)
    try:
        return OrthoBasis.from_dict(data)
    except (KeyError, TypeError) as exc:
        raise InvalidInput(f"{path}: not a basis artifact ({exc})") from None


def _cmd_triangulate(cfg):
    from .geometry import as_triangulation

    return as_triangulation(_polygon(cfg)).to_dict()


def _check_gram(b, tol):
    if b.gram_residual > tol:
        raise NumericalFailure(f"Gram residual {b.gram_residual:.2e} exceeds {tol:g}")
    return b.to_dict()


def _cmd_basis(cfg):
    from .orthobasis import build_basis, build_graded

    dom = _polygon(cfg)
    b = build_graded(dom, cfg.degree) if cfg.graded else build_basis(dom, cfg.degree)
    return _check_gram(b, cfg.gram_tol)


def _cmd_complement(cfg):
    from .orthobasis import build_complement

    return _check_gram(build_complement(_basis(cfg.inputs["basis"])), cfg.gram_tol)


def _cmd_verify(cfg):
    from .orthobasis import verify_gram_riemann

    b = _basis(cfg.inputs["basis"])
    dev = verify_gram_riemann(b, cfg.grid)
    return {"grid": cfg.grid, "deviation": dev, "members": len(b), "gram_residual": b.gram_residual}


def _parse_floats(text, n=None, what="values"):
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InvalidInput(f"could not parse {what}: {text!r}") from None
    if n is not None and len(vals) != n:
        raise InvalidInput(f"expected {n} {what}, got {len(vals)}")
    return vals


def _quad_nodes(cfg, d):
    import numpy as np

    from .fixtures import load_raw, rule_arrays
    from .geometry import domain_points

    if cfg.nodes and cfg.triangle:
        raise InvalidInput("give either --nodes or --triangle, not both")
    if cfg.nodes:
        if cfg.nodes.startswith("fixture:"):
            name = cfg.nodes.split(":", 1)[1]
            raw = load_raw()
            if name not in raw or "nodes" not in raw[name]:
                raise InvalidInput(f"unknown fixture rule {name!r}")
            return rule_arrays(name)[0]
        data = _load_json(cfg.nodes)
        pts = data["nodes"] if isinstance(data, dict) else data
        return np.asarray(pts, dtype=float).reshape(-1, 2)
    if cfg.triangle:
        tri = np.array(_parse_floats(cfg.triangle, 6, "triangle coordinates")).reshape(3, 2)
        return domain_points(tri, d)
    raise InvalidInput("this method needs --nodes or --triangle")


def _cmd_quad(cfg):
    from .orthobasis import build_graded
    from .quadrature import interp_rule, moment_match_rule, one_point_rule

    dom = _polygon(cfg)
    if cfg.method == "onepoint":
        b = _basis(cfg.inputs["basis"]) if "basis" in cfg.inputs else build_graded(dom, 1)
        return _certified(one_point_rule(dom, b.level(1)), dom, 4, cfg).to_dict()
    if cfg.method == "evenred":
        return _evenred(cfg, dom)
    if cfg.degree is None:
        raise InvalidInput(f"--degree is required for method {cfg.method}")
    d = cfg.degree
    b = _basis(cfg.inputs["basis"]) if "basis" in cfg.inputs else build_graded(dom, d)
    X = _quad_nodes(cfg, d)
    make = interp_rule if cfg.method == "interp" else moment_match_rule
    return _certified(make(b, X, domain=dom, d=d), dom, min(2 * d + 2, 12), cfg).to_dict()


def _certified(rule, dom, top, cfg):
    """Re-certify ``rule`` with the configured exactness tolerance."""
    from .quadrature import QuadratureRule, certify_exactness

    n = certify_exactness(rule, dom, top, cfg.exactness_tol)
    return QuadratureRule(rule.domain, rule.nodes, rule.weights, n, rule.kind, rule.meta)


def _evenred(cfg, dom):
    from .fixtures import hnodes, load_raw, parse_number, table_polys
    from .orthobasis import build_graded
    from .quadrature import even_reduction_rule, exactness_errors

    if cfg.fixtures:
        import numpy as np

        from .fixtures import hexagon
        from .geometry import polygon_metrics

        if not np.isclose(polygon_metrics(dom).area, polygon_metrics(hexagon()).area, rtol=1e-12, atol=0.0):
            raise InvalidInput("the bundled even-reduction tables belong to the unit-circle hexagon")
        l1, l3 = table_polys("Hd1"), table_polys("Hd3")
        hq = load_raw()["Hquadrature"]
        area, beta1 = parse_number(hq["area"]), parse_number(hq["beta1"])
    else:
        b = _basis(cfg.inputs["basis"]) if "basis" in cfg.inputs else build_graded(dom, 3)
        l1, l3 = b.level(1), b.level(3)
        area = beta1 = None
    X = _quad_nodes(cfg, 3) if (cfg.nodes or cfg.triangle) else hnodes()
    r = even_reduction_rule(dom, l1, l3, X, area=area, beta1=beta1)
    rule = r.as_rule()
    errs = exactness_errors(rule, dom, 8, cfg.exactness_tol)
    even_deg = -1
    for n in range(0, 9, 2):
        if not all(errs[(a, n - a)][0] <= errs[(a, n - a)][1] for a in range(n + 1)):
            break
        even_deg = n
    out = _certified(rule, dom, 8, cfg).to_dict()
    out.update({"beta1": r.beta1, "area": r.area, "reduction_weights": r.w.tolist(), "even_exact_degree": even_deg})
    return out


def _cmd_quad1d(cfg):
    from .legendre1d import even_quadrature_weights

    x = _parse_floats(cfg.nodes, what="nodes")
    if len(x) != cfg.degree:
        raise InvalidInput(f"degree {cfg.degree} needs {cfg.degree} positive nodes, got {len(x)}")
    w0, w = even_quadrature_weights(x)
    return {"nodes": [0.0, *x], "weights": [w0, *w.tolist()], "even_exact_degree": 2 * cfg.degree}


def _cmd_integrate(cfg):
    from .assembly import integrate_power
    from .bb import PowerPoly2
    from .orthobasis import build_graded
    from .reduce2d import integrate_via_reduction, moments

    dom = _polygon(cfg)
    data = _load_json(cfg.inputs["poly"])
    try:
        p = PowerPoly2.from_dict(data)
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"not a polynomial artifact ({exc})") from None
    if cfg.method == "exact":
        return {"value": integrate_power(p, dom), "method": "exact", "residual": {}}
    n = max(p.true_degree(0.0), 2)
    b = build_graded(dom, n)
    res = integrate_via_reduction(p, b, moments(dom, b), cfg.method, details=True)
    return {"value": res.value, "method": cfg.method, "residual": res.reduction.residual.to_dict(),
            "level1": res.reduction.level1_linear.tolist()}


def _cmd_zeros(cfg):
    from .zerosets import common_zeros, zero_contours

    b = _basis(cfg.inputs["basis"])
    fam = b.level(cfg.level)
    dom = b.triangulation
    sets = [zero_contours(p, dom, cfg.zero_grid) for p in fam]
    report = common_zeros(fam, dom, tol=cfg.zero_tol)
    return {
        "level": cfg.level,
        "polylines": [pl.tolist() for cs in sets for pl in cs.polylines],
        "members": [cs.to_dict() for cs in sets],
        "common_zeros": report.to_dict(),
    }


def _cmd_moments(cfg):
    from .orthobasis import build_graded
    from .reduce2d import moments

    dom = _polygon(cfg)
    b = _basis(cfg.inputs["basis"]) if "basis" in cfg.inputs else build_graded(dom, 1)
    return moments(dom, b).to_dict()


_DISPATCH = {
    "triangulate": _cmd_triangulate,
    "basis": _cmd_basis,
    "complement": _cmd_complement,
    "verify": _cmd_verify,
    "quad": _cmd_quad,
    "quad1d": _cmd_quad1d,
    "integrate": _cmd_integrate,
    "zeros": _cmd_zeros,
    "moments": _cmd_moments,
}


def dispatch(cfg: RunConfig) -> int:
    """Run one command, write its artifact and manifest, return the exit status."""
    from .io import write_json, write_manifest

    result = _DISPATCH[cfg.command](cfg)
    write_json(cfg.out, result)
    tolerances = {"gram": cfg.gram_tol, "exactness": cfg.exactness_tol, "zero": cfg.zero_tol}
    config = {k: v for k, v in asdict(cfg).items() if k != "inputs"}
    write_manifest(cfg.out, cfg.command, config, cfg.inputs, [cfg.out], tolerances)
    return EXIT_OK


def _apply_thread_cap() -> None:
    cap = os.environ.get("POLYORTHO_THREADS")
    if cap is None:
        return
    if not cap.isdigit() or int(cap) < 1:
        raise InvalidInput("POLYORTHO_THREADS must be a positive integer")
    for var in _THREAD_VARS:
        os.environ.setdefault(var, cap)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and not argv[0].startswith("-") and argv[0] not in COMMANDS:
        print(f"polyortho: unknown command {argv[0]!r}", file=sys.stderr)
        _parser().print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        ns = _parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    try:
        _apply_thread_cap()
        return dispatch(_config(ns))
    except InvalidInput as exc:
        print(f"polyortho: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalFailure as exc:
        print(f"polyortho: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
