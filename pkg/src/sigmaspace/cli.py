"""Command-line front end.

Points are comma-separated reals (``0,0``), vectors are ``origin:end``
(``0,0:1,0``) and geometries are JSON objects given inline or as
``@file.json``. Reports go to stdout or ``--out`` as JSON or CSV.

Exit status: 0 on success, 1 on a usage error (bad flags, malformed
geometry, wrong point dimension), 2 when the computation itself fails
(domain violation, imaginary modulus, solver failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import chains, core, euclidicity, multivariance, objects, riemann
from .core import GeometryError, GeometrySpec


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# argument parsing helpers

def parse_point(text: str) -> np.ndarray:
    try:
        vals = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"bad point {text!r}: expected comma-separated reals") from None
    if not vals or not np.all(np.isfinite(vals)):
        raise UsageError(f"bad point {text!r}")
    return np.array(vals)


def parse_vector(text: str):
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"bad vector {text!r}: expected origin:end")
    return parse_point(parts[0]), parse_point(parts[1])


def load_geometry(text: str) -> GeometrySpec:
    if text.startswith("@"):
        try:
            text = Path(text[1:]).read_text()
        except OSError as exc:
            raise UsageError(f"cannot read geometry file: {exc}") from None
    try:
        return GeometrySpec.from_json(text)
    except (GeometryError, TypeError, KeyError) as exc:
        raise UsageError(f"invalid geometry: {exc}") from None


def _pt(geom, text, name):
    if text is None:
        raise UsageError(f"--{name} is required")
    P = parse_point(text)
    if len(P) != geom.dim:
        raise UsageError(f"--{name} has {len(P)} coordinates, geometry dim is {geom.dim}")
    return P


def _vec(geom, text, name):
    if text is None:
        raise UsageError(f"--{name} is required")
    o, e = parse_vector(text)
    for P in (o, e):
        if len(P) != geom.dim:
            raise UsageError(f"--{name} has {len(P)} coordinates, geometry dim is {geom.dim}")
    return o, e


def _geom(args) -> GeometrySpec:
    if args.geom is None:
        raise UsageError("--geom is required")
    return load_geometry(args.geom)


def _grid(text, geom, around):
    if text is None:
        return objects.Grid.around(around, pad=0.5, n=101)
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError("--grid must be lo:hi:n, e.g. -0.5,-0.5:1.5,0.5:400")
    lo, hi = parse_point(parts[0]), parse_point(parts[1])
    if len(lo) != geom.dim or len(hi) != geom.dim:
        raise UsageError("--grid bounds must match the geometry dimension")
    try:
        n = int(parts[2])
    except ValueError:
        raise UsageError("--grid resolution must be an integer") from None
    return objects.Grid(lo, hi, n)


def _fmt(x: float) -> str:
    return "%.17g" % x


# commands; each returns (payload dict, csv text or None, plain text or None)

def cmd_sigma(args):
    g = _geom(args)
    if args.v is not None:
        v1 = _vec(g, args.v, "v")
        v2 = _vec(g, args.w, "w") if args.w is not None else v1
        val = float(core.scalar_product(g, v1, v2))
        return {"scalar_product": val}, None, _fmt(val)
    val = float(core.sigma(g, _pt(g, args.p, "p"), _pt(g, args.q, "q")))
    return {"sigma": val}, None, _fmt(val)


def cmd_check_euclidean(args):
    g = _geom(args)
    grid = euclidicity.CoordinateGrid(seed=args.seed)
    rep = euclidicity.euclidicity_report(g, args.n, args.samples, args.seed, grid,
                                         tol=args.tol if args.tol is not None else 1e-6)
    return rep.to_dict(), None, None


def _cloud_payload(cloud):
    try:
        dim = objects.estimate_dimension(cloud)
    except ValueError:
        dim = None
    payload = cloud.to_dict()
    payload["est_dimension"] = dim
    return payload, cloud.to_csv(), None


def cmd_scan_segment(args):
    g = _geom(args)
    P0, P1 = _pt(g, args.p0, "p0"), _pt(g, args.p1, "p1")
    grid = _grid(args.grid, g, np.array([P0, P1]))
    return _cloud_payload(objects.scan_segment(g, P0, P1, grid, args.tol))


def cmd_scan_straight(args):
    g = _geom(args)
    P0, P1, Q0 = _pt(g, args.p0, "p0"), _pt(g, args.p1, "p1"), _pt(g, args.q0, "q0")
    grid = _grid(args.grid, g, np.array([P0, P1, Q0]))
    return _cloud_payload(objects.scan_straight(g, P0, P1, Q0, grid, args.tol))


def _solver(args):
    kw = {"seed": args.seed, "starts": args.starts}
    if args.tol is not None:
        kw["tol"] = args.tol
    return multivariance.SolverConfig(**kw)


def cmd_solve_eqv(args):
    g = _geom(args)
    sols = multivariance.solve_equivalent(g, _vec(g, args.v, "v"), _pt(g, args.q0, "q0"), _solver(args))
    csv = objects.PointCloud(sols.solutions, np.full(len(sols.solutions), sols.residual_max), {}).to_csv()
    return sols.to_dict(), csv, None


def cmd_transitivity(args):
    g = _geom(args)
    rep = multivariance.transitivity_probe(g, _vec(g, args.v, "v"), _pt(g, args.q0, "q0"),
                                           _pt(g, args.r0, "r0"), _solver(args), args.seed,
                                           args.chains)
    return rep.to_dict(), None, None


def _chart(g):
    if g.kind != "riemannian_chart":
        raise UsageError("this command needs a riemannian_chart geometry")
    return g.chart()


def cmd_riemann_sigma(args):
    g = _geom(args)
    chart = _chart(g)
    P, Q = _pt(g, args.p, "p"), _pt(g, args.q, "q")
    paths = riemann.geodesics(chart, P, Q)
    val = riemann.sigma_R(chart, P, Q, branch=args.branch)
    best = min(paths, key=lambda p: p.length)
    payload = {"sigma": val, "branch": args.branch, "path": best.to_dict()}
    return payload, best.to_csv(), None


def cmd_eikonal_check(args):
    g = _geom(args)
    target = g.chart() if g.kind == "riemannian_chart" else g
    res = riemann.eikonal_residual(target, _pt(g, args.x, "x"), _pt(g, args.x_fixed, "x-fixed"), args.h)
    return {"residual": float(res)}, None, _fmt(res)


def cmd_punctured(args):
    g = _geom(args) if args.geom is not None else GeometrySpec.punctured_euclidean()
    if g.kind != "punctured_euclidean":
        raise UsageError("punctured needs a punctured_euclidean geometry")
    hole = (g.params["center"], g.params["radius"])
    P, Q = _pt(g, args.p, "p"), _pt(g, args.q, "q")
    val = float(riemann.punctured_sigma(hole, P, Q))
    return {"sigma": val, "length": float(riemann.punctured_length(hole, P, Q))}, None, _fmt(val)


def cmd_chain_sim(args):
    g = _geom(args)
    link = _vec(g, args.link, "link") if args.link else (np.zeros(g.dim), np.eye(g.dim)[0])
    stats = chains.simulate_ensemble(g, link, args.steps, args.chains, args.seed, rule=args.rule,
                                     check_tol=args.tol if args.tol is not None else 1e-6)
    return stats.to_dict(), stats.to_csv(), None


def cmd_factor_check(args):
    s = parse_point(args.s)
    if len(s) != 3:
        raise UsageError("--s takes three sigma values s01,s0R,s1R")
    fc = core.factorization_check(*s, coefficient=args.coeff)
    payload = fc._asdict()
    payload.update(s01=s[0], s0R=s[1], s1R=s[2], coefficient=args.coeff)
    if args.tol is not None:
        payload["holds"] = abs(fc.residual) <= args.tol * max(1.0, abs(fc.lhs))
    return payload, None, None


COMMANDS = {
    "sigma": (cmd_sigma, "evaluate sigma(P,Q) or a scalar product"),
    "check-euclidean": (cmd_check_euclidean, "run the Euclidicity conditions I-III"),
    "scan-segment": (cmd_scan_segment, "point cloud of the segment between two points"),
    "scan-straight": (cmd_scan_straight, "point cloud of the straight through Q0 along P0P1"),
    "solve-eqv": (cmd_solve_eqv, "endpoints Q1 with Q0Q1 equivalent to v"),
    "transitivity": (cmd_transitivity, "probe transitivity of vector equivalence"),
    "riemann-sigma": (cmd_riemann_sigma, "world function of a Riemannian chart via geodesics"),
    "eikonal-check": (cmd_eikonal_check, "residual of grad(sigma).g^-1.grad(sigma) = 2 sigma"),
    "punctured": (cmd_punctured, "world function of the plane with a disk removed"),
    "chain-sim": (cmd_chain_sim, "ensemble statistics of stochastic world chains"),
    "factor-check": (cmd_factor_check, "audit the collinearity factorization identity"),
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--geom", help="geometry JSON, inline or @file.json")
    common.add_argument("--tol", type=float, help="tolerance (command specific default)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--out", help="write output to this path instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="output format")

    parser = _Parser(prog="sigmaspace", description="Geometry from a world function.")
    sub = parser.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    p = {name: sub.add_parser(name, parents=[common], help=h, description=h)
         for name, (_, h) in COMMANDS.items()}

    p["sigma"].add_argument("--p", help="first point")
    p["sigma"].add_argument("--q", help="second point")
    p["sigma"].add_argument("--v", help="first vector origin:end (scalar product mode)")
    p["sigma"].add_argument("--w", help="second vector (default: --v)")
    p["check-euclidean"].add_argument("--n", type=int, help="dimension to test (default geometry dim)")
    p["check-euclidean"].add_argument("--samples", type=int, default=500, help="sampled tuples")
    for name in ("scan-segment", "scan-straight"):
        p[name].add_argument("--p0", help="first endpoint")
        p[name].add_argument("--p1", help="second endpoint")
        p[name].add_argument("--grid", help="lo:hi:n grid box and points per axis")
    p["scan-straight"].add_argument("--q0", help="point the straight passes through")
    for name in ("solve-eqv", "transitivity"):
        p[name].add_argument("--v", help="generator vector origin:end")
        p[name].add_argument("--q0", help="origin of the unknown vector")
        p[name].add_argument("--starts", type=int, default=64, help="Newton starts")
    p["transitivity"].add_argument("--r0", help="origin of the second transfer")
    p["transitivity"].add_argument("--chains", type=int, default=100, help="sampled chains")
    p["riemann-sigma"].add_argument("--p", help="first point")
    p["riemann-sigma"].add_argument("--q", help="second point")
    p["riemann-sigma"].add_argument("--branch", choices=("principal", "all_found"), default="principal")
    p["eikonal-check"].add_argument("--x", help="evaluation point")
    p["eikonal-check"].add_argument("--x-fixed", dest="x_fixed", help="fixed second argument")
    p["eikonal-check"].add_argument("--h", type=float, help="finite-difference step")
    p["punctured"].add_argument("--p", help="first point")
    p["punctured"].add_argument("--q", help="second point")
    p["chain-sim"].add_argument("--link", help="initial link origin:end (default unit time step)")
    p["chain-sim"].add_argument("--steps", type=int, default=1000, help="links per chain")
    p["chain-sim"].add_argument("--chains", type=int, default=4000, help="number of chains")
    p["chain-sim"].add_argument("--rule", choices=chains.RULES, default="fixed",
                                help="reference link for each step")
    p["factor-check"].add_argument("--s", required=True, help="s01,s0R,s1R")
    p["factor-check"].add_argument("--coeff", type=float, default=2.0,
                                   help="coefficient of the sqrt(s01 s0R) term")
    return parser


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        func = COMMANDS[args.command][0]
        payload, csv, plain = func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (GeometryError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.format == "csv":
        if csv is None:
            print(f"error: {args.command} has no CSV output", file=sys.stderr)
            return 1
        _emit(csv, args.out)
    elif args.format is None and plain is not None:
        _emit(plain + "\n", args.out)
    else:
        _emit(json.dumps(payload) + "\n", args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
