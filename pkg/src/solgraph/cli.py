"""Command-line front end: ``solgraph <command> [options]``.

Every run writes its CSV/SVG artifacts and a ``manifest.csv`` (version,
config echo, sha256 checksums) into the output directory (``--out``,
overridden by the SOLGRAPH_OUT environment variable).

Exit codes: 0 success, 1 numerical failure (a ``diagnostic.csv`` is
written), 2 usage error.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from . import _validation as v
from .curves import (
    CurveParams,
    Point,
    UnsupportedConfiguration,
    constants,
    gamma,
    k_of_h,
    lbar,
    p3_parameter,
    sample_curve,
)
from .domains import (
    AdmissibleDomain,
    ConstructionError,
    DomainError,
    TANGENCY_CASES,
    build_a_empty,
    build_b_empty,
    domain_from_json,
    tangency_case,
    domain_to_json,
)
from .exhaustion import MODES as EXHAUSTION_MODES, divergence_mask, solve_exhaustion
from .flux import flux_report
from .geometry import pieces_diameter
from .mesh import MeshError, make_mesh, mesh_to_text
from .numerics import BracketError, ConvergenceError, QuadratureSpec, integrate_g
from .omega import OmegaGeometryError, build_omega_s, omega_quantities, s_star, s_zero
from .polygons import MODES as CHECK_MODES, check_conditions
from .reports import Marker, Polyline, atomic_write_text, emit_csv, emit_field, emit_manifest, emit_svg
from .solver import SolveError, SolverOptions, solve_dirichlet

COMMANDS = ("constants", "curve", "domain-build", "domain-check", "omega-s", "solve", "exhaust", "flux")
OMEGA_LABELS = ("A+", "B_E", "A-", "B_D")
NUMERICAL_ERRORS = (SolveError, ConvergenceError, BracketError, MeshError, OmegaGeometryError, UnsupportedConfiguration)


class UsageError(ValueError):
    """Invalid configuration (exit status 2)."""


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="solgraph_out", help="output directory (SOLGRAPH_OUT overrides)")
    p.add_argument("--seed", type=int, default=0, help="seed for randomized steps (default 0)")
    p.add_argument("--tol-quad", type=float, default=1e-10, help="quadrature abs/rel tolerance (default 1e-10)")
    p.add_argument("--tol-newton", type=float, default=1e-10, help="Newton max-residual tolerance (default 1e-10)")
    p.add_argument("--tol-slack", type=float, default=1e-8, help="relative slack tolerance of inequalities (default 1e-8)")
    p.add_argument("--tol-eq", type=float, default=1e-6, help="relative tolerance of the c-empty equality (default 1e-6)")
    p.add_argument("--max-newton", type=int, default=200, help="Newton iteration cap (default 200)")


def _add_domain_source(p: argparse.ArgumentParser) -> None:
    p.add_argument("--domain", required=True, help="domain JSON file written by domain-build")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solgraph", description="Jenkins-Serrin toolkit for CMC graphs in Sol3.")
    parser.add_argument("--version", action="version", version=f"solgraph {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("constants", help="L_H, M_H, T_H, K(H) and residuals")
    p.add_argument("--H", type=float, nargs="+", default=[1.0])
    _add_common(p)

    p = sub.add_parser("curve", help="one loop of a 2H/y-curve with its distinguished points")
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--z", type=float, default=1.0, help="height of the lowest point")
    p.add_argument("--w", type=float, default=0.0, help="abscissa of the lowest point")
    p.add_argument("--samples", type=int, default=2000)
    _add_common(p)

    p = sub.add_parser("domain-build", help="construct an admissible domain and write it as JSON")
    p.add_argument("--kind", choices=("b-empty", "a-empty", "omega-s"), required=True)
    p.add_argument("--H", type=float, default=1.0)
    p.add_argument("--x0", type=float, default=0.0, help="b-empty: abscissa of the centre point")
    p.add_argument("--y0", type=float, default=1.0, help="b-empty: height of the centre; omega-s: loop base height")
    p.add_argument("--d", type=float, default=None, help="diagonal length (b-empty, a-empty)")
    p.add_argument("--eps", type=float, default=None, help="side length (b-empty, a-empty)")
    p.add_argument("--z", type=float, default=1.0, help="a-empty: base height of the curve")
    p.add_argument("--t", type=float, default=-math.pi / 4, help="a-empty: curve parameter of the centre")
    p.add_argument("--case", choices=TANGENCY_CASES, default=None, help="a-empty: tangency case (inferred from --t)")
    p.add_argument("--s", type=float, default=None, help="omega-s: parameter s (default s*)")
    _add_common(p)

    p = sub.add_parser("domain-check", help="validate a domain and evaluate the polygon inequalities")
    _add_domain_source(p)
    p.add_argument("--mode", choices=CHECK_MODES, required=True)
    _add_common(p)

    p = sub.add_parser("omega-s", help="table of the s-family quantities with s0 and s*")
    p.add_argument("--H", type=float, default=0.5)
    p.add_argument("--y0", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=24, help="number of grid values of s in (0, s0)")
    _add_common(p)

    for name, helptext in (("solve", "Dirichlet solve with constant boundary data"), ("flux", "fluxes and balance at h and h/2")):
        p = sub.add_parser(name, help=helptext)
        _add_domain_source(p)
        p.add_argument("--H", type=float, default=None, help="mean curvature (default: the domain's H)")
        p.add_argument("--h", type=float, default=None, help="mesh size (default diam/50)")
        p.add_argument("--bc", type=float, default=0.0, help="constant boundary value")
        _add_common(p)

    p = sub.add_parser("exhaust", help="exhaustion sequence with data +-n")
    _add_domain_source(p)
    p.add_argument("--mode", choices=EXHAUSTION_MODES, required=True)
    p.add_argument("--n", default="1,2,4,8,16,32", help="comma-separated increasing n values")
    p.add_argument("--h", type=float, default=None, help="mesh size (default diam/40)")
    p.add_argument("--c-value", type=float, default=0.0, help="bounded data on C arcs")
    p.add_argument("--cutoff", type=float, default=None, help="divergence cutoff (default 0.9 * max n)")
    _add_common(p)
    return parser


# ---------------------------------------------------------------------------
# commands


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(args.tol_quad, args.tol_quad)


def _opts(args) -> SolverOptions:
    return SolverOptions(newton_tol=args.tol_newton, max_newton=args.max_newton)


def _load_domain(path: str) -> AdmissibleDomain:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read domain file: {exc}") from exc
    return domain_from_json(text)


def _diameter(domain) -> float:
    return pieces_diameter(domain.pieces)


def cmd_constants(args, out: Path) -> list[str]:
    rows = []
    quad = _quad(args)
    for H in args.H:
        v.check_H(H)
        k = constants(H, quad)
        K, t_min = k_of_h(H)
        rows.append(
            {
                "H": H,
                "L": k.L,
                "M": k.M,
                "T": k.T,
                "T_residual": integrate_g(H, -1.0, k.T, quad),
                "lbar_1": lbar(H, 1.0),
                "lbar_1_check": lbar(H, 1.0) - 2 * math.exp(-1 / (2 * H)) * k.L,
                "K": K,
                "K_argmin": t_min,
            }
        )
    emit_csv(rows, out / "constants.csv")
    return ["constants.csv"]


def curve_points(curve: CurveParams) -> list[tuple[str, float]]:
    return [
        ("P1", 0.0),
        ("P2+", -math.pi / 2),
        ("P2-", math.pi / 2),
        ("P3", p3_parameter(curve.H)),
        ("P4+", math.pi),
        ("P4-", -math.pi),
    ]


def cmd_curve(args, out: Path) -> list[str]:
    v.check_H(args.H)
    v.check_real("z", args.z, positive=True)
    if args.samples < 2:
        raise UsageError("--samples must be at least 2")
    curve = CurveParams(args.w, args.z, args.H)
    ts = np.linspace(-math.pi, math.pi, args.samples)
    xy = sample_curve(curve, ts)
    emit_csv(({"t": t, "x": x, "y": y} for t, (x, y) in zip(ts, xy)), out / "curve.csv", ["t", "x", "y"])
    pts = []
    for label, t in curve_points(curve):
        p = gamma(curve, t)
        pts.append({"label": label, "t": t, "x": p.x, "y": p.y})
    emit_csv(pts, out / "points.csv", ["label", "t", "x", "y"])
    dense = xy if len(xy) >= 512 else sample_curve(curve, np.linspace(-math.pi, math.pi, 512))
    emit_svg(
        [Polyline(dense, "curve")],
        out / "curve.svg",
        [Marker(r["x"], r["y"], r["label"]) for r in pts],
        title=f"2H/y-curve, H={args.H:g}",
    )
    return ["curve.csv", "points.csv", "curve.svg"]


def domain_polylines(domain, labels: Sequence[str] | None = None) -> list[Polyline]:
    lines = []
    for i, arc in enumerate(domain.arcs):
        style = {"A": "arc-A", "B": "arc-B", "C": "arc-C", "B*": "arc-B-star"}[arc.kind]
        label = labels[i] if labels else arc.kind
        lines.append(Polyline(arc.sample(512), style, label=label))
    for star in getattr(domain, "b_star_arcs", ()):
        lines.append(Polyline(star.sample(512), "arc-B-star"))
    return lines


def arc_rows(domain) -> list[dict]:
    rows = []
    for i, arc in enumerate(domain.arcs):
        rows.append(
            {
                "arc": i,
                "kind": arc.kind,
                "orientation": arc.orientation,
                "length": arc.length,
                "start_x": arc.start.x,
                "start_y": arc.start.y,
                "end_x": arc.end.x,
                "end_y": arc.end.y,
            }
        )
    return rows


def cmd_domain_build(args, out: Path) -> list[str]:
    v.check_H(args.H)
    labels = None
    if args.kind == "b-empty":
        y0 = v.check_real("y0", args.y0, positive=True)
        d = args.d if args.d is not None else 0.5 * 2 * y0 / (3 + 2 * args.H)
        T = constants(args.H).T
        eps = args.eps if args.eps is not None else 0.25 * min((y0 - d) * math.expm1(T / (2 * args.H)), 0.5 * d)
        dom = build_b_empty(Point(args.x0, y0), d, eps, args.H)
    elif args.kind == "a-empty":
        case = args.case or tangency_case(args.t, 1e-6)
        dom = build_a_empty(CurveParams(0.0, args.z, args.H), args.t, case, d=args.d, eps=args.eps)
    else:
        s = args.s if args.s is not None else s_star(args.y0, args.H)
        dom = build_omega_s(args.y0, args.H, s)
        labels = OMEGA_LABELS
    atomic_write_text(out / "domain.json", domain_to_json(dom))
    emit_csv(arc_rows(dom), out / "arcs.csv")
    emit_svg(domain_polylines(dom, labels), out / "domain.svg", title=f"{args.kind} domain")
    return ["domain.json", "arcs.csv", "domain.svg"]


def cmd_domain_check(args, out: Path) -> list[str]:
    dom = _load_domain(args.domain)
    rep = check_conditions(dom, args.mode, tol_slack_rel=args.tol_slack, tol_eq_rel=args.tol_eq)
    cols = ["index", "n_vertices", "alpha", "beta", "perimeter", "area_weight", "slack_alpha", "slack_beta", "is_domain", "applicable", "ok"]
    rows = []
    for r in rep.rows:
        row = {c: getattr(r, c) for c in cols}
        row["applicable"] = "+".join(r.applicable)
        rows.append(row)
    emit_csv(rows, out / "conditions.csv", cols)
    summary = [
        {"key": "mode", "value": rep.mode},
        {"key": "verdict", "value": rep.verdict_label},
        {"key": "polygons", "value": len(rep.rows)},
        {"key": "violations", "value": len(rep.violations)},
        {"key": "equality_residual", "value": rep.equality_residual},
        {"key": "equality_tol", "value": rep.equality_tol},
    ]
    emit_csv(summary, out / "summary.csv", ["key", "value"])
    return ["conditions.csv", "summary.csv"]


def cmd_omega_s(args, out: Path) -> list[str]:
    v.check_H(args.H)
    v.check_real("y0", args.y0, positive=True)
    if args.samples < 1:
        raise UsageError("--samples must be positive")
    s0 = s_zero(args.y0, args.H)
    ss = s_star(args.y0, args.H)
    cols = ["row", "s", "phi", "e", "d", "alpha", "beta", "weighted_area", "F"]
    rows = []
    grid = [s0 * (k + 0.5) / args.samples for k in range(args.samples)]
    for tag, s in [("grid", s) for s in grid] + [("s0", s0), ("s_star", ss)]:
        q = omega_quantities(args.y0, args.H, s)
        rows.append({"row": tag, "s": s, "phi": q.phi, "e": q.e, "d": q.d, "alpha": q.alpha, "beta": q.beta, "weighted_area": q.weighted_area, "F": q.F})
    emit_csv(rows, out / "omega_s.csv", cols)
    dom = build_omega_s(args.y0, args.H, ss)
    emit_svg(domain_polylines(dom, OMEGA_LABELS), out / "omega_s.svg", title="Omega_s at s*")
    return ["omega_s.csv", "omega_s.svg"]


def _flux_rows(domain, mesh, values, H, tag) -> list[dict]:
    rep = flux_report(mesh, values, H, domain.weighted_area())
    rows = []
    for arc, fl in rep.fluxes.items():
        rows.append({"h": mesh.h, "row": tag, "arc": arc, "kind": domain.arcs[arc].kind, "flux": fl, "length": rep.lengths[arc], "value": None})
    rows.append({"h": mesh.h, "row": "balance", "arc": None, "kind": None, "flux": sum(rep.fluxes.values()), "length": None, "value": rep.balance_residual})
    rows.append({"h": mesh.h, "row": "source", "arc": None, "kind": None, "flux": None, "length": None, "value": rep.source_total})
    rows.append({"h": mesh.h, "row": "max_density", "arc": None, "kind": None, "flux": None, "length": None, "value": rep.max_density})
    return rows


FLUX_COLUMNS = ["h", "row", "arc", "kind", "flux", "length", "value"]


def cmd_solve(args, out: Path) -> list[str]:
    dom = _load_domain(args.domain)
    H = dom.H if args.H is None else v.check_H(args.H, allow_zero=True)
    h = args.h if args.h is not None else _diameter(dom) / 50
    mesh = make_mesh(dom, v.check_real("h", h, positive=True))
    sol = solve_dirichlet(mesh, np.full(mesh.n_nodes, args.bc), H, _opts(args))
    atomic_write_text(out / "mesh.txt", mesh_to_text(mesh))
    emit_field(mesh.nodes, sol.values, out / "field.csv")
    emit_csv(({"iteration": i, "residual": r} for i, r in enumerate(sol.residual_history)), out / "residuals.csv", ["iteration", "residual"])
    emit_csv(_flux_rows(dom, mesh, sol.values, H, "arc"), out / "flux.csv", FLUX_COLUMNS)
    return ["mesh.txt", "field.csv", "residuals.csv", "flux.csv"]


def cmd_flux(args, out: Path) -> list[str]:
    dom = _load_domain(args.domain)
    H = dom.H if args.H is None else v.check_H(args.H, allow_zero=True)
    h = args.h if args.h is not None else _diameter(dom) / 50
    rows = []
    for hh in (h, h / 2):
        mesh = make_mesh(dom, v.check_real("h", hh, positive=True))
        sol = solve_dirichlet(mesh, np.full(mesh.n_nodes, args.bc), H, _opts(args))
        rows += _flux_rows(dom, mesh, sol.values, H, "arc")
    emit_csv(rows, out / "flux.csv", FLUX_COLUMNS)
    return ["flux.csv"]


def cmd_exhaust(args, out: Path) -> list[str]:
    dom = _load_domain(args.domain)
    ns = v.parse_n_list(args.n)
    mesh_dom = dom.star() if args.mode in ("a-empty", "c-empty") and "B" in dom.kinds else dom
    h = args.h if args.h is not None else _diameter(mesh_dom) / 40
    mesh = make_mesh(mesh_dom, v.check_real("h", h, positive=True))
    rep = solve_exhaustion(dom, mesh, ns, args.mode, args.c_value, opts=_opts(args))
    gaps = [None] + rep.probe_gaps()
    viol = [None] + rep.max_violation
    rows = []
    for k, st in enumerate(rep.steps):
        rows.append(
            {"n": st.n, "mu": st.mu, "n_minus_mu": None if st.mu is None else st.n - st.mu, "iterations": st.iterations, "probe_gap": gaps[k], "max_violation": viol[k]}
        )
    emit_csv(rows, out / "exhaustion.csv", ["n", "mu", "n_minus_mu", "iterations", "probe_gap", "max_violation"])
    frows = []
    for st in rep.steps:
        for arc, fl in st.fluxes.items():
            frows.append({"n": st.n, "arc": arc, "kind": mesh_dom.arcs[arc].kind, "flux": fl, "length": mesh_dom.arcs[arc].length})
    emit_csv(frows, out / "exhaustion_flux.csv", ["n", "arc", "kind", "flux", "length"])
    files = ["exhaustion.csv", "exhaustion_flux.csv"]
    if rep.steps:
        cutoff = args.cutoff if args.cutoff is not None else 0.9 * rep.steps[-1].n
        mask = divergence_mask(rep, cutoff)
        emit_field(mesh.nodes, rep.steps[-1].values, out / "field.csv")
        emit_csv(({"node_index": int(i), "x": mesh.nodes[i, 0], "y": mesh.nodes[i, 1]} for i in np.nonzero(mask)[0]), out / "mask.csv", ["node_index", "x", "y"])
        lines = domain_polylines(mesh_dom)
        for tri in mesh.triangles[np.any(mask[mesh.triangles], axis=1)]:
            lines.append(Polyline(mesh.nodes[tri], "mask", closed=True))
        emit_svg(lines, out / "mask.svg", title=f"divergence mask, cutoff {cutoff:g}")
        files += ["field.csv", "mask.csv", "mask.svg"]
    if rep.failure:
        raise SolveError(f"exhaustion truncated: {rep.failure}", [])
    return files


HANDLERS = {
    "constants": cmd_constants,
    "curve": cmd_curve,
    "domain-build": cmd_domain_build,
    "domain-check": cmd_domain_check,
    "omega-s": cmd_omega_s,
    "solve": cmd_solve,
    "flux": cmd_flux,
    "exhaust": cmd_exhaust,
}


def _config_echo(args) -> dict:
    return {k: (",".join(map(str, val)) if isinstance(val, list) else val) for k, val in vars(args).items() if k != "out"}


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Path(os.environ.get("SOLGRAPH_OUT") or args.out)
    np.random.seed(args.seed)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise UsageError(f"output directory {out} is not writable")
        files = HANDLERS[args.command](args, out)
    except (UsageError, ConstructionError, DomainError, ValueError, KeyError) as exc:
        if isinstance(exc, NUMERICAL_ERRORS):
            return _numerical_failure(out, args, exc)
        print(f"solgraph: error: {exc}", file=sys.stderr)
        return 2
    except NUMERICAL_ERRORS as exc:
        return _numerical_failure(out, args, exc)
    emit_manifest(out, __version__, _config_echo(args), files)
    return 0


def _numerical_failure(out: Path, args, exc: Exception) -> int:
    rows = [{"key": "error", "value": type(exc).__name__}, {"key": "message", "value": str(exc)}]
    for i, r in enumerate(getattr(exc, "history", []) or []):
        rows.append({"key": f"residual_{i}", "value": r})
    emit_csv(rows, out / "diagnostic.csv", ["key", "value"])
    emit_manifest(out, __version__, _config_echo(args), ["diagnostic.csv"])
    print(f"solgraph: numerical failure: {exc}", file=sys.stderr)
    return 1


def main(argv: Sequence[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":  # pragma: no cover
    main()
