"""Admissible polygons inscribed in a domain and the Jenkins–Serrin inequality checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np
from shapely.geometry import LinearRing

from .curves import ArcOnCurve, Point, arc_length, connectors
from .domains import AdmissibleDomain, BoundaryArc, _close, _same_geometry
from .geometry import chain_polyline, oriented_ends, region_integral, signed_area

MAX_VERTICES = 12
SIDE_SAMPLES = 256
CONTAIN_REL_TOL = 1e-6

Side = Union[BoundaryArc, ArcOnCurve]
MODES = ("b-empty", "a-empty", "c-empty", "general")


@dataclass(frozen=True)
class AdmissiblePolygon:
    sides: tuple[tuple[Side, int], ...]
    vertices: tuple[Point, ...]
    alpha: float
    beta: float
    perimeter: float
    area_weight: float
    is_domain: bool = False

    @property
    def pieces(self):
        return [(_geom(s), o) for s, o in self.sides]

    def side_kinds(self) -> list[str]:
        return [s.kind if isinstance(s, BoundaryArc) else "interior" for s, _ in self.sides]


def _geom(side: Side):
    return side.geometry if isinstance(side, BoundaryArc) else side


def _side_length(side: Side) -> float:
    return side.length if isinstance(side, BoundaryArc) else arc_length(side)


def _vertex_index(pt: Point, verts: Sequence[Point]) -> int | None:
    for i, v in enumerate(verts):
        if _close(pt, v, 1e-7):
            return i
    return None


def candidate_sides(domain: AdmissibleDomain, samples_per_decade: int = 2000) -> dict[tuple[int, int], list[Side]]:
    """For every vertex pair, the boundary A/B arcs and contained interior connectors joining it."""
    verts = list(domain.vertices)
    region = domain.region()
    tol = CONTAIN_REL_TOL * region.diameter
    out: dict[tuple[int, int], list[Side]] = {}
    boundary = [a for a in domain.arcs if a.kind in ("A", "B")]
    for arc in boundary:
        i, j = _vertex_index(arc.start, verts), _vertex_index(arc.end, verts)
        if i is None or j is None or i == j:
            continue
        out.setdefault((min(i, j), max(i, j)), []).append(arc)
    for i, j in itertools.combinations(range(len(verts)), 2):
        found = out.setdefault((i, j), [])
        for cand in connectors(verts[i], verts[j], domain.H, samples_per_decade):
            if any(isinstance(b, BoundaryArc) and _same_geometry(cand, b.geometry) for b in found):
                continue
            if not np.all(region.contains_points(cand.sample(SIDE_SAMPLES), tol)):
                continue
            found.append(cand)
    return {k: v for k, v in out.items() if v}


def _orient_side(side: Side, a: Point, b: Point) -> int | None:
    g = _geom(side)
    if _close(g.start, a) and _close(g.end, b):
        return 1
    if _close(g.start, b) and _close(g.end, a):
        return -1
    return None


def _make_polygon(domain: AdmissibleDomain, cycle: Sequence[int], sides: Sequence[Side]) -> AdmissiblePolygon | None:
    verts = [domain.vertices[i] for i in cycle]
    k = len(cycle)
    oriented = []
    for n, side in enumerate(sides):
        o = _orient_side(side, verts[n], verts[(n + 1) % k])
        if o is None:
            return None
        oriented.append((side, o))
    pieces = [(_geom(s), o) for s, o in oriented]
    ring = chain_polyline(pieces, 128)
    if not LinearRing(ring).is_simple:
        return None
    area = signed_area(ring)
    diam = float(np.max(np.ptp(ring, axis=0)))
    if abs(area) <= 1e-10 * diam * diam:
        return None
    if area < 0:
        oriented = [(s, -o) for s, o in reversed(oriented)]
        verts = verts[::-1]
        pieces = [(_geom(s), o) for s, o in oriented]
    alpha = sum(_side_length(s) for s, _ in oriented if isinstance(s, BoundaryArc) and s.kind == "A")
    beta = sum(_side_length(s) for s, _ in oriented if isinstance(s, BoundaryArc) and s.kind == "B")
    perim = sum(_side_length(s) for s, _ in oriented)
    weight = region_integral(pieces, check=False)
    used = {id(s) for s, _ in oriented if isinstance(s, BoundaryArc)}
    is_domain = len(used) == len(domain.arcs) and all(id(a) in used for a in domain.arcs)
    return AdmissiblePolygon(tuple(oriented), tuple(verts), alpha, beta, perim, weight, is_domain)


def enumerate_polygons(domain: AdmissibleDomain, samples_per_decade: int = 2000) -> list[AdmissiblePolygon]:
    """All simple polygons with vertices among A/B endpoints and ±2H/y sides inside the closed domain."""
    nv = len(domain.vertices)
    if nv == 0:
        return []
    if nv > MAX_VERTICES:
        raise ValueError(f"{nv} vertices exceed the enumeration cap of {MAX_VERTICES}")
    sides = candidate_sides(domain, samples_per_decade)
    polys: list[AdmissiblePolygon] = []
    # two-gons: two distinct sides on the same pair
    for (i, j), cands in sides.items():
        for s1, s2 in itertools.combinations(cands, 2):
            p = _make_polygon(domain, (i, j), (s1, s2))
            if p is not None:
                polys.append(p)
    for k in range(3, nv + 1):
        for subset in itertools.combinations(range(nv), k):
            first, rest = subset[0], subset[1:]
            for perm in itertools.permutations(rest):
                if perm[0] > perm[-1]:
                    continue  # each cycle once up to direction
                cycle = (first,) + perm
                edges = [(cycle[n], cycle[(n + 1) % k]) for n in range(k)]
                lists = [sides.get((min(a, b), max(a, b))) for a, b in edges]
                if any(lst is None for lst in lists):
                    continue
                for choice in itertools.product(*lists):
                    p = _make_polygon(domain, cycle, choice)
                    if p is not None:
                        polys.append(p)
    return polys


@dataclass(frozen=True)
class PolygonRow:
    index: int
    n_vertices: int
    alpha: float
    beta: float
    perimeter: float
    area_weight: float
    slack_alpha: float
    slack_beta: float
    is_domain: bool
    applicable: tuple[str, ...]
    ok: bool


@dataclass(frozen=True)
class ConditionReport:
    mode: str
    rows: tuple[PolygonRow, ...]
    verdict: bool
    equality_residual: float | None = None
    equality_tol: float | None = None
    violations: tuple[int, ...] = field(default=())

    @property
    def verdict_label(self) -> str:
        return "pass" if self.verdict else "fail"


def domain_totals(domain: AdmissibleDomain) -> tuple[float, float, float]:
    """(alpha, beta, I) of the domain itself."""
    alpha = sum(a.length for a in domain.arcs if a.kind == "A")
    beta = sum(a.length for a in domain.arcs if a.kind == "B")
    return alpha, beta, domain.weighted_area()


def check_conditions(
    domain: AdmissibleDomain,
    mode: str,
    polygons: Sequence[AdmissiblePolygon] | None = None,
    tol_slack_rel: float = 1e-8,
    tol_eq_rel: float = 1e-6,
) -> ConditionReport:
    """Evaluate the inequalities (and the equality in c-empty mode) required by ``mode``.

    b-empty: 2 alpha < l + 2H I for every polygon.
    a-empty: 2 beta < l - 2H I for every polygon.
    c-empty: alpha = beta + 2H I on the domain, both strict inequalities on
    every polygon other than the domain.
    general: both strict inequalities on every polygon.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    H = domain.H
    if polygons is None:
        polygons = enumerate_polygons(domain)
    kinds = set(domain.kinds)
    rows = []
    violations = []
    for n, p in enumerate(polygons):
        sa = p.perimeter + 2 * H * p.area_weight - 2 * p.alpha
        sb = p.perimeter - 2 * H * p.area_weight - 2 * p.beta
        tol = tol_slack_rel * p.perimeter
        if mode == "b-empty":
            app = ("alpha",)
        elif mode == "a-empty":
            app = ("beta",)
        elif mode == "c-empty":
            app = () if p.is_domain else ("alpha", "beta")
        else:
            app = ("alpha", "beta")
        ok = all((sa if a == "alpha" else sb) > tol for a in app)
        rows.append(PolygonRow(n, len(p.vertices), p.alpha, p.beta, p.perimeter, p.area_weight, sa, sb, p.is_domain, app, ok))
        if not ok:
            violations.append(n)
    verdict = not violations
    eq_res = eq_tol = None
    if mode == "c-empty":
        alpha, beta, area = domain_totals(domain)
        eq_res = alpha - beta - 2 * H * area
        eq_tol = tol_eq_rel * alpha
        verdict = verdict and abs(eq_res) <= eq_tol and "C" not in kinds
    if mode == "b-empty" and "B" in kinds:
        verdict = False
    if mode == "a-empty" and "A" in kinds:
        verdict = False
    return ConditionReport(mode, tuple(rows), verdict, eq_res, eq_tol, tuple(violations))


def small_domain_feasible(H: float, R: float, y0: float) -> bool:
    """Sufficient condition for a bounded subsolution on a domain inside a Euclidean disc.

    True when H <= sqrt(2), or when H is below the disc bound
    sqrt(2) ((1 + 2R/y0)^sqrt2 + 1) / ((1 + 2R/y0)^sqrt2 - 1).
    """
    if not (R > 0 and y0 > 0):
        raise ValueError("R and y0 must be positive")
    r2 = math.sqrt(2.0)
    if H <= r2:
        return True
    q = (1.0 + 2.0 * R / y0) ** r2
    return H <= r2 * (q + 1.0) / (q - 1.0)
