"""Admissible domains: representation, validation, the explicit constructions and B* companions."""

from __future__ import annotations

import json
import math
from dataclasses import InitVar, dataclass, field
from typing import Sequence

import numpy as np

from .curves import (
    ArcOnCurve,
    CurveParams,
    Point,
    UnsupportedConfiguration,
    arc_length,
    arch_connector,
    connectors,
    constants,
    gamma,
    smile_connector,
    vertical_connectors,
)
from .geometry import (
    CircleArc,
    Geometry,
    Region,
    Segment,
    _crosses,
    chain_polyline,
    circle_curvature_ok,
    closure_gap,
    geometry_length,
    is_convex_ring,
    oriented_ends,
    oriented_sample,
    pieces_diameter,
    region_integral,
    signed_area,
)
from .numerics import RootSpec, find_root

KINDS = ("A", "B", "C", "B*")
CLOSURE_TOL = 1e-8


class DomainError(ValueError):
    """A domain violates one of the admissibility requirements."""

    def __init__(self, violations: Sequence[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class ConstructionError(ValueError):
    """A construction precondition failed; ``inequality`` names it."""

    def __init__(self, inequality: str, detail: str = ""):
        self.inequality = inequality
        super().__init__(f"violated: {inequality}" + (f" ({detail})" if detail else ""))


@dataclass(frozen=True)
class BoundaryArc:
    kind: str
    geometry: Geometry
    orientation: int

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown arc kind {self.kind!r}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")

    @property
    def start(self) -> Point:
        return oriented_ends(self.geometry, self.orientation)[0]

    @property
    def end(self) -> Point:
        return oriented_ends(self.geometry, self.orientation)[1]

    @property
    def length(self) -> float:
        return geometry_length(self.geometry)

    def sample(self, n: int = 512) -> np.ndarray:
        return oriented_sample(self.geometry, self.orientation, n)


@dataclass(frozen=True)
class AdmissibleDomain:
    """Counterclockwise boundary of A/B/C arcs plus one B* companion per B arc.

    Construction validates Definition-style admissibility unless
    ``check=False`` (used for auxiliary regions such as the starred domain).
    """

    arcs: tuple[BoundaryArc, ...]
    H: float
    b_star_arcs: tuple[ArcOnCurve, ...] = ()
    vertices: tuple[Point, ...] = field(default=())
    check: InitVar[bool] = True

    def __post_init__(self, check: bool) -> None:
        object.__setattr__(self, "arcs", tuple(self.arcs))
        object.__setattr__(self, "b_star_arcs", tuple(self.b_star_arcs))
        if not self.vertices:
            object.__setattr__(self, "vertices", tuple(_ab_vertices(self.arcs)))
        if check:
            problems = validate(self)
            if problems:
                raise DomainError(problems)

    @property
    def kinds(self) -> list[str]:
        return [a.kind for a in self.arcs]

    @property
    def pieces(self) -> list[tuple[Geometry, int]]:
        return [(a.geometry, a.orientation) for a in self.arcs]

    def b_indices(self) -> list[int]:
        return [i for i, a in enumerate(self.arcs) if a.kind == "B"]

    def ring(self, n_per_arc: int = 1024) -> np.ndarray:
        return chain_polyline(self.pieces, n_per_arc)

    def region(self) -> Region:
        return Region(self.ring(max(64, 4096 // max(1, len(self.arcs)))))

    def weighted_area(self) -> float:
        return region_integral(self.pieces)

    def diameter(self) -> float:
        return pieces_diameter(self.pieces)

    def star(self) -> "AdmissibleDomain":
        """The domain obtained by replacing every B arc by its B* companion."""
        arcs = []
        stars = dict(zip(self.b_indices(), self.b_star_arcs))
        for i, arc in enumerate(self.arcs):
            if arc.kind != "B":
                arcs.append(arc)
                continue
            star = stars[i]
            orient = 1 if _close(star.start, arc.start) else -1
            arcs.append(BoundaryArc("B*", star, orient))
        return AdmissibleDomain(tuple(arcs), self.H, (), self.vertices, check=False)


def _close(p: Point, q: Point, tol: float = 1e-7) -> bool:
    return math.hypot(p.x - q.x, p.y - q.y) <= tol * max(1.0, abs(p.y))


def _ab_vertices(arcs: Sequence[BoundaryArc]) -> list[Point]:
    out: list[Point] = []
    for arc in arcs:
        if arc.kind not in ("A", "B"):
            continue
        for pt in (arc.start, arc.end):
            if not any(_close(pt, v, 1e-9) for v in out):
                out.append(pt)
    return out


def lens_ring(b_arc: BoundaryArc, star: ArcOnCurve, n: int = 200) -> np.ndarray:
    half = n // 2
    first = b_arc.sample(half + 1)
    back = star.sample(half + 1)
    if math.hypot(*(back[0] - first[-1])) > math.hypot(*(back[-1] - first[-1])):
        back = back[::-1]
    ring = np.vstack([first[:-1], back[:-1]])
    return np.vstack([ring, ring[:1]])


def validate(dom: AdmissibleDomain) -> list[str]:
    """All admissibility violations of ``dom`` (empty list when admissible)."""
    problems: list[str] = []
    arcs = dom.arcs
    if not arcs:
        return ["empty boundary"]
    if not dom.H > 0:
        problems.append("H must be positive")
    scale = max(1.0, dom.diameter())
    gap = closure_gap(dom.pieces)
    if gap > CLOSURE_TOL * scale:
        problems.append(f"boundary does not close (gap {gap:.3e})")
    n = len(arcs)
    for i in range(n):
        a, b = arcs[i].kind, arcs[(i + 1) % n].kind
        if n > 1 and a == b and a in ("A", "B"):
            problems.append(f"two {a} arcs adjacent at positions {i},{(i + 1) % n}")
    ring = dom.ring(256)
    if _crosses(ring):
        problems.append("boundary self-intersects")
    if signed_area(ring) <= 0:
        problems.append("boundary is not counterclockwise")
    for i, arc in enumerate(arcs):
        g = arc.geometry
        if arc.kind == "A":
            # clockwise-turning curve traversed backwards: curvature vector points inward
            if not (isinstance(g, ArcOnCurve) and arc.orientation == -1):
                problems.append(f"arc {i}: A arc must be a 2H/y arc with inward curvature")
        elif arc.kind == "B":
            if not (isinstance(g, ArcOnCurve) and arc.orientation == 1):
                problems.append(f"arc {i}: B arc must be a 2H/y arc with outward curvature")
        elif arc.kind == "C":
            if isinstance(g, CircleArc):
                if arc.orientation != 1 or not circle_curvature_ok(g, dom.H):
                    problems.append(f"arc {i}: C arc curvature below 2H/y")
            elif isinstance(g, ArcOnCurve):
                if arc.orientation != -1:
                    problems.append(f"arc {i}: C arc curvature below 2H/y")
            else:
                problems.append(f"arc {i}: C arc must be curved (kappa >= 2H/y)")
        else:
            problems.append(f"arc {i}: kind B* is only allowed in starred domains")
        if isinstance(g, ArcOnCurve) and abs(g.curve.H - dom.H) > 1e-12 * dom.H:
            problems.append(f"arc {i}: curve built for a different H")
    b_idx = dom.b_indices()
    if len(dom.b_star_arcs) != len(b_idx):
        problems.append("every B arc needs exactly one B* companion")
    else:
        region = Region(ring)
        for i, star in zip(b_idx, dom.b_star_arcs):
            b = arcs[i]
            ends_ok = (_close(star.start, b.start) and _close(star.end, b.end)) or (
                _close(star.start, b.end) and _close(star.end, b.start)
            )
            if not ends_ok:
                problems.append(f"arc {i}: B* endpoints differ from B endpoints")
                continue
            if not is_convex_ring(lens_ring(b, star)):
                problems.append(f"arc {i}: lens between B and B* is not convex")
            inner = star.sample(65)[1:-1]
            if np.any(region.strictly_inside(inner)):
                problems.append(f"arc {i}: B* enters the domain")
    return problems


def b_star(dom: AdmissibleDomain, b_arc_index: int) -> ArcOnCurve:
    """The companion arc closing the smallest convex lens on the outer side of a B arc."""
    arc = dom.arcs[b_arc_index]
    if arc.kind != "B":
        raise ValueError("indexed arc is not of kind B")
    p, q = arc.start, arc.end
    region = dom.region()
    best, best_area = None, math.inf
    for cand in connectors(p, q, dom.H):
        if _same_geometry(cand, arc.geometry):
            continue
        if np.any(region.strictly_inside(cand.sample(65)[1:-1])):
            continue
        ring = lens_ring(arc, cand)
        if not is_convex_ring(ring):
            continue
        area = abs(signed_area(ring))
        if area < best_area:
            best, best_area = cand, area
    if best is None:
        raise UnsupportedConfiguration("no B* companion found: domain not admissible")
    return best


def _same_geometry(a: ArcOnCurve, g: Geometry, tol: float = 1e-7) -> bool:
    if not isinstance(g, ArcOnCurve):
        return False
    pa, pg = a.sample(33), g.sample(33)
    scale = max(1.0, float(np.max(np.abs(pg))))
    return bool(np.max(np.abs(pa - pg)) < tol * scale or np.max(np.abs(pa - pg[::-1])) < tol * scale)


# ---------------------------------------------------------------------------
# constructions


def _require(ok: bool, inequality: str, detail: str = "") -> None:
    if not ok:
        raise ConstructionError(inequality, detail)


def _rect_disc_domain(q_lo: Point, q_hi: Point, eps: float, H: float, lo_arc, hi_arc, lo_star, hi_star):
    """Stretched disc around the diagonal q_lo q_hi: B arcs at the two tips, C half circles.

    The horizontal sides of length ``eps`` centred at q_lo / q_hi are replaced
    by ``lo_arc`` / ``hi_arc``; the half circles have the diagonal as diameter.
    """
    vx, vy = q_hi.x - q_lo.x, q_hi.y - q_lo.y
    a = math.atan2(vy, vx)
    r = 0.5 * math.hypot(vx, vy)
    mx, my = 0.5 * (q_lo.x + q_hi.x), 0.5 * (q_lo.y + q_hi.y)
    c_right = CircleArc(Point(mx + eps / 2, my), r, a + math.pi, a + 2 * math.pi)
    c_left = CircleArc(Point(mx - eps / 2, my), r, a, a + math.pi)
    arcs = (
        BoundaryArc("B", lo_arc, 1),
        BoundaryArc("C", c_right, 1),
        BoundaryArc("B", hi_arc, 1),
        BoundaryArc("C", c_left, 1),
    )
    return AdmissibleDomain(arcs, H, (lo_star, hi_star))


def build_b_empty(p: Point, d: float, eps: float, H: float, diag_angle: float = math.pi / 4) -> AdmissibleDomain:
    """Rectangle-based domain with two A arcs and two C half circles (no B arcs).

    The rectangle has diagonal of length ``d`` through ``p`` at ``diag_angle``;
    its vertical sides of length ``eps`` at the diagonal's endpoints are
    replaced by Type I arcs bulging away from ``p``.
    """
    if not (d > 0 and eps > 0 and H > 0):
        raise ValueError("d, eps and H must be positive")
    _require(0 < diag_angle < math.pi / 2, "0 < diagonal angle < pi/2")
    _require(d < 2 * p.y / (3 + 2 * H), "d < 2 y(p) / (3 + 2H)", f"d={d}")
    ca, sa = math.cos(diag_angle), math.sin(diag_angle)
    q1 = Point(p.x - 0.5 * d * ca, p.y - 0.5 * d * sa)
    q2 = Point(p.x + 0.5 * d * ca, p.y + 0.5 * d * sa)
    T = constants(H).T
    _require(eps < (q1.y - eps / 2) * math.expm1(T / (2 * H)), "eps < y(q1) (e^(T_H/2H) - 1)", f"eps={eps}")
    _require(eps < (q2.y - eps / 2) * math.expm1(T / (2 * H)), "eps < y(q2) (e^(T_H/2H) - 1)", f"eps={eps}")
    b1, t1 = Point(q1.x, q1.y - eps / 2), Point(q1.x, q1.y + eps / 2)
    b2, t2 = Point(q2.x, q2.y - eps / 2), Point(q2.x, q2.y + eps / 2)
    right1, left1 = vertical_connectors(b1, t1, H)
    right2, left2 = vertical_connectors(b2, t2, H)
    a1, a2 = left1, right2
    for arc in (a1, a2):
        _require(arc_length(arc) < d / 2, "A arc length < d/2", f"length={arc_length(arc)}")
    r = d / 2
    c1 = CircleArc(Point(0.5 * (q1.x + q2.x), 0.5 * (b1.y + b2.y)), r, diag_angle + math.pi, diag_angle + 2 * math.pi)
    c2 = CircleArc(Point(0.5 * (q1.x + q2.x), 0.5 * (t1.y + t2.y)), r, diag_angle, diag_angle + math.pi)
    arcs = (
        BoundaryArc("A", a1, -1),
        BoundaryArc("C", c1, 1),
        BoundaryArc("A", a2, -1),
        BoundaryArc("C", c2, 1),
    )
    return AdmissibleDomain(arcs, H)


TANGENCY_CASES = ("generic", "vertical", "horizontal")


def tangency_case(p_param: float, tol: float = 1e-9) -> str:
    """Classify a curve parameter by the direction of the tangent there."""
    c, s = math.cos(p_param), math.sin(p_param)
    if abs(s) < tol:
        return "horizontal"
    if abs(c) < tol:
        return "vertical"
    return "generic"


def _diagonal_half_step(curve: CurveParams, t: float, d: float) -> float:
    def dist(dt):
        a, b = gamma(curve, t - dt), gamma(curve, t + dt)
        return math.hypot(b.x - a.x, b.y - a.y) - d

    hi = 1e-3
    while dist(hi) < 0:
        hi *= 2
        if hi > math.pi / 2:
            raise ConstructionError("diagonal endpoints on gamma", "curve too short for d")
    return find_root(dist, RootSpec(0.0, hi, tol=1e-15))


def build_a_empty(
    gamma_curve: CurveParams,
    p_param: float,
    case: str,
    *,
    d: float | None = None,
    eps: float | None = None,
    h: float | None = None,
    b: float | None = None,
) -> AdmissibleDomain:
    """Domain around the point p = gamma(p_param) with two B arcs and two C arcs.

    ``case`` is the tangent direction of the curve at p: ``generic``,
    ``vertical`` or ``horizontal`` (see :func:`tangency_case`).  Sizes default
    to half their admissible bounds.
    """
    if case not in TANGENCY_CASES:
        raise ValueError(f"case must be one of {TANGENCY_CASES}")
    actual = tangency_case(p_param, 1e-6)
    if actual != case:
        raise ValueError(f"tangent at p_param is {actual}, not {case}")
    H = gamma_curve.H
    k = constants(H)
    p = gamma(gamma_curve, p_param)
    y = p.y

    if case == "horizontal":
        h_bound = 2 * y * math.tanh(k.T / (4 * H))
        b_bound = y / (4 * H + 1)
        b = 0.5 * b_bound if b is None else b
        h = min(0.5 * h_bound, 0.4 * b) if h is None else h
        if not (h > 0 and b > 0):
            raise ValueError("h and b must be positive")
        _require(h < h_bound, "h < 2 y(p) tanh(T_H / 4H)", f"h={h}")
        _require(b <= b_bound, "b <= y(p) / (4H + 1)", f"b={b}")
        xl, xr = p.x - b / 2, p.x + b / 2
        ylo, yhi = y - h / 2, y + h / 2
        right_l, left_l = vertical_connectors(Point(xl, ylo), Point(xl, yhi), H)
        right_r, left_r = vertical_connectors(Point(xr, ylo), Point(xr, yhi), H)
        for arc in (right_l, left_r):
            _require(arc_length(arc) < b / 2, "B arc length < b/2", f"length={arc_length(arc)}")
        arcs = (
            BoundaryArc("B", right_l, 1),
            BoundaryArc("C", CircleArc(Point(p.x, ylo), b / 2, math.pi, 2 * math.pi), 1),
            BoundaryArc("B", left_r, 1),
            BoundaryArc("C", CircleArc(Point(p.x, yhi), b / 2, 0.0, math.pi), 1),
        )
        return AdmissibleDomain(arcs, H, (left_l, right_r))

    if case == "generic":
        d_bound = min((2 * y / 3) * -math.expm1(-1 / (2 * H)), 2 * y / (8 * H + 3))
        d_name = "d < min{(2y(p)/3)(1 - e^(-1/2H)), 2y(p)/(8H+3)}"
    else:
        d_bound = min(y * -math.expm1(-1 / (2 * H)), 2 * y / (8 * H + 1))
        d_name = "d < min{y(p)(1 - e^(-1/2H)), 2y(p)/(8H+1)}"
    d = 0.5 * d_bound if d is None else d
    if not d > 0:
        raise ValueError("d must be positive")
    _require(d < d_bound, d_name, f"d={d}")
    eps_bound = 2 * y * math.exp(-1 / H) * k.L
    eps = min(0.5 * eps_bound, 0.1 * d) if eps is None else eps
    if not eps > 0:
        raise ValueError("eps must be positive")
    _require(eps < eps_bound, "eps < 2 y(p) e^(-1/H) L_H", f"eps={eps}")

    if case == "generic":
        dt = _diagonal_half_step(gamma_curve, p_param, d)
        q1, q2 = gamma(gamma_curve, p_param - dt), gamma(gamma_curve, p_param + dt)
    else:
        q1, q2 = Point(p.x, y - d / 2), Point(p.x, y + d / 2)
    q_lo, q_hi = (q1, q2) if q1.y < q2.y else (q2, q1)
    lo_l, lo_r = Point(q_lo.x - eps / 2, q_lo.y), Point(q_lo.x + eps / 2, q_lo.y)
    hi_l, hi_r = Point(q_hi.x - eps / 2, q_hi.y), Point(q_hi.x + eps / 2, q_hi.y)
    try:
        lo_arc, lo_star = arch_connector(lo_l, lo_r, H), smile_connector(lo_l, lo_r, H)
        hi_arc, hi_star = smile_connector(hi_l, hi_r, H), arch_connector(hi_l, hi_r, H)
    except UnsupportedConfiguration as exc:
        raise ConstructionError("B arcs exist for eps", str(exc)) from exc
    for arc in (lo_arc, hi_arc):
        _require(arc_length(arc) < d / 2, "B arc length < d/2", f"length={arc_length(arc)}")
    return _rect_disc_domain(q_lo, q_hi, eps, H, lo_arc, hi_arc, lo_star, hi_star)


# ---------------------------------------------------------------------------
# JSON domain files


FORMAT_VERSION = 1


def _num(x: float) -> str:
    return format(float(x), ".17g")


def _geom_to_json(g: Geometry) -> dict:
    if isinstance(g, ArcOnCurve):
        c = g.curve
        return {"geometry": "curve", "w": _num(c.w), "z": _num(c.z), "t_lo": _num(g.t_lo), "t_hi": _num(g.t_hi)}
    if isinstance(g, CircleArc):
        return {
            "geometry": "circle",
            "center": [_num(g.center.x), _num(g.center.y)],
            "radius": _num(g.radius),
            "angle_lo": _num(g.angle_lo),
            "angle_hi": _num(g.angle_hi),
        }
    return {"geometry": "segment", "a": [_num(g.a.x), _num(g.a.y)], "b": [_num(g.b.x), _num(g.b.y)]}


def _geom_from_json(obj: dict, H: float) -> Geometry:
    tag = obj["geometry"]
    if tag == "curve":
        curve = CurveParams(float(obj["w"]), float(obj["z"]), H)
        return ArcOnCurve(curve, float(obj["t_lo"]), float(obj["t_hi"]))
    if tag == "circle":
        cx, cy = (float(v) for v in obj["center"])
        return CircleArc(Point(cx, cy), float(obj["radius"]), float(obj["angle_lo"]), float(obj["angle_hi"]))
    if tag == "segment":
        ax, ay = (float(v) for v in obj["a"])
        bx, by = (float(v) for v in obj["b"])
        return Segment(Point(ax, ay), Point(bx, by))
    raise ValueError(f"unknown geometry tag {tag!r}")


def domain_to_json(dom: AdmissibleDomain) -> str:
    doc = {
        "version": FORMAT_VERSION,
        "H": _num(dom.H),
        "arcs": [{"kind": a.kind, **_geom_to_json(a.geometry), "orientation": a.orientation} for a in dom.arcs],
        "b_star": [_geom_to_json(s) for s in dom.b_star_arcs],
    }
    return json.dumps(doc, indent=2) + "\n"


def domain_from_json(text: str, check: bool = True) -> AdmissibleDomain:
    doc = json.loads(text)
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported domain file version {doc.get('version')!r}")
    H = float(doc["H"])
    arcs = tuple(
        BoundaryArc(a["kind"], _geom_from_json(a, H), int(a["orientation"])) for a in doc["arcs"]
    )
    stars = tuple(_geom_from_json(s, H) for s in doc.get("b_star", []))
    return AdmissibleDomain(arcs, H, stars, check=check)
