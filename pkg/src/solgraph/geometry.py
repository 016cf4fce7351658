"""Boundary pieces of curved polygons and exact boundary integrals over them."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import shapely
from shapely.geometry import LinearRing, Polygon

from .curves import ArcOnCurve, Point, arc_length, gamma
from .numerics import DEFAULT_QUAD, adaptive_quad

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CircleArc:
    center: Point
    radius: float
    angle_lo: float
    angle_hi: float

    def __post_init__(self) -> None:
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not (self.angle_lo < self.angle_hi <= self.angle_lo + TWO_PI + 1e-12):
            raise ValueError("need angle_lo < angle_hi <= angle_lo + 2 pi")
        lowest = self.sample(257)[:, 1].min()
        if not lowest > 0:
            raise ValueError("circle arc leaves the upper half-plane")

    @property
    def start(self) -> Point:
        c = self.center
        return Point(c.x + self.radius * math.cos(self.angle_lo), c.y + self.radius * math.sin(self.angle_lo))

    @property
    def end(self) -> Point:
        c = self.center
        return Point(c.x + self.radius * math.cos(self.angle_hi), c.y + self.radius * math.sin(self.angle_hi))

    def sample(self, n: int = 512) -> np.ndarray:
        ang = np.linspace(self.angle_lo, self.angle_hi, n)
        return np.column_stack([self.center.x + self.radius * np.cos(ang), self.center.y + self.radius * np.sin(ang)])


@dataclass(frozen=True)
class Segment:
    """A straight boundary piece; used for test domains and polygon chords."""

    a: Point
    b: Point

    @property
    def start(self) -> Point:
        return self.a

    @property
    def end(self) -> Point:
        return self.b

    def sample(self, n: int = 512) -> np.ndarray:
        s = np.linspace(0.0, 1.0, n)[:, None]
        return (1 - s) * self.a.as_array() + s * self.b.as_array()


Geometry = Union[ArcOnCurve, CircleArc, Segment]


def geometry_length(geom: Geometry) -> float:
    if isinstance(geom, ArcOnCurve):
        return arc_length(geom)
    if isinstance(geom, CircleArc):
        return geom.radius * (geom.angle_hi - geom.angle_lo)
    return math.hypot(geom.b.x - geom.a.x, geom.b.y - geom.a.y)


def oriented_ends(geom: Geometry, orientation: int) -> tuple[Point, Point]:
    return (geom.start, geom.end) if orientation > 0 else (geom.end, geom.start)


def oriented_sample(geom: Geometry, orientation: int, n: int = 512) -> np.ndarray:
    pts = geom.sample(n)
    return pts if orientation > 0 else pts[::-1]


def log_y_dx(geom: Geometry) -> float:
    """int ln(y) dx along the geometry in its natural direction."""
    if isinstance(geom, ArcOnCurve):
        c = geom.curve
        k = 1.0 / (2.0 * c.H)
        lz, sc = math.log(c.z), c.scale

        def f(t):
            return (lz + np.sin(0.5 * t) ** 2 / c.H) * (-sc * np.cos(t) * np.exp(-k * np.cos(t)))

        return adaptive_quad(f, geom.t_lo, geom.t_hi, DEFAULT_QUAD)[0]
    if isinstance(geom, CircleArc):
        cx, cy, r = geom.center.x, geom.center.y, geom.radius

        def f(a):
            return np.log(cy + r * np.sin(a)) * (-r * np.sin(a))

        return adaptive_quad(f, geom.angle_lo, geom.angle_hi, DEFAULT_QUAD)[0]
    ax, ay, bx, by = geom.a.x, geom.a.y, geom.b.x, geom.b.y
    if ax == bx:
        return 0.0
    if abs(by - ay) < 1e-14 * ay:
        return math.log(ay) * (bx - ax)
    # int_0^1 ln(ay + s (by - ay)) ds in closed form
    mean_log = (by * math.log(by) - ay * math.log(ay)) / (by - ay) - 1.0
    return mean_log * (bx - ax)


class BoundaryError(ValueError):
    """An open or self-intersecting boundary was passed where a closed simple one is needed."""


def chain_polyline(pieces: Sequence[tuple[Geometry, int]], n_per_piece: int = 256) -> np.ndarray:
    """Closed polyline (last point == first) through oriented pieces."""
    parts = []
    for geom, orient in pieces:
        pts = oriented_sample(geom, orient, n_per_piece)
        parts.append(pts[:-1])
    out = np.vstack(parts)
    return np.vstack([out, out[:1]])


def closure_gap(pieces: Sequence[tuple[Geometry, int]]) -> float:
    gap = 0.0
    for i, (geom, orient) in enumerate(pieces):
        _, end = oriented_ends(geom, orient)
        nxt, norient = pieces[(i + 1) % len(pieces)]
        start, _ = oriented_ends(nxt, norient)
        gap = max(gap, math.hypot(end.x - start.x, end.y - start.y))
    return gap


def region_integral(pieces: Sequence[tuple[Geometry, int]], check: bool = True, tol: float = 1e-8) -> float:
    """I = int (1/y) dA = -oint ln(y) dx over a closed boundary (positive if CCW).

    ``pieces`` are ``(geometry, orientation)`` pairs in boundary order.  Each
    piece is integrated exactly (to quadrature tolerance); d(ln y dx) =
    -(1/y) dx ^ dy makes the one-form exact for the weighted area.
    """
    if check:
        if closure_gap(pieces) > tol * max(1.0, _diameter(pieces)):
            raise BoundaryError("boundary does not close")
        ring = chain_polyline(pieces, 128)
        if _crosses(ring):
            raise BoundaryError("boundary self-intersects")
    total = 0.0
    for geom, orient in pieces:
        total += orient * log_y_dx(geom)
    return -total


def point_diameter(pts: np.ndarray) -> float:
    """Largest Euclidean distance between two of the points (via the convex hull)."""
    from scipy.spatial import ConvexHull
    from scipy.spatial.distance import pdist

    pts = np.asarray(pts, dtype=float)
    try:
        pts = pts[ConvexHull(pts).vertices]
    except Exception:  # degenerate (collinear) input: use all points
        pass
    return float(pdist(pts).max()) if len(pts) > 1 else 0.0


def pieces_diameter(pieces: Sequence[tuple[Geometry, int]], n_per_piece: int = 257) -> float:
    """Euclidean diameter of a closed chain of pieces (sampled)."""
    return point_diameter(np.vstack([g.sample(n_per_piece) for g, _ in pieces]))


def _diameter(pieces) -> float:
    pts = np.vstack([g.sample(17) for g, _ in pieces])
    return float(np.max(np.ptp(pts, axis=0)))


def _crosses(ring: np.ndarray) -> bool:
    """Proper crossings between non-adjacent edges of a closed polyline.

    Exact retracing (a piece followed by its reverse) is not a crossing.
    """
    lr = LinearRing(ring)
    if lr.is_simple:
        return False
    # distinguish true crossings from collinear retracing
    a, b = ring[:-1], ring[1:]
    n = len(a)
    d = b - a
    for i in range(n):
        j = np.arange(n)
        mask = (j != i) & (j != (i + 1) % n) & (j != (i - 1) % n)
        c, e = a[mask], d[mask]
        den = d[i, 0] * e[:, 1] - d[i, 1] * e[:, 0]
        w = c - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / den
            u = (w[:, 0] * d[i, 1] - w[:, 1] * d[i, 0]) / den
        hit = (np.abs(den) > 1e-300) & (s > 1e-9) & (s < 1 - 1e-9) & (u > 1e-9) & (u < 1 - 1e-9)
        if np.any(hit):
            return True
    return False


def is_simple_closed(ring: np.ndarray) -> bool:
    return bool(LinearRing(ring).is_simple)


def signed_area(ring: np.ndarray) -> float:
    x, y = ring[:, 0], ring[:, 1]
    return 0.5 * float(np.sum(x[:-1] * y[1:] - x[1:] * y[:-1]))


def turning_signs(ring: np.ndarray) -> np.ndarray:
    """Signs of cross products of consecutive edges of a closed polyline."""
    pts = ring[:-1]
    e1 = np.roll(pts, -1, axis=0) - pts
    e2 = np.roll(e1, -1, axis=0)
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    return np.sign(cross)


def is_convex_ring(ring: np.ndarray, rel_tol: float = 1e-12) -> bool:
    pts = ring[:-1]
    e1 = np.roll(pts, -1, axis=0) - pts
    e2 = np.roll(e1, -1, axis=0)
    cross = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
    scale = np.max(np.abs(cross)) if cross.size else 0.0
    big = cross[np.abs(cross) > rel_tol * scale]
    return bool(np.all(big > 0) or np.all(big < 0))


class Region:
    """Polygonalised closed boundary supporting containment queries."""

    def __init__(self, ring: np.ndarray) -> None:
        self.ring = ring
        self.polygon = Polygon(ring)
        shapely.prepare(self.polygon)
        self.diameter = float(np.max(np.ptp(ring, axis=0)))

    def contains_points(self, pts: np.ndarray, tol: float) -> np.ndarray:
        """Inside or within ``tol`` of the boundary (closed-domain test)."""
        inside = shapely.contains_xy(self.polygon, pts[:, 0], pts[:, 1])
        if np.all(inside):
            return inside
        out = ~inside
        dist = shapely.distance(self.polygon.exterior, shapely.points(pts[out]))
        inside[out] = dist <= tol
        return inside

    def strictly_inside(self, pts: np.ndarray) -> np.ndarray:
        return shapely.contains_xy(self.polygon, pts[:, 0], pts[:, 1])


def circle_curvature_ok(arc: CircleArc, H: float, n: int = 257) -> bool:
    """kappa = 1/r >= 2H/y at every sample."""
    ys = arc.sample(n)[:, 1]
    return bool(np.all(1.0 / arc.radius >= 2.0 * H / ys))


def point_on(geom: Geometry, frac: float) -> Point:
    if isinstance(geom, ArcOnCurve):
        return gamma(geom.curve, geom.t_lo + frac * (geom.t_hi - geom.t_lo))
    if isinstance(geom, CircleArc):
        a = geom.angle_lo + frac * (geom.angle_hi - geom.angle_lo)
        return Point(geom.center.x + geom.radius * math.cos(a), geom.center.y + geom.radius * math.sin(a))
    return Point(geom.a.x + frac * (geom.b.x - geom.a.x), geom.a.y + frac * (geom.b.y - geom.a.y))
