"""Geometry of the curves of Euclidean curvature 2H/y in the upper half-plane.

Every such curve is a translate/dilate of one trace parametrised by its base
(lowest, "P1") point (w, z):

    x(t) = w + (z e^{1/2H} / 2H) S_H(t),      y(t) = z exp(sin^2(t/2) / H),

with S_H(t) = -int_0^t cos(s) e^{-cos(s)/2H} ds.  On [-pi, 0] this equals
int_{-1}^{-cos t} g_H and on [0, pi] it equals -int_{-1}^{-cos t} g_H, so the
two-branch definition and its 2pi-extension are the same smooth function.

Along increasing t the curve turns clockwise: the signed curvature is -2H/y and
the curvature vector points to the right of the direction of motion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import (
    DEFAULT_QUAD,
    QuadratureSpec,
    RootSpec,
    adaptive_quad,
    find_root,
    g_function,
    g_theta,
    integrate_g,
    speed_theta,
)

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self) -> None:
        if not self.y > 0:
            raise ValueError(f"points must lie in the upper half-plane, got y={self.y}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y])


@dataclass(frozen=True)
class CurveParams:
    w: float
    z: float
    H: float

    def __post_init__(self) -> None:
        if not self.z > 0:
            raise ValueError(f"base height z must be positive, got {self.z}")
        if not self.H > 0:
            raise ValueError(f"H must be positive, got {self.H}")

    @property
    def scale(self) -> float:
        """The factor z e^{1/2H} / 2H multiplying S_H in x(t)."""
        return self.z * math.exp(1.0 / (2.0 * self.H)) / (2.0 * self.H)


@dataclass(frozen=True)
class ArcOnCurve:
    curve: CurveParams
    t_lo: float
    t_hi: float

    def __post_init__(self) -> None:
        if not self.t_lo < self.t_hi:
            raise ValueError("an arc needs t_lo < t_hi")
        if self.t_hi - self.t_lo > TWO_PI + 1e-12:
            raise ValueError("an embedded arc spans at most one period")

    @property
    def start(self) -> Point:
        return gamma(self.curve, self.t_lo)

    @property
    def end(self) -> Point:
        return gamma(self.curve, self.t_hi)

    def sample(self, n: int = 512) -> np.ndarray:
        return sample_curve(self.curve, np.linspace(self.t_lo, self.t_hi, n))

    def reversed_sample(self, n: int = 512) -> np.ndarray:
        return self.sample(n)[::-1]


@dataclass(frozen=True)
class CurveConstants:
    L: float
    M: float
    T: float


class UnsupportedConfiguration(ValueError):
    """Input outside the range where the connector counts are guaranteed."""


# ---------------------------------------------------------------------------
# constants and the S function

def _G(H: float, u: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """int_{-1}^{u} g_H, clamping u to [-1, 1]."""
    u = min(1.0, max(-1.0, u))
    return integrate_g(H, -1.0, u, spec)


@lru_cache(maxsize=256)
def _constants_cached(H: float, abs_tol: float, rel_tol: float, max_sub: int) -> CurveConstants:
    spec = QuadratureSpec(abs_tol, rel_tol, max_sub)
    k = math.exp(1.0 / (2.0 * H)) / (2.0 * H)
    L = k * integrate_g(H, -1.0, 0.0, spec)
    M = -k * integrate_g(H, -1.0, 1.0, spec)
    T = find_root(lambda c: integrate_g(H, -1.0, c, spec), RootSpec(1e-12, 1.0 - 1e-15, tol=1e-15))
    return CurveConstants(L=L, M=M, T=T)


def constants(H: float, spec: QuadratureSpec = DEFAULT_QUAD) -> CurveConstants:
    """The constants L_H, M_H and T_H of one loop."""
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    return _constants_cached(float(H), spec.abs_tol, spec.rel_tol, int(spec.max_subdivisions))


def _s_reduced(H: float, t0: float, spec: QuadratureSpec) -> float:
    # -int_0^{t0} cos(s) e^{-cos(s)/2H} ds, the substituted form of both branches
    if t0 == 0.0:
        return 0.0
    return -adaptive_quad(g_theta(H), 0.0, t0, spec)[0]


@lru_cache(maxsize=256)
def _s_pi(H: float) -> float:
    return _s_reduced(H, math.pi, DEFAULT_QUAD)


def _reduce(t: float) -> tuple[int, float]:
    n = math.floor((t + math.pi) / TWO_PI)
    t0 = t - n * TWO_PI
    if t0 > math.pi:  # guard against rounding at the period boundary
        n, t0 = n + 1, t0 - TWO_PI
    return n, t0


def s_function(H: float, t: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """S_H(t), extended to the real line by S(2n pi + t0) = 2n S(pi) + S(t0)."""
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    n, t0 = _reduce(float(t))
    s0 = _s_reduced(H, t0, spec)
    if n == 0:
        return s0
    return 2.0 * n * _s_pi(H) + s0


def _s_increment(H: float, t: float, dt: float) -> float:
    """S(t + dt) - S(t) integrated directly over [t, t + dt]."""
    return -adaptive_quad(g_theta(H), t, t + dt)[0]


def gamma(curve: CurveParams, t: float) -> Point:
    x = curve.w + curve.scale * s_function(curve.H, t)
    y = curve.z * math.exp(math.sin(0.5 * t) ** 2 / curve.H)
    return Point(x, y)


def gamma_xy(curve: CurveParams, t: float) -> tuple[float, float]:
    p = gamma(curve, t)
    return p.x, p.y


def sample_curve(curve: CurveParams, ts: np.ndarray) -> np.ndarray:
    """Points of the curve at an increasing array of parameters (n x 2 array).

    x is accumulated from exact panel integrals between consecutive samples,
    so long samples stay consistent with :func:`gamma` to quadrature accuracy.
    """
    ts = np.asarray(ts, dtype=float)
    H = curve.H
    out = np.empty((ts.size, 2))
    if ts.size == 0:
        return out
    k = 1.0 / (2.0 * H)
    # 8-point Gauss-Legendre on each panel: the integrand is entire and panels
    # are short, so this is accurate to rounding for the sample densities used.
    gx, gw = np.polynomial.legendre.leggauss(8)
    a, b = ts[:-1], ts[1:]
    half, mid = 0.5 * (b - a), 0.5 * (a + b)
    nodes = mid[:, None] + half[:, None] * gx[None, :]
    panel = -half * ((np.cos(nodes) * np.exp(-k * np.cos(nodes))) @ gw)
    s = s_function(H, float(ts[0])) + np.concatenate([[0.0], np.cumsum(panel)])
    out[:, 0] = curve.w + curve.scale * s
    out[:, 1] = curve.z * np.exp(np.sin(0.5 * ts) ** 2 / H)
    return out


def gamma_velocity(curve: CurveParams, t: np.ndarray) -> np.ndarray:
    """Exact derivative (x'(t), y'(t)); |gamma'| = scale * e^{-cos t / 2H}."""
    t = np.asarray(t, dtype=float)
    e = curve.scale * np.exp(-np.cos(t) / (2.0 * curve.H))
    return np.stack([-np.cos(t) * e, np.sin(t) * e], axis=-1)


def branch_of(t: float) -> int:
    """+1 on the x >= w side of the loop (t in [-pi, 0)), -1 on the other side."""
    _, t0 = _reduce(t)
    return 1 if t0 < 0 else -1


def x_of_y(curve: CurveParams, y: float, branch: int) -> float:
    """Horizontal-graph form of the loop: x(y) = w +- scale * int_{-1}^{-1+2H ln(y/z)} g_H."""
    top = curve.z * math.exp(1.0 / curve.H)
    if not (curve.z < y < top):
        raise ValueError(f"y={y} outside the open window ({curve.z}, {top})")
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    u = -1.0 + 2.0 * curve.H * math.log(y / curve.z)
    return curve.w + branch * curve.scale * _G(curve.H, u)


def height_parameter(curve: CurveParams, y: float) -> float:
    """u = -1 + 2H ln(y/z), the height variable of the quadrature formulas."""
    return -1.0 + 2.0 * curve.H * math.log(y / curve.z)


def curvature_residual(curve: CurveParams, t: float, h_fd: float | None = None) -> float:
    """|x'y'' - x''y' + (2H/y)(x'^2 + y'^2)^{3/2}| by central finite differences.

    Fourth-order central stencils with step ``h_fd`` are used.  Function
    differences are formed from exact increments (panel integrals for x, expm1
    for y) so that cancellation does not swamp the second differences.
    """
    if h_fd is None:
        h_fd = 1e-5 * max(1.0, abs(t))
    H, c = curve.H, curve.scale
    y0 = curve.z * math.exp(math.sin(0.5 * t) ** 2 / H)
    dx = {k: c * _s_increment(H, t, k * h_fd) for k in (-2, -1, 1, 2)}
    # sin^2(a) - sin^2(b) = sin(a - b) sin(a + b), free of cancellation
    dy = {
        k: y0 * math.expm1(math.sin(0.5 * k * h_fd) * math.sin(t + 0.5 * k * h_fd) / H)
        for k in (-2, -1, 1, 2)
    }

    def d1(d):
        return (-d[2] + 8 * d[1] - 8 * d[-1] + d[-2]) / (12 * h_fd)

    def d2(d):
        return (-d[2] + 16 * d[1] + 16 * d[-1] - d[-2]) / (12 * h_fd**2)

    x1, y1, x2, y2 = d1(dx), d1(dy), d2(dx), d2(dy)
    lhs = x1 * y2 - x2 * y1
    rhs = (-2.0 * H / y0) * (x1 * x1 + y1 * y1) ** 1.5
    return abs(lhs - rhs)


def arc_length(arc: ArcOnCurve) -> float:
    """Euclidean length: scale * int e^{-cos(t)/2H} dt over the arc.

    This is the height-variable formula L = scale * int e^{u/2H}/sqrt(1-u^2) du
    applied piecewise on the monotone pieces, written after u = -cos t.
    """
    c = arc.curve
    return c.scale * adaptive_quad(speed_theta(c.H), arc.t_lo, arc.t_hi)[0]


def arc_length_between_heights(z: float, H: float, u1: float, u2: float) -> float:
    """Length of a monotone piece with base height z between heights u1 <= u2."""
    from .numerics import integrate_speed

    return z * math.exp(1.0 / (2.0 * H)) / (2.0 * H) * integrate_speed(H, u1, u2)


# ---------------------------------------------------------------------------
# normalised separation functions of horizontally aligned connectors

def _check_t(H: float, t: float, hi: float) -> None:
    if not (0.0 <= t <= hi):
        raise ValueError(f"t={t} outside [0, {hi}]")


def lbar(H: float, t: float) -> float:
    """Normalised width of the lower (through P1) connector at relative height t."""
    k = constants(H)
    _check_t(H, t, 1.0 + k.T)
    return 2.0 * math.exp(-t / (2 * H)) * math.exp(1 / (2 * H)) / (2 * H) * _G(H, -1.0 + t)


def dbar(H: float, t: float) -> float:
    """Normalised distance between the first and second crossings of y = z on x >= 0."""
    k = constants(H)
    _check_t(H, t, 1.0 + k.T)
    inner = k.M - math.exp(1 / (2 * H)) / (2 * H) * _G(H, -1.0 + t)
    return 2.0 * math.exp(-t / (2 * H)) * inner


def upper_width(H: float, t: float) -> float:
    """Normalised width of the over-the-top (through P4) connector, t in [0, 2]."""
    k = constants(H)
    _check_t(H, t, 2.0)
    inner = k.M + math.exp(1 / (2 * H)) / (2 * H) * _G(H, -1.0 + t)
    return 2.0 * math.exp(-t / (2 * H)) * inner


def f_aux(H: float, t: float) -> float:
    """The function whose sign is the sign of dbar'(t); increasing on (0, 2)."""
    k = constants(H)
    if not 0.0 < t < 2.0:
        raise ValueError("f is defined on the open interval (0, 2)")
    e = math.exp(1 / (2 * H))
    return -k.M / (2 * H) + e / (2 * H) ** 2 * _G(H, -1.0 + t) - e / (2 * H) * g_function(H, -1.0 + t)


@lru_cache(maxsize=128)
def k_of_h(H: float) -> tuple[float, float]:
    """(K(H), t0): the minimum of dbar over [0, 1 + T_H] and where it is attained.

    f is increasing with a single zero on (0, 2).  When that zero lies inside
    (0, 1 + T_H) it is the minimiser; for small H it lies beyond 1 + T_H, dbar
    is then decreasing on the whole interval and the minimum sits at the
    right endpoint.  For large H the loops of a curve overlap and the minimum
    is negative, in which case no separation satisfies 2w < z K(H).
    """
    k = constants(H)
    t_end = 1.0 + k.T
    root = find_root(lambda t: f_aux(H, t), RootSpec(1e-9, 2.0 - 1e-9, tol=1e-14))
    t0 = root if root < t_end else t_end
    return dbar(H, t0), t0


# ---------------------------------------------------------------------------
# connectors

def _scan_roots(func, lo: float, hi: float, n: int) -> list[tuple[float, float]]:
    """Brackets [a, b] with a sign change of ``func`` (vectorised) on a grid."""
    grid = np.linspace(lo, hi, n)
    vals = func(grid)
    brackets = []
    for i in range(n - 1):
        a, b = vals[i], vals[i + 1]
        if not (np.isfinite(a) and np.isfinite(b)):
            continue
        if a == 0.0:
            brackets.append((grid[i], grid[i]))
        elif a * b < 0:
            brackets.append((grid[i], grid[i + 1]))
    return brackets


def _solve_scalar(f, a: float, b: float) -> float:
    if a == b:
        return a
    return find_root(f, RootSpec(a, b, tol=1e-14 * max(1.0, abs(a), abs(b))))


def horizontal_connectors(p: Point, q: Point, H: float, require_unique: bool = True) -> list[ArcOnCurve]:
    """All embedded 2H/y arcs joining two horizontally aligned points.

    Returns the arcs above y = z first, then the arcs below ordered by
    increasing length.  Requires 0 < |q.x - p.x| < z K(H) unless
    ``require_unique`` is False, in which case every root found by the scan
    is returned without the count guarantee.
    """
    from .numerics import g_primitive

    if abs(p.y - q.y) > 1e-12 * max(1.0, p.y):
        raise ValueError("endpoints are not horizontally aligned")
    sep = abs(q.x - p.x)
    if sep == 0.0:
        raise ValueError("endpoints coincide")
    z = 0.5 * (p.y + q.y)
    K, _ = k_of_h(H)
    if require_unique and not sep < z * K:
        raise UnsupportedConfiguration(
            f"separation {sep} >= z K(H) = {z * K}: connector count not guaranteed"
        )
    k = constants(H)
    mid = 0.5 * (p.x + q.x)
    target = sep / z
    e = math.exp(1 / (2 * H)) / (2 * H)
    arcs: list[ArcOnCurve] = []

    # above: P4 of the connector on the midline, t in (0, 2)
    def up(ts):
        return 2.0 * np.exp(-ts / (2 * H)) * (k.M + e * g_primitive(H, -1.0 + ts)) - target

    for a, b in _scan_roots(up, 1e-12, 2.0 - 1e-12, 4001):
        t = _solve_scalar(lambda s: upper_width(H, s) - target, a, b)
        zb = z * math.exp(-t / (2 * H))
        th = math.acos(min(1.0, max(-1.0, 1.0 - t)))
        curve = CurveParams(mid - zb * k.M, zb, H)
        arcs.append(ArcOnCurve(curve, th, TWO_PI - th))

    # below: P1 of the connector on the midline, t in (0, 1 + T)
    def low(ts):
        return 2.0 * np.exp(-ts / (2 * H)) * e * g_primitive(H, -1.0 + ts) - target

    below = []
    for a, b in _scan_roots(low, 1e-12, 1.0 + k.T - 1e-12, 4001):
        t = _solve_scalar(lambda s: lbar(H, s) - target, a, b)
        zb = z * math.exp(-t / (2 * H))
        th = math.acos(min(1.0, max(-1.0, 1.0 - t)))
        below.append(ArcOnCurve(CurveParams(mid, zb, H), -th, th))
    arcs.sort(key=arc_length)
    below.sort(key=arc_length)
    return arcs + below


def arch_connector(p: Point, q: Point, H: float) -> ArcOnCurve:
    """Shortest horizontal connector lying above the endpoints (an arch)."""
    z = 0.5 * (p.y + q.y)
    for arc in horizontal_connectors(p, q, H, require_unique=False):
        if arc.sample(65)[:, 1].max() > z * (1 + 1e-12):
            return arc
    raise UnsupportedConfiguration("no arch connector found")


def smile_connector(p: Point, q: Point, H: float) -> ArcOnCurve:
    """Shortest horizontal connector lying below the endpoints."""
    z = 0.5 * (p.y + q.y)
    for arc in sorted(horizontal_connectors(p, q, H, require_unique=False), key=arc_length):
        if arc.sample(65)[:, 1].max() <= z * (1 + 1e-12):
            return arc
    raise UnsupportedConfiguration("no lower connector found")


def vertical_gap_limit(z: float, H: float) -> float:
    """z (e^{T_H/2H} - 1): the largest vertical gap with a Type I pair."""
    return z * math.expm1(constants(H).T / (2 * H))


def _type_one_solution(z_lo: float, z_hi: float, H: float) -> tuple[float, float]:
    """(a, delta): relative heights of the lower endpoint and of the gap."""
    delta = 2 * H * math.log(z_hi / z_lo)

    def phi(a):
        return integrate_g(H, -1.0 + a, min(1.0, -1.0 + a + delta))

    a = find_root(phi, RootSpec(1.0 - delta, 1.0, tol=1e-15))
    return a, delta


def vertical_connectors(p: Point, q: Point, H: float) -> list[ArcOnCurve]:
    """The Type I pair joining vertically aligned points: [right-bulging, left-bulging]."""
    if abs(p.x - q.x) > 1e-12 * max(1.0, abs(p.x)):
        raise ValueError("endpoints are not vertically aligned")
    if p.y == q.y:
        raise ValueError("endpoints coincide")
    lo, hi = (p, q) if p.y < q.y else (q, p)
    gap = hi.y - lo.y
    if not gap < vertical_gap_limit(lo.y, H):
        raise UnsupportedConfiguration(
            f"vertical gap {gap} >= z(e^(T_H/2H) - 1) = {vertical_gap_limit(lo.y, H)}"
        )
    a, delta = _type_one_solution(lo.y, hi.y, H)
    y1 = lo.y * math.exp(-a / (2 * H))
    c = y1 * math.exp(1 / (2 * H)) / (2 * H)
    shift = c * _G(H, -1.0 + a)
    th_a = math.acos(min(1.0, max(-1.0, 1.0 - a)))
    th_b = math.acos(min(1.0, max(-1.0, 1.0 - a - delta)))
    x0 = 0.5 * (p.x + q.x)
    right = ArcOnCurve(CurveParams(x0 - shift, y1, H), -th_b, -th_a)
    left = ArcOnCurve(CurveParams(x0 + shift, y1, H), th_a, th_b)
    return [right, left]


def p3_parameter(H: float) -> float:
    """t3 in (pi/2, pi) with gamma(+-t3) = P3, the self-crossing of a loop."""
    return math.acos(-constants(H).T)


def classify_vertical(arc: ArcOnCurve, p: Point, q: Point) -> str:
    """'TypeI', 'TypeII' or 'TypeIII' according to where p and q sit on the loop."""
    tol = 1e-7 * max(1.0, p.y, q.y)
    ends = [arc.start, arc.end]
    params = [arc.t_lo, arc.t_hi]

    def locate(pt: Point) -> float:
        for e, t in zip(ends, params):
            if abs(e.x - pt.x) <= tol and abs(e.y - pt.y) <= tol:
                return t
        raise ValueError("point is not an endpoint of the arc")

    tp, tq = locate(p), locate(q)
    if p.y > q.y:
        tp, tq = tq, tp
    n, tp0 = _reduce(tp)
    tq0 = tq - n * TWO_PI
    if tp0 > 0:  # mirror so that the lower endpoint sits on the x >= w side
        tp0, tq0 = -tp0, -tq0
    t3 = p3_parameter(arc.curve.H)
    eps = 1e-9
    half = 0.5 * math.pi
    if -half - eps <= tp0 <= eps:
        if -t3 - eps <= tq0 <= -half + eps:
            return "TypeI"
        if t3 - eps <= tq0 <= math.pi + eps:
            return "TypeII"
    if -t3 - eps <= tp0 <= -half + eps:
        if t3 - eps <= tq0 <= math.pi + eps or -math.pi - eps <= tq0 <= -t3 + eps:
            return "TypeIII"
    raise ValueError("endpoint configuration is not one of the three vertical types")


def polyline_self_intersects(pts: np.ndarray, skip: int = 1) -> bool:
    """True if non-adjacent segments of an open polyline cross."""
    a = pts[:-1]
    b = pts[1:]
    n = len(a)
    if n < 3:
        return False
    d = b - a
    for i in range(n - 2):
        j0 = i + 1 + skip
        if j0 >= n:
            break
        c, e = a[j0:], d[j0:]
        den = d[i, 0] * e[:, 1] - d[i, 1] * e[:, 0]
        w = c - a[i]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (w[:, 0] * e[:, 1] - w[:, 1] * e[:, 0]) / den
            u = (w[:, 0] * d[i, 1] - w[:, 1] * d[i, 0]) / den
        hit = (den != 0) & (s > 1e-12) & (s < 1 - 1e-12) & (u > 1e-12) & (u < 1 - 1e-12)
        if np.any(hit):
            return True
    return False


def arc_is_embedded(arc: ArcOnCurve) -> bool:
    """No loop crossing (P3 pair) inside the arc and no sampled self-intersection."""
    t3 = p3_parameter(arc.curve.H)
    k_lo = math.floor((arc.t_lo - t3) / TWO_PI) - 1
    for k in range(k_lo, k_lo + 4):
        c = k * TWO_PI
        if arc.t_lo < c - t3 and c + t3 < arc.t_hi:
            return False
    return not polyline_self_intersects(arc.sample(400))


def connectors(p: Point, q: Point, H: float, samples_per_decade: int = 2000) -> list[ArcOnCurve]:
    """All embedded 2H/y arcs joining p and q found by a scan over base height.

    For a base height z_b each endpoint fixes its height variable
    u = -1 + 2H ln(y/z_b); the parameter is +-theta(u) + 2k pi and the base
    abscissa is eliminated, leaving one scalar equation in z_b per branch
    choice.  Sign changes on a log-spaced grid (``samples_per_decade``) are
    refined by bracketed root finding.  Tangential (double) roots between grid
    points can be missed; completeness holds only up to scan resolution.
    """
    from .numerics import g_primitive

    if p == q or (p.x == q.x and p.y == q.y):
        raise ValueError("endpoints coincide")
    lo_y, hi_y = min(p.y, q.y), max(p.y, q.y)
    zmin = hi_y * math.exp(-1.0 / H)
    zmax = lo_y
    if zmin >= zmax:
        return []
    decades = math.log10(zmax / zmin)
    n = max(200, int(math.ceil(samples_per_decade * decades)) + 1)
    span = math.log(zmax / zmin)
    eps = 1e-12
    grid_lo, grid_hi = math.log(zmin) + eps * span, math.log(zmax) - eps * span
    e = math.exp(1 / (2 * H)) / (2 * H)
    s_pi = 2 * H * constants(H).M / math.exp(1 / (2 * H))
    dx = q.x - p.x

    def residual(logz, sp, sq, kq):
        zb = np.exp(logz)
        up = -1.0 + 2 * H * (math.log(p.y) - logz)
        uq = -1.0 + 2 * H * (math.log(q.y) - logz)
        gp = g_primitive(H, np.clip(up, -1, 1))
        gq = g_primitive(H, np.clip(uq, -1, 1))
        return zb * e * (2 * kq * s_pi + sq * gq - sp * gp) - dx

    def residual_exact(logz, sp, sq, kq):
        zb = math.exp(logz)
        up = -1.0 + 2 * H * (math.log(p.y) - logz)
        uq = -1.0 + 2 * H * (math.log(q.y) - logz)
        return zb * e * (2 * kq * s_pi + sq * _G(H, uq) - sp * _G(H, up)) - dx

    found: list[ArcOnCurve] = []
    for sp in (1, -1):
        for sq in (1, -1):
            for kq in (-1, 0, 1):
                for a, b in _scan_roots(lambda g: residual(g, sp, sq, kq), grid_lo, grid_hi, n):
                    logz = _solve_scalar(lambda v: residual_exact(v, sp, sq, kq), a, b)
                    zb = math.exp(logz)
                    up = min(1.0, max(-1.0, -1.0 + 2 * H * math.log(p.y / zb)))
                    uq = min(1.0, max(-1.0, -1.0 + 2 * H * math.log(q.y / zb)))
                    tp = -sp * math.acos(-up)
                    tq = -sq * math.acos(-uq) + kq * TWO_PI
                    if abs(tq - tp) < 1e-12 or abs(tq - tp) > TWO_PI:
                        continue
                    w = p.x - zb * e * s_function(H, tp)
                    arc = ArcOnCurve(CurveParams(w, zb, H), min(tp, tq), max(tp, tq))
                    if _endpoint_mismatch(arc, p, q) > 1e-8 * zb:
                        continue
                    if not arc_is_embedded(arc):
                        continue
                    if not any(_same_arc(arc, other) for other in found):
                        found.append(arc)
    found.sort(key=lambda a: (round(arc_length(a), 12), a.curve.z, a.curve.w))
    return found


def _endpoint_mismatch(arc: ArcOnCurve, p: Point, q: Point) -> float:
    s, e = arc.start, arc.end
    d1 = max(abs(s.x - p.x), abs(s.y - p.y), abs(e.x - q.x), abs(e.y - q.y))
    d2 = max(abs(s.x - q.x), abs(s.y - q.y), abs(e.x - p.x), abs(e.y - p.y))
    return min(d1, d2)


def _same_arc(a: ArcOnCurve, b: ArcOnCurve, tol: float = 1e-7) -> bool:
    pa, pb = a.sample(33), b.sample(33)
    scale = max(1.0, a.curve.z)
    return bool(np.max(np.abs(pa - pb)) < tol * scale or np.max(np.abs(pa - pb[::-1])) < tol * scale)


def endpoint_mismatch(arc: ArcOnCurve, p: Point, q: Point) -> float:
    """Largest coordinate mismatch between the arc's endpoints and {p, q}."""
    return _endpoint_mismatch(arc, p, q)
