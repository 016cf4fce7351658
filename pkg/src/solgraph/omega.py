"""The one-parameter family of domains inside a single loop of a 2H/y-curve.

The loop has base point (0, y0).  For a height parameter s in (0, 1) the
domain is bounded by two subarcs A+ / A- of the loop (from relative height s
up to phi(s)) and by two horizontal connectors: B_D through the lower pair of
vertices (an arch whose top point has relative height d(s)) and B_E through
the upper pair (a lower arc whose bottom point has relative height e(s)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .curves import (
    ArcOnCurve,
    CurveParams,
    Point,
    _G,
    arc_length,
    arch_connector,
    constants,
    smile_connector,
)
from .domains import AdmissibleDomain, BoundaryArc
from .geometry import region_integral
from .numerics import BracketError, RootSpec, find_root, g_primitive, integrate_g

TWO_PI = 2.0 * math.pi


class OmegaGeometryError(ValueError):
    """The B arcs of the family member intersect (s >= s0)."""


def _check_h(H: float) -> None:
    if not H > 0:
        raise ValueError("H must be positive")


def _acos(v: float) -> float:
    return math.acos(min(1.0, max(-1.0, v)))


def phi_of_s(H: float, s: float) -> float:
    """Relative height of E+: the zero of the g-integral from s - 1 to phi - 1."""
    _check_h(H)
    if not 0.0 <= s <= 1.0:
        raise ValueError("s must lie in [0, 1]")
    T = constants(H).T
    if s == 1.0:
        return 1.0
    if s == 0.0:
        return 1.0 + T
    target = _G(H, s - 1.0)
    v = find_root(lambda u: _G(H, u) - target, RootSpec(0.0, T, tol=1e-15))
    return 1.0 + v


def phi_residual(H: float, s: float, phi: float) -> float:
    return integrate_g(H, s - 1.0, phi - 1.0)


def _first_sign_change(func, lo: float, hi: float, n: int, last: bool = False) -> tuple[float, float]:
    xs = np.linspace(lo, hi, n)
    vals = func(xs)
    idx = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
    if idx.size == 0:
        raise BracketError("no sign change found in scan")
    i = idx[-1] if last else idx[0]
    return float(xs[i]), float(xs[i + 1])


def e_equation(H: float, s: float, e: float, phi: float | None = None) -> float:
    """e^{e/2H} G(-1 + phi - e) - G(-1 + s) (zero at the bottom height of B_E)."""
    phi = phi_of_s(H, s) if phi is None else phi
    return math.exp(e / (2 * H)) * _G(H, -1.0 + phi - e) - _G(H, -1.0 + s)


def d_equation(H: float, s: float, d: float) -> float:
    """e^{(d-2)/2H} int_{1-(d-s)}^1 (-g) - G(-1 + s) (zero at the top height of B_D)."""
    upper = -integrate_g(H, 1.0 - (d - s), 1.0)
    return math.exp((d - 2) / (2 * H)) * upper - _G(H, -1.0 + s)


@lru_cache(maxsize=4096)
def e_of_s(H: float, s: float) -> float:
    """Relative height of the bottom point of B_E, the non-trivial root in (0, phi(s))."""
    _check_h(H)
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    phi = phi_of_s(H, s)
    rhs = _G(H, -1.0 + s)

    def scan(es):
        return np.exp(es / (2 * H)) * g_primitive(H, -1.0 + phi - es) - rhs

    # e = 0 is the loop itself; the connector is the last + to - change before phi
    a, b = _first_sign_change(scan, phi * 1e-9, phi * (1 - 1e-12), 2001, last=True)
    return find_root(lambda e: e_equation(H, s, e, phi), RootSpec(a, b, tol=1e-15))


@lru_cache(maxsize=4096)
def d_of_s(H: float, s: float) -> float:
    """Relative height of the top point of B_D (first root above s)."""
    _check_h(H)
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    rhs = _G(H, -1.0 + s)
    tot = _G(H, 1.0)

    def scan(ds):
        upper = tot - g_primitive(H, 1.0 - (ds - s))
        return np.exp((ds - 2) / (2 * H)) * -upper - rhs

    a, b = _first_sign_change(scan, s, s + 2.0, 4001)
    return find_root(lambda d: d_equation(H, s, d), RootSpec(a, b, tol=1e-15))


@dataclass(frozen=True)
class OmegaArcs:
    a_plus: ArcOnCurve
    a_minus: ArcOnCurve
    b_d: ArcOnCurve | None
    b_e: ArcOnCurve | None
    d_plus: Point
    d_minus: Point
    e_plus: Point
    e_minus: Point


def omega_arcs(y0: float, H: float, s: float) -> OmegaArcs:
    """Boundary arcs of the family member (B arcs are None at s = 0)."""
    if not y0 > 0:
        raise ValueError("y0 must be positive")
    _check_h(H)
    if not 0.0 <= s < 1.0:
        raise ValueError("s must lie in [0, 1)")
    k = constants(H)
    loop = CurveParams(0.0, y0, H)
    phi = phi_of_s(H, s)
    tau_d, tau_e = _acos(1.0 - s), _acos(1.0 - phi)
    if s == 0.0:
        a_plus = ArcOnCurve(loop, -tau_e, 0.0)
        a_minus = ArcOnCurve(loop, 0.0, tau_e)
        p1 = a_plus.end
        p3 = a_plus.start
        return OmegaArcs(a_plus, a_minus, None, None, p1, p1, p3, p3)
    a_plus = ArcOnCurve(loop, -tau_e, -tau_d)
    a_minus = ArcOnCurve(loop, tau_d, tau_e)
    d, e = d_of_s(H, s), e_of_s(H, s)
    zd = y0 * math.exp((d - 2) / (2 * H))
    th_d = _acos(d - s - 1.0)
    b_d = ArcOnCurve(CurveParams(-zd * k.M, zd, H), th_d, TWO_PI - th_d)
    ze = y0 * math.exp(e / (2 * H))
    th_e = _acos(1.0 - (phi - e))
    b_e = ArcOnCurve(CurveParams(0.0, ze, H), -th_e, th_e)
    return OmegaArcs(a_plus, a_minus, b_d, b_e, a_plus.end, a_minus.start, a_plus.start, a_minus.end)


def _pieces(arcs: OmegaArcs) -> list:
    pieces = [(arcs.a_plus, -1)]
    if arcs.b_e is not None:
        pieces.append((arcs.b_e, 1))
    pieces.append((arcs.a_minus, -1))
    if arcs.b_d is not None:
        pieces.append((arcs.b_d, 1))
    return pieces


@dataclass(frozen=True)
class OmegaQuantities:
    s: float
    phi: float
    e: float
    d: float
    alpha: float
    beta: float
    weighted_area: float
    F: float


def omega_quantities(y0: float, H: float, s: float) -> OmegaQuantities:
    """alpha, beta, I and F = alpha - beta - 2H I for the family member at s.

    Valid on [0, s0]; at s0 the two B arcs touch, so the boundary is not
    checked for simplicity here.
    """
    arcs = omega_arcs(y0, H, s)
    alpha = 2.0 * arc_length(arcs.a_plus)
    beta = 0.0
    if arcs.b_d is not None:
        beta = arc_length(arcs.b_d) + arc_length(arcs.b_e)
    area = region_integral(_pieces(arcs), check=False)
    d = d_of_s(H, s) if s > 0 else 0.0
    e = e_of_s(H, s) if s > 0 else 1.0 + constants(H).T
    return OmegaQuantities(s, phi_of_s(H, s), e, d, alpha, beta, area, alpha - beta - 2 * H * area)


def F_of_s(y0: float, H: float, s: float) -> float:
    return omega_quantities(y0, H, s).F


def _s_bracket_scan(H: float, n: int = 60) -> tuple[float, float]:
    ss = np.linspace(1e-4, 1.0 - 1e-4, n)
    prev = None
    for lo, hi in zip(ss[:-1], ss[1:]):
        f_hi = d_of_s(H, float(hi)) - e_of_s(H, float(hi))
        if prev is None:
            prev = d_of_s(H, float(lo)) - e_of_s(H, float(lo))
        if prev < 0 <= f_hi:
            return float(lo), float(hi)
        prev = f_hi
    raise BracketError("d(s) - e(s) has no sign change on (0, 1)")


@lru_cache(maxsize=64)
def _s_zero(H: float) -> float:
    lo, hi = _s_bracket_scan(H)
    return find_root(lambda s: d_of_s(H, s) - e_of_s(H, s), RootSpec(lo, hi, tol=1e-14))


def s_zero(y0: float, H: float) -> float:
    """Parameter at which the two B arcs first touch (d(s) = e(s)).

    Relative heights do not depend on y0, so neither does s0.
    """
    if not y0 > 0:
        raise ValueError("y0 must be positive")
    _check_h(H)
    return _s_zero(H)


@lru_cache(maxsize=64)
def _s_star(y0: float, H: float) -> float:
    s0 = _s_zero(H)
    f0, f1 = F_of_s(y0, H, 0.0), F_of_s(y0, H, s0)
    if not (f0 > 0 and f1 < 0):
        raise BracketError(f"F has no sign change on [0, s0]: F(0)={f0}, F(s0)={f1}")
    return find_root(lambda s: F_of_s(y0, H, s), RootSpec(0.0, s0, tol=1e-14))


def s_star(y0: float, H: float) -> float:
    """Zero of F(s) = alpha - beta - 2H I on (0, s0)."""
    if not y0 > 0:
        raise ValueError("y0 must be positive")
    _check_h(H)
    return _s_star(float(y0), float(H))


def build_omega_s(y0: float, H: float, s: float) -> AdmissibleDomain:
    """The family member at s as an admissible domain with kinds [A, B, A, B]."""
    if not 0.0 < s < 1.0:
        raise ValueError("s must lie in (0, 1)")
    s0 = s_zero(y0, H)
    if s >= s0:
        raise OmegaGeometryError(f"s = {s} >= s0 = {s0}: the B arcs intersect")
    arcs = omega_arcs(y0, H, s)
    d_star = smile_connector(arcs.d_minus, arcs.d_plus, H)
    e_star = arch_connector(arcs.e_minus, arcs.e_plus, H)
    boundary = (
        BoundaryArc("A", arcs.a_plus, -1),
        BoundaryArc("B", arcs.b_e, 1),
        BoundaryArc("A", arcs.a_minus, -1),
        BoundaryArc("B", arcs.b_d, 1),
    )
    return AdmissibleDomain(boundary, H, (e_star, d_star))
