"""Test-side constructions: lens regions and random parameter draws."""

from __future__ import annotations

import math

import numpy as np

from solgraph.curves import (
    ArcOnCurve,
    CurveParams,
    Point,
    arc_length,
    arch_connector,
    constants,
    vertical_connectors,
    vertical_gap_limit,
)
from solgraph.domains import build_a_empty, build_b_empty
from solgraph.geometry import region_integral
from solgraph.mesh import make_mesh, square_domain
from solgraph.solver import solve_dirichlet
from solgraph.numerics import integrate_g


def _oriented(arc: ArcOnCurve, start: Point) -> int:
    s = arc.start
    return 1 if math.hypot(s.x - start.x, s.y - start.y) < 1e-8 * max(1.0, start.y) else -1


def lens_area(first: ArcOnCurve, second: ArcOnCurve, p: Point, q: Point) -> float:
    """int 1/y over the region between two arcs that both join p and q."""
    pieces = [(first, _oriented(first, p)), (second, _oriented(second, q))]
    return abs(region_integral(pieces))


def type_one_lens(z: float, H: float, frac: float) -> tuple[float, float]:
    """(l, I) for the lens between the Type I pair joining (0, z) and (0, z + gap)."""
    p, q = Point(0.0, z), Point(0.0, z + frac * vertical_gap_limit(z, H))
    right, left = vertical_connectors(p, q, H)
    return arc_length(right), lens_area(right, left, p, q)


def close_pair_lens(z: float, H: float, a: float) -> tuple[float, float, float]:
    """(l(gamma-), l(gamma+), I) for the horizontal lens whose lower arc has P1 at z e^{-a/2H}."""
    zb = z * math.exp(-a / (2 * H))
    th = math.acos(1.0 - a)
    lower = ArcOnCurve(CurveParams(0.0, zb, H), -th, th)
    half = zb * math.exp(1 / (2 * H)) / (2 * H) * integrate_g(H, -1.0, -1.0 + a)
    p, q = Point(-half, z), Point(half, z)
    upper = arch_connector(p, q, H)
    return arc_length(lower), arc_length(upper), lens_area(lower, upper, p, q)


def close_pair_a_bound(H: float) -> float:
    """Largest a with a + e^{a/2H} < 2 (bisection)."""
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid + math.exp(mid / (2 * H)) < 2:
            lo = mid
        else:
            hi = mid
    return lo


def draw_b_empty(rng: np.random.Generator):
    """Random in-bounds parameters for build_b_empty."""
    H = rng.uniform(0.3, 1.5)
    y0 = rng.uniform(0.5, 2.0)
    x0 = rng.uniform(-1.0, 1.0)
    d = rng.uniform(0.3, 0.9) * 2 * y0 / (3 + 2 * H)
    T = constants(H).T
    eps_bound = (y0 - d) * math.expm1(T / (2 * H))
    eps = rng.uniform(0.1, 0.5) * min(eps_bound, 0.5 * d)
    return Point(x0, y0), d, eps, H


def build_b_empty_draw(rng: np.random.Generator):
    p, d, eps, H = draw_b_empty(rng)
    return build_b_empty(p, d, eps, H)


A_EMPTY_PARAMS = {"vertical": (-math.pi / 2, math.pi / 2), "horizontal": (0.0, math.pi)}


def a_empty_bounds(curve: CurveParams, t: float, case: str) -> dict:
    """Upper bounds of the size parameters of build_a_empty at p = gamma(t)."""
    from solgraph.curves import gamma

    H, y = curve.H, gamma(curve, t).y
    k = constants(H)
    if case == "horizontal":
        return {"h": 2 * y * math.tanh(k.T / (4 * H)), "b": y / (4 * H + 1)}
    if case == "generic":
        d = min((2 * y / 3) * -math.expm1(-1 / (2 * H)), 2 * y / (8 * H + 3))
    else:
        d = min(y * -math.expm1(-1 / (2 * H)), 2 * y / (8 * H + 1))
    return {"d": d, "eps": 2 * y * math.exp(-1 / H) * k.L}


def draw_a_empty(rng: np.random.Generator, case: str):
    """Random curve, centre parameter and in-bounds sizes for build_a_empty."""
    H = rng.uniform(0.3, 1.0)
    curve = CurveParams(rng.uniform(-1, 1), rng.uniform(0.5, 2.0), H)
    if case == "generic":
        t = float(rng.choice([-1, 1]) * rng.uniform(0.3, 1.3))
    else:
        t = float(rng.choice(A_EMPTY_PARAMS[case]))
    bounds = a_empty_bounds(curve, t, case)
    if case == "horizontal":
        b = rng.uniform(0.3, 0.9) * bounds["b"]
        h = rng.uniform(0.3, 0.9) * min(bounds["h"], 0.5 * b)
        return curve, t, {"b": b, "h": h}
    d = rng.uniform(0.3, 0.9) * bounds["d"]
    eps = rng.uniform(0.3, 0.9) * min(bounds["eps"], 0.2 * d)
    return curve, t, {"d": d, "eps": eps}


def build_a_empty_draw(rng: np.random.Generator, case: str):
    curve, t, opts = draw_a_empty(rng, case)
    return build_a_empty(curve, t, case, **opts)


# --- manufactured solution for the Dirichlet solver ----------------------------


H_MMS = 1.0


def u_exact(x, y):
    return np.sin(1.3 * x) * y + 0.4 * x * x


def _flux_field(x, y, d=1e-6):
    ux = (u_exact(x + d, y) - u_exact(x - d, y)) / (2 * d)
    uy = (u_exact(x, y + d) - u_exact(x, y - d)) / (2 * d)
    W = np.sqrt(1 + y**4 * (ux * ux + uy * uy))
    return y * y * ux / W, y * y * uy / W


def forcing(x, y, d=1e-4):
    """f = div(y^2 grad u*/W) - 2H/y from central differences of the exact flux."""
    fx1, _ = _flux_field(x + d, y)
    fx0, _ = _flux_field(x - d, y)
    _, fy1 = _flux_field(x, y + d)
    _, fy0 = _flux_field(x, y - d)
    return (fx1 - fx0) / (2 * d) + (fy1 - fy0) / (2 * d) - 2 * H_MMS / y


def l2_error(mesh, values):
    err = values - u_exact(mesh.nodes[:, 0], mesh.nodes[:, 1])
    e2 = (err[mesh.triangles] ** 2).mean(axis=1)
    return math.sqrt(float(np.sum(mesh.areas() * e2)))


def mms_orders(hs=(1 / 16, 1 / 32, 1 / 64)):
    """L2 errors of the manufactured solution on the unit square over [0,1]x[1,2] and observed orders."""
    dom = square_domain(0.0, 1.0, 1.0)
    errs = []
    for h in hs:
        mesh = make_mesh(dom, h)
        sol = solve_dirichlet(mesh, u_exact, H_MMS, forcing=forcing)
        errs.append(l2_error(mesh, sol.values))
    return errs, [math.log(errs[k] / errs[k + 1]) / math.log(hs[k] / hs[k + 1]) for k in range(len(errs) - 1)]
