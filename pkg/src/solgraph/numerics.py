"""Singular-endpoint quadrature, bracketed root finding and small numeric helpers.

Every integral of the toolkit is of the form

    int_a^b  u^k e^{u/2H} / sqrt(1 - u^2)  du,      k in {0, 1},

which has inverse-square-root singularities at u = -1 and u = 1.  With the
substitution u = -cos(theta) (du = sin(theta) dtheta, sqrt(1-u^2) = sin(theta))
the integrands become

    g_H:    cos(theta)  exp(-cos(theta)/2H)
    speed:              exp(-cos(theta)/2H)

which are entire functions of theta, so a plain adaptive Gauss-Kronrod rule on
[theta(a), theta(b)] converges geometrically.  The raw form near u = +-1 is
never evaluated.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np


class ConvergenceError(RuntimeError):
    """A quadrature or iteration did not reach its tolerance."""

    def __init__(self, message: str, achieved: float = float("nan")) -> None:
        super().__init__(message)
        self.achieved = achieved


class BracketError(ValueError):
    """The initial bracket of a root search has no sign change."""


@dataclass(frozen=True)
class QuadratureSpec:
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    max_subdivisions: int = 2**16

    def __post_init__(self) -> None:
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("quadrature tolerances must be positive")
        if int(self.max_subdivisions) < 1:
            raise ValueError("max_subdivisions must be >= 1")


@dataclass(frozen=True)
class RootSpec:
    bracket_lo: float
    bracket_hi: float
    tol: float = 1e-13
    max_iters: int = 200

    def __post_init__(self) -> None:
        if not self.bracket_lo < self.bracket_hi:
            raise ValueError("bracket_lo must be < bracket_hi")
        if not self.tol > 0:
            raise ValueError("root tolerance must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be >= 1")


DEFAULT_QUAD = QuadratureSpec()

# Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
_XK = np.array([
    -0.991455371120812639206854697526329,
    -0.949107912342758524526189684047851,
    -0.864864423359769072789712788640926,
    -0.741531185599394439863864773280788,
    -0.586087235467691130294144845693013,
    -0.405845151377397166906606412076961,
    -0.207784955007898467600689403773245,
    0.0,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144845693013,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
])
_WK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
])
_WG = np.zeros(15)
_WG[[1, 3, 5, 7, 9, 11, 13]] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
]


def _gk15(f: Callable[[np.ndarray], np.ndarray], a: float, b: float) -> tuple[float, float]:
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    vals = f(mid + half * _XK)
    kron = half * float(np.dot(_WK, vals))
    gauss = half * float(np.dot(_WG, vals))
    return kron, abs(kron - gauss)


def adaptive_quad(
    f: Callable[[np.ndarray], np.ndarray],
    a: float,
    b: float,
    spec: QuadratureSpec = DEFAULT_QUAD,
) -> tuple[float, float]:
    """Globally adaptive Gauss-Kronrod quadrature of a vectorised smooth ``f``.

    Returns ``(value, error_estimate)``.  Intervals are bisected in order of
    decreasing error estimate until the total estimate meets
    ``max(abs_tol, rel_tol*|value|)``.
    """
    if a == b:
        return 0.0, 0.0
    sign = 1.0
    if b < a:
        a, b, sign = b, a, -1.0
    val, err = _gk15(f, a, b)
    heap = [(-err, a, b, val)]
    total, total_err = val, err
    n = 1
    while total_err > max(spec.abs_tol, spec.rel_tol * abs(total)):
        if n >= spec.max_subdivisions:
            raise ConvergenceError(
                f"quadrature tolerance not reached after {n} subdivisions "
                f"(error estimate {total_err:.3e})",
                achieved=total_err,
            )
        neg_err, lo, hi, v = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        v1, e1 = _gk15(f, lo, mid)
        v2, e2 = _gk15(f, mid, hi)
        heapq.heappush(heap, (-e1, lo, mid, v1))
        heapq.heappush(heap, (-e2, mid, hi, v2))
        total += v1 + v2 - v
        total_err += e1 + e2 + neg_err
        n += 1
    # re-sum to shed accumulated rounding of the running total
    total = math.fsum(item[3] for item in heap)
    return sign * total, total_err


def theta_of_u(u: float) -> float:
    """Inverse of the substitution u = -cos(theta), theta in [0, pi]."""
    return math.acos(min(1.0, max(-1.0, -u)))


def _check_interval(H: float, a: float, b: float) -> None:
    if not H > 0:
        raise ValueError(f"H must be positive, got {H}")
    if not (-1.0 <= a <= 1.0 and -1.0 <= b <= 1.0):
        raise ValueError(f"integration limits must lie in [-1, 1], got ({a}, {b})")
    if a > b:
        raise ValueError(f"expected a <= b, got ({a}, {b})")


def g_theta(H: float) -> Callable[[np.ndarray], np.ndarray]:
    """The g_H integrand after the substitution u = -cos(theta)."""
    k = 1.0 / (2.0 * H)
    return lambda th: np.cos(th) * np.exp(-k * np.cos(th))


def speed_theta(H: float) -> Callable[[np.ndarray], np.ndarray]:
    """The arc-length integrand after the substitution u = -cos(theta)."""
    k = 1.0 / (2.0 * H)
    return lambda th: np.exp(-k * np.cos(th))


def g_function(H: float, u: float) -> float:
    """g_H(u) = -u e^{u/2H} / sqrt(1-u^2) on the open interval (-1, 1)."""
    return -u * math.exp(u / (2.0 * H)) / math.sqrt(1.0 - u * u)


def integrate_g(H: float, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """int_a^b g_H(u) du with -1 <= a <= b <= 1."""
    _check_interval(H, a, b)
    if a == b:
        return 0.0
    return adaptive_quad(g_theta(H), theta_of_u(a), theta_of_u(b), spec)[0]


def integrate_speed(H: float, a: float, b: float, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """int_a^b e^{u/2H} / sqrt(1-u^2) du with -1 <= a <= b <= 1."""
    _check_interval(H, a, b)
    if a == b:
        return 0.0
    return adaptive_quad(speed_theta(H), theta_of_u(a), theta_of_u(b), spec)[0]


# Fixed 48-point Gauss-Legendre rule, used by the vectorised primitives that
# feed coarse scans (results are always refined with the adaptive routines).
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


def g_primitive(H: float, u: np.ndarray) -> np.ndarray:
    """Vectorised int_{-1}^{u} g_H for an array of upper limits (scan helper)."""
    th = np.arccos(np.clip(-np.asarray(u, dtype=float), -1.0, 1.0))
    nodes = 0.5 * th[..., None] * (_GL_X + 1.0)
    vals = np.cos(nodes) * np.exp(-np.cos(nodes) / (2.0 * H))
    return 0.5 * th * (vals @ _GL_W)


def speed_primitive(H: float, u: np.ndarray) -> np.ndarray:
    """Vectorised int_{-1}^{u} e^{v/2H}/sqrt(1-v^2) dv (scan helper)."""
    th = np.arccos(np.clip(-np.asarray(u, dtype=float), -1.0, 1.0))
    nodes = 0.5 * th[..., None] * (_GL_X + 1.0)
    vals = np.exp(-np.cos(nodes) / (2.0 * H))
    return 0.5 * th * (vals @ _GL_W)


def find_root(f: Callable[[float], float], spec: RootSpec) -> float:
    """Bracket-preserving root finder (bisection with secant acceleration).

    The secant candidate is taken only when it falls strictly inside the
    current bracket and shrinks it by at least a quarter; otherwise the step
    is a bisection.  The routine is deterministic.
    """
    lo, hi = float(spec.bracket_lo), float(spec.bracket_hi)
    flo, fhi = float(f(lo)), float(f(hi))
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if math.isnan(flo) or math.isnan(fhi) or flo * fhi > 0:
        raise BracketError(
            f"no sign change on [{lo}, {hi}]: f(lo)={flo:.6g}, f(hi)={fhi:.6g}"
        )
    use_secant = True
    for _ in range(int(spec.max_iters)):
        width = hi - lo
        if width <= spec.tol:
            return lo if abs(flo) <= abs(fhi) else hi
        x = 0.5 * (lo + hi)
        if use_secant and fhi != flo:
            xs = hi - fhi * (hi - lo) / (fhi - flo)
            if lo < xs < hi:
                x = xs
        fx = float(f(x))
        if fx == 0.0:
            return x
        if (fx < 0) == (flo < 0):
            lo, flo = x, fx
        else:
            hi, fhi = x, fx
        # force a bisection whenever the secant step did not shrink enough
        use_secant = (hi - lo) < 0.75 * width
    raise ConvergenceError(
        f"root not bracketed to {spec.tol} within {spec.max_iters} iterations",
        achieved=hi - lo,
    )


def sign_changes(values: np.ndarray) -> np.ndarray:
    """Indices i with a strict sign change between values[i] and values[i+1]."""
    v = np.asarray(values, dtype=float)
    s = np.sign(v)
    return np.nonzero((s[:-1] * s[1:] < 0) | ((s[:-1] == 0) & (s[1:] != 0)))[0]


def vector_identity_residual(v1, v2, squared_term: bool = False) -> tuple[float, float]:
    """Residual and slack of the vector identity used by the comparison principle.

    With W_i = sqrt(1 + |v_i|^2) the identity reads
        <v1 - v2, v1/W1 - v2/W2> = (W1 + W2)/2 * (|v1/W1 - v2/W2|^2 + (1/W1 - 1/W2)),
    with the last term read literally.  Read literally this is not an exact
    identity; ``squared_term=True`` uses (1/W1 - 1/W2)^2 instead, for which the
    residual vanishes to rounding.  Returns ``(|LHS - RHS|, slack)`` where
    slack = <v1 - v2, v1/W1 - v2/W2> - |v1/W1 - v2/W2|^2.
    """
    a = np.asarray(v1, dtype=float).ravel()
    b = np.asarray(v2, dtype=float).ravel()
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    w1 = math.sqrt(1.0 + float(a @ a))
    w2 = math.sqrt(1.0 + float(b @ b))
    diff = a / w1 - b / w2
    lhs = float((a - b) @ diff)
    sq = float(diff @ diff)
    last = 1.0 / w1 - 1.0 / w2
    rhs = 0.5 * (w1 + w2) * (sq + (last * last if squared_term else last))
    return abs(lhs - rhs), lhs - sq
