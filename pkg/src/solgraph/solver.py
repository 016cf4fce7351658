"""P1 finite elements for div(y^2 grad u / W) = 2H/y + f, W = sqrt(1 + y^4 |grad u|^2).

This is the Euclidean form of the mean curvature H graph equation over the
half-plane model.  The weak residual for a test function phi is

    R(phi) = int y^2 (grad u . grad phi) / W da + int (2H/y + f) phi da,

evaluated with one-point (centroid) quadrature per triangle.  The residual is
the gradient of the convex energy

    E(u) = int sqrt(1 + y^4 |grad u|^2) / y^2 da + int (2H/y + f) u da,

which drives the damped-Newton line search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .mesh import Mesh

BoundaryData = Union[np.ndarray, Callable, Mapping[int, Union[float, Callable]]]


@dataclass(frozen=True)
class SolverOptions:
    newton_tol: float = 1e-10
    max_newton: int = 200
    damping_min: float = 2.0**-10
    picard_fallback: bool = True

    def __post_init__(self) -> None:
        if not self.newton_tol > 0:
            raise ValueError("newton_tol must be positive")
        if not 0 < self.damping_min <= 1:
            raise ValueError("damping_min must lie in (0, 1]")
        if self.max_newton < 1:
            raise ValueError("max_newton must be at least 1")


@dataclass
class ScalarField:
    values: np.ndarray
    mesh: Mesh
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    picard_steps: int = 0

    def __post_init__(self) -> None:
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field has non-finite values")


class SolveError(RuntimeError):
    """Newton/Picard did not reach the tolerance; carries the residual history."""

    def __init__(self, message: str, history: list, values: np.ndarray | None = None):
        super().__init__(message)
        self.history = list(history)
        self.values = values


class Assembler:
    """Per-triangle geometry shared by residual, energy, Jacobian and flux evaluation."""

    def __init__(self, mesh: Mesh) -> None:
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        self.area = 0.5 * det
        # gradients of the three hat functions, shape (M, 2, 3)
        gx = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1) / det[:, None]
        gy = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1) / det[:, None]
        self.B = np.stack([gx, gy], axis=1)
        self.centroid = p.mean(axis=1)
        self.yc = self.centroid[:, 1]
        tri = mesh.triangles
        self.rows = np.repeat(tri, 3, axis=1).ravel()
        self.cols = np.tile(tri, (1, 3)).ravel()
        self.n = mesh.n_nodes

    def gradients(self, u: np.ndarray) -> np.ndarray:
        return np.einsum("mij,mj->mi", self.B, u[self.mesh.triangles])

    def W(self, g: np.ndarray) -> np.ndarray:
        return np.sqrt(1.0 + self.yc**4 * np.einsum("mi,mi->m", g, g))

    def source(self, H: float, forcing) -> np.ndarray:
        """Per-triangle value of 2H/y + f at the centroid."""
        s = 2.0 * H / self.yc
        if forcing is None:
            return s
        if callable(forcing):
            return s + np.asarray(forcing(self.centroid[:, 0], self.yc), dtype=float)
        return s + np.asarray(forcing, dtype=float)

    def residual_full(self, u: np.ndarray, H: float, forcing=None) -> np.ndarray:
        g = self.gradients(u)
        coef = self.area * self.yc**2 / self.W(g)
        local = coef[:, None] * np.einsum("mi,mij->mj", g, self.B)
        local += (self.area * self.source(H, forcing) / 3.0)[:, None]
        return np.bincount(self.mesh.triangles.ravel(), weights=local.ravel(), minlength=self.n)

    def energy(self, u: np.ndarray, H: float, forcing=None) -> float:
        g = self.gradients(u)
        ubar = u[self.mesh.triangles].mean(axis=1)
        terms = self.area * (self.W(g) / self.yc**2 + self.source(H, forcing) * ubar)
        return math.fsum(terms)

    def _stiffness(self, coef_matrix: np.ndarray) -> sp.csr_matrix:
        """Assemble sum_T B^T C_T B with a (M, 2, 2) coefficient array."""
        local = np.einsum("mki,mkl,mlj->mij", self.B, coef_matrix, self.B)
        return sp.coo_matrix((local.ravel(), (self.rows, self.cols)), shape=(self.n, self.n)).tocsr()

    def jacobian(self, u: np.ndarray) -> sp.csr_matrix:
        g = self.gradients(u)
        W = self.W(g)
        y2 = self.yc**2
        eye = np.broadcast_to(np.eye(2), (len(W), 2, 2))
        outer = np.einsum("mi,mj->mij", g, g)
        C = (self.area * y2 / W)[:, None, None] * (eye - (self.yc**4 / W**2)[:, None, None] * outer)
        return self._stiffness(C)

    def frozen(self, u: np.ndarray | None) -> sp.csr_matrix:
        """Stiffness with the coefficient y^2/W frozen at ``u`` (W = 1 when u is None)."""
        W = np.ones_like(self.yc) if u is None else self.W(self.gradients(u))
        C = (self.area * self.yc**2 / W)[:, None, None] * np.broadcast_to(np.eye(2), (len(W), 2, 2))
        return self._stiffness(C)

    def load(self, H: float, forcing=None) -> np.ndarray:
        local = np.repeat((self.area * self.source(H, forcing) / 3.0)[:, None], 3, axis=1)
        return np.bincount(self.mesh.triangles.ravel(), weights=local.ravel(), minlength=self.n)


def _assembler(mesh: Mesh) -> Assembler:
    if "assembler" not in mesh._cache:
        mesh._cache["assembler"] = Assembler(mesh)
    return mesh._cache["assembler"]


def residual(mesh: Mesh, u, H: float, forcing=None) -> np.ndarray:
    """Weak-form residual at the interior nodes (ordered as ``mesh.interior_nodes()``)."""
    values = u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)
    return _assembler(mesh).residual_full(values, H, forcing)[mesh.interior_nodes()]


def boundary_values(mesh: Mesh, data: BoundaryData) -> np.ndarray:
    """Node values (NaN off the boundary) from per-node arrays, callables or per-arc maps.

    For per-arc maps, arcs are applied in mapping order, so a later arc wins
    at shared corner nodes.
    """
    out = np.full(mesh.n_nodes, np.nan)
    bn = mesh.boundary_nodes()
    if isinstance(data, Mapping):
        for arc_id, val in data.items():
            nodes = mesh.arc_nodes(arc_id)
            if nodes.size == 0:
                raise KeyError(f"unknown arc id {arc_id}")
            if callable(val):
                out[nodes] = val(mesh.nodes[nodes, 0], mesh.nodes[nodes, 1])
            else:
                out[nodes] = float(val)
    elif callable(data):
        out[bn] = data(mesh.nodes[bn, 0], mesh.nodes[bn, 1])
    else:
        arr = np.asarray(data, dtype=float)
        if arr.shape != (mesh.n_nodes,):
            raise ValueError("per-node boundary data must have one value per mesh node")
        out[bn] = arr[bn]
    if np.any(~np.isfinite(out[bn])):
        raise ValueError("boundary data missing or not finite on some boundary nodes")
    return out


def _solve_block(K: sp.csr_matrix, rhs: np.ndarray, interior: np.ndarray) -> np.ndarray:
    A = K[interior][:, interior].tocsc()
    return spla.spsolve(A, rhs)


def solve_dirichlet(
    mesh: Mesh,
    boundary_data: BoundaryData,
    H: float,
    opts: SolverOptions = SolverOptions(),
    forcing=None,
    initial: np.ndarray | None = None,
) -> ScalarField:
    """Damped Newton with energy backtracking and a frozen-coefficient (Picard) fallback."""
    if H < 0:
        raise ValueError("H must be non-negative")
    asm = _assembler(mesh)
    bvals = boundary_values(mesh, boundary_data)
    interior = mesh.interior_nodes()
    bnodes = mesh.boundary_nodes()
    u = np.zeros(mesh.n_nodes)
    u[bnodes] = bvals[bnodes]
    load = asm.load(H, forcing)

    def picard(frozen_at):
        K = asm.frozen(frozen_at)
        rhs = -(K[interior][:, bnodes] @ u[bnodes]) - load[interior]
        out = u.copy()
        out[interior] = _solve_block(K, rhs, interior)
        return out

    if initial is not None:
        u[interior] = np.asarray(initial, dtype=float)[interior]
    elif interior.size:
        u = picard(None)
    history: list[float] = []
    picard_steps = 0
    if interior.size == 0:
        return ScalarField(u, mesh, 0, history, 0)
    for it in range(opts.max_newton):
        R = asm.residual_full(u, H, forcing)[interior]
        rnorm = float(np.max(np.abs(R)))
        history.append(rnorm)
        if rnorm <= opts.newton_tol:
            return ScalarField(u, mesh, it, history, picard_steps)
        J = asm.jacobian(u)
        delta = np.zeros_like(u)
        delta[interior] = _solve_block(J, -R, interior)
        if np.max(np.abs(delta)) <= 1e-14 * (1.0 + np.max(np.abs(u))):
            # step below round-off: the residual is at its floating-point floor
            return ScalarField(u, mesh, it, history, picard_steps)
        E0 = asm.energy(u, H, forcing)
        lam = 1.0
        accepted = False
        while lam >= opts.damping_min:
            trial = u + lam * delta
            E1 = asm.energy(trial, H, forcing)
            if E1 < E0 - 1e-14 * abs(E0):
                accepted = True
            elif abs(E1 - E0) <= 1e-14 * abs(E0):
                r1 = float(np.max(np.abs(asm.residual_full(trial, H, forcing)[interior])))
                accepted = r1 < rnorm
            if accepted:
                u = trial
                break
            lam *= 0.5
        if not accepted:
            if not opts.picard_fallback:
                raise SolveError("Newton step failed to decrease the energy", history, u)
            u = picard(u)
            picard_steps += 1
    R = asm.residual_full(u, H, forcing)[interior]
    history.append(float(np.max(np.abs(R))))
    if history[-1] <= opts.newton_tol:
        return ScalarField(u, mesh, opts.max_newton, history, picard_steps)
    raise SolveError(f"no convergence after {opts.max_newton} iterations (residual {history[-1]:.3e})", history, u)


def interpolate(field_values: np.ndarray, mesh: Mesh, pts: np.ndarray) -> np.ndarray:
    """Piecewise-linear interpolation at arbitrary points inside the mesh (NaN outside)."""
    tri_idx = locate(mesh, pts)
    out = np.full(len(pts), np.nan)
    ok = tri_idx >= 0
    if np.any(ok):
        bary = barycentric(mesh, tri_idx[ok], pts[ok])
        out[ok] = np.einsum("mi,mi->m", bary, field_values[mesh.triangles[tri_idx[ok]]])
    return out


def barycentric(mesh: Mesh, tri_idx: np.ndarray, pts: np.ndarray) -> np.ndarray:
    p = mesh.nodes[mesh.triangles[tri_idx]]
    v0, v1 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    w = pts - p[:, 0]
    det = v0[:, 0] * v1[:, 1] - v0[:, 1] * v1[:, 0]
    l1 = (w[:, 0] * v1[:, 1] - w[:, 1] * v1[:, 0]) / det
    l2 = (v0[:, 0] * w[:, 1] - v0[:, 1] * w[:, 0]) / det
    return np.stack([1 - l1 - l2, l1, l2], axis=1)


def locate(mesh: Mesh, pts: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Index of a triangle containing each point (-1 if none)."""
    import shapely

    if "strtree" not in mesh._cache:
        polys = shapely.polygons(mesh.nodes[mesh.triangles])
        mesh._cache["strtree"] = shapely.STRtree(polys)
    tree = mesh._cache["strtree"]
    out = np.full(len(pts), -1, dtype=int)
    q_pts, q_tri = tree.query(shapely.points(pts), predicate="intersects")
    if q_pts.size == 0:
        return out
    # prefer the candidate with the most interior barycentric coordinates
    bary = barycentric(mesh, q_tri, pts[q_pts])
    score = bary.min(axis=1)
    order = np.lexsort((-score, q_pts))
    q_pts, q_tri = q_pts[order], q_tri[order]
    first = np.ones(len(q_pts), dtype=bool)
    first[1:] = q_pts[1:] != q_pts[:-1]
    out[q_pts[first]] = q_tri[first]
    return out


def barrier_profile(a: float, r):
    """(w, w', w'') for the local supersolution profile w(r) = -r^a, 0 < a < 1/2."""
    if not 0 < a < 0.5:
        raise ValueError("a must lie in (0, 1/2)")
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ValueError("r must be positive")
    w = -(r**a)
    w1 = -a * r ** (a - 1)
    w2 = -a * (a - 1) * r ** (a - 2)
    if w.ndim == 0:
        return float(w), float(w1), float(w2)
    return w, w1, w2


def barrier_limits(a: float, ks=range(1, 9)) -> tuple[np.ndarray, np.ndarray]:
    """w' and |w''/w'^3| on the grid r = 10^-k (w' -> -inf and the ratio -> 0)."""
    r = 10.0 ** -np.asarray(list(ks), dtype=float)
    _, w1, w2 = barrier_profile(a, r)
    return w1, np.abs(w2 / w1**3)
