"""Flux of a discrete solution across boundary arcs and interior cross-cuts.

The flux density across a curve with unit normal nu is y^2 (grad u . nu) / W
with W = sqrt(1 + y^4 |grad u|^2); its magnitude never exceeds 1, so the
flux across an arc is bounded by the arc's Euclidean length.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .curves import Point
from .geometry import Segment, region_integral, signed_area
from .mesh import Mesh
from .solver import ScalarField, _assembler, locate


@dataclass(frozen=True)
class EdgeFlux:
    density: np.ndarray
    length: np.ndarray


def _values(u) -> np.ndarray:
    return u.values if isinstance(u, ScalarField) else np.asarray(u, dtype=float)


def edge_fluxes(mesh: Mesh, u, arc_id: int | None = None) -> EdgeFlux:
    """Density and length of every boundary edge (optionally of one arc), outward normal."""
    asm = _assembler(mesh)
    vals = _values(u)
    sel = np.arange(len(mesh.boundary_edges)) if arc_id is None else np.nonzero(mesh.edge_arc == arc_id)[0]
    if sel.size == 0:
        raise KeyError(f"unknown arc id {arc_id}")
    edges = mesh.boundary_edges[sel]
    tri = mesh.edge_triangle()[sel]
    a, b = mesh.nodes[edges[:, 0]], mesh.nodes[edges[:, 1]]
    d = b - a
    length = np.linalg.norm(d, axis=1)
    normal = np.stack([d[:, 1], -d[:, 0]], axis=1) / length[:, None]
    third = mesh.nodes[mesh.triangles[tri]].sum(axis=1) - a - b
    flip = np.einsum("mi,mi->m", normal, third - a) > 0
    normal[flip] *= -1
    g = np.einsum("mij,mj->mi", asm.B[tri], vals[mesh.triangles[tri]])
    ym = 0.5 * (a[:, 1] + b[:, 1])
    W = np.sqrt(1.0 + ym**4 * np.einsum("mi,mi->m", g, g))
    density = ym**2 * np.einsum("mi,mi->m", g, normal) / W
    return EdgeFlux(density, length)


def flux(mesh: Mesh, u, arc_id: int) -> float:
    """Outward flux across the boundary arc ``arc_id`` (edgewise, one-sided gradients)."""
    ef = edge_fluxes(mesh, u, arc_id)
    return math.fsum(ef.density * ef.length)


def arc_polyline_length(mesh: Mesh, arc_id: int) -> float:
    sel = mesh.edge_arc == arc_id
    e = mesh.boundary_edges[sel]
    return float(np.linalg.norm(mesh.nodes[e[:, 1]] - mesh.nodes[e[:, 0]], axis=1).sum())


def discrete_weighted_area(mesh: Mesh) -> float:
    """int (1/y) da over the triangulated polygon (exact per triangle via the boundary form)."""
    p = mesh.nodes[mesh.triangles]
    total = 0.0
    # -oint ln y dx per triangle edge, closed form for straight edges
    for k in range(3):
        a, b = p[:, k], p[:, (k + 1) % 3]
        ya, yb = a[:, 1], b[:, 1]
        dx = b[:, 0] - a[:, 0]
        same = np.abs(yb - ya) < 1e-14 * ya
        with np.errstate(divide="ignore", invalid="ignore"):
            ml = np.where(same, np.log(ya), (yb * np.log(yb) - ya * np.log(ya)) / np.where(same, 1.0, yb - ya) - 1.0)
        total -= np.sum(ml * dx)
    return float(total)


@dataclass(frozen=True)
class FluxReport:
    fluxes: dict
    lengths: dict
    source_total: float
    balance_residual: float
    max_density: float

    def within_length_bound(self, h: float) -> bool:
        return all(abs(self.fluxes[a]) <= self.lengths[a] * (1 + 10 * h) for a in self.fluxes)


def flux_report(mesh: Mesh, u, H: float, weighted_area: float | None = None) -> FluxReport:
    """Per-arc fluxes, Euclidean arc lengths and the balance sum(flux) - 2H I."""
    fluxes, lengths = {}, {}
    dmax = 0.0
    for arc in range(mesh.n_arcs):
        if not np.any(mesh.edge_arc == arc):
            continue
        ef = edge_fluxes(mesh, u, arc)
        fluxes[arc] = math.fsum(ef.density * ef.length)
        lengths[arc] = float(ef.length.sum())
        dmax = max(dmax, float(np.max(np.abs(ef.density))))
    area = discrete_weighted_area(mesh) if weighted_area is None else weighted_area
    src = 2.0 * H * area
    return FluxReport(fluxes, lengths, src, math.fsum(fluxes.values()) - src, dmax)


def arc_chain(mesh: Mesh, arc_id: int) -> np.ndarray:
    """Node coordinates of a boundary arc, ordered with the domain on the left."""
    sel = np.nonzero(mesh.edge_arc == arc_id)[0]
    if sel.size == 0:
        raise KeyError(f"unknown arc id {arc_id}")
    edges = mesh.boundary_edges[sel]
    tri = mesh.edge_triangle()[sel]
    # orient every edge so that the adjacent triangle lies on its left
    oriented = []
    for (a, b), t in zip(edges, tri):
        third = mesh.nodes[mesh.triangles[t]].sum(axis=0) - mesh.nodes[a] - mesh.nodes[b]
        d, w = mesh.nodes[b] - mesh.nodes[a], third - mesh.nodes[a]
        oriented.append((a, b) if d[0] * w[1] - d[1] * w[0] > 0 else (b, a))
    nxt = dict(oriented)
    starts = set(nxt) - set(nxt.values())
    if len(starts) != 1:
        raise ValueError("arc edges do not form a single open chain")
    node = starts.pop()
    chain = [node]
    while node in nxt:
        node = nxt[node]
        chain.append(node)
    return mesh.nodes[np.array(chain)]


def eta_flux(mesh: Mesh, u, arc_id: int, eta: np.ndarray, H: float, samples_per_h: int = 4) -> float:
    """Flux across an arc computed through an interior path eta joining its endpoints.

    Returns 2H I(Delta) - int_eta y^2 (grad u . nu)/W ds, where Delta is the
    region between the arc and eta and nu is the normal of eta pointing out of
    Delta.
    """
    chain = arc_chain(mesh, arc_id)
    eta = np.asarray(eta, dtype=float)
    diam = float(np.max(np.ptp(mesh.nodes, axis=0)))
    tol = 1e-9 * max(1.0, diam)
    if np.linalg.norm(eta[0] - chain[0]) > tol or np.linalg.norm(eta[-1] - chain[-1]) > tol:
        raise ValueError("eta must run from the arc's first endpoint to its last")
    back = eta[::-1]
    ring = np.vstack([chain, back[1:]])
    from shapely.geometry import LinearRing

    if len(ring) < 3 or not LinearRing(ring).is_simple or signed_area(np.vstack([ring, ring[:1]])) <= 0:
        raise ValueError("eta does not close a subdomain with the arc")
    pieces = [(Segment(Point(*ring[i]), Point(*ring[(i + 1) % len(ring)])), 1) for i in range(len(ring))]
    area = region_integral(pieces, check=False)
    asm = _assembler(mesh)
    vals = _values(u)
    total = 0.0
    for a, b in zip(back[:-1], back[1:]):
        seg = b - a
        L = float(np.linalg.norm(seg))
        if L == 0.0:
            continue
        k = max(1, int(math.ceil(samples_per_h * L / mesh.h))) if np.isfinite(mesh.h) else 8
        s = (np.arange(k) + 0.5) / k
        pts = a + s[:, None] * seg
        tri = locate(mesh, pts)
        if np.any(tri < 0):
            raise ValueError("eta leaves the meshed domain")
        g = np.einsum("mij,mj->mi", asm.B[tri], vals[mesh.triangles[tri]])
        normal = np.array([seg[1], -seg[0]]) / L
        y = pts[:, 1]
        W = np.sqrt(1.0 + y**4 * np.einsum("mi,mi->m", g, g))
        total += float(np.sum(y**2 * (g @ normal) / W)) * (L / k)
    return 2.0 * H * area - total


def flux_eta_independence(mesh: Mesh, u, arc_id: int, eta_variants: Sequence[np.ndarray], H: float) -> float:
    """Largest pairwise difference of the eta-defined flux over the given paths."""
    vals = [eta_flux(mesh, u, arc_id, eta, H) for eta in eta_variants]
    if len(vals) < 2:
        return 0.0
    return max(abs(a - b) for a, b in itertools.combinations(vals, 2))


def eta_paths(mesh: Mesh, arc_id: int, depth: float, n: int = 64) -> np.ndarray:
    """A convenience interior path: the arc's chord pushed inward by ``depth`` at its middle."""
    chain = arc_chain(mesh, arc_id)
    p, q = chain[0], chain[-1]
    d = q - p
    normal = np.array([-d[1], d[0]]) / np.linalg.norm(d)  # left of p->q: the domain side
    s = np.linspace(0.0, 1.0, n)
    bump = 4 * s * (1 - s) * depth
    return p + s[:, None] * d + bump[:, None] * normal
