"""Constrained triangulations of curved domains with arc-tagged boundary edges."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import triangle

from .curves import Point
from .geometry import Geometry, Segment, geometry_length, oriented_sample, pieces_diameter

MIN_ANGLE_DEG = 20.0


class MeshError(RuntimeError):
    """Triangulation failed or produced an invalid mesh."""


@dataclass(frozen=True)
class PlainDomain:
    """A closed counterclockwise chain of pieces with no admissibility requirements (test domains)."""

    pieces: tuple[tuple[Geometry, int], ...]
    labels: tuple[str, ...] = ()

    @property
    def arcs(self):
        return self.pieces


def polygon_domain(points: Sequence[tuple[float, float]], labels: Sequence[str] | None = None) -> PlainDomain:
    """Straight-sided test domain through ``points`` (counterclockwise)."""
    pts = [Point(float(x), float(y)) for x, y in points]
    pieces = tuple((Segment(pts[i], pts[(i + 1) % len(pts)]), 1) for i in range(len(pts)))
    return PlainDomain(pieces, tuple(labels) if labels else ())


def square_domain(x0: float = 0.0, y0: float = 1.0, side: float = 1.0) -> PlainDomain:
    return polygon_domain([(x0, y0), (x0 + side, y0), (x0 + side, y0 + side), (x0, y0 + side)])


@dataclass
class Mesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    edge_arc: np.ndarray
    n_arcs: int
    h: float
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def areas(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def boundary_nodes(self) -> np.ndarray:
        return np.unique(self.boundary_edges.ravel())

    def interior_nodes(self) -> np.ndarray:
        mask = np.ones(self.n_nodes, dtype=bool)
        mask[self.boundary_nodes()] = False
        return np.nonzero(mask)[0]

    def arc_nodes(self, arc_id: int) -> np.ndarray:
        return np.unique(self.boundary_edges[self.edge_arc == arc_id].ravel())

    def edge_lengths(self) -> np.ndarray:
        p = self.nodes[self.triangles]
        return np.stack([np.linalg.norm(p[:, (k + 1) % 3] - p[:, k], axis=1) for k in range(3)], axis=1)

    def min_angle_deg(self) -> float:
        L = self.edge_lengths()
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        cosines = [
            (b * b + c * c - a * a) / (2 * b * c),
            (a * a + c * c - b * b) / (2 * a * c),
            (a * a + b * b - c * c) / (2 * a * b),
        ]
        ang = np.degrees(np.arccos(np.clip(np.stack(cosines), -1, 1)))
        return float(ang.min())

    def edge_triangle(self) -> np.ndarray:
        """Index of the triangle adjacent to each boundary edge."""
        if "edge_tri" not in self._cache:
            lookup = {}
            for t, tri in enumerate(self.triangles):
                for k in range(3):
                    a, b = tri[k], tri[(k + 1) % 3]
                    lookup[(min(a, b), max(a, b))] = t
            self._cache["edge_tri"] = np.array(
                [lookup[(min(a, b), max(a, b))] for a, b in self.boundary_edges], dtype=int
            )
        return self._cache["edge_tri"]


def _polygonize(domain, h: float):
    pts, segs, marks = [], [], []
    for arc_id, (geom, orient) in enumerate(domain.pieces):
        n = max(2, int(math.ceil(geometry_length(geom) / h)))
        if isinstance(geom, Segment):
            sample = oriented_sample(geom, orient, n + 1)
        else:
            # equal parameter steps; refine until every chord is <= h
            sample = oriented_sample(geom, orient, n + 1)
            while np.max(np.linalg.norm(np.diff(sample, axis=0), axis=1)) > h:
                n = int(n * 1.25) + 1
                sample = oriented_sample(geom, orient, n + 1)
        start = len(pts)
        pts.extend(sample[:-1].tolist())
        for k in range(len(sample) - 1):
            segs.append((start + k, start + k + 1))
            marks.append(arc_id + 2)
    total = len(pts)
    segs[-1] = (segs[-1][0], 0)
    segs = [(a % total, b % total) for a, b in segs]
    return np.array(pts), np.array(segs), np.array(marks)


def make_mesh(domain, h: float, max_refinements: int = 6) -> Mesh:
    """Quality triangulation (min angle 20 degrees) of ``domain`` with target size ``h``.

    The boundary is polygonalised with chords of length <= h; every boundary
    edge keeps the index of the arc it came from.
    """
    diam = pieces_diameter(domain.pieces)
    if not (h > 0 and h < diam / 4):
        raise ValueError(f"need 0 < h < diam/4 = {diam / 4}")
    verts, segs, marks = _polygonize(domain, h)
    area = math.sqrt(3) / 4 * h * h
    for _ in range(max_refinements):
        try:
            out = triangle.triangulate(
                {"vertices": verts, "segments": segs, "segment_markers": marks[:, None]},
                f"pq{MIN_ANGLE_DEG:g}a{area:.24f}DQY",
            )
        except Exception as exc:  # pragma: no cover - library failure path
            raise MeshError(f"triangulation failed: {exc}") from exc
        mesh = _to_mesh(out, len(domain.pieces), h)
        if mesh.edge_lengths().max() <= 2 * h:
            break
        area *= 0.5
    else:
        raise MeshError("could not meet the 2h edge-length bound")
    problems = check_mesh(mesh)
    if problems:
        raise MeshError("; ".join(problems))
    return mesh


def _to_mesh(out: dict, n_arcs: int, h: float) -> Mesh:
    if "triangles" not in out:
        raise MeshError("triangulation produced no triangles")
    nodes = np.asarray(out["vertices"], dtype=float)
    tris = np.asarray(out["triangles"], dtype=int)
    p = nodes[tris]
    e1, e2 = p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]
    neg = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0] < 0
    tris[neg] = tris[neg][:, [0, 2, 1]]
    segs = np.asarray(out["segments"], dtype=int)
    marks = np.asarray(out["segment_markers"], dtype=int).ravel()
    keep = marks >= 2
    return Mesh(nodes, tris, segs[keep], marks[keep] - 2, n_arcs, h)


def check_mesh(mesh: Mesh) -> list[str]:
    problems = []
    if np.any(mesh.areas() <= 0):
        problems.append("non-positive triangle area")
    if mesh.nodes[:, 1].min() <= 0:
        problems.append("node below the upper half-plane")
    deg = np.bincount(mesh.boundary_edges.ravel(), minlength=mesh.n_nodes)
    bnodes = mesh.boundary_nodes()
    if np.any(deg[bnodes] != 2):
        problems.append("boundary edges do not form closed loops")
    if mesh.min_angle_deg() < MIN_ANGLE_DEG - 1e-6:
        problems.append(f"min angle {mesh.min_angle_deg():.3f} below {MIN_ANGLE_DEG}")
    return problems


# ---------------------------------------------------------------------------
# text format


def _f(x: float) -> str:
    return format(float(x), ".17g")


def mesh_to_text(mesh: Mesh) -> str:
    lines = [str(mesh.n_nodes)]
    lines += [f"{_f(x)} {_f(y)}" for x, y in mesh.nodes]
    lines.append(str(len(mesh.triangles)))
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    lines.append(str(len(mesh.boundary_edges)))
    lines += [f"{a} {b} {arc}" for (a, b), arc in zip(mesh.boundary_edges, mesh.edge_arc)]
    return "\n".join(lines) + "\n"


def mesh_from_text(text: str, h: float = float("nan")) -> Mesh:
    rows = text.split("\n")
    pos = 0

    def take():
        nonlocal pos
        pos += 1
        return rows[pos - 1]

    n = int(take())
    nodes = np.array([[float(v) for v in take().split()] for _ in range(n)]).reshape(n, 2)
    m = int(take())
    tris = np.array([[int(v) for v in take().split()] for _ in range(m)], dtype=int).reshape(m, 3)
    k = int(take())
    be = np.array([[int(v) for v in take().split()] for _ in range(k)], dtype=int).reshape(k, 3)
    n_arcs = int(be[:, 2].max()) + 1 if k else 0
    return Mesh(nodes, tris, be[:, :2].copy(), be[:, 2].copy(), n_arcs, h)
