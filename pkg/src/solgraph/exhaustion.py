"""Exhaustion sequences: Dirichlet solves with boundary data +-n replacing +-infinity."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np

from .domains import AdmissibleDomain
from .flux import flux
from .mesh import Mesh
from .solver import ScalarField, SolveError, SolverOptions, solve_dirichlet

MODES = ("b-empty", "a-empty", "c-empty")
MONOTONE_TOL = 1e-8
CData = Union[float, Callable]


@dataclass
class ExhaustionStep:
    n: float
    values: np.ndarray
    probe_values: np.ndarray
    fluxes: dict
    mu: float | None = None
    iterations: int = 0


@dataclass
class ExhaustionReport:
    mode: str
    steps: list = field(default_factory=list)
    monotone: list = field(default_factory=list)
    max_violation: list = field(default_factory=list)
    probes: np.ndarray | None = None
    interior: np.ndarray | None = None
    failure: str | None = None

    @property
    def n_values(self) -> list:
        return [s.n for s in self.steps]

    @property
    def mu(self) -> list:
        return [s.mu for s in self.steps]

    def probe_gaps(self) -> list[float]:
        """max_probe |u_{n_{k+1}} - u_{n_k}| for consecutive recorded n."""
        return [
            float(np.max(np.abs(b.probe_values - a.probe_values)))
            for a, b in zip(self.steps[:-1], self.steps[1:])
        ]


def _cdata(c_data: CData):
    if callable(c_data):
        return c_data
    c = float(c_data)
    return lambda x, y: np.full_like(np.asarray(x, dtype=float), c)


def _mode_data(domain: AdmissibleDomain, mode: str, n: float, c_data: CData) -> dict:
    f = _cdata(c_data)
    kinds = domain.kinds
    data: dict = {}
    if mode == "b-empty":
        for i, k in enumerate(kinds):
            if k == "C":
                data[i] = lambda x, y, f=f: np.minimum(f(x, y), n)
        for i, k in enumerate(kinds):
            if k == "A":
                data[i] = float(n)
    elif mode == "a-empty":
        for i, k in enumerate(kinds):
            if k == "C":
                data[i] = lambda x, y, f=f: np.maximum(f(x, y), -n)
        for i, k in enumerate(kinds):
            if k in ("B", "B*"):
                data[i] = float(-n)
    else:
        for i, k in enumerate(kinds):
            if k in ("B", "B*"):
                data[i] = 0.0
        for i, k in enumerate(kinds):
            if k == "A":
                data[i] = float(n)
    return data


def default_probes(mesh: Mesh, count: int = 5) -> np.ndarray:
    """Interior nodes far from the boundary (deterministic choice)."""
    interior = mesh.interior_nodes()
    bpts = mesh.nodes[mesh.boundary_nodes()]
    pts = mesh.nodes[interior]
    dist = np.min(np.linalg.norm(pts[:, None, :] - bpts[None, :, :], axis=2), axis=1) if len(pts) < 4000 else None
    if dist is None:
        from scipy.spatial import cKDTree

        dist = cKDTree(bpts).query(pts)[0]
    order = np.argsort(-dist, kind="stable")
    deep = order[: max(count, len(order) // 20)]
    pick = deep[np.linspace(0, len(deep) - 1, count).astype(int)]
    return interior[np.unique(pick)]


def mu_level(mesh: Mesh, values: np.ndarray, groups: Sequence[np.ndarray]) -> float:
    """Largest c at which two node groups lie in one component of {values >= c}.

    This is the level at which the super-level components containing
    distinct groups stop being disjoint; computed by a descending sweep with
    union-find over the mesh edges.
    """
    n = mesh.n_nodes
    parent = np.arange(n)
    label = np.full(n, -1)
    for gi, g in enumerate(groups):
        label[g] = gi
    comp_labels: dict[int, set] = {}

    def find(a):
        root = a
        while parent[root] != root:
            root = parent[root]
        while parent[a] != root:
            parent[a], a = root, parent[a]
        return root

    tri = mesh.triangles
    edges = np.vstack([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in edges:
        adj[a].append(b)
        adj[b].append(a)
    added = np.zeros(n, dtype=bool)
    for node in np.argsort(-values, kind="stable"):
        added[node] = True
        comp_labels[node] = {label[node]} - {-1}
        for nb in adj[node]:
            if not added[nb]:
                continue
            ra, rb = find(node), find(nb)
            if ra == rb:
                continue
            la, lb = comp_labels[ra], comp_labels[rb]
            if la and lb and len(la | lb) > 1:
                return float(values[node])
            parent[rb] = ra
            comp_labels[ra] = la | lb
    return float("-inf")


def solve_exhaustion(
    domain: AdmissibleDomain,
    mesh: Mesh,
    n_values: Sequence[float],
    mode: str,
    c_data: CData = 0.0,
    H: float | None = None,
    opts: SolverOptions = SolverOptions(),
    probes: np.ndarray | None = None,
) -> ExhaustionReport:
    """Solve with the mode's +-n data for each n; record monotonicity, probes, fluxes and mu(n).

    b-empty: n on A arcs, min(f, n) on C arcs.
    a-empty: -n on B* arcs, max(f, -n) on C arcs (mesh of the starred domain).
    c-empty: n on A arcs, 0 on B* arcs (mesh of the starred domain); mu(n)
    is the level at which super-level sets of v_n - v_0 separate the A arcs.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    ns = [float(v) for v in n_values]
    if any(b <= a for a, b in zip(ns[:-1], ns[1:])):
        raise ValueError("n_values must be strictly increasing")
    diam = float(np.max(np.ptp(mesh.nodes, axis=0)))
    if ns and ns[-1] > 1e6 * max(diam, 1e-300):
        raise ValueError("boundary data exceed the 1e6 * diam cap")
    H = domain.H if H is None else H
    if mode in ("a-empty", "c-empty"):
        domain = domain.star() if "B" in domain.kinds else domain
    probes = default_probes(mesh) if probes is None else np.asarray(probes, dtype=int)
    report = ExhaustionReport(mode, probes=probes, interior=mesh.interior_nodes())
    a_groups = [mesh.arc_nodes(i) for i, k in enumerate(domain.kinds) if k == "A"]
    base = None
    if mode == "c-empty":
        base = solve_dirichlet(mesh, _mode_data(domain, mode, 0.0, c_data), H, opts).values
    prev: ScalarField | None = None
    sign = -1.0 if mode == "a-empty" else 1.0
    for n in ns:
        try:
            sol = solve_dirichlet(
                mesh, _mode_data(domain, mode, n, c_data), H, opts, initial=None if prev is None else prev.values
            )
        except SolveError as exc:
            report.failure = f"n={n}: {exc}"
            break
        fl = {i: flux(mesh, sol, i) for i in range(mesh.n_arcs) if np.any(mesh.edge_arc == i)}
        mu = None
        if mode == "c-empty":
            mu = mu_level(mesh, sol.values - base, a_groups)
        report.steps.append(ExhaustionStep(n, sol.values.copy(), sol.values[probes].copy(), fl, mu, sol.iterations))
        if prev is not None:
            drop = sign * (prev.values - sol.values)
            worst = float(max(0.0, np.max(drop)))
            report.max_violation.append(worst)
            report.monotone.append(worst <= MONOTONE_TOL)
        prev = sol
    return report


def divergence_mask(report: ExhaustionReport, cutoff: float, shifted: bool = True) -> np.ndarray:
    """Interior nodes whose value at the largest n leaves [-cutoff, cutoff].

    In c-empty mode the values are shifted by -mu(n) when ``shifted``.
    Boundary nodes carry prescribed data and are never flagged.
    """
    if not report.steps:
        raise ValueError("empty exhaustion report")
    last = report.steps[-1]
    vals = last.values - (last.mu if (shifted and last.mu is not None) else 0.0)
    mask = np.zeros(len(vals), dtype=bool)
    if np.isinf(cutoff):
        return mask
    inner = report.interior
    mask[inner] = np.abs(vals[inner]) > cutoff
    return mask
