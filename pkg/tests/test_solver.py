from __future__ import annotations

import math

import numpy as np
import pytest

from helpers import mms_orders
from solgraph.mesh import MeshError, make_mesh, mesh_from_text, mesh_to_text, polygon_domain, square_domain
from solgraph.solver import (
    SolveError,
    SolverOptions,
    barrier_limits,
    barrier_profile,
    boundary_values,
    interpolate,
    residual,
    solve_dirichlet,
)

def test_mms_convergence_order():
    errs, orders = mms_orders()
    assert errs[0] > errs[1] > errs[2]
    assert min(orders) >= 1.7, orders


def test_zero_curvature_constant_data():
    mesh = make_mesh(square_domain(0.0, 1.0, 1.0), 0.1)
    sol = solve_dirichlet(mesh, np.full(mesh.n_nodes, 2.5), 0.0)
    assert np.max(np.abs(sol.values - 2.5)) <= 1e-10


def test_translation_invariance_in_x():
    pts = [(0.0, 1.0), (1.0, 1.1), (0.8, 1.8), (0.1, 1.6)]
    m1 = make_mesh(polygon_domain(pts), 0.08)
    m2 = make_mesh(polygon_domain([(x + 3.0, y) for x, y in pts]), 0.08)
    assert np.allclose(m2.nodes[:, 0] - 3.0, m1.nodes[:, 0], atol=1e-12)
    s1 = solve_dirichlet(m1, lambda x, y: x * y, 1.0)
    s2 = solve_dirichlet(m2, lambda x, y: (x - 3.0) * y, 1.0)
    assert np.max(np.abs(s1.values - s2.values)) <= 1e-9


def test_residual_vanishes_at_solution(b_empty_mesh):
    sol = solve_dirichlet(b_empty_mesh, {0: 1.0, 2: 1.0, 1: 0.0, 3: 0.0}, 1.0)
    assert np.max(np.abs(residual(b_empty_mesh, sol, 1.0))) <= 1e-10
    assert sol.residual_history[-1] <= 1e-10


def test_comparison_principle(b_empty_mesh, rng):
    mesh = b_empty_mesh
    x, y = mesh.nodes[:, 0], mesh.nodes[:, 1]
    worst = -np.inf
    for _ in range(5):
        a = rng.normal(size=4)
        b = np.abs(rng.normal(size=3))
        d1 = a[0] + a[1] * x + a[2] * y + a[3] * np.sin(4 * x)
        d2 = d1 + b[0] + b[1] * (1 + np.cos(3 * y)) + b[2] * x * x
        u1 = solve_dirichlet(mesh, d1, 1.0).values
        u2 = solve_dirichlet(mesh, d2, 1.0).values
        worst = max(worst, float(np.max(u1 - u2)))
    assert worst <= 1e-10


def test_solver_failure_reports_history():
    mesh = make_mesh(square_domain(0.0, 1.0, 1.0), 0.1)
    with pytest.raises(SolveError) as err:
        solve_dirichlet(mesh, lambda x, y: 50 * x, 1.0, SolverOptions(newton_tol=1e-30, max_newton=1))
    assert err.value.history


def test_options_validation():
    with pytest.raises(ValueError):
        SolverOptions(newton_tol=0.0)
    with pytest.raises(ValueError):
        SolverOptions(damping_min=2.0)
    with pytest.raises(ValueError):
        SolverOptions(max_newton=0)


def test_boundary_values_forms(b_empty_mesh):
    mesh = b_empty_mesh
    vals = boundary_values(mesh, {1: 0.0, 3: 0.0, 0: 5.0, 2: 5.0})
    bn = mesh.boundary_nodes()
    assert np.all(np.isfinite(vals[bn]))
    assert np.all(np.isnan(vals[mesh.interior_nodes()]))
    # later arcs win at shared corners
    corners = np.intersect1d(mesh.arc_nodes(0), mesh.arc_nodes(1))
    assert corners.size and np.all(vals[corners] == 5.0)
    with pytest.raises(ValueError):
        boundary_values(mesh, {0: 1.0})
    with pytest.raises(KeyError):
        boundary_values(mesh, {7: 1.0})
    with pytest.raises(ValueError):
        boundary_values(mesh, np.zeros(3))


def test_interpolate_linear_exactly():
    mesh = make_mesh(square_domain(0.0, 1.0, 1.0), 0.1)
    vals = 2 * mesh.nodes[:, 0] - mesh.nodes[:, 1]
    pts = np.array([[0.31, 1.27], [0.9, 1.9], [5.0, 5.0]])
    out = interpolate(vals, mesh, pts)
    assert out[:2] == pytest.approx(2 * pts[:2, 0] - pts[:2, 1], abs=1e-12)
    assert math.isnan(out[2])


def test_barrier_profile():
    w, w1, w2 = barrier_profile(0.25, 0.01)
    assert w == pytest.approx(-(0.01**0.25))
    assert w1 < 0 and w2 > 0
    d1, ratio = barrier_limits(0.25)
    assert np.all(np.diff(d1) < 0)  # w' -> -inf as r -> 0
    assert np.all(np.diff(ratio) < 0) and ratio[-1] < 1e-3 * ratio[0]
    with pytest.raises(ValueError):
        barrier_profile(0.6, 1.0)
    with pytest.raises(ValueError):
        barrier_profile(0.25, 0.0)


# --- meshes ------------------------------------------------------------------


def test_mesh_quality_and_tags(b_empty_domain, b_empty_mesh):
    mesh = b_empty_mesh
    assert mesh.min_angle_deg() >= 20.0 - 1e-6
    assert mesh.edge_lengths().max() <= 2 * mesh.h
    assert np.all(mesh.areas() > 0)
    assert set(np.unique(mesh.edge_arc)) == set(range(len(b_empty_domain.arcs)))
    assert mesh.n_nodes <= 30000


def test_mesh_text_round_trip(b_empty_mesh):
    text = mesh_to_text(b_empty_mesh)
    back = mesh_from_text(text, b_empty_mesh.h)
    assert np.array_equal(back.nodes, b_empty_mesh.nodes)
    assert np.array_equal(back.triangles, b_empty_mesh.triangles)
    assert np.array_equal(back.edge_arc, b_empty_mesh.edge_arc)
    assert mesh_to_text(back) == text


def test_mesh_size_limits():
    dom = square_domain(0.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        make_mesh(dom, 1.0)
    with pytest.raises(ValueError):
        make_mesh(dom, -0.1)
    assert issubclass(MeshError, RuntimeError)


def test_mesh_deterministic(b_empty_domain):
    a = make_mesh(b_empty_domain, b_empty_domain.diameter() / 20)
    b = make_mesh(b_empty_domain, b_empty_domain.diameter() / 20)
    assert mesh_to_text(a) == mesh_to_text(b)
