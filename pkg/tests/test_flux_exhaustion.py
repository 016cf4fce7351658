from __future__ import annotations

import math

import numpy as np
import pytest

from solgraph.exhaustion import MONOTONE_TOL, divergence_mask, mu_level, solve_exhaustion
from solgraph.flux import (
    arc_chain,
    discrete_weighted_area,
    edge_fluxes,
    eta_flux,
    eta_paths,
    flux,
    flux_eta_independence,
    flux_report,
)
from solgraph.geometry import pieces_diameter, region_integral
from solgraph.mesh import make_mesh, polygon_domain
from solgraph.solver import solve_dirichlet

B_DATA = {1: 0.0, 3: 0.0, 0: 1.0, 2: 1.0}


@pytest.fixture(scope="module")
def b_solution(b_empty_mesh):
    return solve_dirichlet(b_empty_mesh, B_DATA, 1.0)


def test_density_bounded_by_one(b_empty_mesh, b_solution):
    ef = edge_fluxes(b_empty_mesh, b_solution)
    assert np.max(np.abs(ef.density)) <= 1 + 1e-8
    steep = solve_dirichlet(b_empty_mesh, {1: 0.0, 3: 0.0, 0: 500.0, 2: 500.0}, 1.0)
    assert np.max(np.abs(edge_fluxes(b_empty_mesh, steep).density)) <= 1 + 1e-8


def test_flux_bounded_by_arc_length(b_empty_domain, b_empty_mesh, b_solution):
    rep = flux_report(b_empty_mesh, b_solution, 1.0, b_empty_domain.weighted_area())
    for arc, fl in rep.fluxes.items():
        assert abs(fl) <= rep.lengths[arc] * (1 + 1e-12)
        assert rep.lengths[arc] <= b_empty_domain.arcs[arc].length * (1 + 1e-12)
    assert rep.within_length_bound(b_empty_mesh.h)


def test_discrete_weighted_area(b_empty_domain, b_empty_mesh):
    # the triangulated polygon is inscribed; its weighted area converges at O(h^2)
    exact = b_empty_domain.weighted_area()
    coarse = exact - discrete_weighted_area(b_empty_mesh)
    fine = exact - discrete_weighted_area(make_mesh(b_empty_domain, b_empty_mesh.h / 2))
    assert 0 < fine < coarse / 3
    assert coarse < 2e-3 * exact
    square = make_mesh(polygon_domain([(0, 1), (1, 1), (1, 2), (0, 2)]), 0.1)
    assert discrete_weighted_area(square) == pytest.approx(math.log(2), rel=1e-12)


def test_flux_balance_rectangle():
    dom = polygon_domain([(0, 1), (1, 1), (1, 1.4), (0, 1.4)])
    diam = pieces_diameter(dom.pieces)
    mesh = make_mesh(dom, diam / 100)
    sol = solve_dirichlet(mesh, np.zeros(mesh.n_nodes), 1.0)
    rep = flux_report(mesh, sol, 1.0, region_integral(dom.pieces))
    assert abs(rep.balance_residual) <= 0.05 * rep.source_total


def test_eta_flux_matches_boundary_flux(b_empty_mesh, b_solution):
    paths = [eta_paths(b_empty_mesh, 0, depth) for depth in (0.01, 0.02)]
    direct = flux(b_empty_mesh, b_solution, 0)
    for p in paths:
        assert eta_flux(b_empty_mesh, b_solution, 0, p, 1.0) == pytest.approx(direct, abs=5e-3)
    assert flux_eta_independence(b_empty_mesh, b_solution, 0, paths, 1.0) < 5e-3
    assert flux_eta_independence(b_empty_mesh, b_solution, 0, paths[:1], 1.0) == 0.0


def test_eta_path_errors(b_empty_mesh, b_solution):
    chain = arc_chain(b_empty_mesh, 0)
    with pytest.raises(ValueError):
        eta_flux(b_empty_mesh, b_solution, 0, chain[::-1], 1.0)
    with pytest.raises(KeyError):
        arc_chain(b_empty_mesh, 9)
    with pytest.raises(KeyError):
        flux(b_empty_mesh, b_solution, 9)


def test_mu_level_toy():
    mesh = make_mesh(polygon_domain([(0, 1), (2, 1), (2, 2), (0, 2)]), 0.1)
    x = mesh.nodes[:, 0]
    vals = 3.0 - np.minimum(np.abs(x - 0.0), np.abs(x - 2.0)) * 2  # two ridges at x = 0 and x = 2, saddle 1 at x = 1
    left = np.nonzero(x < 1e-12)[0]
    right = np.nonzero(x > 2 - 1e-12)[0]
    mu = mu_level(mesh, vals, [left, right])
    # the components join at the saddle line x = 1 (value 1), up to the mesh resolution
    assert 1.0 - 1e-12 <= mu <= 1.0 + 2 * 2 * mesh.h
    assert mu_level(mesh, vals, [left]) == -math.inf


def test_b_empty_exhaustion_behaviour(b_empty_domain, b_empty_mesh):
    rep = solve_exhaustion(b_empty_domain, b_empty_mesh, [1, 2, 4, 8], "b-empty")
    assert rep.failure is None and rep.n_values == [1, 2, 4, 8]
    gaps = rep.probe_gaps()
    assert all(b < a for a, b in zip(gaps[:-1], gaps[1:]))
    for arc in (0, 2):
        fl = [s.fluxes[arc] for s in rep.steps]
        assert all(b > a for a, b in zip(fl[:-1], fl[1:]))
        assert fl[-1] <= b_empty_domain.arcs[arc].length
    # the monotonicity diagnostic is recorded per consecutive pair
    assert len(rep.monotone) == len(rep.max_violation) == 3
    assert all(v >= 0 for v in rep.max_violation)
    assert all(m == (v <= MONOTONE_TOL) for m, v in zip(rep.monotone, rep.max_violation))


def test_a_empty_exhaustion_decreases(a_empty_domains):
    dom = a_empty_domains["vertical"]
    star = dom.star()
    mesh = make_mesh(star, pieces_diameter(star.pieces) / 20)
    rep = solve_exhaustion(dom, mesh, [1, 2, 4], "a-empty")
    probes = np.array([s.probe_values for s in rep.steps])
    assert np.all(np.diff(probes, axis=0) < 0)
    assert max(rep.max_violation) < 1e-2


def test_c_empty_mu_and_mask(omega_star):
    star = omega_star.star()
    mesh = make_mesh(star, pieces_diameter(star.pieces) / 25)
    rep = solve_exhaustion(omega_star, mesh, [1, 2, 4, 8], "c-empty")
    mu = rep.mu
    assert all(b > a for a, b in zip(mu[:-1], mu[1:]))
    gap = [s.n - s.mu for s in rep.steps]
    assert all(b > a for a, b in zip(gap[:-1], gap[1:]))
    mask = divergence_mask(rep, 0.9 * 8)
    assert mask.dtype == bool and mask.shape == (mesh.n_nodes,)
    assert not np.any(mask[mesh.boundary_nodes()])
    assert not np.any(divergence_mask(rep, math.inf))


def test_exhaustion_input_validation(b_empty_domain, b_empty_mesh):
    with pytest.raises(ValueError):
        solve_exhaustion(b_empty_domain, b_empty_mesh, [2, 1], "b-empty")
    with pytest.raises(ValueError):
        solve_exhaustion(b_empty_domain, b_empty_mesh, [1], "x-empty")
    with pytest.raises(ValueError):
        solve_exhaustion(b_empty_domain, b_empty_mesh, [1e9], "b-empty")
