from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import dblquad

from helpers import a_empty_bounds, close_pair_a_bound, close_pair_lens, type_one_lens
from oracles import RASTER_I_OMEGA
from solgraph.curves import CurveParams, Point, gamma
from solgraph.domains import (
    AdmissibleDomain,
    BoundaryArc,
    ConstructionError,
    DomainError,
    b_star,
    build_a_empty,
    build_b_empty,
    domain_from_json,
    domain_to_json,
    tangency_case,
    validate,
)
from solgraph.geometry import BoundaryError, CircleArc, Segment, is_convex_ring, region_integral
from solgraph.mesh import polygon_domain
from solgraph.omega import (
    OmegaGeometryError,
    build_omega_s,
    d_of_s,
    e_of_s,
    omega_quantities,
    phi_of_s,
    s_star,
    s_zero,
)
from solgraph.polygons import check_conditions, enumerate_polygons, small_domain_feasible
from solgraph.curves import constants


# --- weighted area -----------------------------------------------------------


def test_region_integral_square():
    pieces = polygon_domain([(0, 1), (1, 1), (1, 2), (0, 2)]).pieces
    assert region_integral(pieces) == pytest.approx(math.log(2), rel=1e-13)


def test_region_integral_disc_against_dblquad():
    c, r = Point(0.3, 1.5), 0.6
    pieces = [(CircleArc(c, r, 0.0, 2 * math.pi), 1)]
    ref = dblquad(
        lambda y, x: 1 / y,
        c.x - r,
        c.x + r,
        lambda x: c.y - math.sqrt(max(0.0, r * r - (x - c.x) ** 2)),
        lambda x: c.y + math.sqrt(max(0.0, r * r - (x - c.x) ** 2)),
        epsabs=1e-12,
    )[0]
    assert region_integral(pieces) == pytest.approx(ref, rel=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.2, 5.0), st.floats(-3, 3))
def test_region_integral_scaling(lam, dx):
    pts = [(0.0, 1.0), (0.7, 1.1), (0.5, 1.9), (-0.2, 1.4)]
    base = region_integral(polygon_domain(pts).pieces)
    moved = region_integral(polygon_domain([(lam * x + dx, lam * y) for x, y in pts]).pieces)
    assert moved == pytest.approx(lam * base, rel=1e-11)


def test_region_integral_rejects_open_boundary():
    a, b, c = Point(0, 1), Point(1, 1), Point(1, 2)
    with pytest.raises(BoundaryError):
        region_integral([(Segment(a, b), 1), (Segment(b, c), 1)])


def test_omega_weighted_area_matches_raster():
    q = omega_quantities(1.0, 0.5, 0.3)
    assert q.weighted_area == pytest.approx(RASTER_I_OMEGA, abs=5e-6)


# --- constructions -----------------------------------------------------------


def test_b_empty_structure(b_empty_domain):
    dom = b_empty_domain
    assert dom.kinds == ["A", "C", "A", "C"]
    assert validate(dom) == []
    assert len(dom.vertices) == 4
    rep = check_conditions(dom, "b-empty")
    assert rep.verdict and rep.rows


def test_b_empty_bounds():
    H, y0 = 1.0, 1.0
    with pytest.raises(ConstructionError) as err:
        build_b_empty(Point(0, y0), 1.01 * 2 * y0 / (3 + 2 * H), 0.05, H)
    assert "d <" in err.value.inequality
    with pytest.raises(ConstructionError) as err:
        build_b_empty(Point(0, y0), 0.3, 0.6, H)
    assert "eps <" in err.value.inequality
    with pytest.raises(ValueError):
        build_b_empty(Point(0, y0), -0.3, 0.1, H)


@pytest.mark.parametrize("t,case", [(-math.pi / 4, "generic"), (-math.pi / 2, "vertical"), (math.pi, "horizontal")])
def test_a_empty_cases(a_empty_domains, t, case):
    dom = a_empty_domains[case]
    assert dom.kinds == ["B", "C", "B", "C"]
    assert len(dom.b_star_arcs) == 2
    assert validate(dom) == []
    assert tangency_case(t, 1e-6) == case
    assert check_conditions(dom, "a-empty").verdict
    star = dom.star()
    assert star.kinds == ["B*", "C", "B*", "C"]


def test_a_empty_out_of_bounds():
    curve = CurveParams(0.0, 1.0, 1.0)
    b = a_empty_bounds(curve, -math.pi / 4, "generic")
    with pytest.raises(ConstructionError):
        build_a_empty(curve, -math.pi / 4, "generic", d=1.05 * b["d"])
    b = a_empty_bounds(curve, -math.pi / 2, "vertical")
    with pytest.raises(ConstructionError):
        build_a_empty(curve, -math.pi / 2, "vertical", d=0.5 * b["d"], eps=1.05 * b["eps"])
    b = a_empty_bounds(curve, math.pi, "horizontal")
    with pytest.raises(ConstructionError):
        build_a_empty(curve, math.pi, "horizontal", b=1.05 * b["b"])
    with pytest.raises(ValueError):
        build_a_empty(curve, -math.pi / 4, "vertical")


def test_b_star_recomputed_matches_stored(a_empty_domains):
    dom = a_empty_domains["generic"]
    for idx, stored in zip(dom.b_indices(), dom.b_star_arcs):
        found = b_star(dom, idx)
        assert np.allclose(found.sample(33), stored.sample(33), atol=1e-7) or np.allclose(
            found.sample(33), stored.sample(33)[::-1], atol=1e-7
        )


def test_lens_convexity_sampled(a_empty_domains):
    from solgraph.domains import lens_ring

    dom = a_empty_domains["vertical"]
    for idx, star in zip(dom.b_indices(), dom.b_star_arcs):
        assert is_convex_ring(lens_ring(dom.arcs[idx], star, 200))


def test_validate_reports_problems(b_empty_domain):
    arcs = b_empty_domain.arcs
    with pytest.raises(DomainError):
        AdmissibleDomain((arcs[0], arcs[2], arcs[1], arcs[3]), 1.0)
    with pytest.raises(DomainError):
        AdmissibleDomain(arcs, 1.0, b_star_arcs=(arcs[0].geometry,))
    with pytest.raises(ValueError):
        BoundaryArc("D", arcs[0].geometry, 1)


def test_json_round_trip(b_empty_domain, a_empty_domains):
    for dom in (b_empty_domain, a_empty_domains["horizontal"]):
        text = domain_to_json(dom)
        back = domain_from_json(text)
        assert domain_to_json(back) == text
        assert back.kinds == dom.kinds
        assert back.weighted_area() == dom.weighted_area()


# --- the s-family ------------------------------------------------------------


@pytest.mark.parametrize("H", [0.5, 1.0])
def test_claims_on_grid(H):
    s0 = s_zero(1.0, H)
    for s in np.linspace(0.0, s0, 52)[1:-1]:
        assert e_of_s(H, s) >= 2 * (phi_of_s(H, s) - 1)
        assert s < d_of_s(H, s) < 2 * s
    for s in np.linspace(s0, 1.0, 12)[1:-1]:
        assert e_of_s(H, s) >= 2 * (phi_of_s(H, s) - 1)


def test_family_limits():
    H = 0.5
    T = constants(H).T
    assert phi_of_s(H, 0.0) == 1 + T
    assert e_of_s(H, 1e-6) == pytest.approx(1 + T, abs=1e-3)
    assert d_of_s(H, 1e-6) < 1e-5


@pytest.mark.parametrize("y0,H", [(1.0, 0.5), (1.0, 1.0)])
def test_root_chain(y0, H):
    s0, ss = s_zero(y0, H), s_star(y0, H)
    assert 0 < ss < s0 < 1
    assert omega_quantities(y0, H, 0.0).F > 0
    assert omega_quantities(y0, H, s0).F < 0
    q = omega_quantities(y0, H, ss)
    assert abs(q.F) <= 1e-6 * q.alpha


def test_omega_scaling_in_y0():
    # relative heights do not depend on y0; lengths and I scale linearly
    a, b = omega_quantities(1.0, 0.5, 0.2), omega_quantities(2.0, 0.5, 0.2)
    assert b.alpha == pytest.approx(2 * a.alpha, rel=1e-10)
    assert b.weighted_area == pytest.approx(2 * a.weighted_area, rel=1e-10)
    assert s_star(2.0, 0.5) == pytest.approx(s_star(1.0, 0.5), rel=1e-9)


def test_omega_c_empty_verdicts(omega_star):
    assert check_conditions(omega_star, "c-empty").verdict
    with pytest.raises(OmegaGeometryError):
        build_omega_s(1.0, 0.5, 0.99 * s_zero(1.0, 0.5) + 0.01)


# --- polygons and inequalities -----------------------------------------------


def test_domain_polygon_found(b_empty_domain):
    polys = enumerate_polygons(b_empty_domain)
    dom_polys = [p for p in polys if p.is_domain]
    assert len(dom_polys) == 0  # C arcs are not polygon sides
    for p in polys:
        assert p.perimeter > 0 and p.area_weight > 0
        assert p.alpha <= p.perimeter + 1e-12


def test_c_empty_domain_is_a_polygon(omega_star):
    polys = enumerate_polygons(omega_star)
    dom = [p for p in polys if p.is_domain]
    assert len(dom) == 1
    assert dom[0].area_weight == pytest.approx(omega_star.weighted_area(), rel=1e-9)


def test_lemma_inequalities_sample(rng):
    for _ in range(10):
        H, z = rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0)
        l, area = type_one_lens(z, H, rng.uniform(0.05, 0.95))
        assert 2 * l > 2 * H * area
        a = rng.uniform(0.05, 0.95) * close_pair_a_bound(H)
        lm, lp, area = close_pair_lens(z, H, a)
        assert lm < lp + 2 * H * area


def test_small_domain_feasibility():
    assert small_domain_feasible(1.0, 10.0, 1.0)
    assert small_domain_feasible(3.0, 0.01, 1.0)
    assert not small_domain_feasible(3.0, 10.0, 1.0)
    with pytest.raises(ValueError):
        small_domain_feasible(1.0, -1.0, 1.0)


def test_gamma_points_on_a_empty_curve(a_empty_domains):
    # the generic construction is centred on gamma(-pi/4)
    dom = a_empty_domains["generic"]
    p = gamma(CurveParams(0.0, 1.0, 1.0), -math.pi / 4)
    ring = dom.ring(256)
    assert ring[:, 0].min() < p.x < ring[:, 0].max()
    assert ring[:, 1].min() < p.y < ring[:, 1].max()
