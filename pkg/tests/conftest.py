from __future__ import annotations

import math

import numpy as np
import pytest

from solgraph.curves import CurveParams, Point
from solgraph.domains import build_a_empty, build_b_empty
from solgraph.mesh import make_mesh
from solgraph.omega import build_omega_s, s_star


@pytest.fixture(scope="session")
def b_empty_domain():
    return build_b_empty(Point(0.0, 1.0), 0.3, 0.1, 1.0)


@pytest.fixture(scope="session")
def b_empty_mesh(b_empty_domain):
    return make_mesh(b_empty_domain, b_empty_domain.diameter() / 30)


@pytest.fixture(scope="session")
def a_empty_domains():
    curve = CurveParams(0.0, 1.0, 1.0)
    return {
        "generic": build_a_empty(curve, -math.pi / 4, "generic"),
        "vertical": build_a_empty(curve, -math.pi / 2, "vertical"),
        "horizontal": build_a_empty(curve, math.pi, "horizontal"),
    }


@pytest.fixture(scope="session")
def omega_star():
    return build_omega_s(1.0, 0.5, s_star(1.0, 0.5))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
