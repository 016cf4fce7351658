"""Numerical Jenkins-Serrin toolkit for constant-mean-curvature graphs in Sol3.

Submodules: ``numerics`` (quadrature, roots), ``curves`` (2H/y-curves and
connectors), ``geometry``/``domains``/``omega``/``polygons`` (admissible
domains and the inequality checks), ``mesh``/``solver``/``flux``/
``exhaustion`` (finite elements), ``reports``/``cli`` (files and CLI) and
``estimator`` (the :class:`CMCGraphSolver` front end).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .curves import ArcOnCurve, CurveParams, Point, constants  # noqa: E402
from .domains import AdmissibleDomain, BoundaryArc, build_a_empty, build_b_empty  # noqa: E402
from .estimator import CMCGraphSolver  # noqa: E402
from .omega import build_omega_s, s_star, s_zero  # noqa: E402
from .polygons import check_conditions  # noqa: E402

__all__ = [
    "__version__",
    "AdmissibleDomain",
    "ArcOnCurve",
    "BoundaryArc",
    "CMCGraphSolver",
    "CurveParams",
    "Point",
    "build_a_empty",
    "build_b_empty",
    "build_omega_s",
    "check_conditions",
    "constants",
    "s_star",
    "s_zero",
]
