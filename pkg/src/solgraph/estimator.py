"""Estimator-style front end: fit a discrete CMC graph on a domain, predict its heights."""

from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _validation as v
from .exhaustion import solve_exhaustion
from .flux import flux_report
from .geometry import pieces_diameter
from .mesh import make_mesh
from .solver import SolverOptions, interpolate, solve_dirichlet


class CMCGraphSolver(BaseEstimator):
    """Solve the mean-curvature-H graph equation on a domain and evaluate the solution.

    ``fit(domain)`` meshes the domain at size ``h`` (or ``h_rel`` times its
    diameter) and either solves one Dirichlet problem (``mode="dirichlet"``
    with ``boundary_data``: a constant, a callable f(x, y) or a per-arc
    mapping) or runs an exhaustion sequence over ``n_values``
    (``mode`` in b-empty / a-empty / c-empty).  ``predict(X)`` interpolates
    the final field at points X (NaN outside the mesh).

    Fitted attributes: ``mesh_``, ``values_``, ``iterations_``,
    ``flux_report_`` and, for exhaustion modes, ``report_``.
    """

    def __init__(
        self,
        H: float = 1.0,
        h: float | None = None,
        h_rel: float = 0.02,
        mode: str = "dirichlet",
        boundary_data=0.0,
        n_values: Sequence[float] = (1, 2, 4, 8, 16, 32),
        c_data=0.0,
        newton_tol: float = 1e-10,
        max_newton: int = 200,
    ):
        self.H = H
        self.h = h
        self.h_rel = h_rel
        self.mode = mode
        self.boundary_data = boundary_data
        self.n_values = n_values
        self.c_data = c_data
        self.newton_tol = newton_tol
        self.max_newton = max_newton

    def _options(self) -> SolverOptions:
        return SolverOptions(newton_tol=v.check_real("newton_tol", self.newton_tol, positive=True), max_newton=int(self.max_newton))

    def fit(self, domain, y=None):
        mode = v.check_mode(self.mode)
        H = v.check_H(self.H, allow_zero=(mode == "dirichlet"))
        if mode in ("a-empty", "c-empty") and "B" in getattr(domain, "kinds", ()):
            domain = domain.star()  # these sequences live on the starred domain
        diam = pieces_diameter(domain.pieces)
        h = v.check_real("h", self.h, positive=True) if self.h is not None else v.check_real("h_rel", self.h_rel, positive=True) * diam
        self.mesh_ = make_mesh(domain, h)
        opts = self._options()
        if mode == "dirichlet":
            data = self.boundary_data
            if not callable(data) and not isinstance(data, dict) and np.ndim(data) == 0:
                data = np.full(self.mesh_.n_nodes, float(data))
            sol = solve_dirichlet(self.mesh_, data, H, opts)
            self.values_ = sol.values
            self.iterations_ = sol.iterations
        else:
            ns = v.check_n_values(self.n_values)
            self.report_ = solve_exhaustion(domain, self.mesh_, ns, mode, self.c_data, H=H, opts=opts)
            if not self.report_.steps:
                raise RuntimeError(f"exhaustion failed at the first n: {self.report_.failure}")
            last = self.report_.steps[-1]
            self.values_ = last.values
            self.iterations_ = last.iterations
        weighted = domain.weighted_area() if hasattr(domain, "weighted_area") else None
        self.flux_report_ = flux_report(self.mesh_, self.values_, H, weighted)
        return self

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "values_")
        return interpolate(self.values_, self.mesh_, v.check_points(X))
