"""Small second-order cone programs for the motion block.

Minimises ``c @ x`` subject to a list of :class:`Constraint` objects, each of
which is one of

* ``lin``  : ``c_k @ x + d_k >= 0``
* ``soc``  : ``||A_k x + b_k|| <= c_k @ x + d_k``
* ``rsoc`` : ``||A_k x + b_k||^2 <= (c_k @ x + d_k) (e_k @ x + f_k)``

The numerical work is delegated to the Clarabel interior-point solver; this
module only stacks the cones and re-checks the returned point. Problems are
expected to be scaled so that variables and the objective are O(1).

Every call builds its own solver instance, so concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import clarabel
import numpy as np
from scipy import sparse

from hmap.errors import NumericError

TOL = 1e-10
ACCEPT = 1e-6  # scaled stationarity, complementarity and relative gap
PRIMAL_ACCEPT = 1e-7
MAX_ITER = 200


@dataclass
class Constraint:
    kind: str
    c: np.ndarray
    d: float
    A: Optional[np.ndarray] = None
    b: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    f: float = 0.0
    name: str = ""

    def margin(self, x) -> float:
        """Signed slack; >= 0 on the feasible set."""
        u = self.c @ x + self.d
        if self.kind == "lin":
            return float(u)
        w = self.A @ x + self.b
        if self.kind == "soc":
            return float(u - math.sqrt(w @ w))
        v = self.e @ x + self.f
        if u < 0 or v < 0:
            return float(min(u, v))
        # hyperbolic form: ||(2w, u - v)|| <= u + v
        return float(u + v - math.sqrt(4.0 * (w @ w) + (u - v) ** 2))

    def rows(self):
        """(G, h) with ``h - G x`` in the cone this constraint describes."""
        if self.kind == "lin":
            return -self.c[None, :], np.array([self.d])
        if self.kind == "soc":
            G = -np.vstack([self.c[None, :], self.A])
            h = np.concatenate([[self.d], self.b])
            return G, h
        G = -np.vstack([(self.c + self.e)[None, :], 2.0 * self.A, (self.c - self.e)[None, :]])
        h = np.concatenate([[self.d + self.f], 2.0 * self.b, [self.d - self.f]])
        return G, h


@dataclass
class SocProblem:
    c: np.ndarray
    constraints: list
    names: tuple = ()

    @property
    def n(self):
        return self.c.size

    def feasible(self, x, tol=0.0) -> bool:
        return all(k.margin(x) >= -tol for k in self.constraints)

    def stacked(self):
        """Clarabel data: nonnegative rows first, then one SOC block per cone."""
        lin = [k for k in self.constraints if k.kind == "lin"]
        cones = [k for k in self.constraints if k.kind != "lin"]
        blocks = [k.rows() for k in lin + cones]
        G = np.vstack([g for g, _ in blocks])
        h = np.concatenate([hh for _, hh in blocks])
        spec = []
        if lin:
            spec.append(clarabel.NonnegativeConeT(len(lin)))
        for g, _ in blocks[len(lin):]:
            spec.append(clarabel.SecondOrderConeT(g.shape[0]))
        return G, h, spec


@dataclass
class SocResult:
    status: str  # "optimal" | "infeasible"
    x: Optional[np.ndarray] = None
    objective: float = math.nan
    lower_bound: float = math.nan
    kkt: dict = field(default_factory=dict)
    iterations: int = 0


def _residuals(prob, G, h, x, z):
    """Scaled KKT residuals of the primal-dual pair (x, z)."""
    s = h - G @ x
    terms = np.abs(G.T * z[None, :])
    scale = max(1.0, float(np.abs(prob.c).max()), float(terms.max(initial=0.0)))
    stationarity = float(np.abs(prob.c + G.T @ z).max()) / scale
    primal = max(0.0, -min(k.margin(x) for k in prob.constraints))
    obj = float(prob.c @ x)
    dual_obj = -float(h @ z)
    norm = max(1.0, abs(obj))
    return {"primal": primal, "stationarity": stationarity,
            "complementarity": abs(float(s @ z)) / norm,
            "gap": abs(obj - dual_obj) / norm}, dual_obj


# tried in order until one meets the acceptance tolerances
_ATTEMPTS = (
    {},
    {"iterative_refinement_reltol": 1e-14, "iterative_refinement_abstol": 1e-14,
     "iterative_refinement_max_iter": 50},
    {"static_regularization_constant": 1e-12},
    {"equilibrate_enable": False},
    {"tol_gap_abs": 1e-8, "tol_gap_rel": 1e-8, "tol_feas": 1e-8},
)


def _run(prob, G, h, cones, overrides):
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.max_iter = MAX_ITER
    settings.tol_gap_abs = TOL
    settings.tol_gap_rel = TOL
    settings.tol_feas = TOL
    for key, value in overrides.items():
        setattr(settings, key, value)
    P = sparse.csc_matrix((prob.n, prob.n))
    solver = clarabel.DefaultSolver(P, np.asarray(prob.c, float), sparse.csc_matrix(G), h,
                                    cones, settings)
    return solver.solve()


def _acceptable(kkt):
    return (kkt["gap"] <= ACCEPT and kkt["stationarity"] <= ACCEPT
            and kkt["complementarity"] <= ACCEPT and kkt["primal"] <= PRIMAL_ACCEPT)


def solve_soc(prob: SocProblem) -> SocResult:
    """Minimise ``prob.c @ x`` over the constraint set."""
    G, h, cones = prob.stacked()
    report = []
    iterations = 0
    for overrides in _ATTEMPTS:
        sol = _run(prob, G, h, cones, overrides)
        iterations += sol.iterations
        status = str(sol.status)
        if "PrimalInfeasible" in status:
            return SocResult("infeasible", iterations=iterations)
        x = np.asarray(sol.x, float)
        z = np.asarray(sol.z, float)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(z))):
            report.append({"status": status})
            continue
        kkt, dual_obj = _residuals(prob, G, h, x, z)
        kkt["status"] = status
        if _acceptable(kkt):
            return SocResult("optimal", x, float(prob.c @ x), dual_obj, kkt, iterations)
        report.append(kkt)
    raise NumericError("SOC solve did not reach the KKT tolerances", {"attempts": report})
