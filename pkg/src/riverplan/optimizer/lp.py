"""Verified linear-program solves.

Thin wrapper around scipy's HiGHS backend that treats the solver as untrusted:
every optimal solve is re-checked for primal feasibility (scaled residuals)
and certified optimal through the KKT conditions built from the returned
duals. A solve that cannot be certified raises instead of returning a number.

Feasibility tolerances are relative: a residual is measured against
1 + |b| + |A||z| for its row, so constraint rows with large coefficients
(water balances carry seconds-per-month factors) are held to the same
proportional standard as unit rows. The gate is set at the primal
feasibility the backend itself promises (1e-7); asking for more than that
just rejects solutions HiGHS considers clean. Bound violations inside the
gate are folded back onto the bounds so callers never see a turbine flow
of -3e-8.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

__all__ = ["LPError", "LinearProgram", "LPSolution", "solve_lp"]

FEAS_TOL = 1e-7  # relative primal feasibility, matches the HiGHS default
CERT_TOL = 1e-7  # KKT certification slack, relative


class LPError(RuntimeError):
    """LP solve failed or its result could not be certified."""


@dataclass
class LinearProgram:
    """min c.z  s.t.  A_ub z <= b_ub, A_eq z = b_eq, lb <= z <= ub."""

    c: np.ndarray
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray = field(default_factory=lambda: np.zeros(0))
    ub: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        n = len(self.c)
        if len(self.lb) != n or len(self.ub) != n:
            raise LPError("bounds length does not match column count")
        if np.any(self.lb > self.ub + 1e-15):
            raise LPError("crossed bounds")
        for A, b, name in ((self.A_ub, self.b_ub, "ub"), (self.A_eq, self.b_eq, "eq")):
            if (A is None) != (b is None):
                raise LPError(f"A_{name} and b_{name} must come together")
            if A is not None and (A.shape[1] != n or A.shape[0] != len(b)):
                raise LPError(f"A_{name} shape mismatch")


@dataclass
class LPSolution:
    status: str  # "optimal" | "infeasible"
    z: np.ndarray | None
    objective: float | None
    dual_ub: np.ndarray | None = None
    dual_eq: np.ndarray | None = None
    reduced_costs: np.ndarray | None = None


def _row_scale(A: sp.csr_matrix | None, b: np.ndarray | None, z: np.ndarray) -> np.ndarray:
    if A is None:
        return np.zeros(0)
    return 1.0 + np.abs(b) + abs(A) @ np.abs(z)


def _verify_primal(lp: LinearProgram, z: np.ndarray) -> np.ndarray:
    lo_ok = z >= lp.lb - FEAS_TOL * (1.0 + np.abs(lp.lb))
    hi = np.where(np.isfinite(lp.ub), lp.ub, 0.0)
    hi_ok = ~np.isfinite(lp.ub) | (z <= hi + FEAS_TOL * (1.0 + np.abs(hi)))
    if not (np.all(lo_ok) and np.all(hi_ok)):
        raise LPError("solution violates variable bounds")
    z = np.maximum(z, lp.lb)
    z = np.where(np.isfinite(lp.ub), np.minimum(z, lp.ub), z)
    if lp.A_eq is not None:
        res = np.abs(lp.A_eq @ z - lp.b_eq)
        worst = np.max(res / _row_scale(lp.A_eq, lp.b_eq, z), initial=0.0)
        if worst > FEAS_TOL:
            raise LPError(f"equality residual {worst:.3e} exceeds {FEAS_TOL}")
    if lp.A_ub is not None:
        res = lp.A_ub @ z - lp.b_ub
        worst = np.max(res / _row_scale(lp.A_ub, lp.b_ub, z), initial=0.0)
        if worst > FEAS_TOL:
            raise LPError(f"inequality violation {worst:.3e} exceeds {FEAS_TOL}")
    return z


def _certify_optimal(lp: LinearProgram, z, y_ub, y_eq) -> np.ndarray:
    """KKT check for the minimize sense; returns the reduced-cost vector."""
    r = lp.c.astype(float).copy()
    if lp.A_ub is not None:
        if np.any(y_ub > CERT_TOL * (1.0 + np.abs(lp.b_ub))):
            raise LPError("inequality dual has wrong sign")
        r -= lp.A_ub.T @ y_ub
        slack = lp.b_ub - lp.A_ub @ z
        comp = np.abs(y_ub) * np.maximum(slack, 0.0)
        scale = _row_scale(lp.A_ub, lp.b_ub, z) * (1.0 + np.abs(y_ub))
        if np.max(comp / scale, initial=0.0) > CERT_TOL:
            raise LPError("complementary slackness fails on a row")
    if lp.A_eq is not None:
        r -= lp.A_eq.T @ y_eq
    cscale = CERT_TOL * (1.0 + np.abs(lp.c) + np.abs(lp.c - r))
    at_lb = z <= lp.lb + 1e-7 * (1.0 + np.abs(lp.lb))
    hi = np.where(np.isfinite(lp.ub), lp.ub, 0.0)
    at_ub = np.isfinite(lp.ub) & (z >= hi - 1e-7 * (1.0 + np.abs(hi)))
    bad = (~at_lb & ~at_ub & (np.abs(r) > cscale)) | (at_lb & (r < -cscale)) | (at_ub & (r > cscale))
    # a column at both bounds (fixed) is unconstrained in sign
    bad &= ~(at_lb & at_ub)
    if np.any(bad):
        j = int(np.argmax(bad))
        raise LPError(f"reduced cost of column {j} inconsistent with its bounds")
    return r


def solve_lp(lp: LinearProgram, maximize: bool = False) -> LPSolution:
    """Solve, verify, certify. Infeasible problems come back as a status;
    anything else that is not a certified optimum raises LPError."""
    c = -lp.c if maximize else lp.c
    bounds = np.column_stack([lp.lb, lp.ub])
    res = linprog(
        c,
        A_ub=lp.A_ub,
        b_ub=lp.b_ub,
        A_eq=lp.A_eq,
        b_eq=lp.b_eq,
        bounds=bounds,
        method="highs",
    )
    if res.status == 2:
        return LPSolution(status="infeasible", z=None, objective=None)
    if res.status != 0:
        raise LPError(f"solver status {res.status}: {res.message}")
    z = _verify_primal(lp, np.asarray(res.x, dtype=float))
    y_ub = np.asarray(res.ineqlin.marginals, dtype=float) if lp.A_ub is not None else None
    y_eq = np.asarray(res.eqlin.marginals, dtype=float) if lp.A_eq is not None else None
    inner = LinearProgram(c, lp.A_ub, lp.b_ub, lp.A_eq, lp.b_eq, lp.lb, lp.ub)
    r = _certify_optimal(inner, z, y_ub, y_eq)
    obj = float(c @ z)
    if maximize:
        obj, r = -obj, -r
        y_ub = -y_ub if y_ub is not None else None
        y_eq = -y_eq if y_eq is not None else None
    return LPSolution(status="optimal", z=z, objective=obj, dual_ub=y_ub, dual_eq=y_eq, reduced_costs=r)
