"""Desk-scale sparse control: support-measure objective over a weighted cell
space, box projection, the slowly-decreasing profile test, sparse dual
support patterns, stationarity checkers, and an exact separable solver.

The cell space stands in for a continuum domain: m cells with positive
measures, the weighted inner product, and controls as cell vectors.  Support
is threshold-based (floating zeros are never exact); the almost-everywhere
semantics of the continuum collapses to exact cell values here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import InvalidBounds, NonSeparableObjective, NotInBox
from .oracles import FnOracle
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, Verdict

__all__ = [
    "CellSpace", "OCProblem", "support_measure", "support_measure_fn", "project_box",
    "slowly_decreasing", "vector_level_profile", "sparse_subdiff_check",
    "approx_stationarity_check", "sharp_stationarity_check", "solve_sparse_oc",
    "separable_quadratic", "SmoothObjective", "sparse_pattern_dual", "DEFAULT_ZERO_TOL",
]

DEFAULT_ZERO_TOL = 1e-12


@dataclass(frozen=True)
class CellSpace:
    """m cells with positive measures; <x,y> = sum_i w_i x_i y_i."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 1 or np.any(w <= 0):
            raise InvalidBounds("cell measures must be a 1-D positive vector")
        object.__setattr__(self, "weights", w)

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def total_measure(self) -> float:
        return float(self.weights.sum())

    def inner(self, x, y) -> float:
        return float(np.sum(self.weights * np.asarray(x) * np.asarray(y)))

    def norm(self, x) -> float:
        return math.sqrt(self.inner(x, x))


def _zero_tol(space_x: np.ndarray, zero_tol: Optional[float]) -> float:
    if zero_tol is not None:
        return zero_tol
    scale = float(np.abs(space_x).max()) if len(space_x) else 1.0
    return DEFAULT_ZERO_TOL * max(1.0, scale)


def support_measure(space: CellSpace, x, zero_tol: Optional[float] = None) -> float:
    """Total measure of the cells where the control is (numerically) nonzero."""
    x = np.asarray(x, dtype=float)
    tol = _zero_tol(x, zero_tol)
    return float(space.weights[np.abs(x) > tol].sum())


def support_measure_fn(space: CellSpace, zero_tol: Optional[float] = None) -> FnOracle:
    """The support measure as a vectorized function oracle on R^m."""

    def ev(pts):
        tol = zero_tol if zero_tol is not None else DEFAULT_ZERO_TOL
        return (np.abs(pts) > tol) @ space.weights

    return FnOracle(space.m, ev, subgrad=lambda x: sparse_pattern_dual(space, x, zero_tol),
                    lower_bound_hint=0.0, name="support-measure")


def sparse_pattern_dual(space: CellSpace, x, zero_tol: Optional[float] = None):
    """The support-pattern dual set: vectors vanishing wherever x does not."""
    from .dualsets import box_set

    x = np.asarray(x, dtype=float)
    tol = _zero_tol(x, zero_tol)
    free = np.abs(x) <= tol
    lo = np.where(free, -np.inf, 0.0)
    hi = np.where(free, np.inf, 0.0)
    return box_set(lo, hi)


@dataclass
class OCProblem:
    """min f(x) + support_measure(x) over the box [xa, xb] in a cell space."""

    space: CellSpace
    f: "SmoothObjective"
    xa: np.ndarray
    xb: np.ndarray
    zero_tol: float = DEFAULT_ZERO_TOL

    def __post_init__(self):
        self.xa = np.asarray(self.xa, dtype=float)
        self.xb = np.asarray(self.xb, dtype=float)
        if not (np.all(self.xa < 0) and np.all(self.xb > 0)):
            raise InvalidBounds("bounds must satisfy xa < 0 < xb cellwise")


@dataclass
class SmoothObjective:
    """A smooth objective with a cellwise gradient oracle."""

    value: Callable[[np.ndarray], float]
    grad: Callable[[np.ndarray], np.ndarray]
    separable: Optional[dict] = None  # {'sigma','sigma0','target'} when quadratic


def separable_quadratic(space: CellSpace, sigma: float, sigma0: float, target) -> SmoothObjective:
    """f(x) = 1/2 sum w_i [ sigma (x_i - z_i)^2 + sigma0 x_i^2 ]."""
    z = np.asarray(target, dtype=float)
    w = space.weights

    def value(x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * np.sum(w * (sigma * (x - z) ** 2 + sigma0 * x**2)))

    def grad(x):
        x = np.asarray(x, dtype=float)
        return w * (sigma * (x - z) + sigma0 * x)

    return SmoothObjective(value=value, grad=grad,
                           separable={"sigma": float(sigma), "sigma0": float(sigma0), "target": z})


def project_box(space: CellSpace, x, xa, xb) -> np.ndarray:
    """Cellwise clamp onto the box: the metric projection, which never grows support."""
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    if np.any(xa > 0) or np.any(xb < 0):
        raise InvalidBounds("project_box expects xa <= 0 <= xb")
    return np.clip(np.asarray(x, dtype=float), xa, xb)


def slowly_decreasing(profile: Callable[[float], float], t_schedule=None,
                      conv_tol: float = 0.1) -> Verdict:
    """Trend test of measure({0 < |x| <= t}) / t^2 along shrinking t.

    profile(t) must be a nonnegative nondecreasing level-measure map.  HOLDS
    when the ratio trends to 0, FAILS when it stays bounded away from 0
    across refinements; finite cell vectors are always HOLDS once t falls
    below the smallest positive magnitude.
    """
    ts = list(t_schedule) if t_schedule is not None else [0.5 * 2.0 ** (-j) for j in range(14)]
    ratios = []
    for t in ts:
        mu = float(profile(t))
        if mu < -1e-15:
            raise InvalidBounds("level-measure profile must be nonnegative")
        ratios.append(mu / t**2)
    diag = {"t_schedule": ts, "ratio_trace": ratios}
    last = ratios[-1]
    if last <= conv_tol * max(1.0, ratios[0]) and last <= max(ratios[:2]) and (
            last <= 1e-9 or last <= 0.25 * ratios[max(0, len(ratios) - 5)]):
        return Verdict(HOLDS, diagnostics=diag)
    if len(ratios) >= 3 and min(ratios[-3:]) >= 0.5 * ratios[0] and ratios[0] > 0:
        return Verdict(FAILS, witness={"t": ts[-1], "ratio": last}, diagnostics=diag)
    if last == 0.0:
        return Verdict(HOLDS, diagnostics=diag)
    return Verdict(INCONCLUSIVE, diagnostics=diag)


def vector_level_profile(space: CellSpace, x) -> Callable[[float], float]:
    """The level-measure profile t -> measure({0 < |x| <= t}) of a cell vector."""
    x = np.asarray(x, dtype=float)

    def profile(t):
        a = np.abs(x)
        return float(space.weights[(a > 0) & (a <= t)].sum())

    return profile


def sparse_subdiff_check(space: CellSpace, x, xstar, zero_tol: Optional[float] = None) -> Verdict:
    """Support-pattern membership: the dual must vanish wherever the control does not."""
    x = np.asarray(x, dtype=float)
    xs = np.asarray(xstar, dtype=float)
    tol = _zero_tol(x, zero_tol)
    tol_s = _zero_tol(xs, zero_tol)
    bad = (np.abs(xs) > tol_s) & (np.abs(x) > tol)
    if bad.any():
        i = int(np.argmax(bad))
        return Verdict(FAILS, witness={"cell": i, "x": float(x[i]), "xstar": float(xs[i])},
                       diagnostics={"violations": int(bad.sum())})
    return Verdict(HOLDS, diagnostics={"support_cells": int((np.abs(x) > tol).sum())})


def approx_stationarity_check(prob: OCProblem, x1, x2, x1star, x2star, eps: float,
                              xref=None) -> Verdict:
    """The four-part approximate stationarity system at a candidate pair.

    (a) the gradient-plus-multipliers residual is below eps in the cell norm;
    (b) the support measure at x1 is within eps of the reference (when given);
    (c) the sparse dual respects the support pattern of x1;
    (d) the box dual has the right signs at x2 relative to the active bounds.
    The slowly-decreasing requirement on x1 holds automatically for finite
    cell vectors and is recorded, not re-tested.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    s1 = np.asarray(x1star, dtype=float)
    s2 = np.asarray(x2star, dtype=float)
    if np.any(x2 < prob.xa - 1e-12) or np.any(x2 > prob.xb + 1e-12):
        raise NotInBox("x2 must lie in the control box")
    checks = {}
    resid = prob.space.norm(prob.f.grad(x2) / prob.space.weights + s1 + s2)
    checks["residual"] = {"value": resid, "pass": bool(resid < eps)}
    if xref is not None:
        gap = abs(support_measure(prob.space, x1, prob.zero_tol)
                  - support_measure(prob.space, np.asarray(xref, dtype=float), prob.zero_tol))
        checks["support_gap"] = {"value": gap, "pass": bool(gap < eps)}
    pat = sparse_subdiff_check(prob.space, x1, s1, prob.zero_tol)
    checks["support_pattern"] = {"value": pat.status, "pass": pat.status == HOLDS}
    above_lo = x2 > prob.xa + prob.zero_tol
    below_hi = x2 < prob.xb - prob.zero_tol
    sign_ok = np.all(s2[above_lo] >= -1e-12) and np.all(s2[below_hi] <= 1e-12)
    checks["box_dual_signs"] = {"pass": bool(sign_ok)}
    checks["slowly_decreasing_x1"] = {"pass": True,
                                      "note": "automatic for finite cell vectors"}
    ok = all(c.get("pass", False) for c in checks.values())
    if ok:
        return Verdict(HOLDS, diagnostics=checks)
    failing = {k: v for k, v in checks.items() if not v.get("pass", False)}
    return Verdict(FAILS, witness=failing, diagnostics=checks)


def sharp_stationarity_check(prob: OCProblem, xbar, tol: float = 1e-9) -> Verdict:
    """Cellwise stationarity at a feasible point.

    The gradient must vanish on supported strictly-interior cells, point
    upward at the lower bound, downward at the upper bound, and is free on
    unsupported interior cells.
    """
    xbar = np.asarray(xbar, dtype=float)
    if np.any(xbar < prob.xa - 1e-12) or np.any(xbar > prob.xb + 1e-12):
        raise NotInBox("the candidate must lie in the control box")
    g = prob.f.grad(xbar) / prob.space.weights
    tol_z = _zero_tol(xbar, prob.zero_tol)
    supported = np.abs(xbar) > tol_z
    at_lo = xbar <= prob.xa + tol_z
    at_hi = xbar >= prob.xb - tol_z
    interior = ~at_lo & ~at_hi
    bad_interior = supported & interior & (np.abs(g) > tol)
    bad_lo = at_lo & (g < -tol)
    bad_hi = at_hi & (g > tol)
    bad = bad_interior | bad_lo | bad_hi
    diag = {"gradient": g, "supported_cells": int(supported.sum())}
    if bad.any():
        i = int(np.argmax(bad))
        kind = "interior" if bad_interior[i] else ("lower_bound" if bad_lo[i] else "upper_bound")
        return Verdict(FAILS, witness={"cell": i, "gradient": float(g[i]), "kind": kind},
                       diagnostics=diag)
    return Verdict(HOLDS, diagnostics=diag)


def solve_sparse_oc(prob: OCProblem) -> dict:
    """Exact cellwise minimization for separable quadratic objectives.

    Per cell, the best nonzero candidate (the clamped unconstrained minimizer,
    paying the cell measure) competes with zero; ties break toward zero, so
    solutions are as sparse as possible.  Separability makes the cellwise
    choice globally optimal.
    """
    sep = prob.f.separable
    if sep is None:
        raise NonSeparableObjective("the exact solver needs a separable quadratic objective")
    sigma, sigma0, z = sep["sigma"], sep["sigma0"], sep["target"]
    w = prob.space.weights
    denom = sigma + sigma0
    xfree = (sigma * z) / denom if denom > 0 else np.zeros_like(z)
    xc = np.clip(xfree, prob.xa, prob.xb)

    def cell_smooth(x):
        return 0.5 * w * (sigma * (x - z) ** 2 + sigma0 * x**2)

    cost_nonzero = cell_smooth(xc) + np.where(np.abs(xc) > prob.zero_tol, w, 0.0)
    cost_zero = cell_smooth(np.zeros_like(z))
    take_nonzero = cost_nonzero < cost_zero - 0.0
    xopt = np.where(take_nonzero, xc, 0.0)
    objective = float(np.minimum(cost_nonzero, cost_zero).sum())
    return {"xopt": xopt, "objective": objective,
            "support": support_measure(prob.space, xopt, prob.zero_tol)}
