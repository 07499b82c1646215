"""Sampled membership tests for subgradients and normal vectors, box normal
cones, and coderivatives of smooth maps.

No general finite procedure decides subgradient membership for arbitrary
lower-semicontinuous oracles; the verdicts here are evidence at the sampled
resolution (HOLDS means "no violation found at the finest level with an
improving trend"), exact only for structured classes handled in closed form
elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dualsets import DualSet, box_set, dist_to_sum, sum_norm
from .errors import InfiniteAtBase, JacobianUnavailable, NotInBox
from .oracles import FnOracle, SetOracle
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, Verdict

__all__ = [
    "SubgradientQuery",
    "is_subgradient",
    "normal_vector_check",
    "box_normal_cone",
    "dist_to_sum",
    "coderivative_smooth",
    "SmoothMap",
    "sphere_directions",
]


def sphere_directions(dim: int, level: int) -> np.ndarray:
    """Deterministic unit directions on the max-norm sphere, densifying with level."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    per_face = 2 * level + 3
    ticks = np.linspace(-1.0, 1.0, per_face)
    faces = []
    for ax in range(dim):
        grids = np.meshgrid(*([ticks] * (dim - 1)), indexing="ij")
        rest = np.stack([g.ravel() for g in grids], axis=1)
        for sgn in (-1.0, 1.0):
            face = np.insert(rest, ax, sgn * np.ones(len(rest)), axis=1)
            faces.append(face)
    dirs = np.unique(np.vstack(faces), axis=0)
    return dirs


@dataclass
class SubgradientQuery:
    f: FnOracle
    x: np.ndarray
    xstar: np.ndarray
    r0: float = 0.5
    levels: int = 7

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.xstar = np.asarray(self.xstar, dtype=float).ravel()

    def radii(self):
        return [self.r0 * 2.0 ** (-j) for j in range(self.levels)]


def is_subgradient(q: SubgradientQuery, tol: float = 1e-6, fail_margin: float = 1e-6) -> Verdict:
    """Sampled lower-limit test of the subgradient inequality at q.x.

    Checks min over sphere samples of (f(x + r u) - f(x) - <xstar, r u>) / r
    at shrinking radii.  HOLDS when the finest minimum exceeds -tol with a
    nondecreasing trend, FAILS with a witness direction when the minimum
    stays below -fail_margin across the last two radii.
    """
    fx = q.f.value(q.x)
    if not math.isfinite(fx):
        raise InfiniteAtBase("subgradient test needs a finite value at the base point")
    mins, argdirs = [], []
    for j, r in enumerate(q.radii()):
        dirs = sphere_directions(q.f.dim, j)
        pts = q.x[None, :] + r * dirs
        with np.errstate(all="ignore"):
            quot = (q.f(pts) - fx - r * dirs @ q.xstar) / r
        quot = np.where(np.isnan(quot), np.inf, quot)
        k = int(np.argmin(quot))
        mins.append(float(quot[k]))
        argdirs.append(dirs[k])
    diag = {"radii": q.radii(), "min_quotients": mins}
    last, prev = mins[-1], mins[-2]
    if last <= -abs(fail_margin) and prev <= -abs(fail_margin):
        witness = {"direction": argdirs[-1], "radius": q.radii()[-1], "quotient": last}
        return Verdict(FAILS, witness=witness, diagnostics=diag)
    # evidence for a nonnegative lower limit: no violation anywhere, or a
    # violation that shrinks under refinement and is gone at the finest level
    if last >= -abs(tol) and (min(mins) >= -abs(tol) or last >= prev - abs(tol)):
        return Verdict(HOLDS, diagnostics=diag)
    return Verdict(INCONCLUSIVE, diagnostics=diag)


def normal_vector_check(omega: SetOracle, x, xstar, tol: float = 1e-6,
                        fail_margin: float = 1e-6, r0: float = 0.5, levels: int = 7,
                        samples_per_level: int = 128) -> Verdict:
    """Sampled upper-limit test of <xstar, u - x>/||u - x|| <= 0 over set points u -> x.

    Set points near x are found by projecting sphere samples when the oracle
    has a projection, else by filtering membership; no nearby set points at
    the finest radius gives HOLDS vacuously (isolated points have the whole
    dual space as normal cone).
    """
    x = np.asarray(x, dtype=float).ravel()
    xs = np.asarray(xstar, dtype=float).ravel()
    if not omega.contains_point(x):
        raise NotInBox("normal-vector test needs a base point inside the set")
    sups, args = [], []
    for j in range(levels):
        r = r0 * 2.0 ** (-j)
        dirs = sphere_directions(omega.dim, j + 2)
        cand = x[None, :] + r * np.vstack([dirs * s for s in (1.0, 0.5, 0.25)])
        if omega.project is not None:
            cand = np.vstack([cand, np.asarray(omega.project(cand))])
        keep = omega.member_mask(cand)
        cand = cand[keep]
        d = np.abs(cand - x).max(axis=1)
        ok = (d > 1e-14) & (d <= r)
        cand, d = cand[ok], d[ok]
        if len(cand) == 0:
            continue
        quot = (cand - x) @ xs / d
        k = int(np.argmax(quot))
        sups.append(float(quot[k]))
        args.append(cand[k])
    diag = {"sup_quotients": sups}
    if not sups:
        diag["note"] = "no set points found near x; normal cone is the whole space at the sampled resolution"
        return Verdict(HOLDS, diagnostics=diag)
    last = sups[-1]
    prev = sups[-2] if len(sups) >= 2 else last
    if last >= abs(fail_margin) and prev >= abs(fail_margin):
        return Verdict(FAILS, witness={"set_point": args[-1], "quotient": last}, diagnostics=diag)
    if last <= abs(tol) and last <= prev + abs(tol):
        return Verdict(HOLDS, diagnostics=diag)
    return Verdict(INCONCLUSIVE, diagnostics=diag)


def box_normal_cone(lo, hi, x, tol: float = 1e-9) -> DualSet:
    """Normal cone to an axis box at x, as the sign-pattern dual box.

    Component i contributes (-inf, 0] on the lower face, [0, +inf) on the
    upper face, {0} in the interior, and the whole line when lo_i = hi_i.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise NotInBox("point is outside the box")
    clo = np.zeros_like(lo)
    chi = np.zeros_like(hi)
    at_lo = x <= lo + tol
    at_hi = x >= hi - tol
    clo[at_lo] = -np.inf
    chi[at_hi] = np.inf
    return box_set(clo, chi)


@dataclass
class SmoothMap:
    """A continuously differentiable map with an optional Jacobian oracle."""

    dim_in: int
    dim_out: int
    eval: Callable[[np.ndarray], np.ndarray]
    jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, points):
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.asarray(self.eval(pts), dtype=float)
        return out.reshape(len(pts), self.dim_out)

    def value(self, point):
        return self(np.asarray(point, dtype=float)[None, :])[0]

    def jac(self, point, fd_step: float = 1e-6) -> np.ndarray:
        x = np.asarray(point, dtype=float).ravel()
        if self.jacobian is not None:
            J = np.asarray(self.jacobian(x), dtype=float)
            return J.reshape(self.dim_out, self.dim_in)
        # central differences
        J = np.empty((self.dim_out, self.dim_in))
        for i in range(self.dim_in):
            e = np.zeros(self.dim_in)
            e[i] = fd_step
            J[:, i] = (self.value(x + e) - self.value(x - e)) / (2 * fd_step)
        return J


def coderivative_smooth(F: SmoothMap, x, ystar) -> np.ndarray:
    """Jacobian-transpose image of ystar (single-valued smooth case)."""
    ys = np.asarray(ystar, dtype=float).ravel()
    if ys.size != F.dim_out:
        raise JacobianUnavailable(f"ystar has length {ys.size}, map output is {F.dim_out}")
    try:
        J = F.jac(x)
    except Exception as e:  # noqa: BLE001
        raise JacobianUnavailable(str(e)) from e
    return J.T @ ys
