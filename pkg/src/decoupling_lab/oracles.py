"""Function and set oracles.

Oracles are pure and vectorized: ``eval`` maps an (n, d) float array to an
(n,) array of extended reals encoded as floats (+-inf allowed, nan mapped to
+inf under the lower-semicontinuity-friendly convention).  The effective
domain is detected as the set of sample points with finite values; no
symbolic domain description is required.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["FnOracle", "SetOracle", "indicator", "constant_fn", "from_scalar"]


def _sanitize(vals: np.ndarray) -> np.ndarray:
    vals = np.asarray(vals, dtype=float)
    if np.isnan(vals).any():
        vals = np.where(np.isnan(vals), np.inf, vals)
    return vals


@dataclass
class FnOracle:
    """Pure evaluation map from points in R^dim to extended reals.

    subgrad, when supplied, maps a single point to a structured description of
    the known subgradients there (see dualsets.DualSet); it is validated by
    tests against the sampled difference-quotient membership test, not at
    runtime.  dom_sample optionally enriches the sample sets with
    oracle-specific domain points (thin domains such as curves are invisible
    to product grids otherwise).
    """

    dim: int
    eval: Callable[[np.ndarray], np.ndarray]
    subgrad: Optional[Callable[[np.ndarray], object]] = None
    lower_bound_hint: Optional[float] = None
    dom_sample: Optional[Callable[[object, int], np.ndarray]] = None
    name: str = ""

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if pts.shape[1] != self.dim:
            raise ValueError(f"{self.name or 'fn'}: expected dim {self.dim}, got {pts.shape[1]}")
        with np.errstate(all="ignore"):
            return _sanitize(self.eval(pts))

    def value(self, point) -> float:
        return float(self(np.asarray(point, dtype=float)[None, :])[0])


@dataclass
class SetOracle:
    """Membership test plus max-norm distance (and optional projection) for a set.

    normal_cone, when supplied, maps a boundary point to a structured dual-set
    description of the known normal vectors; surface_sample optionally emits
    points on the set that product grids would miss.
    """

    dim: int
    contains: Callable[[np.ndarray], np.ndarray]
    dist: Optional[Callable[[np.ndarray], np.ndarray]] = None
    project: Optional[Callable[[np.ndarray], np.ndarray]] = None
    normal_cone: Optional[Callable[[np.ndarray], object]] = None
    surface_sample: Optional[Callable[[object, int], np.ndarray]] = None
    name: str = ""

    def member_mask(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.asarray(self.contains(pts), dtype=bool)

    def contains_point(self, point) -> bool:
        return bool(self.member_mask(np.asarray(point, dtype=float)[None, :])[0])

    def dist_to(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.dist is not None:
            return np.asarray(self.dist(pts), dtype=float)
        raise ValueError(f"set {self.name or '?'} has no distance map")

    def project_point(self, point) -> np.ndarray:
        if self.project is None:
            raise ValueError(f"set {self.name or '?'} has no projection")
        return np.asarray(self.project(np.asarray(point, dtype=float)[None, :]))[0]


def indicator(omega: SetOracle, name: str = "") -> FnOracle:
    """The indicator function of a set as a derived FnOracle (0 inside, +inf outside)."""

    def ev(pts):
        return np.where(omega.member_mask(pts), 0.0, np.inf)

    sub = None
    if omega.normal_cone is not None:
        sub = omega.normal_cone
    dom = None
    if omega.surface_sample is not None:
        dom = omega.surface_sample
    return FnOracle(dim=omega.dim, eval=ev, subgrad=sub, lower_bound_hint=0.0,
                    dom_sample=dom, name=name or f"i[{omega.name}]")


def constant_fn(dim: int, c: float, name: str = "") -> FnOracle:
    return FnOracle(dim=dim, eval=lambda pts: np.full(len(pts), float(c)),
                    lower_bound_hint=float(c), name=name or f"const({c:g})")


def from_scalar(dim: int, f: Callable[..., float], name: str = "") -> FnOracle:
    """Wrap a scalar function of dim coordinates (convenience for tests)."""

    def ev(pts):
        return np.array([f(*row) for row in pts], dtype=float)

    return FnOracle(dim=dim, eval=ev, name=name)
