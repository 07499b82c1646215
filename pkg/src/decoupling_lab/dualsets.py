"""Structured descriptions of subdifferentials and normal cones in dual space.

Dual vectors live in the sum norm (the dual of the max norm).  A DualSet is
an affine family  { base + w + D @ alpha : lo <= w <= hi, alpha >= 0 }  with a
box part (entries of lo/hi may be +-inf, so sign-constrained cones are boxes
too) and finitely many ray directions.  Unions of such pieces cover every
structure the searches need: single gradients, convex subdifferential boxes,
box normal cones, half-space normal rays, and the 1/(2x)-type unbounded ray
families of epigraph cones.  Sets are never materialized; only sum-norm
distances to Minkowski sums are computed, in closed form where the rays
allow it and by linear programming otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import EmptySet

__all__ = ["DualSet", "DualUnion", "point_set", "box_set", "ray_set", "dist_to_sum", "sum_norm"]


def sum_norm(v) -> float:
    return float(np.abs(np.asarray(v, dtype=float)).sum())


@dataclass(frozen=True)
class DualSet:
    """One affine piece: base + box[lo, hi] + cone(rays)."""

    base: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    rays: np.ndarray  # (k, dim); may be empty

    @property
    def dim(self) -> int:
        return self.base.size

    def minkowski(self, other: "DualSet") -> "DualSet":
        return DualSet(
            base=self.base + other.base,
            lo=self.lo + other.lo,
            hi=self.hi + other.hi,
            rays=np.vstack([self.rays, other.rays]),
        )

    def sample(self, alphas: Sequence[float] = (0.0, 0.5, 1.0, 2.0)) -> np.ndarray:
        """Representative members (box corners x ray multiples), for validation."""
        dim = self.dim
        lo = np.where(np.isfinite(self.lo), self.lo, -np.ones(dim) * 3.0)
        hi = np.where(np.isfinite(self.hi), self.hi, np.ones(dim) * 3.0)
        corners = [lo, hi, 0.5 * (lo + hi)]
        pts = []
        for w in corners:
            w = np.clip(w, lo, hi)
            if len(self.rays) == 0:
                pts.append(self.base + w)
            else:
                for a in alphas:
                    pts.append(self.base + w + a * self.rays.sum(axis=0))
        return np.unique(np.round(np.array(pts), 12), axis=0)

    def distance(self, v) -> float:
        return _distance_to_piece(np.asarray(v, dtype=float), self)


@dataclass(frozen=True)
class DualUnion:
    """A finite union of DualSet pieces (e.g. a finite set of gradients)."""

    pieces: tuple

    @property
    def dim(self) -> int:
        return self.pieces[0].dim

    def distance(self, v) -> float:
        return min(p.distance(v) for p in self.pieces)


def _vec(x, dim=None):
    v = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if dim is not None and v.size != dim:
        raise ValueError(f"expected dual vector of length {dim}")
    return v


def point_set(*points) -> DualUnion:
    """A finite set of dual vectors."""
    if not points:
        raise EmptySet("a point set needs at least one point")
    pieces = []
    for p in points:
        p = _vec(p)
        z = np.zeros_like(p)
        pieces.append(DualSet(base=p, lo=z, hi=z, rays=np.empty((0, p.size))))
    return DualUnion(tuple(pieces))


def box_set(lo, hi, base=None) -> DualSet:
    """An axis box of dual vectors; +-inf entries give sign-constrained cones."""
    lo = _vec(lo)
    hi = _vec(hi, lo.size)
    if np.any(lo > hi):
        raise ValueError("box_set needs lo <= hi")
    b = _vec(base, lo.size) if base is not None else np.zeros_like(lo)
    return DualSet(base=b, lo=lo, hi=hi, rays=np.empty((0, lo.size)))


def ray_set(base, *directions) -> DualSet:
    """base + nonnegative combinations of the given ray directions."""
    b = _vec(base)
    rays = np.array([_vec(d, b.size) for d in directions], dtype=float)
    z = np.zeros_like(b)
    return DualSet(base=b, lo=z, hi=z, rays=rays)


# ---------------------------------------------------------------------------
# distances
# ---------------------------------------------------------------------------

def _box_distance(v: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    # sum-norm distance to an axis box is separable
    below = np.clip(lo - v, 0.0, None)
    above = np.clip(v - hi, 0.0, None)
    return float((below + above).sum())


def _single_ray_distance(v: np.ndarray, lo: np.ndarray, hi: np.ndarray, d: np.ndarray) -> float:
    # minimize over alpha >= 0 the box distance of v - alpha*d: a convex
    # piecewise-linear function of alpha, bounded below, so the minimum sits
    # at alpha = 0 or where a coordinate meets a box face
    bps = {0.0}
    for i in range(v.size):
        if d[i] != 0.0:
            for b in (lo[i], hi[i]):
                if np.isfinite(b):
                    a = (v[i] - b) / d[i]
                    if a > 0:
                        bps.add(float(a))
    return min(_box_distance(v - a * d, lo, hi) for a in bps)


def _lp_distance(v: np.ndarray, piece: DualSet) -> float:
    # min ||v - base - w - D^T alpha||_1 over lo <= w <= hi, alpha >= 0
    from scipy.optimize import linprog

    dim = piece.dim
    k = len(piece.rays)
    target = v - piece.base
    # variables: s (dim, abs slack), w (dim), alpha (k)
    # s >= +(target - w - D^T alpha), s >= -(...)
    n = dim + dim + k
    c = np.concatenate([np.ones(dim), np.zeros(dim + k)])
    A = np.zeros((2 * dim, n))
    b = np.zeros(2 * dim)
    D = piece.rays.T if k else np.zeros((dim, 0))
    # target - w - D alpha - s <= 0
    A[:dim, :dim] = -np.eye(dim)
    A[:dim, dim:2 * dim] = -np.eye(dim)
    A[:dim, 2 * dim:] = -D
    b[:dim] = -target
    # -target + w + D alpha - s <= 0
    A[dim:, :dim] = -np.eye(dim)
    A[dim:, dim:2 * dim] = np.eye(dim)
    A[dim:, 2 * dim:] = D
    b[dim:] = target
    bounds = [(0, None)] * dim
    bounds += [(piece.lo[i] if np.isfinite(piece.lo[i]) else None,
                piece.hi[i] if np.isfinite(piece.hi[i]) else None) for i in range(dim)]
    bounds += [(0, None)] * k
    res = linprog(c, A_ub=A, b_ub=b, bounds=bounds, method="highs")
    if not res.success:
        raise EmptySet(f"dual distance LP failed: {res.message}")
    return float(res.fun)


def _distance_to_piece(v: np.ndarray, piece: DualSet) -> float:
    k = len(piece.rays)
    if k == 0:
        return _box_distance(v - piece.base, piece.lo, piece.hi)
    if k == 1:
        return _single_ray_distance(v - piece.base, piece.lo, piece.hi, piece.rays[0])
    return _lp_distance(v, piece)


def _as_union(s) -> DualUnion:
    if isinstance(s, DualUnion):
        return s
    if isinstance(s, DualSet):
        return DualUnion((s,))
    raise TypeError(f"not a dual-set description: {type(s)!r}")


def dist_to_sum(v, *sets) -> float:
    """Sum-norm distance from v to the Minkowski sum of dual-set descriptions.

    Exact (closed form) for boxes and single-ray combinations; an LP solves
    the general finitely-generated case.  Unions expand into the cross
    product of their pieces.
    """
    if not sets:
        raise EmptySet("dist_to_sum needs at least one set")
    unions = [_as_union(s) for s in sets]
    v = _vec(v, unions[0].dim)
    acc = list(unions[0].pieces)
    for u in unions[1:]:
        acc = [a.minkowski(p) for a in acc for p in u.pieces]
    return min(_distance_to_piece(v, piece) for piece in acc)
