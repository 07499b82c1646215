"""Per-level evaluation machinery shared by the decoupling quantities.

A level bundles the sampled point set of a region with the values of both
functions; all pair-based reductions (decoupled infima over d(x1,x2) < eta,
recoupling-cost suprema) are windowed reductions over this data.  Levels are
cached per (region, level) inside one computation so the five quantities of a
report share the expensive sampling and evaluation work.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .geometry import Region, cheb
from .oracles import FnOracle
from .sampling import FlatSet, ProductGrid, SampleScheme, sample_region, window_reduce, window_reduce_flat

__all__ = ["LevelData", "LevelCache", "pair_min", "sum_min", "reduced_pairs", "recouple_upper"]


@dataclass
class LevelData:
    level: int
    eta: float
    pset: object  # ProductGrid or FlatSet
    points: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    sum12: np.ndarray
    in_u: np.ndarray
    wcache: dict = None

    def __post_init__(self):
        if self.wcache is None:
            self.wcache = {}

    @property
    def size(self) -> int:
        return len(self.points)


class LevelCache:
    """Builds and caches LevelData for (region-key, level) pairs."""

    def __init__(self, f1: FnOracle, f2: FnOracle, scheme: SampleScheme):
        self.f1 = f1
        self.f2 = f2
        self.scheme = scheme
        self._cache: dict = {}

    def level(self, region: Region, lvl: int, key: Optional[str] = None,
              extra_axes=None) -> LevelData:
        k = (key or id(region), lvl)
        if k in self._cache:
            return self._cache[k]
        pset = sample_region(region, self.scheme, lvl, extra_axes=extra_axes)
        pts = pset.points
        v1 = self.f1(pts)
        v2 = self.f2(pts)
        with np.errstate(all="ignore"):
            s = v1 + v2
        s = np.where(np.isnan(s), np.inf, s)
        if region.kind in ("box", "all", "open_ball", "closed_ball") and not isinstance(pset, FlatSet):
            in_u = np.ones(len(pts), dtype=bool)
        else:
            in_u = region.contains(pts)
        ld = LevelData(lvl, self.scheme.eta(lvl), pset, pts, v1, v2, s, in_u)
        self._cache[k] = ld
        return ld


def _masked(values: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = np.where(mask, values, np.inf)
    return out


def _window_min(ld: LevelData, values: np.ndarray, want_arg: bool):
    if isinstance(ld.pset, ProductGrid):
        return window_reduce(ld.pset, values, ld.eta, take_min=True, want_arg=want_arg)
    res = window_reduce_flat(ld.points, values, ld.eta, take_min=True, want_arg=want_arg)
    return res


def f2_window(ld: LevelData, x2_in_u: bool):
    """Cached windowed min of f2 (with argument) over the open eta-ball.

    x2 ranges over dom f2, intersected with U when x2_in_u.  The same
    reduction backs every pair-based quantity at this level.
    """
    key = ("f2win", bool(x2_in_u))
    if key not in ld.wcache:
        m2 = np.isfinite(ld.f2)
        if x2_in_u:
            m2 = m2 & ld.in_u
        if not m2.any():
            ld.wcache[key] = (np.full(ld.size, np.inf), np.zeros(ld.size, dtype=int))
        else:
            wmin, warg = _window_min(ld, _masked(ld.f2, m2), want_arg=True)
            ld.wcache[key] = (wmin, warg.astype(int))
    return ld.wcache[key]


def pair_min(ld: LevelData, mask1: np.ndarray, x2_in_u: bool = True):
    """inf of f1(x1) + f2(x2) over sampled pairs with d(x1, x2) < eta.

    x1 ranges over mask1 (within dom f1), x2 over dom f2 (within U when
    x2_in_u).  Returns (value, x1 index, x2 index); +inf with None indices
    when no admissible pair exists.
    """
    wmin, warg = f2_window(ld, x2_in_u)
    m1 = mask1 & np.isfinite(ld.f1)
    if not m1.any():
        return np.inf, None, None
    with np.errstate(invalid="ignore"):
        total = np.where(m1, ld.f1 + wmin, np.inf)
    total = np.where(np.isnan(total), np.inf, total)
    i1 = int(np.argmin(total))
    if not np.isfinite(total[i1]):
        return np.inf, None, None
    return float(total[i1]), i1, int(warg[i1])


def sum_min(ld: LevelData, mask: np.ndarray):
    """inf of (f1+f2)(x) over sampled x in mask; (value, index or None)."""
    vals = _masked(ld.sum12, mask)
    i = int(np.argmin(vals))
    if not np.isfinite(vals[i]):
        return np.inf, None
    return float(vals[i]), i


def reduced_pairs(ld: LevelData, mask1: np.ndarray, x2_in_u: bool = True):
    """Representative admissible pairs for sup-type reductions.

    For every x1 in mask1 with finite f1, pick the window argmin of f2 as its
    partner (the partner with the largest recoupling gap); other partners in
    the same window change the recoupling cost by at most 2*eta.  Returns
    (idx1, idx2) integer arrays, possibly empty.
    """
    wmin, warg = f2_window(ld, x2_in_u)
    m1 = mask1 & np.isfinite(ld.f1) & np.isfinite(wmin)
    idx1 = np.where(m1)[0]
    return idx1, warg[idx1]


def recouple_upper(ld: LevelData, region: Region, f1: FnOracle, f2: FnOracle,
                   idx1: np.ndarray, idx2: np.ndarray) -> np.ndarray:
    """Upper estimates of the recoupling cost for the given sampled pairs.

    The recoupling cost of (x1, x2) is the infimum over x in U of
    max{d(x,x1), d(x,x2), (f1+f2)(x) - f1(x1) - f2(x2)}; any candidate x
    yields an upper bound.  Candidates: x1, x2, their midpoint, the sampled
    minimizer of the sum on U, the region centre, and the nearest sampled
    point of U with finite sum to the midpoint.
    """
    if len(idx1) == 0:
        return np.empty(0)
    x1 = ld.points[idx1]
    x2 = ld.points[idx2]
    pairsum = ld.f1[idx1] + ld.f2[idx2]
    n = len(idx1)
    best = np.full(n, np.inf)

    def consider(cpts: np.ndarray, csum: np.ndarray, valid: np.ndarray):
        nonlocal best
        d1 = np.abs(cpts - x1).max(axis=1)
        d2 = np.abs(cpts - x2).max(axis=1)
        with np.errstate(invalid="ignore"):
            gap = csum - pairsum
        gap = np.where(np.isnan(gap), np.inf, gap)
        cand = np.maximum(np.maximum(d1, d2), gap)
        cand = np.where(valid, cand, np.inf)
        best = np.minimum(best, cand)

    in_u_sum = ld.in_u & np.isfinite(ld.sum12)
    # sampled points x1 / x2 as recoupling candidates
    consider(x1, ld.sum12[idx1], ld.in_u[idx1] & np.isfinite(ld.sum12[idx1]))
    consider(x2, ld.sum12[idx2], ld.in_u[idx2] & np.isfinite(ld.sum12[idx2]))
    # midpoints, evaluated fresh
    mid = 0.5 * (x1 + x2)
    msum = f1(mid) + f2(mid)
    msum = np.where(np.isnan(msum), np.inf, msum)
    consider(mid, msum, region.contains(mid))
    # global sampled minimizer of the sum on U
    smin, si = sum_min(ld, ld.in_u)
    if si is not None:
        c = np.broadcast_to(ld.points[si], x1.shape)
        consider(c, np.full(n, smin), np.ones(n, dtype=bool))
    # region centre
    ctr = region.center[None, :]
    if region.contains(ctr)[0]:
        csum = float((f1(ctr) + f2(ctr))[0])
        c = np.broadcast_to(region.center, x1.shape)
        consider(c, np.full(n, csum), np.isfinite(np.full(n, csum)))
    # nearest finite-sum sample to each midpoint
    dom_idx = np.where(in_u_sum)[0]
    if dom_idx.size:
        from scipy.spatial import cKDTree

        sub = dom_idx
        if sub.size > 200_000:
            sub = sub[:: int(np.ceil(sub.size / 200_000))]
        tree = cKDTree(ld.points[sub])
        _, nn = tree.query(mid, k=1, p=np.inf)
        nn_idx = sub[np.atleast_1d(nn)]
        consider(ld.points[nn_idx], ld.sum12[nn_idx], np.ones(n, dtype=bool))
    return best
