"""Deterministic sample schemes and windowed reductions over product grids.

A level of a scheme pairs a coupling distance eta_j with a point set whose
mesh shrinks proportionally to eta_j.  Grid-mode point sets are products of
per-axis value lists made of a uniform part, geometric boundary layers that
approach each face of the region from inside (divergence at a boundary is
invisible to uniform grids), and geometric layers accumulating at the region
centre (needed for ratio blow-ups at the reference point).

All pair constraints are max-norm balls, so "d(x1, x2) < eta" is a product of
per-axis windows; windowed min/max over a product grid therefore factors into
one-dimensional sliding reductions applied axis by axis.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .geometry import Region

__all__ = ["SampleScheme", "ProductGrid", "FlatSet", "sample_region", "window_reduce"]


@dataclass(frozen=True)
class SampleScheme:
    """Seeded generator of refining point sets plus the eta shrink schedule."""

    mode: str = "grid"  # 'grid' or 'lowdisc'
    seed: int = 0
    levels: int = 8
    eta0: float = 0.25
    eta_factor: float = 0.5
    mesh_ratio: float = 4.0  # target mesh ~ eta / mesh_ratio
    boundary_layers: int = 30
    center_layers: int = 12
    max_axis_points: int = 262_144
    max_total_points: int = 2_000_000
    lowdisc_count: int = 4096

    def __post_init__(self):
        if self.levels < 1 or self.eta0 <= 0 or not (0 < self.eta_factor < 1):
            raise ValueError("need levels >= 1, eta0 > 0, 0 < eta_factor < 1")

    def eta(self, level: int) -> float:
        return self.eta0 * self.eta_factor**level

    def eta_schedule(self):
        return [self.eta(j) for j in range(self.levels)]

    def with_(self, **kw) -> "SampleScheme":
        return replace(self, **kw)

    def axis_count(self, width: float, level: int, dim: int) -> int:
        target = self.eta(level) / self.mesh_ratio
        n = int(np.ceil(max(width, 1e-300) / max(target, 1e-300))) + 1
        n = min(n, self.max_axis_points)
        budget = int(self.max_total_points ** (1.0 / max(dim, 1)))
        return max(3, min(n, budget))


class ProductGrid:
    """A point set that is the Cartesian product of sorted per-axis value lists."""

    def __init__(self, axes):
        self.axes = [np.asarray(a, dtype=float) for a in axes]
        self.shape = tuple(len(a) for a in self.axes)
        self.dim = len(self.axes)
        self.size = int(np.prod(self.shape))
        self._points: Optional[np.ndarray] = None

    @property
    def points(self) -> np.ndarray:
        if self._points is None:
            mesh = np.meshgrid(*self.axes, indexing="ij")
            self._points = np.stack([m.ravel() for m in mesh], axis=1)
        return self._points

    def to_grid(self, flat: np.ndarray) -> np.ndarray:
        return np.asarray(flat).reshape(self.shape)


class FlatSet:
    """An unstructured point set (low-discrepancy mode, high dimensions)."""

    def __init__(self, points: np.ndarray):
        self.points = np.atleast_2d(np.asarray(points, dtype=float))
        self.dim = self.points.shape[1]
        self.size = len(self.points)


def _axis_values(lo: float, hi: float, n: int, open_ends: bool, center: float,
                 scheme: SampleScheme) -> np.ndarray:
    width = hi - lo
    if width <= 0:
        return np.array([lo])
    if open_ends:
        vals = np.linspace(lo, hi, n + 2)[1:-1]
    else:
        vals = np.linspace(lo, hi, n)
    # geometric layers must reach below the finest coupling distance of the
    # schedule, or deep levels lose all admissible pairs near the key features
    eta_min = scheme.eta(scheme.levels - 1)
    depth = int(np.ceil(np.log2(max(width / max(eta_min, 1e-300), 2.0)))) + 3
    layers = []
    kb = np.arange(2, min(max(scheme.boundary_layers, depth), 48) + 2, dtype=float)
    margin = width * 2.0 ** (-kb)
    layers.append(lo + margin)
    layers.append(hi - margin)
    if scheme.center_layers > 0 and lo < center < hi:
        kc = np.arange(2, min(max(scheme.center_layers, depth), 48) + 2, dtype=float)
        off = width * 2.0 ** (-kc)
        layers.append(center + off)
        layers.append(center - off)
        layers.append(np.array([center]))
    vals = np.concatenate([vals] + layers)
    vals = vals[(vals > lo) & (vals < hi)] if open_ends else vals[(vals >= lo) & (vals <= hi)]
    return np.unique(vals)


def sample_region(region: Region, scheme: SampleScheme, level: int,
                  extra_axes=None, extra_points=None):
    """The level point set for a region: ProductGrid (grid mode) or FlatSet.

    Deterministic in (seed, level, region).  extra_axes merges additional
    per-axis values (used to keep fattened-region grids supersets of the
    parent grid); extra_points appends oracle-provided domain/surface points.
    """
    d = region.dim
    if scheme.mode == "lowdisc":
        from scipy.stats import qmc

        count = min(scheme.lowdisc_count * 2**level, scheme.max_total_points)
        m = max(4, int(np.ceil(np.log2(max(count, 2)))))
        eng = qmc.Sobol(d=d, scramble=True, seed=scheme.seed + 7 * level)
        unit = eng.random_base2(m)[:count]
        pts = region.lo + unit * (region.hi - region.lo)
        pts = np.vstack([pts, region.center[None, :]])
        if extra_points is not None and len(extra_points):
            pts = np.vstack([pts, np.atleast_2d(extra_points)])
        return FlatSet(pts)

    axes = []
    open_ends = region.open_flags
    center = region.center
    for a in range(d):
        n = scheme.axis_count(float(region.widths[a]), level, d)
        vals = _axis_values(float(region.lo[a]), float(region.hi[a]), n, open_ends,
                            float(center[a]), scheme)
        if extra_axes is not None and extra_axes[a] is not None and len(extra_axes[a]):
            merged = np.concatenate([vals, np.asarray(extra_axes[a], dtype=float)])
            if open_ends:
                merged = merged[(merged > region.lo[a]) & (merged < region.hi[a])]
            else:
                merged = merged[(merged >= region.lo[a]) & (merged <= region.hi[a])]
            vals = np.unique(merged)
        axes.append(vals)
    grid = ProductGrid(axes)
    if extra_points is not None and len(extra_points):
        pts = np.vstack([grid.points, np.atleast_2d(extra_points)])
        return FlatSet(pts)
    return grid


def _axis_window_reduce(arr: np.ndarray, coords: np.ndarray, eta: float, take_min: bool,
                        idx: Optional[np.ndarray]):
    """Sliding open-window reduce along axis 0 of arr (shape (n, M)).

    Window of row i is {j : |coords[j] - coords[i]| < eta}; windows are index
    intervals since coords is sorted.  Exact sparse-table range reduction,
    vectorized over rows and columns, with argument rows carried through when
    idx is given.  Ties resolve deterministically toward the earlier range.
    """
    n, m = arr.shape
    lo = np.searchsorted(coords, coords - eta, side="right")
    hi = np.searchsorted(coords, coords + eta, side="left")
    lens = hi - lo  # every window contains its own row
    kmax = int(np.floor(np.log2(lens.max())))
    ks = np.floor(np.log2(lens)).astype(int)
    sign = 1.0 if take_min else -1.0
    out = np.empty_like(arr)
    out_idx = np.empty_like(idx) if idx is not None else None
    base = np.arange(n, dtype=np.int64)
    # column blocks bound the sparse-table memory
    cols = max(1, min(m, 6_000_000 // max(n, 1)))
    for c0 in range(0, m, cols):
        c1 = min(m, c0 + cols)
        tabs_v = [sign * arr[:, c0:c1]]
        tabs_i = [np.broadcast_to(base[:, None], (n, c1 - c0))] if idx is not None else None
        for k in range(1, kmax + 1):
            half = 1 << (k - 1)
            span = 1 << k
            rows = n - span + 1
            left, right = tabs_v[-1][:rows], tabs_v[-1][half:half + rows]
            choose = left <= right
            tabs_v.append(np.where(choose, left, right))
            if tabs_i is not None:
                li, ri = tabs_i[-1][:rows], tabs_i[-1][half:half + rows]
                tabs_i.append(np.where(choose, li, ri))
        for kk in range(kmax + 1):
            rows = np.where(ks == kk)[0]
            if rows.size == 0:
                continue
            span = 1 << kk
            left = tabs_v[kk][lo[rows]]
            right = tabs_v[kk][hi[rows] - span]
            choose = left <= right
            out[rows, c0:c1] = sign * np.where(choose, left, right)
            if idx is not None:
                li = tabs_i[kk][lo[rows]]
                ri = tabs_i[kk][hi[rows] - span]
                pick = np.where(choose, li, ri)
                out_idx[rows, c0:c1] = np.take_along_axis(idx[:, c0:c1], pick, axis=0)
    return out, out_idx


def window_reduce(grid: ProductGrid, values: np.ndarray, eta: float, take_min: bool = True,
                  want_arg: bool = False):
    """Windowed min/max of values over the open max-norm eta-ball around each grid point.

    values is flat of length grid.size.  Returns the reduced flat array and,
    when want_arg, the flat index of an achieving point per entry.
    """
    v = values.reshape(grid.shape).copy()
    idx = np.arange(grid.size).reshape(grid.shape) if want_arg else None
    for ax in range(grid.dim):
        vm = np.moveaxis(v, ax, 0)
        im = np.moveaxis(idx, ax, 0) if idx is not None else None
        flat_v = vm.reshape(vm.shape[0], -1)
        flat_i = im.reshape(im.shape[0], -1) if im is not None else None
        red_v, red_i = _axis_window_reduce(flat_v, grid.axes[ax], eta, take_min, flat_i)
        vm[...] = red_v.reshape(vm.shape)
        if im is not None:
            im[...] = red_i.reshape(im.shape)
    out = v.ravel()
    if want_arg:
        return out, idx.ravel()
    return out


def window_reduce_flat(points: np.ndarray, values: np.ndarray, eta: float,
                       take_min: bool = True, want_arg: bool = False):
    """KD-tree fallback of window_reduce for unstructured point sets."""
    from scipy.spatial import cKDTree

    tree = cKDTree(points)
    r = np.nextafter(eta, 0.0)  # open window
    neigh = tree.query_ball_point(points, r=r, p=np.inf, workers=-1)
    out = np.empty(len(points))
    arg = np.empty(len(points), dtype=int)
    for i, ids in enumerate(neigh):
        ids = np.asarray(ids)
        vals = values[ids]
        pos = np.argmin(vals) if take_min else np.argmax(vals)
        out[i] = vals[pos]
        arg[i] = ids[pos]
    if want_arg:
        return out, arg
    return out
