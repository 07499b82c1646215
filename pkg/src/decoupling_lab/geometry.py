"""Regions of R^n, the maximum norm, and essentially-interior families.

Every space in the library carries the maximum norm; product spaces then get
the maximum of the factor distances and dual vectors live in the sum norm.
Under the max norm a ball is an axis-aligned cube, so every region here
reduces to box geometry plus explicit membership oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import EmptyInterior, InvalidBounds

__all__ = ["cheb", "cheb_pair", "Region", "EIFamily", "ei_family_for"]


def cheb(points: np.ndarray, ref: np.ndarray) -> np.ndarray:
    """Max-norm distances from an (n, d) array of points to a single point."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.abs(pts - np.asarray(ref, dtype=float)).max(axis=1)


def cheb_pair(a, b) -> float:
    return float(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)).max())


def _as_vec(x, dim=None) -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float)).ravel()
    if dim is not None and v.size != dim:
        raise InvalidBounds(f"expected a vector of length {dim}, got {v.size}")
    return v


@dataclass(frozen=True)
class Region:
    """A subset of R^n used as the locus U of the decoupling quantities.

    kind is one of 'open_ball', 'closed_ball', 'box', 'all', 'oracle',
    'eroded'.  Balls are max-norm balls (cubes).  'all' stands for the whole
    space, modelled for sampling purposes by a large bounding box.  'oracle'
    wraps an explicit membership/distance oracle together with a bounding box
    for sampling.  'eroded' is an oracle region shrunk by a fixed margin, used
    for essentially-interior members of oracle parents.
    """

    kind: str
    lo: np.ndarray
    hi: np.ndarray
    open_flags: bool = False  # True when the region excludes its box boundary
    oracle: Optional[object] = None  # SetOracle for 'oracle'/'eroded'
    margin: float = 0.0  # erosion margin for 'eroded'
    label: str = ""

    # -- constructors ------------------------------------------------------
    @staticmethod
    def open_ball(center, radius: float, label: str = "") -> "Region":
        c = _as_vec(center)
        if radius <= 0:
            raise InvalidBounds("ball radius must be positive")
        return Region("open_ball", c - radius, c + radius, True, label=label)

    @staticmethod
    def closed_ball(center, radius: float, label: str = "") -> "Region":
        c = _as_vec(center)
        if radius <= 0:
            raise InvalidBounds("ball radius must be positive")
        return Region("closed_ball", c - radius, c + radius, False, label=label)

    @staticmethod
    def box(lo, hi, label: str = "") -> "Region":
        lo = _as_vec(lo)
        hi = _as_vec(hi, lo.size)
        if np.any(lo > hi):
            raise InvalidBounds("box needs lo <= hi componentwise")
        return Region("box", lo, hi, False, label=label)

    @staticmethod
    def whole_space(dim: int, halfwidth: float = 8.0, label: str = "") -> "Region":
        hw = float(halfwidth)
        return Region("all", -hw * np.ones(dim), hw * np.ones(dim), False, label=label)

    @staticmethod
    def from_set(oracle, lo, hi, label: str = "") -> "Region":
        lo = _as_vec(lo, oracle.dim)
        hi = _as_vec(hi, oracle.dim)
        return Region("oracle", lo, hi, False, oracle=oracle, label=label)

    # -- geometry ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def widths(self) -> np.ndarray:
        return self.hi - self.lo

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    @property
    def radius(self) -> float:
        if self.kind not in ("open_ball", "closed_ball"):
            raise ValueError("radius is defined for ball regions only")
        return float(self.widths[0] / 2)

    def has_interior(self) -> bool:
        if np.any(self.widths <= 0):
            return False
        if self.kind in ("oracle", "eroded"):
            # spot check: the oracle must accept at least the box centre or a
            # probe point near it
            probe = self.center[None, :]
            return bool(np.any(self._oracle_mask(probe)))
        return True

    def _box_mask(self, pts: np.ndarray) -> np.ndarray:
        if self.open_flags:
            return np.all((pts > self.lo) & (pts < self.hi), axis=1)
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def _oracle_mask(self, pts: np.ndarray) -> np.ndarray:
        inside = self.oracle.contains(pts)
        if self.kind == "eroded":
            inside = inside & _erosion_mask(self.oracle, pts, self.margin)
        return inside

    def contains(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        mask = self._box_mask(pts)
        if self.kind in ("oracle", "eroded"):
            sub = np.where(mask)[0]
            if sub.size:
                keep = self._oracle_mask(pts[sub])
                mask = mask.copy()
                mask[sub] = keep
        return mask

    def contains_point(self, point) -> bool:
        return bool(self.contains(np.asarray(point, dtype=float)[None, :])[0])

    def dist(self, points) -> np.ndarray:
        """Max-norm distance to the region (0 inside)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.kind in ("oracle", "eroded"):
            if hasattr(self.oracle, "dist") and self.oracle.dist is not None:
                d = np.asarray(self.oracle.dist(pts), dtype=float)
            else:
                raise ValueError("oracle region without a distance map")
            box_excess = np.maximum(self.lo - pts, pts - self.hi).clip(min=0).max(axis=1)
            return np.maximum(d, box_excess)
        excess = np.maximum(self.lo - pts, pts - self.hi)
        return excess.clip(min=0).max(axis=1)

    def fatten(self, eps: float) -> "Region":
        """The open eps-fattening {x : dist(x, region) < eps}."""
        if eps <= 0:
            raise InvalidBounds("fattening width must be positive")
        if self.kind in ("oracle", "eroded"):
            from .oracles import SetOracle

            parent = self
            fat = SetOracle(
                dim=self.dim,
                contains=lambda pts: parent.dist(pts) < eps,
                dist=lambda pts: np.clip(parent.dist(pts) - eps, 0.0, None),
                name=f"fatten({self.label},{eps:g})",
            )
            return Region("oracle", self.lo - eps, self.hi + eps, False, oracle=fat,
                          label=f"fatten({self.label},{eps:g})")
        return Region(self.kind, self.lo - eps, self.hi + eps, True,
                      label=f"fatten({self.label},{eps:g})")

    def __repr__(self):
        name = self.label or self.kind
        return f"Region({name}, lo={self.lo.tolist()}, hi={self.hi.tolist()})"


_EROSION_CACHE: dict = {}


def _erosion_probe_offsets(dim: int) -> np.ndarray:
    # corners and axis midpoints of the Chebyshev unit box, scaled by margin
    if dim not in _EROSION_CACHE:
        grids = np.meshgrid(*([np.array([-1.0, 0.0, 1.0])] * dim), indexing="ij")
        offs = np.stack([g.ravel() for g in grids], axis=1)
        offs = offs[np.any(offs != 0, axis=1)]
        _EROSION_CACHE[dim] = offs
    return _EROSION_CACHE[dim]


def _erosion_mask(oracle, pts: np.ndarray, margin: float) -> np.ndarray:
    """Probe test: the Chebyshev margin-box around each point stays in the set."""
    offs = _erosion_probe_offsets(pts.shape[1]) * margin
    ok = np.ones(len(pts), dtype=bool)
    for off in offs:
        ok &= oracle.contains(pts + off)
        if not ok.any():
            break
    return ok


@dataclass(frozen=True)
class EIFamily:
    """A nested schedule of essentially interior subsets of a parent region.

    Member i, fattened by its certified gap, stays inside the parent; the
    margins are strictly decreasing so members grow toward the parent.
    """

    parent: Region
    margins: tuple  # strictly decreasing positive margins s_1 > s_2 > ...
    gaps: tuple  # certified gap per member (= margin here)
    members: tuple = field(default=())

    @property
    def stages(self) -> int:
        return len(self.margins)

    def member(self, i: int) -> Region:
        return self.members[i]

    def last(self) -> Region:
        return self.members[-1]


def ei_family_for(region: Region, stages: int) -> EIFamily:
    """Build a geometric schedule of essentially interior members.

    Ball parents of radius r get the inner balls of radii r*(1 - 2^-i); box
    parents shrink every axis by min-width * 2^-(i+1); oracle parents erode by
    the same margins with a probe-based membership test.
    """
    if stages < 1:
        raise ValueError("stages must be >= 1")
    if not region.has_interior():
        raise EmptyInterior(f"{region!r} has empty interior")
    members = []
    margins = []
    if region.kind in ("open_ball", "closed_ball"):
        r = region.radius
        for i in range(1, stages + 1):
            rho = r * (1.0 - 2.0 ** (-i))
            margins.append(r - rho)
            members.append(Region.open_ball(region.center, rho, label=f"{region.label}|inner{i}"))
    elif region.kind in ("box", "all"):
        w = float(region.widths.min())
        for i in range(1, stages + 1):
            s = w * 2.0 ** (-(i + 1))
            margins.append(s)
            members.append(Region.box(region.lo + s, region.hi - s, label=f"{region.label}|inner{i}"))
    else:
        w = float(region.widths.min())
        for i in range(1, stages + 1):
            s = w * 2.0 ** (-(i + 1))
            margins.append(s)
            members.append(
                Region(
                    "eroded",
                    region.lo + s,
                    region.hi - s,
                    False,
                    oracle=region.oracle,
                    margin=s,
                    label=f"{region.label}|inner{i}",
                )
            )
    return EIFamily(parent=region, margins=tuple(margins), gaps=tuple(margins), members=tuple(members))
