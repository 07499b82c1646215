"""Decoupled infima and firm coupling gaps of a pair of functions over a region.

Six quantities are computed from refining sample levels:

* ``plain_inf``        -- inf of (f1+f2)(x) over U;
* ``uniform_inf_on``   -- liminf of f1(x1)+f2(x2) with x1, x2 in U, d(x1,x2) -> 0;
* ``uniform_inf_around`` -- the same with the points only required to approach U;
* ``quasiuniform_inf`` -- the outer infimum over essentially interior subsets V
  of U of the decoupled liminf with x1 restricted to V and x2 free;
* ``firm_gap`` / ``firm_gap_quasi`` -- limsups of the recoupling cost (the
  cheapest point x in U resolving a decoupled pair) over the same pair
  families.

All limit claims are one-sided sampled estimates carrying verdicts; liminf
traces are approximated from above, limsup traces from below, and a trace
falling below the divergence threshold is reported as the corresponding
infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import engine
from .errors import EmptyInterior, InfiniteAtBase, PreconditionFailed
from .extreal import ExtReal
from .geometry import EIFamily, Region, cheb_pair, ei_family_for
from .oracles import FnOracle
from .sampling import SampleScheme
from .verdicts import HOLDS, INCONCLUSIVE, Verdict, liminf_trace_verdict, limsup_trace_verdict

__all__ = [
    "DecouplingReport",
    "recoupling_cost",
    "uniform_inf_on",
    "uniform_inf_around",
    "quasiuniform_inf",
    "firm_gap",
    "firm_gap_quasi",
    "plain_inf",
    "full_report",
    "DEFAULT_EI_STAGES",
]

DEFAULT_EI_STAGES = 5


def _cache(f1, f2, scheme) -> engine.LevelCache:
    return engine.LevelCache(f1, f2, scheme)


def _levels(scheme: SampleScheme):
    return range(scheme.levels)


# ---------------------------------------------------------------------------
# plain infimum of the sum
# ---------------------------------------------------------------------------

def plain_inf(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
              conv_tol: float = 1e-3, diverge_threshold: float = 1e6,
              cache: Optional[engine.LevelCache] = None):
    """Sampled inf of (f1+f2)(x) over U, with trace verdict."""
    cache = cache or _cache(f1, f2, scheme)
    trace, arg = [], None
    for j in _levels(scheme):
        ld = cache.level(U, j, key="U")
        v, i = engine.sum_min(ld, ld.in_u)
        trace.append(v)
        if i is not None:
            arg = ld.points[i].copy()
    value, verdict = liminf_trace_verdict(trace, conv_tol, diverge_threshold)
    if arg is not None:
        verdict.diagnostics["argmin"] = arg
    return ExtReal(value), verdict


# ---------------------------------------------------------------------------
# decoupled infima
# ---------------------------------------------------------------------------

def uniform_inf_on(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                   conv_tol: float = 1e-3, diverge_threshold: float = 1e6,
                   cache: Optional[engine.LevelCache] = None):
    """Decoupled liminf with both points inside U."""
    cache = cache or _cache(f1, f2, scheme)
    trace, pair = [], None
    for j in _levels(scheme):
        ld = cache.level(U, j, key="U")
        v, i1, i2 = engine.pair_min(ld, ld.in_u, x2_in_u=True)
        trace.append(v)
        if i1 is not None:
            pair = (ld.points[i1].copy(), ld.points[i2].copy())
    value, verdict = liminf_trace_verdict(trace, conv_tol, diverge_threshold)
    if pair is not None:
        verdict.diagnostics["arg_pair"] = pair
    return ExtReal(value), verdict


def uniform_inf_around(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                       conv_tol: float = 1e-3, diverge_threshold: float = 1e6,
                       cache: Optional[engine.LevelCache] = None):
    """Decoupled liminf with the points only required to approach U.

    Computed as the limit over shrinking fattenings: at level j both points
    range over the open eta_j-fattening of U.  The fattened grids extend the
    grid of U itself, so the estimate never exceeds the on-U variant.
    """
    cache = cache or _cache(f1, f2, scheme)
    trace, pair = [], None
    for j in _levels(scheme):
        base = cache.level(U, j, key="U")
        fat = U.fatten(scheme.eta(j))
        extra = base.pset.axes if hasattr(base.pset, "axes") else None
        ld = cache.level(fat, j, key=f"fat{j}", extra_axes=extra)
        v, i1, i2 = engine.pair_min(ld, ld.in_u, x2_in_u=True)
        trace.append(v)
        if i1 is not None:
            pair = (ld.points[i1].copy(), ld.points[i2].copy())
    value, verdict = liminf_trace_verdict(trace, conv_tol, diverge_threshold)
    if pair is not None:
        verdict.diagnostics["arg_pair"] = pair
    return ExtReal(value), verdict


def _member_masks(ld, family: EIFamily):
    return [m.contains(ld.points) for m in family.members]


def quasiuniform_inf(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                     stages: int = DEFAULT_EI_STAGES, conv_tol: float = 1e-3,
                     diverge_threshold: float = 1e6,
                     cache: Optional[engine.LevelCache] = None):
    """Outer infimum over essentially interior members of the decoupled liminf.

    x1 is restricted to a member, x2 is free; members grow toward U so the
    member traces are nonincreasing and the last member carries the value.
    Empty interior yields +inf immediately.
    """
    if not U.has_interior():
        diag = {"note": "empty interior: inf over the empty member family is +inf"}
        return ExtReal(math.inf), Verdict(HOLDS, diagnostics=diag)
    family = ei_family_for(U, stages)
    cache = cache or _cache(f1, f2, scheme)
    table = np.full((stages, scheme.levels), np.inf)
    pair = None
    for j in _levels(scheme):
        ld = cache.level(U, j, key="U")
        masks = _member_masks(ld, family)
        for i, mask in enumerate(masks):
            v, i1, i2 = engine.pair_min(ld, mask, x2_in_u=False)
            table[i, j] = v
            if i == stages - 1 and i1 is not None:
                pair = (ld.points[i1].copy(), ld.points[i2].copy())
    trace = list(table[-1])
    value, verdict = liminf_trace_verdict(trace, conv_tol, diverge_threshold)
    verdict.diagnostics["member_table"] = table
    verdict.diagnostics["member_margins"] = list(family.margins)
    if pair is not None:
        verdict.diagnostics["arg_pair"] = pair
    return ExtReal(value), verdict


# ---------------------------------------------------------------------------
# firm coupling gaps
# ---------------------------------------------------------------------------

def firm_gap(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
             conv_tol: float = 1e-3, diverge_threshold: float = 1e6,
             cache: Optional[engine.LevelCache] = None,
             pairsum_cap: Optional[float] = None):
    """limsup of the recoupling cost over pairs in dom f1 x dom f2 inside U.

    pairsum_cap, when given, restricts to pairs with f1(x1)+f2(x2) below the
    cap (the alpha-restricted lower-bound variant).
    """
    cache = cache or _cache(f1, f2, scheme)
    trace, pair = [], None
    for j in _levels(scheme):
        ld = cache.level(U, j, key="U")
        idx1, idx2 = engine.reduced_pairs(ld, ld.in_u, x2_in_u=True)
        if pairsum_cap is not None and len(idx1):
            keep = ld.f1[idx1] + ld.f2[idx2] < pairsum_cap
            idx1, idx2 = idx1[keep], idx2[keep]
        if len(idx1) == 0:
            trace.append(-math.inf)
            continue
        ub = engine.recouple_upper(ld, U, f1, f2, idx1, idx2)
        k = int(np.argmax(ub))
        trace.append(float(ub[k]))
        pair = (ld.points[idx1[k]].copy(), ld.points[idx2[k]].copy())
    value, verdict = limsup_trace_verdict(trace, conv_tol, diverge_threshold)
    if pair is not None:
        verdict.diagnostics["arg_pair"] = pair
    verdict.diagnostics["pair_reduction"] = "per x1, partner = window argmin of f2 (cost within 2*eta)"
    return ExtReal(value), verdict


def firm_gap_quasi(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                   stages: int = DEFAULT_EI_STAGES, conv_tol: float = 1e-3,
                   diverge_threshold: float = 1e6,
                   cache: Optional[engine.LevelCache] = None,
                   pairsum_cap: Optional[float] = None):
    """sup over essentially interior members of the recoupling-cost limsup.

    x1 ranges over dom f1 inside a member, x2 over dom f2 freely; the member
    suprema are nondecreasing so the last member carries the value.  Empty
    interior yields 0 (supremum of an empty nonnegative family).
    """
    if not U.has_interior():
        diag = {"note": "empty interior: sup over the empty member family is 0"}
        return ExtReal(0.0), Verdict(HOLDS, diagnostics=diag)
    family = ei_family_for(U, stages)
    cache = cache or _cache(f1, f2, scheme)
    table = np.full((stages, scheme.levels), -math.inf)
    pair = None
    for j in _levels(scheme):
        ld = cache.level(U, j, key="U")
        masks = _member_masks(ld, family)
        idx1, idx2 = engine.reduced_pairs(ld, masks[-1], x2_in_u=False)
        if pairsum_cap is not None and len(idx1):
            keep = ld.f1[idx1] + ld.f2[idx2] < pairsum_cap
            idx1, idx2 = idx1[keep], idx2[keep]
        if len(idx1) == 0:
            continue
        ub = engine.recouple_upper(ld, U, f1, f2, idx1, idx2)
        for i, mask in enumerate(masks):
            sel = mask[idx1]
            if not sel.any():
                continue
            vals = ub[sel]
            k = int(np.argmax(vals))
            table[i, j] = float(vals[k])
            if i == stages - 1:
                ii = np.where(sel)[0][k]
                pair = (ld.points[idx1[ii]].copy(), ld.points[idx2[ii]].copy())
    trace = list(table[-1])
    value, verdict = limsup_trace_verdict(trace, conv_tol, diverge_threshold)
    verdict.diagnostics["member_table"] = table
    verdict.diagnostics["member_margins"] = list(family.margins)
    if pair is not None:
        verdict.diagnostics["arg_pair"] = pair
    return ExtReal(value), verdict


# ---------------------------------------------------------------------------
# standalone recoupling cost of one pair
# ---------------------------------------------------------------------------

def recoupling_cost(f1: FnOracle, f2: FnOracle, U: Region, x1, x2,
                    scheme: Optional[SampleScheme] = None, zoom_rounds: int = 28,
                    with_verdict: bool = False):
    """inf over x in U of max{d(x,x1), d(x,x2), (f1+f2)(x) - f1(x1) - f2(x2)}.

    Always >= 0.  Minimized by a coarse scan of U followed by repeated local
    zooming around the best cells; x1, x2 and their midpoint are always in
    the candidate set so exact closed-form optima on kinks are hit exactly.
    """
    x1 = np.asarray(x1, dtype=float).ravel()
    x2 = np.asarray(x2, dtype=float).ravel()
    v1 = f1.value(x1)
    v2 = f2.value(x2)
    if not (math.isfinite(v1) and math.isfinite(v2)):
        raise InfiniteAtBase("recoupling cost needs finite f1(x1) and f2(x2)")
    pairsum = v1 + v2

    def score(pts: np.ndarray) -> np.ndarray:
        inside = U.contains(pts)
        with np.errstate(all="ignore"):
            s = f1(pts) + f2(pts)
        s = np.where(np.isnan(s), np.inf, s)
        d1 = np.abs(pts - x1).max(axis=1)
        d2 = np.abs(pts - x2).max(axis=1)
        vals = np.maximum(np.maximum(d1, d2), s - pairsum)
        return np.where(inside, vals, np.inf)

    d = U.dim
    per_axis = max(5, int(round((20000 if d <= 2 else 200000) ** (1.0 / d))))
    axes = [np.linspace(U.lo[a], U.hi[a], per_axis + 2)[1:-1] if U.open_flags
            else np.linspace(U.lo[a], U.hi[a], per_axis) for a in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    fixed = np.array([x1, x2, 0.5 * (x1 + x2), U.center])
    pts = np.vstack([pts, fixed])
    vals = score(pts)
    best_i = int(np.argmin(vals))
    best, best_pt = float(vals[best_i]), pts[best_i]
    width = float(U.widths.max()) / per_axis
    trace = [best]
    for _ in range(zoom_rounds):
        local = [np.linspace(best_pt[a] - width, best_pt[a] + width, 9) for a in range(d)]
        mesh = np.meshgrid(*local, indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts = np.vstack([pts, fixed])
        vals = score(pts)
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_pt = float(vals[i]), pts[i]
        width /= 2.0
        trace.append(best)
    if not math.isfinite(best):
        verdict = Verdict(INCONCLUSIVE, diagnostics={
            "note": "no sampled point in U with finite sum; recoupling cost +inf", "trace": trace})
        return (ExtReal(math.inf), verdict) if with_verdict else ExtReal(math.inf)
    verdict = Verdict(HOLDS, diagnostics={"trace": trace, "argmin": best_pt,
                                          "note": "upper estimate from zoom refinement"})
    return (ExtReal(best), verdict) if with_verdict else ExtReal(best)


# ---------------------------------------------------------------------------
# bundled report
# ---------------------------------------------------------------------------

@dataclass
class DecouplingReport:
    """All decoupling quantities of a pair over a region, with verdicts.

    Ordering invariants (uniform_inf <= uniform_inf_on <= min(plain, quasi);
    0 <= firm_gap_quasi <= firm_gap; the two gap estimates) are asserted on
    construction; a violated inequality downgrades the verdicts of the
    quantities involved instead of returning inconsistent numbers.
    """

    uniform_inf: ExtReal
    uniform_inf_on: ExtReal
    quasiuniform_inf: ExtReal
    firm_gap: ExtReal
    firm_gap_quasi: ExtReal
    inf_sum: ExtReal
    verdicts: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    consistency_notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        def enc(x: ExtReal):
            v = float(x)
            return "inf" if v == math.inf else ("-inf" if v == -math.inf else v)

        return {
            "uniform_inf": enc(self.uniform_inf),
            "uniform_inf_on": enc(self.uniform_inf_on),
            "quasiuniform_inf": enc(self.quasiuniform_inf),
            "firm_gap": enc(self.firm_gap),
            "firm_gap_quasi": enc(self.firm_gap_quasi),
            "inf_sum": enc(self.inf_sum),
            "verdicts": {k: v.to_json() for k, v in self.verdicts.items()},
            "consistency_notes": list(self.consistency_notes),
        }


def full_report(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                stages: int = DEFAULT_EI_STAGES, conv_tol: float = 1e-3,
                diverge_threshold: float = 1e6,
                consistency_tol: float = 1e-2) -> DecouplingReport:
    """Compute all six quantities on shared level data and cross-check them.

    Raises PreconditionFailed when no sampled point of U carries a finite sum
    f1+f2 at any level (the common-domain condition fails on all samples).
    """
    cache = _cache(f1, f2, scheme)
    inf_v, inf_vd = plain_inf(f1, f2, U, scheme, conv_tol, diverge_threshold, cache=cache)
    if all(t == math.inf for t in inf_vd.diagnostics["trace"]):
        raise PreconditionFailed(
            "no sampled point of the region has finite f1+f2; the common-domain condition fails")
    on_v, on_vd = uniform_inf_on(f1, f2, U, scheme, conv_tol, diverge_threshold, cache=cache)
    ar_v, ar_vd = uniform_inf_around(f1, f2, U, scheme, conv_tol, diverge_threshold, cache=cache)
    try:
        q_v, q_vd = quasiuniform_inf(f1, f2, U, scheme, stages, conv_tol, diverge_threshold, cache=cache)
    except EmptyInterior:
        q_v, q_vd = ExtReal(math.inf), Verdict(HOLDS, diagnostics={"note": "empty interior"})
    g_v, g_vd = firm_gap(f1, f2, U, scheme, conv_tol, diverge_threshold, cache=cache)
    gq_v, gq_vd = firm_gap_quasi(f1, f2, U, scheme, stages, conv_tol, diverge_threshold, cache=cache)

    verdicts = {"uniform_inf": ar_vd, "uniform_inf_on": on_vd, "quasiuniform_inf": q_vd,
                "firm_gap": g_vd, "firm_gap_quasi": gq_vd, "inf_sum": inf_vd}
    traces = {k: v.diagnostics.get("trace") for k, v in verdicts.items()}
    notes = []

    def chk(ok: bool, note: str, keys):
        if not ok:
            notes.append(note)
            for k in keys:
                verdicts[k] = verdicts[k].downgrade(note)

    tol = consistency_tol
    fv = {k: float(v) for k, v in
          [("ar", ar_v), ("on", on_v), ("q", q_v), ("g", g_v), ("gq", gq_v), ("inf", inf_v)]}

    def le(a, b):
        if math.isinf(a) or math.isinf(b):
            return a <= b or (a == b)
        return a <= b + tol * max(1.0, abs(a), abs(b))

    chk(le(fv["ar"], fv["on"]), "uniform_inf exceeds uniform_inf_on", ["uniform_inf", "uniform_inf_on"])
    chk(le(fv["on"], fv["inf"]), "uniform_inf_on exceeds inf_sum", ["uniform_inf_on", "inf_sum"])
    chk(le(fv["on"], fv["q"]), "uniform_inf_on exceeds quasiuniform_inf", ["uniform_inf_on", "quasiuniform_inf"])
    chk(fv["gq"] >= -tol, "firm_gap_quasi negative", ["firm_gap_quasi"])
    chk(le(fv["gq"], fv["g"]), "firm_gap_quasi exceeds firm_gap", ["firm_gap_quasi", "firm_gap"])
    if not (math.isinf(fv["inf"]) and math.isinf(fv["on"]) and fv["inf"] == fv["on"]):
        gap_on = fv["inf"] - fv["on"] if fv["on"] != -math.inf else -math.inf
        chk(le(gap_on, fv["g"]), "inf_sum - uniform_inf_on exceeds firm_gap", ["firm_gap"])
    if not (math.isinf(fv["inf"]) and math.isinf(fv["q"]) and fv["inf"] == fv["q"]):
        gap_q = fv["inf"] - fv["q"] if fv["q"] != -math.inf else -math.inf
        chk(le(gap_q, fv["gq"]), "inf_sum - quasiuniform_inf exceeds firm_gap_quasi", ["firm_gap_quasi"])

    return DecouplingReport(
        uniform_inf=ar_v, uniform_inf_on=on_v, quasiuniform_inf=q_v,
        firm_gap=g_v, firm_gap_quasi=gq_v, inf_sum=inf_v,
        verdicts=verdicts, traces=traces, consistency_notes=notes)
