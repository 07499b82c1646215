"""Certificates for the four uniform lower-semicontinuity properties of a pair
of functions, their relative (function-vs-set) versions, set-pair firmness,
and subtransversality moduli.

Each property has an epsilon-eta characterization: for every eps from a fixed
grid there must exist an eta such that every admissible decoupled pair closer
than eta admits a recoupling point x with (f1+f2)(x) < f1(x1)+f2(x2)+eps,
where the admissible sets and the constraint on x depend on the property:

  uniform            x1, x2 in U;            x in U
  quasiuniform       x1 in V (ess. int.), x2 free;  x in U
  firm_uniform       x1, x2 in U;            x in U and within eps of x1
  firm_quasiuniform  x1 in V, x2 free;       x within eps of x1

Pairs at a smaller eta are a subset of those at a larger one, so a passing
eta certifies everything below it.  A pair at the finest level for which no
sampled x achieves the descent is a FAILS witness; an exhausted schedule
without such a margin-positive pair is INCONCLUSIVE.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import engine
from .decoupling import firm_gap_quasi
from .errors import BaseNotInIntersection, InfiniteAtBase, PreconditionFailed
from .geometry import Region, ei_family_for
from .oracles import FnOracle, SetOracle, indicator
from .sampling import ProductGrid, SampleScheme, window_reduce, window_reduce_flat
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, Verdict

__all__ = [
    "PROPERTIES",
    "LscCertificate",
    "certify",
    "certify_near",
    "sufficient_conditions",
    "certify_relative",
    "certify_pair_of_sets",
    "subtransversality_modulus",
    "DEFAULT_EPS_GRID",
]

PROPERTIES = ("uniform", "quasiuniform", "firm_uniform", "firm_quasiuniform")
DEFAULT_EPS_GRID = (1.0, 0.3, 0.1, 0.03, 0.01)


@dataclass
class LscCertificate:
    property: str
    mode: str  # 'on_region' or 'near_point'
    verdict: Verdict
    epsilon_eta_table: list = field(default_factory=list)
    witness: Optional[dict] = None

    @property
    def status(self) -> str:
        return self.verdict.status

    def to_json(self) -> dict:
        return {
            "property": self.property,
            "mode": self.mode,
            "verdict": self.verdict.to_json(),
            "epsilon_eta_table": self.epsilon_eta_table,
        }


def _sum_window(ld, eps: float, restrict_u: bool):
    key = ("sumwin", float(eps), bool(restrict_u))
    if key not in ld.wcache:
        vals = np.where(ld.in_u, ld.sum12, np.inf) if restrict_u else ld.sum12
        if isinstance(ld.pset, ProductGrid):
            ld.wcache[key] = window_reduce(ld.pset, vals, eps, take_min=True)
        else:
            ld.wcache[key] = window_reduce_flat(ld.points, vals, eps, take_min=True)
    return ld.wcache[key]


def _persistent_failure(excess_trace) -> bool:
    """A violation justifies FAILS only when it does not shrink under refinement.

    Excesses that decay level over level indicate an exhausted schedule, not
    a genuine counterexample.
    """
    if not excess_trace or excess_trace[-1] <= 0:
        return False
    if len(excess_trace) == 1:
        return True
    last, prev = excess_trace[-1], excess_trace[-2]
    if math.isinf(last):
        return True
    if prev <= 0 or math.isinf(prev):
        return not math.isinf(prev)
    return last > 0.75 * prev


def _select_witness(ld, idx1, idx2, excess, pairsum):
    # maximal violation, then maximal decoupled sum, then lexicographically
    # largest point: a deterministic, re-checkable representative
    cap = np.where(np.isinf(excess), 1e300, excess)
    csum = np.where(np.isinf(pairsum), 1e300, pairsum)
    coords = [ld.points[idx1][:, a] for a in range(ld.points.shape[1])]
    # np.lexsort sorts by the last key first
    order = np.lexsort(list(reversed(coords)) + [csum, cap])
    k = order[-1]
    return {
        "x1": ld.points[idx1[k]].copy(),
        "x2": ld.points[idx2[k]].copy(),
        "pair_sum": float(pairsum[k]),
        "excess": float(excess[k]),
    }


def certify(f1: FnOracle, f2: FnOracle, U: Region, property: str, scheme: SampleScheme,
            eps_grid: Sequence[float] = DEFAULT_EPS_GRID, stages: int = 4,
            fail_margin: float = 1e-7) -> LscCertificate:
    """Certify one of the four lower-semicontinuity properties of (f1, f2) on U."""
    if property not in PROPERTIES:
        raise ValueError(f"unknown property {property!r}")
    cache = engine.LevelCache(f1, f2, scheme)
    quasi = property.endswith("quasiuniform") or property == "quasiuniform"
    firm = property.startswith("firm")
    family = ei_family_for(U, stages) if quasi else None

    # ensure the common-domain condition holds on some sample
    probe = cache.level(U, scheme.levels - 1, key="U")
    if not np.isfinite(np.where(probe.in_u, probe.sum12, np.inf)).any():
        raise PreconditionFailed("no sampled point of the region has finite f1+f2")

    table = []
    overall_witness = None
    for eps in eps_grid:
        certified_eta = None
        last_fail = None
        excess_trace = []
        for j in range(scheme.levels):
            ld = cache.level(U, j, key="U")
            mask1 = family.last().contains(ld.points) if quasi else ld.in_u
            idx1, idx2 = engine.reduced_pairs(ld, mask1, x2_in_u=not quasi)
            if len(idx1) == 0:
                certified_eta = ld.eta  # vacuous: no admissible pairs
                break
            pairsum = ld.f1[idx1] + ld.f2[idx2]
            if firm:
                best = _sum_window(ld, eps, restrict_u=(property == "firm_uniform"))[idx1]
            else:
                b, _ = engine.sum_min(ld, ld.in_u)
                best = np.full(len(idx1), b)
            excess = best - (pairsum + eps)
            bad = excess >= 0
            if not bad.any():
                certified_eta = ld.eta
                break
            margin_bad = excess >= fail_margin * np.maximum(1.0, np.abs(pairsum))
            excess_trace.append(float(np.max(excess[margin_bad])) if margin_bad.any() else 0.0)
            if margin_bad.any():
                sel = np.where(margin_bad)[0]
                last_fail = _select_witness(ld, idx1[sel], idx2[sel], excess[sel], pairsum[sel])
                last_fail.update({"eps": eps, "eta": ld.eta, "best_found": float(np.min(best[sel]))})
            else:
                last_fail = None
        persistent = _persistent_failure(excess_trace) and last_fail is not None
        if firm and scheme.eta(scheme.levels - 1) >= eps:
            # the recoupling ball cannot be separated at this resolution
            persistent = False
        entry = {"eps": eps, "certified_eta": certified_eta,
                 "outcome": "pass" if certified_eta is not None
                 else ("fail" if persistent else "unresolved"),
                 "excess_trace": excess_trace}
        table.append(entry)
        if certified_eta is None and persistent and overall_witness is None:
            overall_witness = last_fail
    diag = {"epsilon_eta_table": table, "stages": stages}
    if all(e["outcome"] == "pass" for e in table):
        verdict = Verdict(HOLDS, diagnostics=diag)
    elif overall_witness is not None:
        verdict = Verdict(FAILS, witness=overall_witness, diagnostics=diag)
    else:
        verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
    return LscCertificate(property=property, mode="on_region", verdict=verdict,
                          epsilon_eta_table=table, witness=overall_witness)


def certify_near(f1: FnOracle, f2: FnOracle, xbar, property: str, scheme: SampleScheme,
                 delta0: float = 0.5, radii: int = 4, gap_tol: float = 5e-2,
                 eps_grid: Sequence[float] = DEFAULT_EPS_GRID, stages: int = 4) -> LscCertificate:
    """Certify a property near a point.

    The firm_quasiuniform property has a single-radius criterion: the
    quasiuniform coupling gap vanishes on some open ball.  The other
    properties are tested on a decreasing schedule of closed balls; the two
    smallest radii decide.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    if not (math.isfinite(f1.value(xbar)) and math.isfinite(f2.value(xbar))):
        raise InfiniteAtBase("certify_near needs finite values at the base point")
    deltas = [delta0 * 2.0 ** (-i) for i in range(radii)]
    if property == "firm_quasiuniform":
        entries = []
        witness = None
        for d in deltas:
            val, vd = firm_gap_quasi(f1, f2, Region.open_ball(xbar, d), scheme, stages=stages)
            entries.append({"delta": d, "gap": float(val), "verdict": vd.status})
            if witness is None and vd.diagnostics.get("arg_pair") is not None:
                witness = {"delta": d, "x1": vd.diagnostics["arg_pair"][0],
                           "x2": vd.diagnostics["arg_pair"][1], "gap": float(val)}
        diag = {"radii_table": entries, "criterion": "zero quasiuniform coupling gap on some ball"}
        if any(e["gap"] <= gap_tol for e in entries):
            verdict = Verdict(HOLDS, diagnostics=diag)
            witness = None
        elif all(e["gap"] > gap_tol for e in entries[-2:]):
            verdict = Verdict(FAILS, witness=witness, diagnostics=diag)
        else:
            verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
        return LscCertificate(property=property, mode="near_point", verdict=verdict,
                              epsilon_eta_table=entries, witness=witness)
    certs = [certify(f1, f2, Region.closed_ball(xbar, d), property, scheme,
                     eps_grid=eps_grid, stages=stages) for d in deltas]
    entries = [{"delta": d, "status": c.status} for d, c in zip(deltas, certs)]
    diag = {"radii_table": entries}
    small = certs[-2:]
    if all(c.status == HOLDS for c in small):
        verdict = Verdict(HOLDS, diagnostics=diag)
        witness = None
    elif all(c.status == FAILS for c in small):
        witness = small[-1].witness
        verdict = Verdict(FAILS, witness=witness, diagnostics=diag)
    else:
        witness = None
        verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
    return LscCertificate(property=property, mode="near_point", verdict=verdict,
                          epsilon_eta_table=entries, witness=witness)


# ---------------------------------------------------------------------------
# sufficient conditions
# ---------------------------------------------------------------------------

def sufficient_conditions(f1: FnOracle, f2: FnOracle, U: Region, scheme: SampleScheme,
                          tol: float = 1e-9, bound_threshold: float = 1e6,
                          stages: int = 4) -> list:
    """Numerically testable sufficient conditions and the property each one certifies.

    Compactness hypotheses are vacuous at desk scale (every sampled set is
    finite) and are recorded as trivially satisfied rather than tested.
    """
    cache = engine.LevelCache(f1, f2, scheme)
    out = []
    ld = cache.level(U, scheme.levels - 1, key="U")
    dom1 = ld.in_u & np.isfinite(ld.f1)
    dom2 = ld.in_u & np.isfinite(ld.f2)

    # constant partner on dom f1, minorized elsewhere
    if dom1.any():
        c = float(ld.f2[dom1].min())
        const_on_dom = bool(np.all(np.abs(ld.f2[dom1] - c) <= tol * max(1.0, abs(c))))
        minorized = bool(np.all(ld.f2[ld.in_u & ~dom1] >= c - tol)) if (ld.in_u & ~dom1).any() else True
        status = HOLDS if const_on_dom and minorized else FAILS
        wit = None if status == HOLDS else {"note": "partner not constant on the sampled domain"}
        out.append({"id": "constant_partner", "verdict": Verdict(status, witness=wit),
                    "certifies": "firm_uniform"})

    # singleton partner domain with f1 lower semicontinuous there
    if dom2.any():
        pts2 = ld.points[dom2]
        spread = float(np.abs(pts2 - pts2[0]).max()) if len(pts2) > 1 else 0.0
        singleton = spread <= tol
        lsc_ok = False
        if singleton:
            xhat = pts2[0]
            fx = f1.value(xhat)
            near = np.abs(ld.points - xhat).max(axis=1) < 1e-3
            lsc_ok = bool(np.all(ld.f1[near] >= fx - 1e-6)) and math.isfinite(fx)
        status = HOLDS if singleton and lsc_ok else FAILS
        wit = None if status == HOLDS else {"domain_spread": spread}
        out.append({"id": "singleton_partner_domain", "verdict": Verdict(status, witness=wit),
                    "certifies": "firm_uniform"})

    # uniformly continuous partner: modulus on sampled pairs shrinks to 0
    moduli = []
    for j in range(scheme.levels):
        ldj = cache.level(U, j, key="U")
        if not np.isfinite(ldj.f2[ldj.in_u]).all():
            moduli = None
            break
        vals = np.where(ldj.in_u, ldj.f2, np.nan)
        fin = np.where(np.isnan(vals), np.inf, vals)
        if isinstance(ldj.pset, ProductGrid):
            wmin = window_reduce(ldj.pset, fin, ldj.eta, take_min=True)
            wmax = window_reduce(ldj.pset, np.where(np.isnan(vals), -np.inf, vals), ldj.eta, take_min=False)
        else:
            wmin = window_reduce_flat(ldj.points, fin, ldj.eta, take_min=True)
            wmax = window_reduce_flat(ldj.points, np.where(np.isnan(vals), -np.inf, vals), ldj.eta, take_min=False)
        diff = (wmax - wmin)[ldj.in_u]
        moduli.append(float(diff[np.isfinite(diff)].max()) if np.isfinite(diff).any() else 0.0)
    if moduli is None:
        out.append({"id": "uniformly_continuous_partner", "verdict": Verdict(
            FAILS, witness={"note": "partner takes +inf on the region"}),
            "certifies": "firm_uniform", "modulus_trace": None})
    else:
        shrinks = moduli[-1] <= max(1e-6, 0.05 * (moduli[0] + 1e-300)) or moduli[-1] <= 1e-6
        status = HOLDS if shrinks else (INCONCLUSIVE if moduli[-1] < moduli[0] else FAILS)
        wit = None if status != FAILS else {"modulus": moduli[-1]}
        out.append({"id": "uniformly_continuous_partner", "verdict": Verdict(status, witness=wit),
                    "certifies": "firm_uniform", "modulus_trace": moduli})

    # bounded decoupled pairs (with sublevel compactness recorded as trivial)
    for variant, certifies in (("uniform", "firm_uniform"), ("quasi", "firm_quasiuniform")):
        sups = []
        wit_pair = None
        for j in range(scheme.levels):
            ldj = cache.level(U, j, key="U")
            if variant == "uniform":
                mask1 = ldj.in_u
                x2_in_u = True
            else:
                mask1 = ei_family_for(U, stages).last().contains(ldj.points)
                x2_in_u = False
            idx1, idx2 = engine.reduced_pairs(ldj, mask1, x2_in_u=x2_in_u)
            if len(idx1) == 0:
                continue
            # the pair reduction keeps the *smallest* partner value; the sup of
            # the decoupled sum needs the largest, so flip the sign of f2
            flip = engine.LevelData(ldj.level, ldj.eta, ldj.pset, ldj.points,
                                    ldj.f1, -ldj.f2, ldj.sum12, ldj.in_u)
            jdx1, jdx2 = engine.reduced_pairs(flip, mask1, x2_in_u=x2_in_u)
            if len(jdx1) == 0:
                continue
            vals = ldj.f1[jdx1] + ldj.f2[jdx2]
            k = int(np.argmax(vals))
            sups.append(float(vals[k]))
            wit_pair = {"x1": ldj.points[jdx1[k]].copy(), "x2": ldj.points[jdx2[k]].copy(),
                        "pair_sum": float(vals[k])}
        if not sups:
            verdict = Verdict(HOLDS, diagnostics={"note": "no admissible pairs"})
        elif sups[-1] > bound_threshold:
            verdict = Verdict(FAILS, witness=wit_pair, diagnostics={"sup_trace": sups})
        elif len(sups) >= 2 and sups[-1] > 4 * abs(sups[0]) + 1:
            verdict = Verdict(INCONCLUSIVE, diagnostics={"sup_trace": sups})
        else:
            verdict = Verdict(HOLDS, diagnostics={"sup_trace": sups})
        out.append({"id": f"bounded_decoupled_pairs_{variant}", "verdict": verdict,
                    "certifies": certifies,
                    "compactness": "trivially satisfied (finite sampling)"})
    return out


# ---------------------------------------------------------------------------
# relative (function vs set) versions
# ---------------------------------------------------------------------------

def _target_points(ld, omega: SetOracle, region: Region, require_in_u: bool, tol: float):
    inside = omega.member_mask(ld.points)
    if require_in_u:
        inside = inside & ld.in_u
    return ld.points[inside], np.where(inside)[0]


def certify_relative(f: FnOracle, omega: SetOracle, U: Region, property: str,
                     scheme: SampleScheme, eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
                     stages: int = 4, fail_margin: float = 1e-7,
                     tol: float = 1e-9) -> LscCertificate:
    """Certify lower semicontinuity of f relative to a set on U.

    The pair under test is (f, indicator of the set); the decoupled distance
    becomes dist(x, set), and the recoupling point must lie in the set (and
    within eps of x for the firm variants).  The projection oracle, when
    available, supplies the canonical recoupling candidate.
    """
    if property not in PROPERTIES:
        raise ValueError(f"unknown property {property!r}")
    f2 = indicator(omega)
    cache = engine.LevelCache(f, f2, scheme)
    quasi = property.endswith("quasiuniform") or property == "quasiuniform"
    firm = property.startswith("firm")
    family = ei_family_for(U, stages) if quasi else None

    probe = cache.level(U, scheme.levels - 1, key="U")
    if not np.isfinite(np.where(probe.in_u, probe.sum12, np.inf)).any():
        raise PreconditionFailed("dom f, the set, and the region have no sampled common point")

    from scipy.spatial import cKDTree

    table, overall_witness = [], None
    for eps in eps_grid:
        certified_eta = None
        last_fail = None
        excess_trace = []
        for j in range(scheme.levels):
            ld = cache.level(U, j, key="U")
            side = family.last().contains(ld.points) if quasi else ld.in_u
            cand = side & np.isfinite(ld.f1)
            if not cand.any():
                certified_eta = ld.eta
                break
            pts = ld.points[cand]
            tgt, tgt_idx = _target_points(ld, omega, U, require_in_u=not quasi, tol=tol)
            if quasi:
                # plain distance to the set
                if omega.dist is not None:
                    dists = omega.dist_to(pts)
                elif len(tgt):
                    dists, _ = cKDTree(tgt).query(pts, k=1, p=np.inf)
                else:
                    certified_eta = ld.eta
                    break
            else:
                # distance to the set within the region, via its sampled points
                # and region-respecting projections (an upper estimate)
                dists = np.full(len(pts), np.inf)
                if len(tgt):
                    dists, _ = cKDTree(tgt).query(pts, k=1, p=np.inf)
                if omega.project is not None:
                    proj = np.asarray(omega.project(pts), dtype=float)
                    ok = omega.member_mask(proj) & U.contains(proj)
                    d2 = np.where(ok, np.abs(proj - pts).max(axis=1), np.inf)
                    dists = np.minimum(dists, d2)
            adm = dists < ld.eta
            if not adm.any():
                certified_eta = ld.eta
                break
            xs = pts[adm]
            fx = ld.f1[cand][adm]
            # best achievable value of f over the admissible recoupling set
            best = np.full(len(xs), np.inf)
            if omega.project is not None:
                proj = np.asarray(omega.project(xs), dtype=float)
                ok = omega.member_mask(proj)
                if not quasi:
                    ok = ok & U.contains(proj)
                if firm:
                    ok = ok & (np.abs(proj - xs).max(axis=1) < eps)
                vals = np.where(ok, f(proj), np.inf)
                best = np.minimum(best, np.where(np.isnan(vals), np.inf, vals))
            if len(tgt):
                ftgt = ld.f1[tgt_idx]
                if firm:
                    tree = cKDTree(tgt)
                    groups = tree.query_ball_point(xs, r=np.nextafter(eps, 0), p=np.inf)
                    for i, ids in enumerate(groups):
                        if ids:
                            best[i] = min(best[i], float(ftgt[np.asarray(ids)].min()))
                else:
                    gbest = float(ftgt.min()) if len(ftgt) else np.inf
                    best = np.minimum(best, gbest)
            excess = best - (fx + eps)
            bad = excess >= 0
            if not bad.any():
                certified_eta = ld.eta
                break
            margin_bad = excess >= fail_margin * np.maximum(1.0, np.abs(fx))
            excess_trace.append(float(np.max(excess[margin_bad])) if margin_bad.any() else 0.0)
            if margin_bad.any():
                k = int(np.argmax(np.where(np.isinf(excess), 1e300, excess)))
                last_fail = {"x": xs[k].copy(), "f_x": float(fx[k]), "eps": eps,
                             "eta": ld.eta, "best_found": float(best[k]),
                             "excess": float(excess[k])}
            else:
                last_fail = None
        persistent = _persistent_failure(excess_trace) and last_fail is not None
        if firm and scheme.eta(scheme.levels - 1) >= eps:
            persistent = False
        entry = {"eps": eps, "certified_eta": certified_eta,
                 "outcome": "pass" if certified_eta is not None
                 else ("fail" if persistent else "unresolved"),
                 "excess_trace": excess_trace}
        table.append(entry)
        if certified_eta is None and persistent and overall_witness is None:
            overall_witness = last_fail
    diag = {"epsilon_eta_table": table}
    if all(e["outcome"] == "pass" for e in table):
        verdict = Verdict(HOLDS, diagnostics=diag)
    elif overall_witness is not None:
        verdict = Verdict(FAILS, witness=overall_witness, diagnostics=diag)
    else:
        verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
    return LscCertificate(property=property, mode="on_region", verdict=verdict,
                          epsilon_eta_table=table, witness=overall_witness)


def certify_relative_near(f: FnOracle, omega: SetOracle, xbar, property: str,
                          scheme: SampleScheme, delta0: float = 0.5, radii: int = 3,
                          **kw) -> LscCertificate:
    """Relative certification on a shrinking schedule of closed balls at xbar."""
    xbar = np.asarray(xbar, dtype=float).ravel()
    deltas = [delta0 * 2.0 ** (-i) for i in range(radii)]
    certs = [certify_relative(f, omega, Region.closed_ball(xbar, d), property, scheme, **kw)
             for d in deltas]
    entries = [{"delta": d, "status": c.status} for d, c in zip(deltas, certs)]
    small = certs[-2:]
    if all(c.status == HOLDS for c in small):
        verdict = Verdict(HOLDS, diagnostics={"radii_table": entries})
        witness = None
    elif all(c.status == FAILS for c in small):
        witness = small[-1].witness
        verdict = Verdict(FAILS, witness=witness, diagnostics={"radii_table": entries})
    else:
        witness = None
        verdict = Verdict(INCONCLUSIVE, diagnostics={"radii_table": entries})
    return LscCertificate(property=property, mode="near_point", verdict=verdict,
                          epsilon_eta_table=entries, witness=witness)


# ---------------------------------------------------------------------------
# pairs of sets
# ---------------------------------------------------------------------------

def _dist_to_intersection(o1: SetOracle, o2: SetOracle, xs: np.ndarray,
                          inter_samples: np.ndarray, tol: float,
                          ap_rounds: int = 60, region=None) -> np.ndarray:
    """Upper estimates of dist(x, set1 ∩ set2) for each query point.

    Combines the nearest sampled joint member with a per-point alternating
    projection run whose limit is accepted only when certified to lie in both
    sets within tol (and inside the region, when one is given).
    """
    from scipy.spatial import cKDTree

    out = np.full(len(xs), np.inf)
    if len(inter_samples):
        out, _ = cKDTree(inter_samples).query(xs, k=1, p=np.inf)
    if o1.project is not None and o2.project is not None and len(xs):
        z = np.asarray(xs, dtype=float).copy()
        for _ in range(ap_rounds):
            z = np.asarray(o2.project(np.asarray(o1.project(z))))
        good = o1.member_mask(z) & o2.member_mask(z)
        if o1.dist is not None and o2.dist is not None:
            good = good | ((o1.dist_to(z) <= tol) & (o2.dist_to(z) <= tol))
        if region is not None:
            good = good & region.contains(z)
        d = np.abs(z - xs).max(axis=1)
        out = np.where(good, np.minimum(out, d), out)
    return out


def _intersection_points(o1: SetOracle, o2: SetOracle, pts: np.ndarray, tol: float,
                         ap_rounds: int = 60) -> np.ndarray:
    """Sampled points of the intersection: joint members plus certified
    alternating-projection limits."""
    both = o1.member_mask(pts) & o2.member_mask(pts)
    found = [pts[both]]
    if o1.project is not None and o2.project is not None and len(pts):
        take = pts[:: max(1, len(pts) // 64)]
        z = take.copy()
        for _ in range(ap_rounds):
            z = np.asarray(o2.project(np.asarray(o1.project(z))))
        good = o1.member_mask(z) & o2.member_mask(z)
        if o1.dist is not None:
            good = good | ((o1.dist_to(z) <= tol) & (o2.dist_to(z) <= tol))
        found.append(z[good])
    pool = np.vstack([f for f in found if len(f)]) if any(len(f) for f in found) else np.empty((0, pts.shape[1]))
    if len(pool):
        pool = np.unique(np.round(pool, 12), axis=0)
    return pool


def certify_pair_of_sets(o1: SetOracle, o2: SetOracle, U: Region, firmness: str,
                         scheme: SampleScheme, stages: int = 4, hold_tol: float = 5e-2,
                         two_sided: bool = False, tol: float = 1e-9) -> LscCertificate:
    """Firmness certificate for a pair of sets on U.

    firmness 'uniform': limsup of dist(x, intersection-within-U) over points
    x of the first set in U whose distance to the second set (within U) goes
    to 0 must vanish.  firmness 'quasiuniform': x ranges over an essentially
    interior member and plain set distances are used.  two_sided instead
    takes x anywhere in U (or the member) with both set distances going to 0.
    Without projection oracles the intersection is only seen through joint
    sample membership, which is INCONCLUSIVE-prone.
    """
    if firmness not in ("uniform", "quasiuniform"):
        raise ValueError("firmness must be 'uniform' or 'quasiuniform'")
    f_ind = indicator(o1)
    cache = engine.LevelCache(f_ind, indicator(o2), scheme)
    quasi = firmness == "quasiuniform"
    family = ei_family_for(U, stages) if quasi else None
    probe = cache.level(U, scheme.levels - 1, key="U")
    inter_probe = _intersection_points(o1, o2, probe.points[probe.in_u], tol)
    degraded = len(inter_probe) == 0 and (o1.project is None or o2.project is None)

    from scipy.spatial import cKDTree

    # per level: -inf marks no admissible point (vacuous), +inf marks
    # admissible points with no reachable intersection (distance to the
    # empty set), finite values are the sampled supremum
    trace, witness = [], None
    for j in range(scheme.levels):
        ld = cache.level(U, j, key="U")
        side = family.last().contains(ld.points) if quasi else ld.in_u
        inter = _intersection_points(o1, o2, ld.points[ld.in_u], tol)
        if quasi:
            inter_all = inter
        else:
            keep = U.contains(inter) if len(inter) else np.empty(0, dtype=bool)
            inter_all = inter[keep] if len(inter) else inter
        if two_sided:
            cand_mask = side
            pts = ld.points[cand_mask]
            d1 = o1.dist_to(pts)
            d2 = o2.dist_to(pts)
            adm = (d1 < ld.eta) & (d2 < ld.eta)
        else:
            cand_mask = side & o1.member_mask(ld.points)
            pts = ld.points[cand_mask]
            if quasi:
                d2 = o2.dist_to(pts)
            else:
                in_u2 = ld.in_u & o2.member_mask(ld.points)
                if in_u2.any():
                    t2 = cKDTree(ld.points[in_u2])
                    d2, _ = t2.query(pts, k=1, p=np.inf)
                    if o2.dist is not None:
                        d2 = np.minimum(d2, o2.dist_to(pts))  # lower bound refined by oracle
                else:
                    d2 = o2.dist_to(pts)
            adm = d2 < ld.eta
        if not adm.any():
            trace.append(-math.inf)
            continue
        xs = pts[adm]
        dI = _dist_to_intersection(o1, o2, xs, inter_all, tol,
                                   region=None if quasi else U)
        if not np.isfinite(dI).any():
            trace.append(math.inf)
            k = int(np.argmin(d2[adm] if not two_sided else np.maximum(d1, d2)[adm]))
            witness = {"x": xs[k].copy(), "dist_to_intersection": math.inf, "eta": ld.eta}
            continue
        k = int(np.argmax(np.where(np.isfinite(dI), dI, -np.inf)))
        if not math.isfinite(dI[k]):
            k = int(np.argmax(dI))
        trace.append(float(dI.max()))
        witness = {"x": xs[k].copy(), "dist_to_intersection": float(dI[k]), "eta": ld.eta}
    diag = {"sup_trace": trace, "firmness": firmness, "two_sided": two_sided}
    if degraded:
        diag["note"] = ("no sampled intersection points and no projection oracles; "
                        "target distances are resolution-limited")
    last = trace[-1] if trace else -math.inf
    if last == -math.inf:
        diag["note"] = diag.get("note", "") + " no admissible points at the finest level " \
            "(supremum over an empty family is 0)"
        verdict = Verdict(HOLDS, diagnostics=diag)
        witness = None
    elif last == math.inf:
        verdict = Verdict(FAILS, witness=witness, diagnostics=diag)
    elif last <= hold_tol:
        verdict = Verdict(HOLDS, diagnostics=diag)
        witness = None
    elif degraded:
        verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
    elif len(trace) >= 2 and trace[-2] > hold_tol:
        verdict = Verdict(FAILS, witness=witness, diagnostics=diag)
    else:
        verdict = Verdict(INCONCLUSIVE, diagnostics=diag)
    return LscCertificate(property=f"set_pair_{firmness}", mode="on_region",
                          verdict=verdict, epsilon_eta_table=[], witness=witness)


def subtransversality_modulus(o1: SetOracle, o2: SetOracle, xbar, delta: float,
                              scheme: SampleScheme, ratio_cap: float = 1e3,
                              conv_tol: float = 5e-2, tol: float = 1e-9):
    """Sampled linear-error-bound modulus of a pair of sets at a common point.

    Returns (alpha estimate, Verdict): the supremum over sampled x in the
    delta-ball of dist(x, intersection) / max(dist(x, set1), dist(x, set2)),
    skipping points where numerator and denominator both vanish.  A ratio
    trace growing beyond ratio_cap yields FAILS (no finite modulus).
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    if not (o1.contains_point(xbar) and o2.contains_point(xbar)):
        raise BaseNotInIntersection("the base point must belong to both sets")
    from scipy.spatial import cKDTree

    U = Region.open_ball(xbar, delta)
    cache = engine.LevelCache(indicator(o1), indicator(o2), scheme)
    trace, arg = [], None
    for j in range(scheme.levels):
        ld = cache.level(U, j, key="U")
        pts = ld.points
        inter = _intersection_points(o1, o2, pts, tol)
        inter = np.vstack([inter, xbar[None, :]]) if len(inter) else xbar[None, :]
        d1 = o1.dist_to(pts)
        d2 = o2.dist_to(pts)
        den = np.maximum(d1, d2)
        dI = _dist_to_intersection(o1, o2, pts, inter, tol)
        # skip only genuinely degenerate points (both distances below tol);
        # a tiny positive denominator against a solid numerator is exactly
        # how a missing linear bound shows up
        keep = (den > 0) & ~((den < tol) & (dI < tol))
        if not keep.any():
            trace.append(0.0)
            continue
        ratio = dI[keep] / den[keep]
        k = int(np.argmax(ratio))
        trace.append(float(ratio[k]))
        arg = pts[keep][k].copy()
    alpha = max(trace) if trace else 0.0
    diag = {"ratio_trace": trace, "arg": arg}
    if alpha > ratio_cap:
        diag["note"] = f"ratio exceeded the cap {ratio_cap:g}: no usable linear modulus"
        return alpha, Verdict(FAILS, witness={"x": arg, "ratio": alpha}, diagnostics=diag)
    if len(trace) >= 2 and abs(trace[-1] - trace[-2]) <= conv_tol * max(1.0, trace[-1]):
        return alpha, Verdict(HOLDS, diagnostics=diag)
    return alpha, Verdict(INCONCLUSIVE, diagnostics=diag)
