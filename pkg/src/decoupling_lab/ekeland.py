"""Exact variational-principle selection on finite clouds, the decoupled
penalized search, and quasiuniform minimality/stationarity classifiers."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .decoupling import quasiuniform_inf
from .errors import (
    AllInfinite,
    GammaSearchFailed,
    InfiniteAtBase,
    NotBoundedBelow,
    QuasiuniformEpsMinNotCertified,
)
from .geometry import Region, cheb
from .oracles import FnOracle
from .sampling import SampleScheme, sample_region
from .verdicts import FAILS, HOLDS, INCONCLUSIVE, Verdict

__all__ = ["EkelandResult", "PenalizedDecoupled", "ekeland_on_cloud", "penalized_search",
           "classify_min", "classify_stationary"]


@dataclass
class EkelandResult:
    """A point satisfying the two variational-principle conditions exactly on a cloud.

    (i)  f(xhat) + eps * d(xhat, base) <= f(base)
    (ii) f(xhat) <  f(x)    + eps * d(x, xhat)   for every other cloud point x
    """

    xhat: np.ndarray
    index: int
    value: float
    descent_margin: float
    epsilon: float
    base: np.ndarray
    hops: int


def ekeland_on_cloud(points: np.ndarray, values: np.ndarray, base_index: int,
                     epsilon: float) -> EkelandResult:
    """Iterated strict-improvement selection on a finite cloud.

    From the base, repeatedly move to the violator of condition (ii) with the
    least value (ties by lexicographic point order); every move strictly
    decreases the value, so the iteration terminates, and the hop distances
    telescope into condition (i).  Both conditions are exact (no tolerance).
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    vals = np.asarray(values, dtype=float).ravel()
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if not np.isfinite(vals).any():
        raise AllInfinite("every cloud value is +inf")
    if not math.isfinite(vals[base_index]):
        raise InfiniteAtBase("base point must have a finite value")
    cur = int(base_index)
    hops = 0
    order = np.lexsort(pts.T[::-1])  # lexicographic tie-break, fixed once
    rank = np.empty(len(pts), dtype=int)
    rank[order] = np.arange(len(pts))
    while True:
        d = np.abs(pts - pts[cur]).max(axis=1)
        lhs = vals + epsilon * d
        viol = (lhs <= vals[cur]) & (d > 0)
        if not viol.any():
            break
        cand = np.where(viol)[0]
        best_val = vals[cand].min()
        ties = cand[vals[cand] == best_val]
        cur = int(ties[np.argmin(rank[ties])])
        hops += 1
    d_base = float(np.abs(pts[cur] - pts[base_index]).max())
    margin = float(vals[base_index] - vals[cur] - epsilon * d_base)
    return EkelandResult(xhat=pts[cur].copy(), index=cur, value=float(vals[cur]),
                         descent_margin=margin, epsilon=epsilon,
                         base=pts[base_index].copy(), hops=hops)


@dataclass
class PenalizedDecoupled:
    """The doubled-variable penalized objective used by the decoupled search:

    f1(u1) + f2(u2) + gamma * d(u1, u2) + alpha * d((u1,u2), (anchor,anchor))^2.
    """

    f1: FnOracle
    f2: FnOracle
    gamma: float
    alpha: float
    anchor: np.ndarray

    def coupled(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        d12 = np.abs(u1 - u2).max(axis=1)
        return self.f1(u1) + self.f2(u2) + self.gamma * d12

    def __call__(self, u1: np.ndarray, u2: np.ndarray) -> np.ndarray:
        a = np.asarray(self.anchor, dtype=float)
        dc = np.maximum(np.abs(u1 - a).max(axis=1), np.abs(u2 - a).max(axis=1))
        return self.coupled(u1, u2) + self.alpha * dc**2


def _ball_points(xbar: np.ndarray, radius: float, closed: bool = True,
                 pair_budget: int = 250_000) -> np.ndarray:
    """Compact deterministic sampling of a max-norm ball whose square fits the
    product-cloud budget: uniform axis values, a few geometric layers toward
    the faces, and the centre itself."""
    d = len(xbar)
    per_axis = max(7, int(round(pair_budget ** (1.0 / (2 * d)))) - 9)
    axes = []
    for a in range(d):
        c, r = xbar[a], radius
        vals = np.linspace(c - r, c + r, per_axis)
        k = 2.0 ** -np.arange(1.0, 5.0)
        vals = np.concatenate([vals, c + r * (1 - k), c - r * (1 - k), [c]])
        vals = np.unique(vals)
        if not closed:
            vals = vals[(vals > c - r) & (vals < c + r)]
        axes.append(vals)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _geometric_extrapolate(trace) -> float:
    """Richardson-style limit estimate for a geometrically converging trace.

    Sampled decoupled infima often approach their limit like c*r^j; the
    extrapolated limit corrects the one-sided bias of the last level.  Falls
    back to the last value when the increments do not look geometric.
    """
    fin = [t for t in trace if math.isfinite(t)]
    if len(fin) < 3:
        return fin[-1] if fin else math.inf
    d1 = fin[-1] - fin[-2]
    d0 = fin[-2] - fin[-3]
    if abs(d0) < 1e-300:
        return fin[-1]
    r = d1 / d0
    if 0.0 < r < 0.95:
        return fin[-1] + d1 * r / (1.0 - r)
    return fin[-1]


def classify_min(f1: FnOracle, f2: FnOracle, xbar, eps: float, delta: float,
                 scheme: SampleScheme, region: Optional[Region] = None,
                 stages: int = 4, tol: float = 1e-9) -> Verdict:
    """Quasiuniform eps-minimum test: value at xbar < quasiuniform infimum + eps.

    region defaults to the open delta-ball at xbar.  The strict inequality is
    equivalent to: at some coupling distance eta, no admissible decoupled
    pair dips to value - eps or below; the test scans the trace of the
    largest essentially interior member for such a level (a robust criterion,
    unlike comparing against the biased last trace value).  With eps = 0 the
    test becomes local quasiuniform minimality: equality of the value and the
    (extrapolated) quasiuniform infimum within tol.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    value = f1.value(xbar) + f2.value(xbar)
    if not math.isfinite(value):
        raise InfiniteAtBase("classify_min needs a finite value at xbar")
    U = region if region is not None else Region.open_ball(xbar, delta)
    q, qv = quasiuniform_inf(f1, f2, U, scheme, stages=stages)
    trace = [t for t in qv.diagnostics.get("trace", [float(q)])]
    best = max((t for t in trace), default=float(q))
    qf = _geometric_extrapolate(trace) if math.isfinite(float(q)) else float(q)
    diag = {"value": value, "quasiuniform_inf": float(q),
            "quasiuniform_inf_extrapolated": qf, "eps": eps,
            "margin": (best + eps) - value, "inner_verdict": qv.to_json()}
    if eps == 0:
        if abs(value - qf) <= tol * max(1.0, abs(value)):
            return Verdict(HOLDS, diagnostics=diag)
        if value > qf + tol:
            return Verdict(FAILS, witness={"value": value, "quasiuniform_inf": qf,
                                           "pair": qv.diagnostics.get("arg_pair")}, diagnostics=diag)
        return Verdict(INCONCLUSIVE, diagnostics=diag)
    if any(t > value - eps for t in trace[-2:]):
        return Verdict(HOLDS, diagnostics=diag)
    # every level admits pairs at or below value - eps; a persistent shortfall
    # is a counterexample, a shrinking one is unresolved resolution
    gaps = [(value - eps) - t for t in trace if math.isfinite(t)]
    witness = {"value": value, "quasiuniform_inf": float(q),
               "pair": qv.diagnostics.get("arg_pair")}
    if gaps and (len(gaps) < 2 or gaps[-1] > 0.75 * gaps[-2]) and gaps[-1] > tol:
        return Verdict(FAILS, witness=witness, diagnostics=diag)
    return Verdict(INCONCLUSIVE, witness=None, diagnostics=diag)


def classify_stationary(f1: FnOracle, f2: FnOracle, xbar, scheme: SampleScheme,
                        eps_grid=(1.0, 0.3, 0.1), delta0: float = 0.25,
                        delta_stages: int = 3, quotient_fail: float = 1e-4) -> Verdict:
    """Quasiuniform stationarity test at xbar.

    For each eps in the grid, the two smallest tested radii delta must make
    xbar a quasiuniform (eps*delta)-minimum on the delta-ball.  A sampled
    difference-quotient check of f1+f2 (plain stationarity, which the
    quasiuniform notion implies) backs the FAILS branch with a witness.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    value = f1.value(xbar) + f2.value(xbar)
    if not math.isfinite(value):
        raise InfiniteAtBase("classify_stationary needs a finite value at xbar")
    deltas = [delta0 * 2.0 ** (-i) for i in range(delta_stages)]
    table = {}
    ok = True
    witness = None
    for eps in eps_grid:
        row = []
        for delta in deltas:
            v = classify_min(f1, f2, xbar, eps * delta, delta, scheme)
            row.append(v.status)
            if v.status == FAILS and delta <= deltas[-2]:
                ok = False
                witness = {"eps": eps, "delta": delta, **(v.witness or {})}
        table[eps] = row
    # plain stationarity of the sum via difference quotients
    from .subdifferential import SubgradientQuery, is_subgradient

    sum_fn = FnOracle(f1.dim, lambda p: f1(p) + f2(p), name="sum")
    quot = is_subgradient(SubgradientQuery(sum_fn, xbar, np.zeros(f1.dim)),
                          tol=quotient_fail, fail_margin=quotient_fail)
    diag = {"eps_delta_table": {str(k): v for k, v in table.items()},
            "difference_quotient": quot.to_json()}
    if quot.status == FAILS:
        return Verdict(FAILS, witness=quot.witness, diagnostics=diag)
    if not ok:
        return Verdict(FAILS, witness=witness, diagnostics=diag)
    statuses = [s for row in table.values() for s in row[-2:]]
    if all(s == HOLDS for s in statuses) and quot.status == HOLDS:
        return Verdict(HOLDS, diagnostics=diag)
    return Verdict(INCONCLUSIVE, diagnostics=diag)


def penalized_search(f1: FnOracle, f2: FnOracle, xbar, eps: float, delta: float,
                     eta: float, scheme: SampleScheme,
                     gamma_cap_doublings: int = 20, bound_threshold: float = 1e9):
    """Decoupled penalized search around a quasiuniform eps-minimum.

    Picks eps' < eps still certified, a radius rho in (delta*eps'/eps, delta),
    the quadratic anchoring weight alpha = eps'/rho^2, and a coupling weight
    gamma (doubling from c/eta) so that sampled pairs closer than c/gamma have
    decoupled sum above value - eps'; then runs the exact cloud selection for
    the penalized objective with slope 2*(eps/delta - eps'/rho) on the sampled
    product ball and verifies the proximity/descent conditions and the slope
    bound 2*eps/delta on the samples.

    Returns a dict with gamma, xhat1, xhat2, the checked conditions, and the
    slope-bound verdict.
    """
    xbar = np.asarray(xbar, dtype=float).ravel()
    value = f1.value(xbar) + f2.value(xbar)
    if not math.isfinite(value):
        raise InfiniteAtBase("penalized_search needs a finite value at xbar")
    # boundedness below on the delta-ball, checked by sampling
    ball_pts = _ball_points(xbar, delta, closed=False)
    v1 = f1(ball_pts)
    v2 = f2(ball_pts)
    m1, m2 = float(v1.min()), float(v2.min())
    if min(m1, m2) < -abs(bound_threshold):
        raise NotBoundedBelow("a function falls below the boundedness threshold on the ball")

    # certified smaller eps'
    cm = classify_min(f1, f2, xbar, eps, delta, scheme)
    if cm.status == FAILS:
        raise QuasiuniformEpsMinNotCertified("xbar is not a quasiuniform eps-minimum at the sampled resolution")
    qf = cm.diagnostics["quasiuniform_inf"]
    slack = qf + eps - value  # > 0 when certified
    eps_p = eps - 0.5 * min(eps, max(slack, 0.0))
    if not (0 < eps_p < eps):
        eps_p = 0.5 * eps
    rho = 0.5 * (delta * eps_p / eps + delta)
    alpha = eps_p / rho**2
    xi = 2.0 * (eps / delta - eps_p / rho)

    # proof constant c from the sampled decoupled lower bound on the ball
    c = value - (m1 + m2) + 1.0

    # cloud on the closed product rho-ball
    P = _ball_points(xbar, rho, closed=True)
    n = len(P)
    w1 = f1(P)
    w2 = f2(P)
    sum_grid = w1[:, None] + w2[None, :]
    d12 = np.abs(P[:, None, :] - P[None, :, :]).max(axis=2)

    # gamma by doubling until pairs closer than c/gamma have sum > value - eps'
    gamma = c / eta
    ok_gamma = False
    for _ in range(gamma_cap_doublings + 1):
        bad = (d12 < c / gamma) & (sum_grid <= value - eps_p)
        if not bad.any():
            ok_gamma = True
            break
        gamma *= 2.0
    if not ok_gamma:
        raise GammaSearchFailed(f"no admissible coupling weight below 2^{gamma_cap_doublings} * c/eta")

    pen = PenalizedDecoupled(f1, f2, gamma, alpha, xbar)
    dc = np.maximum(np.abs(P - xbar).max(axis=1)[:, None], np.abs(P - xbar).max(axis=1)[None, :])
    phi_hat = sum_grid + gamma * d12 + alpha * dc**2
    base_flat = int(np.argmax((np.abs(P - xbar).max(axis=1) == 0)))
    base_index = base_flat * n + base_flat

    cloud = np.concatenate([np.repeat(P, n, axis=0), np.tile(P, (n, 1))], axis=1)
    res = ekeland_on_cloud(cloud, phi_hat.ravel(), base_index, xi)
    i1, i2 = divmod(res.index, n)
    xhat1, xhat2 = P[i1].copy(), P[i2].copy()

    # verify the proximity and descent conditions exactly on the samples
    d_pair = float(d12[i1, i2])
    d_center = float(max(np.abs(xhat1 - xbar).max(), np.abs(xhat2 - xbar).max()))
    phi_g = sum_grid + gamma * d12
    cond_center = bool(d_center < rho)
    cond_pair = bool(d_pair < eta)
    cond_descent = bool(phi_g[i1, i2] <= value)
    # sampled slope of the coupled objective around (xhat1, xhat2)
    dist_to_hat = np.maximum(np.abs(P[:, None, :] - xhat1).max(axis=2),
                             np.abs(P[None, :, :] - xhat2).max(axis=2))
    mask = dist_to_hat > 0
    with np.errstate(invalid="ignore"):
        slopes = (phi_g[i1, i2] - phi_g) / np.where(mask, dist_to_hat, 1.0)
    slopes = np.where(mask & np.isfinite(phi_g[i1, i2] - phi_g), slopes, -np.inf)
    slope = float(slopes.max()) if mask.any() else -math.inf
    bound = 2.0 * eps / delta
    diag = {"gamma": gamma, "alpha": alpha, "rho": rho, "eps_prime": eps_p, "xi": xi,
            "c": c, "slope": slope, "slope_bound": bound, "cloud_points": n * n,
            "d_pair": d_pair, "d_center": d_center, "ekeland_hops": res.hops}
    ok = cond_center and cond_pair and cond_descent and slope < bound
    verdict = Verdict(HOLDS, diagnostics=diag) if ok else Verdict(
        FAILS, witness={"xhat1": xhat1, "xhat2": xhat2, "slope": slope,
                        "conditions": [cond_center, cond_pair, cond_descent]},
        diagnostics=diag)
    return {"gamma": gamma, "xhat1": xhat1, "xhat2": xhat2, "alpha": alpha, "rho": rho,
            "eps_prime": eps_p, "slope": slope, "slope_bound": bound,
            "conditions": {"within_rho": cond_center, "pair_within_eta": cond_pair,
                           "descent": cond_descent},
            "slope_bound_check": verdict}
