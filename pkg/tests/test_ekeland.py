import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from decoupling_lab import FnOracle, Region, SampleScheme, constant_fn
from decoupling_lab.ekeland import (
    classify_min,
    classify_stationary,
    ekeland_on_cloud,
    penalized_search,
)
from decoupling_lab.errors import AllInfinite
from decoupling_lab.gallery import parabola_halfplane_pair, step_pair


def brute_force_conditions(pts, vals, base, eps, res):
    d_base = np.abs(pts[res.index] - pts[base]).max()
    if not (vals[res.index] + eps * d_base <= vals[base]):
        return False
    d = np.abs(pts - pts[res.index]).max(axis=1)
    other = np.arange(len(pts)) != res.index
    return bool(np.all(vals[res.index] < vals[other] + eps * d[other]))


class TestCloudSelection:
    def test_single_point_cloud(self):
        res = ekeland_on_cloud(np.array([[0.3, 0.7]]), np.array([2.0]), 0, 1.0)
        assert res.index == 0 and res.hops == 0

    def test_three_point_chain(self):
        pts = np.array([[0.0], [1.0], [2.0]])
        vals = np.array([3.0, 1.0, 0.0])
        res = ekeland_on_cloud(pts, vals, 0, 0.5)
        assert res.xhat[0] == 2.0
        assert brute_force_conditions(pts, vals, 0, 0.5, res)

    def test_constant_values_stay_at_base(self):
        pts = np.array([[0.0], [0.5], [1.0]])
        vals = np.zeros(3)
        res = ekeland_on_cloud(pts, vals, 1, 0.3)
        assert res.index == 1

    def test_all_infinite_rejected(self):
        with pytest.raises(AllInfinite):
            ekeland_on_cloud(np.array([[0.0]]), np.array([np.inf]), 0, 1.0)

    def test_never_exceeds_base_value(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = rng.integers(1, 40)
            pts = rng.uniform(-1, 1, (n, 2))
            vals = rng.uniform(-3, 3, n)
            res = ekeland_on_cloud(pts, vals, 0, float(rng.uniform(0.05, 2)))
            assert res.value <= vals[0]

    @given(st.integers(1, 60), st.integers(1, 3), st.floats(0.01, 4.0),
           st.integers(0, 10_000))
    @settings(max_examples=80, deadline=None)
    def test_exact_conditions_random_clouds(self, n, d, eps, seed):
        rng = np.random.default_rng(seed)
        pts = rng.uniform(-2, 2, (n, d))
        vals = rng.uniform(-5, 5, n)
        vals[rng.random(n) < 0.2] = np.inf
        finite = np.where(np.isfinite(vals))[0]
        if len(finite) == 0:
            return
        base = int(finite[0])
        res = ekeland_on_cloud(pts, vals, base, eps)
        assert brute_force_conditions(pts, vals, base, eps, res)


class TestClassifiers:
    def setup_method(self):
        self.scheme = SampleScheme(levels=8)
        self.zero = constant_fn(1, 0.0)

    def test_quadratic_minimum(self):
        q = FnOracle(1, lambda p: 0.5 * p[:, 0] ** 2)
        assert classify_min(q, self.zero, [0.0], 0.01, 0.5, self.scheme).status == "HOLDS"

    def test_step_pair_margin_on_right_window(self):
        f1, f2 = step_pair()
        v = classify_min(f1, f2, [0.0], 0.05, 0.5, self.scheme,
                         region=Region.box([0.0], [0.45]))
        assert v.status == "HOLDS"
        assert v.diagnostics["margin"] >= 1.0

    def test_linear_slope_is_not_a_minimum(self):
        lin = FnOracle(1, lambda p: p[:, 0])
        v = classify_min(lin, self.zero, [0.0], 0.001, 0.25, self.scheme)
        assert v.status == "FAILS"

    def test_parabola_pair_quasiuniform_min(self):
        f1, f2 = parabola_halfplane_pair()
        sch = SampleScheme(levels=13, max_total_points=60_000)
        assert classify_min(f1, f2, [0.0, 0.0], 0.01, 0.5, sch).status == "HOLDS"

    def test_stationary_quadratic(self):
        q = FnOracle(1, lambda p: 0.5 * p[:, 0] ** 2)
        assert classify_stationary(q, self.zero, [0.0], self.scheme).status == "HOLDS"

    def test_stationary_linear_fails(self):
        lin = FnOracle(1, lambda p: p[:, 0])
        assert classify_stationary(lin, self.zero, [0.0], self.scheme).status == "FAILS"

    def test_minimum_implies_stationary_on_gallery(self):
        q = FnOracle(1, lambda p: (p[:, 0] - 0.0) ** 2)
        vmin = classify_min(q, self.zero, [0.0], 0.01, 0.25, self.scheme)
        vstat = classify_stationary(q, self.zero, [0.0], self.scheme)
        assert vmin.status == "HOLDS" and vstat.status == "HOLDS"


class TestPenalizedSearch:
    def test_quadratic_anchor_exact(self):
        q = FnOracle(1, lambda p: 0.5 * p[:, 0] ** 2)
        out = penalized_search(q, q, [0.0], eps=0.1, delta=0.4, eta=0.05,
                               scheme=SampleScheme(levels=6))
        assert np.allclose(out["xhat1"], 0.0) and np.allclose(out["xhat2"], 0.0)
        assert all(out["conditions"].values())
        assert out["slope_bound_check"].status == "HOLDS"

    def test_step_pair_interior_minimum(self):
        f1, f2 = step_pair()
        out = penalized_search(f1, f2, [0.5], eps=0.1, delta=0.4, eta=0.05,
                               scheme=SampleScheme(levels=6))
        assert all(out["conditions"].values())
        assert out["slope"] < 2 * 0.1 / 0.4
        assert out["slope_bound_check"].status == "HOLDS"

    def test_parabola_pair_at_origin(self):
        f1, f2 = parabola_halfplane_pair()
        out = penalized_search(f1, f2, [0.0, 0.0], eps=0.05, delta=0.5, eta=0.1,
                               scheme=SampleScheme(levels=9, max_total_points=50_000))
        assert all(out["conditions"].values())
        d_pair = np.abs(out["xhat1"] - out["xhat2"]).max()
        assert d_pair < 0.1
        assert out["slope_bound_check"].status == "HOLDS"

    def test_slope_verified_by_brute_force(self):
        f1, f2 = step_pair()
        out = penalized_search(f1, f2, [0.5], eps=0.1, delta=0.4, eta=0.05,
                               scheme=SampleScheme(levels=6))
        gamma, rho = out["gamma"], out["rho"]
        xh1, xh2 = out["xhat1"], out["xhat2"]
        # independent dense scan of the coupled objective over the product ball
        g = np.linspace(0.5 - rho, 0.5 + rho, 121)
        U1, U2 = np.meshgrid(g, g, indexing="ij")
        pts1 = U1.ravel()[:, None]
        pts2 = U2.ravel()[:, None]
        phi = f1(pts1) + f2(pts2) + gamma * np.abs(pts1 - pts2).ravel()
        phi_hat_val = (f1(xh1[None, :]) + f2(xh2[None, :])
                       + gamma * np.abs(xh1 - xh2).max())[0]
        dist = np.maximum(np.abs(pts1 - xh1).ravel(), np.abs(pts2 - xh2).ravel())
        ok = dist > 0
        slope = np.max((phi_hat_val - phi[ok]) / dist[ok])
        assert slope < 2 * 0.1 / 0.4 + 1e-9
