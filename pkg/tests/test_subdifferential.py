import numpy as np
import pytest

from decoupling_lab import FnOracle, Region, SampleScheme
from decoupling_lab.dualsets import DualSet, box_set, dist_to_sum, point_set, ray_set
from decoupling_lab.errors import NotInBox
from decoupling_lab.gallery import parabola_halfplane_pair
from decoupling_lab.subdifferential import (
    SmoothMap,
    SubgradientQuery,
    box_normal_cone,
    coderivative_smooth,
    is_subgradient,
    normal_vector_check,
)

ABS = FnOracle(1, lambda p: np.abs(p[:, 0]))
NEG_ABS = FnOracle(1, lambda p: -np.abs(p[:, 0]))


class TestIsSubgradient:
    def test_abs_kink_interior_slope(self):
        assert is_subgradient(SubgradientQuery(ABS, [0.0], [0.5])).status == "HOLDS"

    def test_concave_kink_has_no_subgradients(self):
        v = is_subgradient(SubgradientQuery(NEG_ABS, [0.0], [0.0]))
        assert v.status == "FAILS"
        assert abs(abs(v.witness["direction"][0]) - 1.0) < 1e-12

    def test_epigraph_restricted_linear(self):
        f1, _ = parabola_halfplane_pair()
        t, a = 0.25, 2.0
        q = SubgradientQuery(f1, [t, t * t], [2 * a * t - 1, -a])
        assert is_subgradient(q).status == "HOLDS"

    def test_convex_oracle_outputs_pass_membership(self):
        # every dual emitted by a convex subgradient oracle passes the test
        f1, f2 = parabola_halfplane_pair()
        for t in (0.1, 0.3):
            for piece in f1.subgrad([t, t * t]).pieces if hasattr(f1.subgrad([t, t * t]), "pieces") else [f1.subgrad([t, t * t])]:
                for v in piece.sample(alphas=(0.0, 1.0)):
                    assert is_subgradient(SubgradientQuery(f1, [t, t * t], v)).status != "FAILS"

    def test_differentiable_sum_rule_consistency(self):
        # adding a smooth tilt shifts every certified subgradient by the gradient
        g = FnOracle(1, lambda p: 0.3 * p[:, 0])
        total = FnOracle(1, lambda p: ABS(p) + g(p))
        for v in (-1.0, 0.0, 1.0):
            base = is_subgradient(SubgradientQuery(ABS, [0.0], [v]))
            shifted = is_subgradient(SubgradientQuery(total, [0.0], [v + 0.3]))
            assert base.status == shifted.status

    def test_fermat_rule_at_minimizer(self):
        q = FnOracle(1, lambda p: (p[:, 0] - 0.2) ** 2)
        assert is_subgradient(SubgradientQuery(q, [0.2], [0.0])).status != "FAILS"


class TestBoxNormalCone:
    def test_interior_point_trivial_cone(self):
        c = box_normal_cone([-1.0], [1.0], [0.0])
        assert c.lo[0] == 0.0 and c.hi[0] == 0.0

    def test_upper_face_nonnegative_ray(self):
        c = box_normal_cone([-1.0], [1.0], [1.0])
        assert c.lo[0] == 0.0 and c.hi[0] == np.inf

    def test_corner_sign_pattern(self):
        c = box_normal_cone([-1.0, -1.0], [1.0, 1.0], [1.0, -1.0])
        assert c.hi[0] == np.inf and c.lo[0] == 0.0
        assert c.lo[1] == -np.inf and c.hi[1] == 0.0

    def test_outside_rejected(self):
        with pytest.raises(NotInBox):
            box_normal_cone([-1.0], [1.0], [1.5])

    def test_generators_pass_inequality_on_sampled_points(self):
        # brute-force check: <v, x - xbar> <= 0 over 1000 sampled box points
        rng = np.random.default_rng(0)
        lo, hi = np.array([-1.0, -1.0]), np.array([1.0, 1.0])
        for xbar in ([1.0, -1.0], [1.0, 0.3], [0.0, 0.0], [-1.0, 1.0]):
            cone = box_normal_cone(lo, hi, xbar)
            pts = rng.uniform(lo, hi, (1000, 2))
            for v in cone.sample(alphas=(0.0, 1.0, 3.0)):
                assert np.all((pts - np.asarray(xbar)) @ v <= 1e-9)

    def test_generators_pass_limsup_membership(self):
        from decoupling_lab.gallery import box_oracle

        omega = box_oracle([-1.0, -1.0], [1.0, 1.0])
        cone = box_normal_cone([-1.0, -1.0], [1.0, 1.0], [1.0, -1.0])
        for v in cone.sample(alphas=(0.5, 2.0)):
            assert normal_vector_check(omega, [1.0, -1.0], v).status != "FAILS"


class TestDistToSum:
    def test_orthogonal_halfline_cones_leave_gap(self):
        down = box_set([0.0, -np.inf], [0.0, 0.0])
        up = box_set([0.0, 0.0], [0.0, np.inf])
        assert dist_to_sum([1.0, 0.0], down, up) == pytest.approx(1.0, abs=1e-12)

    def test_zero_in_any_cone_pair(self):
        down = box_set([0.0, -np.inf], [0.0, 0.0])
        up = box_set([0.0, 0.0], [0.0, np.inf])
        assert dist_to_sum([0.0, 0.0], down, up) == pytest.approx(0.0, abs=1e-12)

    def test_parabola_normal_split_is_exact(self):
        x = 0.25
        n1 = ray_set([0.0, 0.0], [2 * x, -1.0])
        n2 = ray_set([0.0, 0.0], [0.0, 1.0])
        assert dist_to_sum([1.0, 0.0], n1, n2) == pytest.approx(0.0, abs=1e-12)

    def test_matches_sampled_enumeration(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            v = rng.uniform(-2, 2, 2)
            lo = np.minimum(rng.uniform(-2, 2, 2), 0)
            hi = np.maximum(rng.uniform(-2, 2, 2), 0)
            box = box_set(lo, hi)
            pt = point_set(rng.uniform(-1, 1, 2))
            exact = dist_to_sum(v, box, pt)
            # dense enumeration of the box
            g = np.stack(np.meshgrid(np.linspace(lo[0], hi[0], 81),
                                     np.linspace(lo[1], hi[1], 81), indexing="ij"), axis=-1)
            members = g.reshape(-1, 2) + pt.pieces[0].base
            brute = np.abs(v - members).sum(axis=1).min()
            assert exact <= brute + 1e-12
            assert exact >= brute - 0.05  # enumeration is only 81 points wide


class TestCoderivative:
    def test_linear_map_transpose(self):
        A = np.array([[1.0, 2.0], [0.0, 3.0]])
        F = SmoothMap(2, 2, lambda p: p @ A.T, jacobian=lambda x: A)
        ys = np.array([1.0, 1.0])
        assert np.allclose(coderivative_smooth(F, [0.3, -0.2], ys), A.T @ ys)

    def test_parabola_lift_finite_difference(self):
        F = SmoothMap(1, 2, lambda p: np.stack([p[:, 0], p[:, 0] ** 2], axis=1))
        out = coderivative_smooth(F, [0.5], [1.0, 1.0])
        assert out[0] == pytest.approx(2.0, abs=1e-6)

    def test_identity(self):
        F = SmoothMap(3, 3, lambda p: p)
        ys = np.array([0.3, -1.0, 2.0])
        assert np.allclose(coderivative_smooth(F, [0.0, 0.0, 0.0], ys), ys, atol=1e-6)

    def test_fd_agrees_with_exact_jacobian(self):
        def ev(p):
            return np.stack([np.sin(p[:, 0]), p[:, 0] ** 3], axis=1)

        F_fd = SmoothMap(1, 2, ev)
        F_ex = SmoothMap(1, 2, ev, jacobian=lambda x: np.array([[np.cos(x[0])], [3 * x[0] ** 2]]))
        ys = np.array([0.7, -0.2])
        a = coderivative_smooth(F_fd, [0.4], ys)
        b = coderivative_smooth(F_ex, [0.4], ys)
        assert np.abs(a - b).max() < 1e-6 * max(1.0, np.abs(b).max())
