import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from entroflow.entropy import (
    A_p,
    B_np,
    ConstantsRequest,
    K_npw,
    cal_H_p,
    dirichlet_p,
    entropy_p,
    fisher_info,
    h_p,
    lambda_np,
    production_p,
    rate_4_over_pK,
)
from entroflow.errors import DomainError, UsageError
from entroflow.field import SpectralField, field_grid, gradient_sq_norm, l2_distance_to_one

P_VALUES = [1.0, 1.1, 1.5, 1.9, 2.0]


def grid_of(modes, N, d=1, quad_order=None):
    return field_grid(SpectralField.from_modes(modes, d, N), quad_order)


class TestEntropy:
    @pytest.mark.parametrize("p", P_VALUES)
    def test_constant_is_zero(self, p):
        assert entropy_p(grid_of({}, 2), p) == 0.0

    def test_p2_is_l2_distance(self):
        f = SpectralField.from_modes({(1,): 0.2, (4,): 0.1}, 1, 4)
        assert entropy_p(field_grid(f), 2.0) == pytest.approx(l2_distance_to_one(f) ** 2, rel=1e-12)

    def test_small_mode_p1(self):
        assert entropy_p(grid_of({(2,): 0.1}, 2, quad_order=60), 1.0) == pytest.approx(0.005, abs=5e-4)

    def test_continuity_at_p1(self):
        g = grid_of({(2,): 0.2, (3,): 0.05, (4,): 0.05}, 4, quad_order=60)
        e1 = entropy_p(g, 1.0)
        assert abs(entropy_p(g, 1 + 1e-5) - e1) < 1e-4 * (1 + e1)

    def test_rejects_nonpositive(self):
        with pytest.raises(DomainError):
            entropy_p(grid_of({(1,): 2.0}, 1), 1.0)

    def test_rejects_bad_mass(self):
        f = SpectralField(1, 1, np.array([1.1, 0.0]))
        with pytest.raises(DomainError):
            entropy_p(field_grid(f), 1.5)

    def test_rejects_bad_p(self):
        with pytest.raises(UsageError):
            entropy_p(grid_of({}, 1), 2.5)


class TestProduction:
    def test_fisher_small_mode(self):
        assert fisher_info(grid_of({(1,): 0.1}, 1)) == pytest.approx(0.01, abs=5e-4)

    @pytest.mark.parametrize("p", P_VALUES)
    def test_constant_zero(self, p):
        assert production_p(grid_of({}, 2), p) == 0.0

    def test_p2_is_twice_dirichlet(self):
        f = SpectralField.from_modes({(2,): 0.2, (3,): 0.1, (4,): 0.1}, 1, 4)
        assert production_p(field_grid(f), 2.0) == pytest.approx(2 * gradient_sq_norm(f), rel=1e-8)

    def test_p1_is_fisher(self):
        g = grid_of({(2,): 0.2}, 2)
        assert production_p(g, 1.0) == fisher_info(g)
        assert dirichlet_p(g, 1.0) == pytest.approx(fisher_info(g) / 4)


class TestProfiles:
    @pytest.mark.parametrize("p", P_VALUES)
    def test_anchors(self, p):
        assert h_p(0.0, p) == pytest.approx(1.0, abs=1e-14)
        assert h_p(1.0, p) == pytest.approx(p / 2, abs=1e-14)

    def test_h1_at_e(self):
        assert h_p(math.e, 1.0) == pytest.approx(1 / (math.e - 1) ** 2, rel=1e-12)

    def test_h2_identically_one(self):
        np.testing.assert_allclose(h_p(np.linspace(0, 5, 51), 2.0), 1.0, atol=1e-12)

    @pytest.mark.parametrize("p", P_VALUES)
    def test_taylor_branch_continuous(self, p):
        # straddle the branch switch at |s - 1| = 1e-4; the far formula is good to ~1e-8 there
        s = 1 + np.array([-1e-4 - 1e-12, -1e-4 + 1e-12, 1e-4 - 1e-12, 1e-4 + 1e-12])
        v = h_p(s, p)
        assert abs(v[0] - v[1]) < 1e-7 and abs(v[2] - v[3]) < 1e-7

    @given(st.floats(1.0, 2.0), st.floats(0.0, 4.0))
    def test_h_decreasing(self, p, s):
        assert h_p(s + 0.01, p) <= h_p(s, p) + 1e-12

    def test_H_p(self):
        eps = 0.1
        assert cal_H_p((1 - eps, 1 + eps), 1.0) == pytest.approx((1 + eps) * h_p(1 - eps, 1.0))
        for p in P_VALUES:
            assert cal_H_p((1.0, 1.0), p) == pytest.approx(p / 2)
        assert cal_H_p((0.5, 1.7), 2.0) == pytest.approx(1.0)

    def test_A_p(self):
        assert A_p(0.25, 1.0) == pytest.approx(1.0)
        assert A_p(0.09, 2.0) == pytest.approx(0.3)


class TestConstants:
    def test_lambda(self):
        assert lambda_np(1, 1.7) == pytest.approx(1.0, abs=1e-12)
        assert lambda_np(5, 2.0) == 5.0
        assert lambda_np(2, 1.5) == pytest.approx(1.5, abs=1e-12)
        for n in range(1, 11):
            assert lambda_np(n, 2.0) == pytest.approx(n, abs=1e-12)

    def test_lambda_continuous_near_one(self):
        assert lambda_np(3, 1 + 1e-9) == pytest.approx(1.0, abs=1e-6)

    def test_B(self):
        for p in (1.1, 1.5, 1.9):
            assert B_np(n=1, p=p) == pytest.approx(2 / p, abs=1e-12)
        assert B_np(n=2, p=1.5) == pytest.approx(8 / 9, abs=1e-12)
        assert B_np(n=3, p=2.0) == pytest.approx(1 / 3)
        assert B_np(n=3, p=2.0 - 1e-9) == pytest.approx(1 / 3, abs=1e-6)
        assert B_np(ConstantsRequest(2, 1.0)) == 2.0

    def test_K(self):
        assert K_npw(1, 1.5, 0.5) == pytest.approx(4 / 3, abs=1e-12)
        assert K_npw(2, 1.5, 0.5) == pytest.approx(2 / 3, abs=1e-12)
        assert K_npw(2, 1.5, 1e6) == pytest.approx(1 / (2 * 0.5))
        with pytest.raises(UsageError):
            K_npw(2, 2.0, 0.5)

    def test_rate_limits(self):
        assert rate_4_over_pK(2, 1 + 1e-7, 0.5) == pytest.approx(rate_4_over_pK(2, 1.0, 0.5), rel=1e-5)
        assert rate_4_over_pK(2, 2 - 1e-9, 0.5) == pytest.approx(4.0, rel=1e-6)

    def test_request_validation(self):
        with pytest.raises(UsageError):
            ConstantsRequest(0, 1.5)
        with pytest.raises(UsageError):
            ConstantsRequest(2, 0.5)
