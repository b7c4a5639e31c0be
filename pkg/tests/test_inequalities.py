import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from entroflow.entropy import cal_H_p, h_p
from entroflow.errors import NonAdmissibleError, UsageError
from entroflow.evolution import evolve_ou
from entroflow.field import SpectralField, field_grid
from entroflow.hermite import integrate_mu
from entroflow.inequalities import (
    TestFunctionFamily,
    band_coefficients,
    build_test_function,
    bump_admissible,
    check_all,
    check_beckner,
    check_ck,
    check_improved_lsi,
    check_poincare,
    decay_experiment,
    decay_table_csv,
    project_orthogonal,
    random_admissible,
    sharpness_scan,
    smooth_step,
)

LADDER = [0.2, 0.1, 0.05, 0.02, 0.01]


class TestProjection:
    def test_band_removed(self):
        f = SpectralField.from_modes({(1,): 0.5, (3,): 0.1}, 1, 3)
        g, _ = project_orthogonal(f, 3, check=False)
        assert g.coefficient((1,)) == 0.0 and g.coefficient((3,)) == 0.1

    def test_already_orthogonal_unchanged(self):
        f = SpectralField.from_modes({(2,): 0.1, (4,): 0.02}, 1, 4)
        g, ok = project_orthogonal(f, 2)
        assert g.allclose(f) and ok

    def test_n1_only_mass(self):
        f = SpectralField(1, 2, np.array([1.3, 0.1, 0.05]))
        g, _ = project_orthogonal(f, 1, check=False)
        np.testing.assert_array_equal(g.coefficients, [1.0, 0.1, 0.05])


class TestRandomAdmissible:
    def test_invariants(self):
        af = random_admissible(2, 0.3, 4, seed=7)
        assert abs(af.grid.mass - 1) < 1e-12
        assert af.bounds.sup_deviation == pytest.approx(0.3, rel=1e-12)
        assert np.abs(band_coefficients(af.grid, 2)).max() < 1e-10
        assert af.provenance["seed"] == 7

    def test_seeded(self):
        a = random_admissible(3, 0.3, 5, seed=1).field
        b = random_admissible(3, 0.3, 5, seed=1).field
        assert a.allclose(b, atol=0)

    def test_small_eps(self):
        af = random_admissible(2, 1e-3, 4, seed=2)
        assert af.bounds.sup_deviation <= 1e-3 * (1 + 1e-12)

    def test_n1_no_band(self):
        af = random_admissible(1, 0.2, 3, seed=0)
        assert af.field.coefficient((1,)) != 0.0

    def test_eps_validated(self):
        with pytest.raises(UsageError):
            random_admissible(2, 1.5, 4, seed=0)


class TestPoincare:
    def test_single_band_equality(self):
        r = check_poincare(SpectralField.from_modes({(1, 1): 0.2, (2, 0): -0.1}, 2, 2), 2)
        assert abs(r.slack) < 1e-12 and r.passed

    def test_next_band_slack(self):
        c, n = 0.3, 2
        r = check_poincare(SpectralField.from_modes({(3,): c}, 1, 3), n)
        assert r.slack == pytest.approx(c * c / n, rel=1e-12)

    def test_constant(self):
        r = check_poincare(SpectralField.constant(1, 2), 2)
        assert r.lhs == r.rhs == 0.0 and r.passed

    def test_band_violation_is_usage_error(self):
        with pytest.raises(UsageError):
            check_poincare(SpectralField.from_modes({(1,): 0.1}, 1, 2), 2)


class TestCheckers:
    def test_improved_lsi_small_mode(self):
        fam = TestFunctionFamily((2,), 0.01, scale_to_eps=True)
        r = check_improved_lsi(bump_admissible(fam), 2)
        assert r.passed and r.lhs / r.rhs >= 0.95

    def test_sweep_zero_violations(self):
        for seed in range(100):
            af = random_admissible(3, 0.3, 6, seed=seed)
            assert check_improved_lsi(af, 3).slack >= -1e-9

    def test_beckner_p2_single_mode_equality(self):
        af = random_admissible(2, 0.2, 2, seed=4)
        r = check_beckner(af, 2, 2.0)
        assert abs(r.slack) < 1e-9 * max(1, r.rhs)

    def test_ck_p2_equality(self):
        af = random_admissible(2, 0.3, 4, seed=4)
        r = check_ck(af, 2.0)
        assert abs(r.slack) < 1e-10

    @given(st.integers(0, 10_000))
    def test_all_pass_p15(self, seed):
        reports = check_all(random_admissible(2, 0.3, 4, seed=seed), 2, (1.5,))
        assert [r.id for r in reports] == ["poincare", "improved_lsi", "beckner", "pversion",
                                            "csiszar_kullback"]
        assert all(r.passed for r in reports)

    def test_non_admissible_rejected(self):
        with pytest.raises(NonAdmissibleError):
            check_improved_lsi(SpectralField.from_modes({(2,): 2.0}, 1, 2), 2)

    def test_report_dict(self):
        d = check_poincare(SpectralField.constant(1, 2), 2).to_dict()
        assert set(d) == {"id", "lhs", "rhs", "constant", "slack", "passed", "provenance"}


class TestBump:
    def test_smooth_step(self):
        np.testing.assert_allclose(smooth_step(np.array([0.0, 1.0, 2.0, 3.0])), [1, 1, 0, 0])
        r = np.linspace(1, 2, 101)
        assert np.all(np.diff(smooth_step(r)) <= 0)

    def test_range_and_orthogonality(self):
        g = build_test_function(TestFunctionFamily((2,), 0.05, scale_to_eps=True))
        assert max(g.maximum() - 1, 1 - g.minimum()) == pytest.approx(0.05, rel=1e-12)
        assert abs(integrate_mu(g.values, g.rule) - 1) < 1e-13
        assert abs(integrate_mu(g.values * g.rule.nodes, g.rule)) < 1e-13

    def test_large_eps_small_amplitude(self):
        g = build_test_function(TestFunctionFamily((2,), 100.0, amplitude=1e-4))
        assert np.abs(g.values - 1).max() < 1e-3

    def test_quadrature_converged(self):
        a = check_improved_lsi(build_test_function(TestFunctionFamily((2,), 0.01, scale_to_eps=True)), 2)
        b = check_improved_lsi(build_test_function(
            TestFunctionFamily((2,), 0.01, scale_to_eps=True, quad_order=240)), 2)
        assert a.lhs == pytest.approx(b.lhs, rel=1e-6)


class TestSharpness:
    def test_bump_ladder(self):
        scan = sharpness_scan(2, (2,), LADDER)
        t = scan.column("tightness")
        assert scan.tightness_increasing and t[-1] >= 0.95
        assert abs(scan.column("rate_proxy")[-1] - 4) <= 0.05 * 4

    def test_H_limits(self):
        for p in (1.0, 1.5):
            gaps = [abs(cal_H_p((1 - a, 1 + a), p) - p / 2) for a in (0.1, 0.01)]
            assert gaps[1] < gaps[0]
        assert cal_H_p((0.9, 1.1), 2.0) == pytest.approx(1.0, abs=1e-14)
        eps = 0.01
        assert cal_H_p((1 - eps, 1 + eps), 1.0) == pytest.approx((1 + eps) * h_p(1 - eps, 1.0))

    def test_csv_header(self):
        csv = sharpness_scan(2, (2,), [0.1, 0.05]).to_csv()
        assert csv.splitlines()[0].startswith("amplitude,family,")

    def test_ladder_validation(self):
        with pytest.raises(UsageError):
            sharpness_scan(2, (2,), [0.01, 0.1])
        with pytest.raises(UsageError):
            sharpness_scan(2, (3,), [0.1])


class TestDecay:
    def test_single_band_l2_rate(self):
        from entroflow.estimators import DecayRateEstimator
        from entroflow.field import l2_distance_to_one

        f = SpectralField.from_modes({(3, 0): 0.05, (2, 1): -0.03, (0, 3): 0.02}, 2, 4)
        t = np.linspace(0, 1, 41)
        y = [l2_distance_to_one(evolve_ou(f, s)) ** 2 for s in t]
        assert DecayRateEstimator().fit(t, y).rate_ == pytest.approx(6.0, rel=1e-2)

    def test_single_mode_p2_entropy_rate(self):
        f = SpectralField.from_modes({(2,): 0.05}, 1, 2)
        fit = decay_experiment(f, 2.0, np.linspace(0, 1, 41), n=2)
        assert fit.fitted_rate == pytest.approx(4.0, rel=1e-2)
        assert fit.envelope_ok

    def test_rate_comparison_small_eps(self):
        af = random_admissible(2, 0.01, 6, seed=0)
        fit = decay_experiment(af, 1.5, np.linspace(0, 2, 41))
        assert fit.rates["np_over_Hp"] > fit.rates["4_over_pK"]
        assert fit.better_rate == "np_over_Hp"

    def test_envelopes_and_table(self):
        fits = [decay_experiment(random_admissible(2, 0.3, 4, seed=s), p, np.linspace(0, 2, 21))
                for s in (1, 2) for p in (1.0, 2.0)]
        assert all(f.envelope_ok for f in fits)
        lines = decay_table_csv(fits).splitlines()
        assert lines[0].split(",")[:3] == ["n", "p", "seed"] and len(lines) == 5

    def test_needs_enough_samples(self):
        with pytest.raises(UsageError):
            decay_experiment(random_admissible(2, 0.3, 4, seed=1), 1.0, [0, 1, 2])

    def test_evolution_stays_admissible_class(self):
        af = random_admissible(2, 0.3, 4, seed=9)
        g = field_grid(evolve_ou(af.field, 0.5))
        assert np.abs(band_coefficients(g, 2)).max() < 1e-12
