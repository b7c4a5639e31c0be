"""Acceptance criteria, one check per criterion.

Each check returns ``(passed, detail)``; the test prints a single PASS/FAIL
line per criterion and asserts it. Run ``python tests/test_acceptance.py``
for the summary without pytest.
"""
import math
import time

import numpy as np
import pytest

from entroflow.entropy import B_np, entropy_p, lambda_np, production_p
from entroflow.estimators import DecayRateEstimator
from entroflow.evolution import convolve_green, evolve_ou, heat_from_selfsimilar, heat_lattice, lp_distance_heat
from entroflow.field import SpectralField, estimate_bounds, field_grid, l2_distance_to_one, synthesize
from entroflow.entropy import cal_H_p
from entroflow.hermite import HermiteBasis, evaluate_tensor, gauss_hermite_rule
from entroflow.evolution import stationary_gaussian
from entroflow.inequalities import (
    check_ck,
    check_poincare,
    decay_experiment,
    envelope_violations,
    random_admissible,
    sharpness_scan,
)
from entroflow.potential import PotentialSpec, check_general_decay, discretize, smooth_initial_data, spectrum

P_LADDER = [round(1.0 + 0.1 * i, 1) for i in range(1, 11)]


def c01_orthonormality():
    worst = 0.0
    for d in (1, 2):
        rule = gauss_hermite_rule(9, d)
        basis = HermiteBasis(d, 8)
        vals = np.stack([evaluate_tensor(basis.to_tensor(e), rule.axes).ravel() for e in np.eye(basis.size)])
        G = (vals * rule.tensor_weights().ravel()) @ vals.T
        worst = max(worst, float(np.abs(G - np.eye(basis.size)).max()))
    return worst < 1e-10, f"max |<H_j,H_k> - delta| = {worst:.2e} (order 9, |j|,|k| <= 8, d <= 2)", 5.0


def c02_constants():
    err_l1 = max(abs(lambda_np(1, p) - 1.0) for p in P_LADDER)
    err_l2 = max(abs(lambda_np(n, 2.0) - n) for n in range(1, 11))
    err_b = max(abs(B_np(n=1, p=p) - 2.0 / p) for p in P_LADDER)
    worst = max(err_l1, err_l2, err_b)
    return worst < 1e-12, f"lambda(1,p)-1 {err_l1:.1e}, lambda(n,2)-n {err_l2:.1e}, B_1p-2/p {err_b:.1e}", None


def c03_oracle():
    f = SpectralField.from_modes({(2,): 0.2, (3,): 0.05, (4,): 0.05}, 1, 4)
    y = np.linspace(-12, 12, 2401)
    u0 = f(y[:, None]) * stationary_gaussian(y[:, None])
    t = 0.5
    x = heat_lattice(t, 1)
    err = float(np.abs(heat_from_selfsimilar(f, t, x).u - convolve_green(u0, y, t, x)).max())
    return err < 1e-6, f"sup |spectral - Green| = {err:.2e} at t = 0.5", 10.0


def c04_poincare():
    rng = np.random.default_rng(4)
    worst, eq_worst = 0.0, 0.0
    for i in range(1000):
        d = int(rng.integers(1, 4))
        n = int(rng.integers(1, 5))
        N = n + int(rng.integers(0, 4))
        basis = HermiteBasis(d, N)
        c = np.zeros(basis.size)
        band = basis.degrees >= n
        c[band] = rng.normal(size=int(band.sum()))
        c[0] = 1.0
        worst = min(worst, check_poincare(SpectralField(d, N, c), n).slack)
        single = np.where(basis.degrees == n, c, 0.0)
        single[0] = 1.0
        eq_worst = max(eq_worst, abs(check_poincare(SpectralField(d, N, single), n).slack))
    ok = worst >= 0.0 and eq_worst < 1e-12
    return ok, f"min slack {worst:.2e} over 1000 fields, single-band |slack| <= {eq_worst:.1e}", None


def c05_spectral_rate():
    f = SpectralField.from_modes({(3, 0): 0.05, (2, 1): -0.03, (1, 2): 0.01, (0, 3): 0.02}, 2, 4)
    t = np.linspace(0, 1, 41)
    y = [l2_distance_to_one(evolve_ou(f, s)) ** 2 for s in t]
    rate = DecayRateEstimator(window=(0.1, 1.0)).fit(t, y).rate_
    return abs(rate - 6.0) <= 0.06, f"fitted rate {rate:.6f} vs 2n = 6", None


def c06_lsi_envelope():
    t = np.linspace(0, 2, 41)
    bad, total = 0, 0
    for n in (2, 3):
        for seed in range(100):
            af = random_admissible(n, 0.3, n + 3, seed=seed)
            rule = af.grid.rule
            e = [entropy_p(synthesize(evolve_ou(af.field, s), rule), 1.0) for s in t]
            _, viol = envelope_violations(t, e, n / cal_H_p(af.bounds, 1.0))
            bad += int(viol.sum())
            total += 1
    return bad == 0, f"{bad} violations over {total} fields x {t.size} times", 60.0


def c07_sharpness():
    scan = sharpness_scan(2, (2,), [0.2, 0.1, 0.05, 0.02, 0.01])
    tight = scan.column("tightness")
    rate = scan.column("rate_proxy")[-1]
    ok = tight[-1] >= 0.95 and scan.tightness_increasing and abs(rate - 4.0) <= 0.05 * 4.0
    return ok, f"tightness {np.round(tight, 4).tolist()}, n/H_1 = {rate:.4f}", None


def c08_eep():
    f0 = random_admissible(2, 0.3, 4, seed=3).field
    rule = gauss_hermite_rule(24)
    dt, worst = 1e-4, 0.0
    for p in (1.0, 1.5, 2.0):
        for t in (0.25, 0.5):
            def ent(s):
                return entropy_p(synthesize(evolve_ou(f0, s), rule), p)

            slope = (ent(t + dt) - ent(t - dt)) / (2 * dt)
            prod = production_p(synthesize(evolve_ou(f0, t), rule), p)
            worst = max(worst, abs(slope + prod) / prod)
    return worst < 1e-6, f"max relative mismatch {worst:.2e}", None


def c09_ck():
    fails, eq = 0, 0.0
    for n in (2, 3):
        for seed in range(50):
            af = random_admissible(n, 0.3, n + 3, seed=seed)
            for p in (1.0, 1.5, 2.0):
                r = check_ck(af, p)
                fails += not r.passed
                if p == 2.0:
                    eq = max(eq, abs(r.slack))
    return fails == 0 and eq < 1e-10, f"{fails} failures over 300 checks, p=2 |A_2(E_2) - ||w-1||_2| <= {eq:.1e}", None


def c10_rate_comparison():
    af = random_admissible(2, 0.01, 6, seed=0)
    fit = decay_experiment(af, 1.5, np.linspace(0, 2, 41))
    a, b = fit.rates["np_over_Hp"], fit.rates["4_over_pK"]
    return a > b, f"np/H_p = {a:.6f} > 4/(pK) = {b:.6f}", None


def c11_general():
    op = discretize(PotentialSpec(1, "harmonic"), 2001, 10.0)
    err = float(np.abs(spectrum(op, 6).eigenvalues - np.arange(6)).max())
    dw = discretize(PotentialSpec(1, "double_well"), 2001)
    sp = spectrum(dw, 200)
    bad = 0
    for seed in range(10):
        r = check_general_decay(dw, sp, smooth_initial_data(dw, sp, 2, 0.5, seed), 2, 1.0,
                                np.linspace(0, 2, 41))
        bad += not r.envelope_ok
    return err < 1e-3 and bad == 0, f"harmonic max |lambda_k - k| = {err:.1e}; double-well {bad}/10 envelope failures", 120.0


def c12_heat():
    n = 2
    f = SpectralField.from_modes({(2,): 0.1}, 1, 2)
    H1 = cal_H_p(estimate_bounds(f, rule=field_grid(f).rule), 1.0)
    t = np.geomspace(1, 50, 25)
    l1 = [lp_distance_heat(heat_from_selfsimilar(f, s), 1.0) for s in t]
    est = DecayRateEstimator(window=None, log_x=True).fit(1 + 2 * t, l1)
    exponent, bound = -est.rate_, -n / (4 * H1)
    return exponent <= bound, f"exponent {exponent:.4f} <= -n/(4 H_1) = {bound:.4f}", None


CRITERIA = [c01_orthonormality, c02_constants, c03_oracle, c04_poincare, c05_spectral_rate,
            c06_lsi_envelope, c07_sharpness, c08_eep, c09_ck, c10_rate_comparison, c11_general, c12_heat]


def evaluate(check):
    start = time.perf_counter()
    ok, detail, limit = check()
    elapsed = time.perf_counter() - start
    if limit is not None:
        detail += f"; {elapsed:.2f} s (limit {limit:g} s)"
        ok = ok and elapsed < limit
    return ok, detail


def _line(check, ok, detail):
    num = int(check.__name__[1:3])
    return f"{'PASS' if ok else 'FAIL'} criterion {num:2d} {check.__name__[4:]}: {detail}"


@pytest.mark.parametrize("check", CRITERIA, ids=lambda c: c.__name__)
def test_criterion(check, capsys):
    ok, detail = evaluate(check)
    with capsys.disabled():
        print("\n" + _line(check, ok, detail))
    assert ok, detail


if __name__ == "__main__":
    results = [(c, *evaluate(c)) for c in CRITERIA]
    for c, ok, detail in results:
        print(_line(c, ok, detail))
    raise SystemExit(0 if all(ok for _, ok, _ in results) else 1)
