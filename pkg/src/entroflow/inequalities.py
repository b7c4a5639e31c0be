"""Admissible fields, inequality checkers, decay experiments and sharpness scans.

Admissible data are unit-mass ratios ``w`` with ``1 - eps <= w <= 1 + eps`` on
the bounds grid whose Hermite coefficients vanish in the band ``0 < |k| < n``.
Bounds are taken over a dense lattice together with the quadrature nodes, so
every pointwise estimate used by the checkers covers all values the
quadrature sees.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np

from .entropy import (
    A_p,
    B_np,
    ConstantsRequest,
    cal_H_p,
    dirichlet_p,
    entropy_p,
    fisher_info,
    rate_2lambda,
    rate_4_over_pK,
    rate_np_over_Hp,
)
from .errors import ConstructionError, NonAdmissibleError, UsageError
from .estimators import DecayRateEstimator
from .evolution import evolve_ou
from .field import (
    TOL_POS,
    BoundsEstimate,
    DenseGridSpec,
    GridField,
    SpectralField,
    default_dense_grid,
    estimate_bounds,
    field_grid,
    grid_bounds,
    gradient_sq_norm,
    l2_distance_to_one,
    lp_norm_mu,
    synthesize,
)
from .hermite import (
    HermiteBasis,
    as_index,
    default_quad_order,
    evaluate_tensor,
    gauss_hermite_rule,
    hermite_deriv_vandermonde,
    hermite_vandermonde,
    integrate_mu,
    project_tensor,
)

BAND_TOL = 1e-10
BUMP_QUAD_ORDER = 160


@dataclass
class InequalityReport:
    id: str
    lhs: float
    rhs: float
    constant: float
    slack: float
    passed: bool
    provenance: dict = dc_field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)


def violation_tolerance(rhs) -> float:
    return 1e-9 * max(1.0, abs(rhs))


def make_report(id, lhs, rhs, constant, provenance=None, slack=None) -> InequalityReport:
    slack = float(rhs - lhs) if slack is None else float(slack)
    return InequalityReport(id, float(lhs), float(rhs), float(constant), slack,
                            bool(slack >= -violation_tolerance(rhs)), dict(provenance or {}))


@dataclass
class AdmissibleField:
    """A member of the restricted class together with its grid data and recipe."""

    grid: GridField
    n: int
    eps: float
    bounds: BoundsEstimate
    provenance: dict
    field: SpectralField | None = None

    def check(self):
        """Raise if any class invariant fails."""
        if self.field is not None:
            band = _band_mask(self.field.basis, self.n)
            if np.any(np.abs(self.field.coefficients[band]) >= 1e-14):
                raise NonAdmissibleError("band coefficients are not zero")
            if abs(self.field.coefficients[0] - 1.0) > 1e-14:
                raise NonAdmissibleError("c_0 differs from 1")
        else:
            _require_band(self.grid, self.n)
        if self.bounds.inf_w < 1 - self.eps - 1e-10 or self.bounds.sup_w > 1 + self.eps + 1e-10:
            raise NonAdmissibleError(
                f"grid range [{self.bounds.inf_w:.6g}, {self.bounds.sup_w:.6g}] leaves 1 +- {self.eps}",
                self.bounds.inf_w,
            )
        return self


def _band_mask(basis: HermiteBasis, n: int) -> np.ndarray:
    return (basis.degrees > 0) & (basis.degrees < n)


def band_coefficients(grid: GridField, n: int) -> np.ndarray:
    """Quadrature values of ``int w H_k dmu`` for ``0 < |k| < n``."""
    if n <= 1:
        return np.zeros(0)
    basis = HermiteBasis(grid.dimension, n - 1)
    t = project_tensor(grid.values, grid.rule, n - 1)
    return basis.from_tensor(t)[1:]


def _require_band(grid: GridField, n: int):
    c = band_coefficients(grid, n)
    if c.size and np.max(np.abs(c)) > BAND_TOL:
        raise UsageError(
            f"orthogonality condition of order {n} fails (max band coefficient {np.max(np.abs(c)):.3g})"
        )


def _require_positive(grid: GridField):
    lo = grid.minimum()
    if lo < TOL_POS:
        raise NonAdmissibleError(f"field minimum {lo:.3g} below {TOL_POS:g}", lo)


def project_orthogonal(field: SpectralField, n: int, check=True, dense_grid=None):
    """Zero the band ``0 < |k| < n`` and reset ``c_0 = 1``.

    Returns ``(projected, positive)``. With ``check=True`` a non-positive
    result raises :class:`NonAdmissibleError` carrying the attained minimum.
    """
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    c = np.array(field.coefficients)
    c[_band_mask(field.basis, n)] = 0.0
    c[0] = 1.0
    out = field.replace(c)
    rule = gauss_hermite_rule(default_quad_order(out.max_degree), out.dimension)
    b = estimate_bounds(out, dense_grid, rule)
    positive = b.inf_w >= TOL_POS
    if check and not positive:
        raise NonAdmissibleError(f"projected field has minimum {b.inf_w:.6g}", b.inf_w)
    return out, positive


def random_admissible(n: int, eps: float, max_degree: int, seed, dimension: int = 1,
                      quad_order=None, max_tries: int = 8) -> AdmissibleField:
    """Seeded random member of the class: ``1 + sum_{n <= |k| <= N} c_k H_k``.

    Coefficients are uniform on [-1, 1] and then scaled so the largest grid
    deviation from 1 equals ``eps``.
    """
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    if max_degree < n:
        raise UsageError(f"max_degree {max_degree} < n {n}")
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    quad_order = quad_order or default_quad_order(max_degree)
    basis = HermiteBasis(dimension, max_degree)
    free = basis.degrees >= max(n, 1)
    rule = gauss_hermite_rule(quad_order, dimension)
    dense = default_dense_grid(dimension, max_degree, rule)
    rng = np.random.default_rng(seed)
    for attempt in range(max_tries):
        c = np.zeros(basis.size)
        c[free] = rng.uniform(-1.0, 1.0, size=int(free.sum()))
        pert = SpectralField(dimension, max_degree, c)
        vals = pert.on_axes([dense.axis] * dimension)
        node_vals = pert.on_axes(rule.axes)
        dev = max(np.max(np.abs(vals)), np.max(np.abs(node_vals)))
        if dev > 0:
            break
    else:
        raise ConstructionError(f"all-zero draws after {max_tries} attempts")
    c *= eps / dev
    c[0] = 1.0
    fld = SpectralField(dimension, max_degree, c)
    grid = field_grid(fld, quad_order, dense)
    bounds = estimate_bounds(fld, dense, rule)
    prov = {"recipe": "random_admissible", "seed": seed, "n": n, "eps": eps,
            "max_degree": max_degree, "dimension": dimension, "quad_order": quad_order,
            "attempts": attempt + 1}
    return AdmissibleField(grid, n, eps, bounds, prov, fld).check()


def spectral_admissible(field: SpectralField, n: int, quad_order=None, recipe="spectral") -> AdmissibleField:
    """Wrap a given spectral field, with ``eps`` read off its grid range."""
    quad_order = quad_order or default_quad_order(field.max_degree)
    grid = field_grid(field, quad_order)
    bounds = estimate_bounds(field, grid.dense_grid, grid.rule)
    _require_positive(grid)
    eps = bounds.sup_deviation
    prov = {"recipe": recipe, "n": n, "quad_order": quad_order, "eps": eps}
    return AdmissibleField(grid, n, eps, bounds, prov, field).check()


# ---------------------------------------------------------------- bump family

def smooth_step(r) -> np.ndarray:
    """C-infinity cutoff: 1 on ``r <= 1``, 0 on ``r >= 2``, monotone in between."""
    r = np.asarray(r, dtype=float)
    a = _psi(2.0 - r)
    b = _psi(r - 1.0)
    return a / (a + b)


def smooth_step_deriv(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    a, da = _psi(2.0 - r), -_dpsi(2.0 - r)
    b, db = _psi(r - 1.0), _dpsi(r - 1.0)
    return (da * b - a * db) / (a + b) ** 2


def _psi(s):
    s = np.asarray(s, dtype=float)
    pos = s > 0
    out = np.zeros_like(s)
    out[pos] = np.exp(-1.0 / s[pos])
    return out


def _dpsi(s):
    s = np.asarray(s, dtype=float)
    pos = s > 0
    out = np.zeros_like(s)
    out[pos] = np.exp(-1.0 / s[pos]) / s[pos] ** 2
    return out


@dataclass(frozen=True)
class TestFunctionFamily:
    """``w = a H_k(x) chi(|x| eps^{1/(2n)}) + C`` with ``C`` fixing unit mass.

    ``amplitude=None`` picks the largest ``a`` in ``1, 1/2, 1/4, ...`` keeping
    ``w >= TOL_POS``; ``scale_to_eps=True`` instead picks ``a`` so that the
    grid range of ``w`` is exactly ``[1 - eps, 1 + eps]`` or inside it.
    """

    __test__ = False  # not a pytest class

    k: tuple
    eps: float
    amplitude: float | None = None
    scale_to_eps: bool = False
    enforce_orthogonality: bool = True
    quad_order: int = BUMP_QUAD_ORDER
    spacing: float = 0.02

    @property
    def n(self) -> int:
        return sum(as_index(self.k))

    @property
    def radius(self) -> float:
        return self.eps ** (-1.0 / (2 * self.n))


def _bump_parts(k, radius, axes):
    """``H_k chi`` and its gradient on the tensor grid ``axes``."""
    d = len(k)
    mesh = np.meshgrid(*axes, indexing="ij")
    r = np.sqrt(sum(m * m for m in mesh)) / radius
    chi = smooth_step(r)
    dchi = smooth_step_deriv(r)
    hk = np.ones_like(r)
    dh = []
    for j in range(d):
        vj = hermite_vandermonde(k[j], mesh[j])[..., k[j]]
        hk = hk * vj
    for j in range(d):
        g = np.ones_like(r)
        for i in range(d):
            if i == j:
                g = g * hermite_deriv_vandermonde(k[i], mesh[i])[..., k[i]]
            else:
                g = g * hermite_vandermonde(k[i], mesh[i])[..., k[i]]
        dh.append(g)
    with np.errstate(invalid="ignore", divide="ignore"):
        radial = np.where(r > 0, dchi / (radius * np.where(r > 0, r, 1.0) * radius), 0.0)
    grads = np.stack([dh[j] * chi + hk * radial * mesh[j] for j in range(d)])
    return hk * chi, grads


def build_test_function(fam: TestFunctionFamily) -> GridField:
    """Grid data of a truncated single-mode test function.

    When the truncation breaks the orthogonality condition, the band
    components (polynomials of degree < n) are removed exactly.
    """
    k = as_index(fam.k)
    n = sum(k)
    if n < 1:
        raise UsageError("test functions need |k| >= 1")
    if not fam.eps > 0:
        raise UsageError(f"eps must be positive, got {fam.eps}")
    d = len(k)
    rule = gauss_hermite_rule(fam.quad_order, d)
    radius = fam.radius
    half = max(6.0, 2 * radius + 0.5)
    dense = DenseGridSpec(d, math.ceil(half * 10) / 10, fam.spacing)
    base_nodes, grad_nodes = _bump_parts(k, radius, rule.axes)
    base_dense, _ = _bump_parts(k, radius, [dense.axis] * d)
    # remove band components so that int w H_j dmu = 0 for 0 < |j| < n
    corr_nodes = np.zeros_like(base_nodes)
    corr_dense = np.zeros_like(base_dense)
    corr_grad = np.zeros_like(grad_nodes)
    if fam.enforce_orthogonality and n > 1:
        basis = HermiteBasis(d, n - 1)
        c = basis.from_tensor(project_tensor(base_nodes, rule, n - 1))
        c[0] = 0.0
        t = basis.to_tensor(c)
        corr_nodes = evaluate_tensor(t, rule.axes)
        corr_dense = evaluate_tensor(t, [dense.axis] * d)
        corr_grad = np.stack([evaluate_tensor(t, rule.axes, j) for j in range(d)])
    pert_nodes = base_nodes - corr_nodes
    pert_dense = base_dense - corr_dense
    pert_grad = grad_nodes - corr_grad
    mean = integrate_mu(pert_nodes, rule)
    pert_nodes = pert_nodes - mean
    pert_dense = pert_dense - mean
    spread_hi = max(pert_nodes.max(), pert_dense.max())
    spread_lo = min(pert_nodes.min(), pert_dense.min())
    if spread_hi - spread_lo <= 1e-14:
        raise ConstructionError("test function perturbation vanishes on the grid")

    if fam.amplitude is not None:
        a = float(fam.amplitude)
    elif fam.scale_to_eps:
        a = fam.eps / max(spread_hi, -spread_lo)
    else:
        a = None
        for j in range(64):
            cand = 2.0 ** -j
            if 1.0 + cand * spread_lo >= TOL_POS:
                a = cand
                break
        if a is None:
            raise ConstructionError("no amplitude keeps the test function positive")
    values = 1.0 + a * pert_nodes
    dense_vals = 1.0 + a * pert_dense
    recipe = {"recipe": "bump_test_function", "k": list(k), "eps": fam.eps, "amplitude": a,
              "radius": radius, "quad_order": fam.quad_order,
              "orthogonalized": bool(fam.enforce_orthogonality and n > 1),
              "C": 1.0 - a * mean}
    grid = GridField(rule, values, a * pert_grad, dense_vals, dense, recipe)
    if grid.minimum() < TOL_POS:
        raise ConstructionError(f"test function minimum {grid.minimum():.3g} is not positive")
    return grid


def bump_admissible(fam: TestFunctionFamily) -> AdmissibleField:
    grid = build_test_function(fam)
    bounds = grid_bounds(grid)
    eps = bounds.sup_deviation
    return AdmissibleField(grid, fam.n, eps, bounds, dict(grid.recipe)).check()



# ---------------------------------------------------------------- checkers

def _grid_of(x):
    if isinstance(x, AdmissibleField):
        return x.grid, x.bounds, x.provenance
    if isinstance(x, SpectralField):
        g = field_grid(x)
        return g, estimate_bounds(x, g.dense_grid, g.rule), {"recipe": "spectral", "quad_order": g.rule.order}
    if isinstance(x, GridField):
        return x, grid_bounds(x), dict(x.recipe)
    raise UsageError(f"cannot check object of type {type(x).__name__}")


def check_poincare(field, n: int) -> InequalityReport:
    """``||w - 1||_2^2 <= (1/n) ||grad w||_2^2`` under the order-n orthogonality condition.

    Spectral fields use Parseval (exact); grid fields use quadrature.
    """
    prov = {}
    if isinstance(field, AdmissibleField) and field.field is not None:
        prov = dict(field.provenance)
        field = field.field
    if isinstance(field, SpectralField):
        band = _band_mask(field.basis, n)
        if np.any(np.abs(field.coefficients[band]) > BAND_TOL):
            raise UsageError(f"orthogonality condition of order {n} fails")
        lhs = l2_distance_to_one(field) ** 2
        rhs = gradient_sq_norm(field) / n
        # termwise form: every summand is >= 0, so no cancellation between lhs and rhs
        c2 = field.coefficients ** 2
        slack = float(np.sum(c2[1:] * (field.basis.degrees[1:] - n))) / n
        return make_report("poincare", lhs, rhs, 1.0 / n, dict(prov, route="parseval"), slack)
    grid, _, prov = _grid_of(field)
    _require_band(grid, n)
    lhs = integrate_mu((grid.values - 1.0) ** 2, grid.rule)
    rhs = integrate_mu(grid.grad_sq(), grid.rule) / n
    return make_report("poincare", lhs, rhs, 1.0 / n, dict(prov, route="quadrature"))


def check_improved_lsi(field, n: int) -> InequalityReport:
    """``int w log w dmu <= (H_1[w]/n) int |grad w|^2 / w dmu``."""
    grid, bounds, prov = _grid_of(field)
    _require_positive(grid)
    _require_band(grid, n)
    const = cal_H_p(bounds, 1.0) / n
    return make_report("improved_lsi", entropy_p(grid, 1.0), const * fisher_info(grid), const, prov)


def check_beckner(field, n: int, p: float, B_n1: float = 2.0) -> InequalityReport:
    """``E_p <= B_{n,p} int |grad w^{p/2}|^2 dmu`` with the interpolated constant."""
    grid, _, prov = _grid_of(field)
    _require_positive(grid)
    _require_band(grid, n)
    const = B_np(ConstantsRequest(n, p, B_n1))
    return make_report("beckner", entropy_p(grid, p), const * dirichlet_p(grid, p), const,
                       dict(prov, p=p))


def check_pversion(field, n: int, p: float) -> InequalityReport:
    """``E_p <= (4/p^2)(H_p/n) int |grad w^{p/2}|^2 dmu``."""
    grid, bounds, prov = _grid_of(field)
    _require_positive(grid)
    _require_band(grid, n)
    const = 4.0 / (p * p) * cal_H_p(bounds, p) / n
    return make_report("pversion", entropy_p(grid, p), const * dirichlet_p(grid, p), const,
                       dict(prov, p=p))


def check_ck(field, p: float) -> InequalityReport:
    """``||w - 1||_{L^p(dmu)} <= A_p(E_p[w])``."""
    grid, _, prov = _grid_of(field)
    _require_positive(grid)
    e = entropy_p(grid, p)
    shifted = GridField(grid.rule, grid.values - 1.0)
    lhs = lp_norm_mu(shifted, p)
    return make_report("csiszar_kullback", lhs, A_p(max(e, 0.0), p), float("nan"), dict(prov, p=p))


def check_all(field, n: int, p_values=(1.0,)) -> list:
    """Poincare and improved LSI once, then Beckner, p-version and CK for each p."""
    reports = []
    if isinstance(field, AdmissibleField) and field.field is None:
        reports.append(check_poincare(field.grid, n))
    else:
        reports.append(check_poincare(field, n))
    reports.append(check_improved_lsi(field, n))
    for p in p_values:
        reports.append(check_beckner(field, n, p))
        reports.append(check_pversion(field, n, p))
        reports.append(check_ck(field, p))
    for r in reports:
        if "p" not in r.provenance:
            r.provenance["p"] = None
    return reports


# ---------------------------------------------------------------- decay

DECAY_COLUMNS = ["n", "p", "seed", "fitted_rate", "rate_2lambda", "rate_4_over_pK",
                 "rate_np_over_Hp", "rate_spectral", "residual_rms", "envelope_ok"]


@dataclass
class DecayFit:
    n: int
    p: float
    window: tuple
    fitted_rate: float
    intercept: float
    residual_rms: float
    rates: dict
    envelopes: dict
    times: np.ndarray
    entropy: np.ndarray
    H_1: float
    H_p: float
    better_rate: str
    window_shrunk: bool = False
    provenance: dict = dc_field(default_factory=dict)

    @property
    def envelope_ok(self) -> bool:
        return all(self.envelopes.values())

    def row(self) -> list:
        return [self.n, self.p, self.provenance.get("seed"), self.fitted_rate,
                self.rates["2lambda"], self.rates["4_over_pK"], self.rates["np_over_Hp"],
                self.rates["spectral"], self.residual_rms, self.envelope_ok]


def envelope_violations(times, values, rate) -> np.ndarray:
    """Slacks ``E(0) e^{-rate t} - E(t)`` (negative beyond tolerance means violated)."""
    times = np.asarray(times, float)
    values = np.asarray(values, float)
    bound = values[0] * np.exp(-rate * (times - times[0]))
    slack = bound - values
    tol = np.array([violation_tolerance(b) for b in bound])
    return slack, slack < -tol


def decay_experiment(field0, p: float, t_grid, n: int | None = None, window=(0.1, 1.0),
                     floor=1e-12) -> DecayFit:
    """Evolve admissible data, fit the decay rate of ``E_p`` and test the envelopes.

    Envelopes checked: ``2 lambda(n,p)``, ``4/(p K[n,p,w0])`` and ``n p / H_p[w0]``,
    plus ``2n`` when ``p = 2`` (where ``E_2 = ||w - 1||_2^2``).
    """
    if isinstance(field0, SpectralField):
        if n is None:
            raise UsageError("n is required for a bare spectral field")
        field0 = spectral_admissible(field0, n)
    n = field0.n if n is None else n
    if field0.field is None:
        raise UsageError("decay experiments need spectral initial data")
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    if t_grid.size < 8:
        raise UsageError("t_grid needs at least 8 samples")
    f0 = field0.field
    rule = field0.grid.rule
    ent = np.array([entropy_p(synthesize(evolve_ou(f0, t), rule), p) for t in t_grid])
    H1 = cal_H_p(field0.bounds, 1.0)
    Hp = cal_H_p(field0.bounds, p)
    rates = {
        "2lambda": rate_2lambda(n, p),
        "4_over_pK": rate_4_over_pK(n, p, H1),
        "np_over_Hp": rate_np_over_Hp(n, p, Hp),
        "spectral": 2.0 * n,
    }
    checked = ["2lambda", "4_over_pK", "np_over_Hp"] + (["spectral"] if p == 2.0 else [])
    envelopes = {}
    for name in checked:
        _, bad = envelope_violations(t_grid, ent, rates[name])
        envelopes[name] = not bool(bad.any())
    est = DecayRateEstimator(window=window, floor=floor).fit(t_grid, ent)
    better = "np_over_Hp" if rates["np_over_Hp"] > rates["4_over_pK"] else "4_over_pK"
    return DecayFit(n, float(p), est.window_, est.rate_, est.intercept_, est.residual_rms_, rates,
                    envelopes, t_grid, ent, H1, Hp, better, est.window_shrunk_,
                    dict(field0.provenance))


def decay_table_csv(fits) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DECAY_COLUMNS + ["recipe", "quad_order"])
    for f in sorted(fits, key=lambda f: (_sort_seed(f.provenance.get("seed")), f.p, f.n)):
        w.writerow([_fmt(v) for v in f.row()] +
                   [f.provenance.get("recipe", ""), f.provenance.get("quad_order", "")])
    return buf.getvalue()


def _sort_seed(s):
    return (-1 if s is None else s)


def _fmt(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


# ---------------------------------------------------------------- sharpness

SHARPNESS_COLUMNS = ["amplitude", "family", "sup_deviation", "E_1", "fisher", "H_1", "quotient",
                     "bound_constant", "tightness", "rate_proxy", "quad_order", "skipped"]


@dataclass
class SharpnessScan:
    n: int
    k: tuple
    family: str
    rows: list
    tightness_increasing: bool
    limit_gap: float

    def column(self, name):
        return np.array([r[name] for r in self.rows if not r["skipped"]], dtype=float)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(SHARPNESS_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(r[c]) if not isinstance(r[c], str) else r[c] for c in SHARPNESS_COLUMNS])
        return buf.getvalue()


def sharpness_scan(n: int, k, ladder, family: str = "bump", quad_order=None) -> SharpnessScan:
    """Tightness of the improved LSI along a decreasing amplitude ladder.

    ``family="bump"`` reads each ladder value as ``eps`` and builds the
    truncated mode ``w`` with range exactly ``[1 - eps, 1 + eps]``, i.e. a
    member of the bounded class. ``family="polynomial"`` uses ``1 + a H_k``
    with bounds taken on the default lattice.
    """
    k = as_index(k)
    if sum(k) != n:
        raise UsageError(f"|k| = {sum(k)} differs from n = {n}")
    ladder = [float(a) for a in ladder]
    if any(a <= 0 for a in ladder) or any(b >= a for a, b in zip(ladder, ladder[1:])):
        raise UsageError("ladder must be positive and strictly decreasing")
    rows = []
    for a in ladder:
        row = {"amplitude": a, "family": family, "skipped": False}
        try:
            if family == "bump":
                fam = TestFunctionFamily(k, a, scale_to_eps=True,
                                         quad_order=quad_order or BUMP_QUAD_ORDER)
                grid = build_test_function(fam)
                bounds = grid_bounds(grid)
            elif family == "polynomial":
                fld = SpectralField.from_modes({k: a}, dimension=len(k), max_degree=n)
                grid = field_grid(fld, quad_order)
                bounds = estimate_bounds(fld, grid.dense_grid, grid.rule)
            else:
                raise UsageError(f"unknown family {family!r}")
            _require_positive(grid)
        except (NonAdmissibleError, ConstructionError):
            row.update({c: float("nan") for c in SHARPNESS_COLUMNS if c not in row})
            row["skipped"] = True
            rows.append(row)
            continue
        e1 = entropy_p(grid, 1.0)
        fi = fisher_info(grid)
        H1 = cal_H_p(bounds, 1.0)
        q = e1 / fi
        row.update({
            "sup_deviation": bounds.sup_deviation, "E_1": e1, "fisher": fi, "H_1": H1,
            "quotient": q, "bound_constant": H1 / n, "tightness": q * n / H1,
            "rate_proxy": n / H1, "quad_order": grid.rule.order,
        })
        rows.append(row)
    done = [r for r in rows if not r["skipped"]]
    tight = [r["tightness"] for r in done]
    increasing = all(b > a for a, b in zip(tight, tight[1:]))
    gap = abs(done[-1]["rate_proxy"] - 2 * n) if done else float("nan")
    return SharpnessScan(n, k, family, rows, increasing, gap)
