"""Generalized Ornstein-Uhlenbeck operator ``N = -Laplace + grad V . grad`` on a box.

The discretization is the symmetric flux form

    (N w)_i = h^{-2} sum_{j ~ i} exp((V_i - V_j) / 2) (w_i - w_j),

which is self-adjoint for the discrete weights ``pi_i ~ exp(-V_i)``, keeps
constants exactly in the kernel and conserves mass. Conjugating by
``pi^{1/2}`` gives the Schrodinger matrix ``A = -Laplace_h + U_h`` with
off-diagonal entries ``-1/h^2`` and ``U_h -> |grad V|^2/4 - Laplace V/2``
at second order. Neighbours outside the box are dropped (no-flux boundary).
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.sparse.linalg import eigsh
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .entropy import cal_H_p
from .errors import DomainError, NonAdmissibleError, NumericError, UsageError
from .estimators import DecayRateEstimator
from .field import TOL_POS

PRESETS = ("harmonic", "double_well")


@dataclass(frozen=True)
class PotentialSpec:
    """Confining potential ``V`` given by preset name or polynomial coefficients.

    ``coefficients`` follow :mod:`numpy.polynomial.polynomial` conventions:
    ``c[i]`` multiplies ``x^i`` in 1D, ``c[i, j]`` multiplies ``x^i y^j`` in 2D.
    """

    dimension: int = 1
    preset: str | None = "harmonic"
    coefficients: tuple | None = None
    half_width: float | None = None

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise UsageError(f"general potentials support d in {{1, 2}}, got {self.dimension}")
        if self.coefficients is None and self.preset not in PRESETS:
            raise UsageError(f"unknown potential preset {self.preset!r}; choose from {PRESETS}")
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=float)
            if c.ndim != self.dimension:
                raise UsageError("coefficient array rank must equal the dimension")

    @property
    def name(self) -> str:
        return self.preset if self.coefficients is None else "polynomial"

    def __call__(self, *coords) -> np.ndarray:
        if len(coords) != self.dimension:
            raise UsageError("wrong number of coordinates")
        if self.coefficients is not None:
            c = np.asarray(self.coefficients, dtype=float)
            if self.dimension == 1:
                return np.polynomial.polynomial.polyval(coords[0], c)
            return np.polynomial.polynomial.polyval2d(coords[0], coords[1], c)
        if self.preset == "harmonic":
            return sum(0.5 * x * x for x in coords) + 0.5 * self.dimension * math.log(2 * math.pi)
        return sum(0.25 * x ** 4 - 0.5 * x * x for x in coords)


def _mesh(axis, d):
    return np.meshgrid(*([axis] * d), indexing="ij")


def _box_mass(pot, half, points, ref):
    axis = np.linspace(-half, half, points)
    h = axis[1] - axis[0]
    with np.errstate(over="ignore"):
        return float(np.sum(np.exp(-(pot(*_mesh(axis, pot.dimension)) - ref)))) * h ** pot.dimension


def auto_half_width(pot: PotentialSpec, tol=1e-14, max_half=50.0) -> float:
    """Smallest box half width (step 0.5) with ``exp(-V) < tol * max exp(-V)`` on its boundary."""
    probe = np.linspace(-max_half, max_half, 4001)
    if pot.dimension == 1:
        v = pot(probe)
    else:
        v = np.min(pot(*_mesh(probe[::8], 2)), axis=1)
    vmin = float(np.min(v))
    for half in np.arange(2.0, max_half + 0.5, 0.5):
        edge = np.array([-half, half])
        if pot.dimension == 1:
            ve = pot(edge)
        else:
            line = np.linspace(-half, half, 201)
            ve = np.concatenate([pot(e + 0 * line, line) for e in edge] + [pot(line, e + 0 * line) for e in edge])
        if np.all(ve - vmin > -math.log(tol)):
            return float(half)
    raise DomainError("potential is not confining enough for any box up to half width 50")


@dataclass(eq=False)
class DiscretizedOperator:
    potential: PotentialSpec
    axis: np.ndarray
    h: float
    V: np.ndarray
    shift: float
    weights: np.ndarray
    matrix: sp.csr_matrix
    diag: np.ndarray | None = None
    offdiag: np.ndarray | None = None

    @property
    def dimension(self) -> int:
        return self.potential.dimension

    @property
    def shape(self) -> tuple:
        return self.V.shape

    @property
    def size(self) -> int:
        return self.V.size

    def weighted_inner(self, a, b) -> float:
        return float(np.sum(self.weights * np.asarray(a) * np.asarray(b)))

    def apply_N(self, w) -> np.ndarray:
        """``N w`` in w-space (for checks)."""
        s = np.sqrt(self.weights).ravel()
        return (self.matrix @ (s * np.ravel(w)) / s).reshape(self.shape)


def discretize(pot: PotentialSpec, points: int = 2001, half_width=None) -> DiscretizedOperator:
    """Assemble the symmetric matrix ``A`` on ``points`` nodes per axis."""
    if points < 5:
        raise UsageError("need at least 5 grid points per axis")
    half = half_width or pot.half_width or auto_half_width(pot)
    d = pot.dimension
    with np.errstate(over="ignore", invalid="ignore"):
        ref = float(np.min(pot(*_mesh(np.linspace(-half, half, 401), d))))
        inner = _box_mass(pot, half, 2001 if d == 1 else 201, ref)
        outer = _box_mass(pot, 2 * half, 4001 if d == 1 else 401, ref)
    if not np.isfinite(outer) or outer / inner - 1.0 > 1e-6:
        raise DomainError(f"exp(-V) mass grows with the box (ratio {outer / inner:.6g}); V is not confining")
    axis = np.linspace(-half, half, points)
    h = float(axis[1] - axis[0])
    V = pot(*_mesh(axis, d))
    z = float(np.sum(np.exp(-(V - ref)))) * h ** d
    shift = math.log(z) - ref  # sum exp(-(V + shift)) h^d = 1
    weights = np.exp(-(V - ref)) * h ** d / z
    weights /= weights.sum()
    inv_h2 = 1.0 / (h * h)
    if d == 1:
        up = np.exp(0.5 * (V[:-1] - V[1:]))
        down = np.exp(0.5 * (V[1:] - V[:-1]))
        diag = np.zeros(points)
        diag[:-1] += up * inv_h2
        diag[1:] += down * inv_h2
        off = -np.full(points - 1, inv_h2)
        mat = sp.diags([off, diag, off], [-1, 0, 1], format="csr")
        return DiscretizedOperator(pot, axis, h, V, shift, weights, mat, diag, off)
    n = V.size
    idx = np.arange(n).reshape(V.shape)
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    for ax in range(d):
        a = np.take(idx, np.arange(points - 1), axis=ax).ravel()
        b = np.take(idx, np.arange(1, points), axis=ax).ravel()
        va, vb = V.ravel()[a], V.ravel()[b]
        np.add.at(diag, a, np.exp(0.5 * (va - vb)) * inv_h2)
        np.add.at(diag, b, np.exp(0.5 * (vb - va)) * inv_h2)
        rows += [a, b]
        cols += [b, a]
        vals += [np.full(a.size, -inv_h2)] * 2
    rows.append(np.arange(n))
    cols.append(np.arange(n))
    vals.append(diag)
    mat = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return DiscretizedOperator(pot, axis, h, V, shift, weights, mat)


@dataclass(eq=False)
class OperatorSpectrum:
    """Lowest eigenpairs; ``vectors`` are w-space eigenfunctions, orthonormal for ``weights``."""

    eigenvalues: np.ndarray
    vectors: np.ndarray
    groups: list
    residuals: np.ndarray
    weights: np.ndarray
    gap_tol: float

    @property
    def n_modes(self) -> int:
        return self.eigenvalues.size

    def level(self, k: int) -> float:
        """Eigenvalue ``lambda_k`` of the k-th eigenspace ``E_k`` (``E_0`` = constants)."""
        return float(np.mean(self.eigenvalues[self.groups[k]]))

    def group_of(self) -> np.ndarray:
        out = np.empty(self.n_modes, dtype=int)
        for g, members in enumerate(self.groups):
            out[members] = g
        return out

    def degeneracies(self) -> list:
        return [len(g) for g in self.groups]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "degeneracy_group"])
        for i, (lam, g) in enumerate(zip(self.eigenvalues, self.group_of())):
            w.writerow([i, format(float(lam), ".17g"), int(g)])
        return buf.getvalue()


def group_levels(eigenvalues, gap_tol) -> list:
    groups, current = [], [0]
    for i in range(1, len(eigenvalues)):
        if eigenvalues[i] - eigenvalues[i - 1] > gap_tol:
            groups.append(np.array(current))
            current = []
        current.append(i)
    groups.append(np.array(current))
    return groups


def spectrum(op: DiscretizedOperator, m: int, gap_tol=1e-6, residual_tol=1e-8) -> OperatorSpectrum:
    """Lowest ``m`` eigenpairs of ``A``.

    ``gap_tol="auto"`` widens the degeneracy threshold to the discretization
    error scale ``h^2 (1 + lambda)^2`` so that split copies of a continuum
    level are grouped together.
    """
    if m < 2 or m > op.size:
        raise UsageError(f"m must lie in [2, {op.size}], got {m}")
    if op.diag is not None:
        lam, g = eigh_tridiagonal(op.diag, op.offdiag, select="i", select_range=(0, m - 1))
    else:
        try:
            lam, g = eigsh(op.matrix, k=m, sigma=-0.1, which="LM", tol=1e-12)
        except Exception as exc:  # ArpackNoConvergence and friends
            raise NumericError(f"sparse eigensolver failed: {exc}") from exc
        order = np.argsort(lam)
        lam, g = lam[order], g[:, order]
    res = np.linalg.norm(op.matrix @ g - g * lam, axis=0)
    # rounding alone gives residuals ~ eps * ||A|| with ||A|| ~ 4 d / h^2
    limit = residual_tol * max(1.0, 4 * op.dimension / op.h ** 2 * 1e-4)
    if np.any(res > limit):
        raise NumericError(f"eigenpair residual {res.max():.3g} exceeds {limit:.3g}", float(res.max()))
    s = np.sqrt(op.weights).ravel()
    # the flux form annihilates constants exactly; swap in the exact kernel pair
    if abs(lam[0]) < 1e-6 and abs(abs(float(g[:, 0] @ s)) - 1.0) < 1e-6:
        lam[0] = 0.0
        g[:, 0] = s
        res[0] = float(np.linalg.norm(op.matrix @ s))
    f = g / s[:, None]
    # fix signs: ground state positive, others by their first significant entry
    for j in range(f.shape[1]):
        i = np.argmax(np.abs(g[:, j]) > 1e-3 * np.max(np.abs(g[:, j])))
        if j == 0:
            i = int(np.argmax(np.abs(g[:, 0])))
        if g[i, j] < 0:
            f[:, j] *= -1
    if gap_tol == "auto":
        tol = np.maximum(1e-6, op.h ** 2 * (1 + lam) ** 2)
        groups, current = [], [0]
        for i in range(1, m):
            if lam[i] - lam[i - 1] > tol[i]:
                groups.append(np.array(current))
                current = []
            current.append(i)
        groups.append(np.array(current))
        gap_val = float(tol.max())
    else:
        groups = group_levels(lam, gap_tol)
        gap_val = float(gap_tol)
    vectors = f.T.reshape((m,) + op.shape)
    return OperatorSpectrum(lam, vectors, groups, res, op.weights, gap_val)


@dataclass
class GeneralEvolution:
    values: np.ndarray
    coefficients: np.ndarray
    truncation_residual: float
    warning: bool


def expand(op: DiscretizedOperator, spec: OperatorSpectrum, w0):
    """Coefficients ``<w0, f_k>`` in the weighted inner product and relative residual."""
    w0 = np.asarray(w0, dtype=float).reshape(op.shape)
    pw = op.weights * w0
    coef = np.tensordot(spec.vectors, pw, axes=w0.ndim)
    recon = np.tensordot(coef, spec.vectors, axes=1)
    norm = math.sqrt(op.weighted_inner(w0, w0))
    resid = math.sqrt(max(op.weighted_inner(w0 - recon, w0 - recon), 0.0)) / max(norm, 1e-300)
    return coef, resid


def evolve_general(op: DiscretizedOperator, spec: OperatorSpectrum, w0, t: float) -> GeneralEvolution:
    """``w(t) = sum_k <w0, f_k> exp(-lambda_k t) f_k`` over the computed modes."""
    if t < 0:
        raise UsageError(f"time must be >= 0, got {t}")
    coef, resid = expand(op, spec, w0)
    ct = coef * np.exp(-spec.eigenvalues * t)
    vals = np.tensordot(ct, spec.vectors, axes=1)
    return GeneralEvolution(vals, ct, resid, resid > 1e-4)


def general_entropy(op: DiscretizedOperator, w, p: float) -> float:
    w = np.asarray(w, dtype=float)
    if w.min() < TOL_POS:
        raise DomainError(f"field minimum {w.min():.3g} is not positive")
    if abs(p - 1.0) <= 1e-6:
        f = w * np.log(w)
    else:
        f = np.expm1((p - 1.0) * np.log(w)) * w / (p - 1.0)
    return float(np.sum(op.weights * f))


def project_out_levels(op: DiscretizedOperator, spec: OperatorSpectrum, w0, n: int) -> np.ndarray:
    """Remove the components of ``w0`` in ``E_1, ..., E_{n-1}`` and restore unit mass."""
    w = np.array(w0, dtype=float).reshape(op.shape)
    if n - 1 >= len(spec.groups):
        raise UsageError(f"spectrum has only {len(spec.groups)} levels, need {n}")
    for k in range(1, n):
        for j in spec.groups[k]:
            fj = spec.vectors[j]
            w = w - op.weighted_inner(w, fj) * fj
    return w - (float(np.sum(op.weights * w)) - 1.0)


def smooth_initial_data(op: DiscretizedOperator, spec: OperatorSpectrum, n: int, eps: float,
                        seed, harmonics: int = 3) -> np.ndarray:
    """Seeded bounded data ``1 + sum r_j (cos, sin)(j x)`` projected onto ``(E_1 + ... + E_{n-1})^perp``.

    The perturbation is rescaled after projection so that ``max |w0 - 1| = eps``.
    """
    if not 0 < eps < 1:
        raise UsageError(f"eps must lie in (0, 1), got {eps}")
    rng = np.random.default_rng(seed)
    mesh = _mesh(op.axis, op.dimension)
    pert = np.zeros(op.shape)
    for x in mesh:
        for j in range(1, harmonics + 1):
            a, b = rng.uniform(-1, 1, size=2)
            pert = pert + a * np.cos(j * x) + b * np.sin(j * x)
    w = project_out_levels(op, spec, 1.0 + pert, n)
    dev = np.max(np.abs(w - 1.0))
    if dev == 0:
        raise NonAdmissibleError("projected perturbation vanishes")
    return 1.0 + (w - 1.0) * (eps / dev)


@dataclass
class GeneralDecay:
    times: np.ndarray
    entropy: np.ndarray
    rate_bound: float
    fitted_rate: float
    residual_rms: float
    lambda_n: float
    H_p: float
    envelope_ok: bool
    worst_slack: float
    truncation_residual: float
    positivity_margin: float
    report: object = None
    extra: dict = dc_field(default_factory=dict)


def check_general_decay(op: DiscretizedOperator, spec: OperatorSpectrum, w0, n: int, p: float,
                        t_grid, window=None) -> GeneralDecay:
    """Envelope ``E_p(t) <= E_p(0) exp(-lambda_n p t / H_p[w0])`` after projecting ``w0``."""
    from .inequalities import make_report, violation_tolerance

    w0 = project_out_levels(op, spec, w0, n)
    margin = float(w0.min())
    if margin < TOL_POS:
        raise NonAdmissibleError(f"projection destroyed positivity (min {margin:.3g})", margin)
    lam_n = spec.level(n)
    Hp = cal_H_p((float(w0.min()), float(w0.max())), p)
    rate = lam_n * p / Hp
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    coef, resid = expand(op, spec, w0)
    ent = []
    for t in t_grid:
        vals = np.tensordot(coef * np.exp(-spec.eigenvalues * t), spec.vectors, axes=1)
        ent.append(general_entropy(op, vals, p))
    ent = np.array(ent)
    bound = ent[0] * np.exp(-rate * (t_grid - t_grid[0]))
    slack = bound - ent
    tol = np.array([violation_tolerance(b) for b in bound])
    ok = bool(np.all(slack >= -tol))
    i = int(np.argmin(slack))
    rep = make_report("general_decay_envelope", ent[i], bound[i], rate,
                      {"potential": op.potential.name, "n": n, "p": p, "t": float(t_grid[i])})
    fit_rate, rms = float("nan"), float("nan")
    if ent[0] > 1e-12:
        lo, hi = window if window is not None else (t_grid[0], t_grid[-1])
        est = DecayRateEstimator(window=(lo, hi)).fit(t_grid, ent)
        fit_rate, rms = est.rate_, est.residual_rms_
    return GeneralDecay(t_grid, ent, rate, fit_rate, rms, lam_n, Hp, ok, float(slack[i]), resid, margin, rep)


class GeneralOUOperator(TransformerMixin, BaseEstimator):
    """Spectral decomposition of the discretized generalized OU operator.

    ``fit`` assembles and diagonalizes; ``transform`` maps rows of grid values
    to eigen-coefficients; ``inverse_transform`` maps back; :meth:`evolve`
    runs the flow.

    Parameters
    ----------
    potential : str or PotentialSpec
    dimension : int
    points : int
        Grid points per axis.
    half_width : float or None
        Box half width; chosen from the potential when None.
    n_modes : int or None
        Eigenpairs kept; defaults to 200 in 1D and 40 in 2D.
    gap_tol : float or "auto"
    """

    def __init__(self, potential="harmonic", dimension=1, points=2001, half_width=None,
                 n_modes=None, gap_tol=1e-6):
        self.potential = potential
        self.dimension = dimension
        self.points = points
        self.half_width = half_width
        self.n_modes = n_modes
        self.gap_tol = gap_tol

    def fit(self, X=None, y=None):
        pot = self.potential
        if isinstance(pot, str):
            pot = PotentialSpec(self.dimension, pot)
        self.potential_ = pot
        self.operator_ = discretize(pot, self.points, self.half_width)
        m = self.n_modes or min(self.operator_.size, 200 if pot.dimension == 1 else 40)
        self.spectrum_ = spectrum(self.operator_, m, self.gap_tol)
        self.eigenvalues_ = self.spectrum_.eigenvalues
        self.n_features_in_ = self.operator_.size
        return self

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        X = check_array(X)
        return np.stack([expand(self.operator_, self.spectrum_, row)[0] for row in X])

    def inverse_transform(self, C):
        check_is_fitted(self, "spectrum_")
        C = check_array(C)
        flat = self.spectrum_.vectors.reshape(self.spectrum_.n_modes, -1)
        return C @ flat

    def evolve(self, w0, t):
        check_is_fitted(self, "spectrum_")
        return evolve_general(self.operator_, self.spectrum_, w0, t)
