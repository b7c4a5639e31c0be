"""Entropies, entropy productions and the closed-form constants of the decay estimates.

Functionals act on :class:`~entroflow.field.GridField` data, i.e. on values
(and gradients) at the nodes of an explicit quadrature rule.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, UsageError
from .field import TOL_POS, BoundsEstimate, GridField
from .hermite import integrate_mu

P1_THRESHOLD = 1e-6
MASS_TOL = 1e-8
_TAYLOR_RADIUS = 1e-4


@dataclass(frozen=True)
class EntropyParams:
    p: float
    p1_threshold: float = P1_THRESHOLD

    def __post_init__(self):
        _check_p(self.p)

    @property
    def logarithmic(self) -> bool:
        return abs(self.p - 1.0) <= self.p1_threshold


@dataclass(frozen=True)
class ConstantsRequest:
    """Inputs of the interpolated Beckner constant; ``B_n2`` defaults to ``1/n``."""

    n: int
    p: float
    B_n1: float = 2.0
    B_n2: float | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise UsageError(f"n must be a positive integer, got {self.n}")
        _check_p(self.p)
        if self.B_n2 is None:
            object.__setattr__(self, "B_n2", 1.0 / self.n)
        if self.B_n1 <= 0 or self.B_n2 <= 0:
            raise UsageError("endpoint constants must be positive")


def _check_p(p):
    if not (1.0 <= p <= 2.0):
        raise UsageError(f"p must lie in [1, 2], got {p}")


def _check_positive(grid: GridField):
    lo = grid.minimum()
    if lo < TOL_POS:
        raise DomainError(f"field is not positive on its grid (min {lo:.3g} < {TOL_POS:g})")


def _check_mass(grid: GridField):
    m = grid.mass
    if abs(m - 1.0) > MASS_TOL:
        raise DomainError(f"field mass {m:.12g} differs from 1")


def entropy_p(grid: GridField, p: float, p1_threshold: float = P1_THRESHOLD) -> float:
    """``E_p[w] = int (w^p - 1)/(p - 1) dmu``; ``int w log w dmu`` at p = 1."""
    _check_p(p)
    _check_positive(grid)
    _check_mass(grid)
    w = grid.values
    if abs(p - 1.0) <= p1_threshold:
        f = w * np.log(w)
    else:
        # (w^p - w)/(p-1) equals the same integral for unit mass and stays accurate near p = 1
        f = np.expm1((p - 1.0) * np.log(w)) * w / (p - 1.0)
    return integrate_mu(f, grid.rule)


def fisher_info(grid: GridField) -> float:
    """``int |grad w|^2 / w dmu``."""
    _check_positive(grid)
    return integrate_mu(grid.grad_sq() / grid.values, grid.rule)


def dirichlet_p(grid: GridField, p: float) -> float:
    """``int |grad w^{p/2}|^2 dmu = (p^2/4) int w^{p-2} |grad w|^2 dmu``."""
    _check_p(p)
    _check_positive(grid)
    w = grid.values
    return 0.25 * p * p * integrate_mu(w ** (p - 2.0) * grid.grad_sq(), grid.rule)


def production_p(grid: GridField, p: float) -> float:
    """Entropy production ``(4/p) int |grad w^{p/2}|^2 dmu``; the Fisher information at p = 1."""
    _check_p(p)
    if p == 1.0:
        return fisher_info(grid)
    return 4.0 / p * dirichlet_p(grid, p)


def h_p(s, p: float):
    """Continuous profile ``h_p`` with ``h_p(0) = 1`` and ``h_p(1) = p/2``; accepts arrays."""
    _check_p(p)
    s_arr = np.asarray(s, dtype=float)
    if np.any(s_arr < 0) or not np.all(np.isfinite(s_arr)):
        raise DomainError("h_p is defined for finite s >= 0")
    u = s_arr - 1.0
    near = np.abs(u) < _TAYLOR_RADIUS
    safe_u = np.where(near, 1.0, u)
    safe_s = np.where(near, 2.0, s_arr)
    if abs(p - 1.0) <= P1_THRESHOLD:
        with np.errstate(divide="ignore", invalid="ignore"):
            slog = np.where(safe_s > 0, safe_s * np.log(np.where(safe_s > 0, safe_s, 1.0)), 0.0)
        far = (slog - safe_u) / safe_u ** 2
        taylor = 0.5 - u / 6.0 + u * u / 12.0
    else:
        far = (safe_s ** p - 1.0 - p * safe_u) / ((p - 1.0) * safe_u ** 2)
        taylor = p / 2.0 + p * (p - 2.0) * u / 6.0 + p * (p - 2.0) * (p - 3.0) * u * u / 24.0
    out = np.where(near, taylor, far)
    return float(out) if out.ndim == 0 else out


def cal_H_p(bounds, p: float) -> float:
    """``H_p[w] = (sup w)^{2-p} h_p(inf w)`` from a bounds estimate or an ``(inf, sup)`` pair."""
    if isinstance(bounds, BoundsEstimate):
        lo, hi = bounds.inf_w, bounds.sup_w
    else:
        lo, hi = bounds
    if lo < 0:
        raise DomainError(f"H_p needs a nonnegative field, inf = {lo:.3g}")
    if hi < lo:
        raise UsageError("sup below inf")
    return hi ** (2.0 - p) * h_p(lo, p)


def A_p(s, p: float):
    """Csiszar-Kullback profile ``2^{1/p} p^{-1/2} [1 + (p-1) s]^{1-p/2} sqrt(s)``."""
    _check_p(p)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0):
        raise DomainError("A_p is defined for s >= 0")
    out = 2.0 ** (1.0 / p) / math.sqrt(p) * (1.0 + (p - 1.0) * s) ** (1.0 - p / 2.0) * np.sqrt(s)
    return float(out) if out.ndim == 0 else out


def _one_minus_ratio_power(p, exponent):
    """``1 - ((2-p)/p)^exponent`` without cancellation near p = 1."""
    if p == 2.0:
        return 1.0
    log_r = math.log1p((2.0 - 2.0 * p) / p)
    return -math.expm1(exponent * log_r)


def B_np(req: ConstantsRequest | None = None, *, n=None, p=None, B_n1=2.0, B_n2=None) -> float:
    """Interpolated generalized-Poincare constant between the p = 1 and p = 2 endpoints."""
    if req is None:
        req = ConstantsRequest(n, p, B_n1, B_n2)
    p = req.p
    if p == 1.0:
        return float(req.B_n1)
    if p == 2.0:
        return float(req.B_n2)
    return _one_minus_ratio_power(p, req.B_n1 / (2.0 * req.B_n2)) * req.B_n2 / (p - 1.0)


def lambda_np(n: int, p: float) -> float:
    """``(2/p) n (p-1) / [1 - ((2-p)/p)^n]``; equals 1 at p = 1 by continuity."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    _check_p(p)
    if p == 1.0:
        return 1.0
    return 2.0 / p * n * (p - 1.0) / _one_minus_ratio_power(p, n)


def K_npw(n: int, p: float, H1: float) -> float:
    """``(n (p-1))^{-1} [1 - ((2-p)/p)^{2 H_1}]`` for ``1 < p < 2``."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    if not 1.0 < p < 2.0:
        raise UsageError(f"K[n,p,w] needs 1 < p < 2, got {p}")
    if not H1 > 0:
        raise UsageError(f"H_1 must be positive, got {H1}")
    return _one_minus_ratio_power(p, 2.0 * H1) / (n * (p - 1.0))


def rate_2lambda(n, p) -> float:
    return 2.0 * lambda_np(n, p)


def rate_4_over_pK(n, p, H1) -> float:
    """Entropy decay rate ``4 / (p K[n,p,w0])``; at p = 1 and p = 2 the limits ``n/H_1`` and ``2n``."""
    if p == 2.0:
        return 2.0 * n
    if p == 1.0:
        return n / H1
    return 4.0 / (p * K_npw(n, p, H1))


def rate_np_over_Hp(n, p, Hp) -> float:
    return n * p / Hp
