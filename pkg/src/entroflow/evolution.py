"""Ornstein-Uhlenbeck flow in the Hermite basis and its heat-equation counterpart.

The OU generator is diagonal on ``H_k`` with eigenvalue ``-|k|``, so the flow
is exact: ``c_k(t) = c_k(0) exp(-|k| t)``. Heat solutions are recovered
through ``u(t, x) = R^{-d} v(log R, x / R)`` with ``R = sqrt(1 + 2t)``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np

from .entropy import A_p, cal_H_p, entropy_p, fisher_info
from .errors import UsageError
from .field import (
    SpectralField,
    default_dense_grid,
    estimate_bounds,
    l2_distance_to_one,
    synthesize,
)
from .hermite import default_quad_order, gauss_hermite_rule

HEAT_HALF_WIDTH = 10.0
HEAT_POINTS_1D = 801


def evolve_ou(field: SpectralField, t: float) -> SpectralField:
    if t < 0:
        raise UsageError(f"time must be >= 0, got {t}")
    decay = np.exp(-field.basis.degrees * float(t))
    return field.replace(field.coefficients * decay)


def stationary_gaussian(x) -> np.ndarray:
    """``v_inf(x) = (2 pi)^{-d/2} exp(-|x|^2 / 2)`` for points of shape ``(..., d)``."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        x = x[None]
    d = x.shape[-1]
    return (2 * np.pi) ** (-d / 2) * np.exp(-0.5 * np.sum(x * x, axis=-1))


def green(t: float, x, y) -> np.ndarray:
    """Heat kernel ``(4 pi t)^{-d/2} exp(-|x - y|^2 / (4t))``."""
    if not t > 0:
        raise UsageError(f"Green function needs t > 0, got {t}")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    d = x.shape[-1]
    r2 = np.sum((x - y) ** 2, axis=-1)
    return (4 * np.pi * t) ** (-d / 2) * np.exp(-r2 / (4 * t))


@dataclass(frozen=True)
class HeatFrame:
    """Heat solution and its self-similar profile on a tensor lattice."""

    t: float
    R: float
    axis: np.ndarray
    dimension: int
    u: np.ndarray
    u_inf: np.ndarray
    mass: float
    warning: bool = False

    @property
    def cell(self) -> float:
        return float(self.axis[1] - self.axis[0]) ** self.dimension


def heat_lattice(t_heat: float, dimension=1, half_width=HEAT_HALF_WIDTH, points=None) -> np.ndarray:
    """Axis of the default lattice ``[-10 R, 10 R]`` scaled with ``R = sqrt(1 + 2t)``."""
    if points is None:
        points = {1: HEAT_POINTS_1D, 2: 401, 3: 121}[dimension]
    R = math.sqrt(1 + 2 * t_heat)
    return np.linspace(-half_width * R, half_width * R, points)


def _lattice_integral(values, axis, dimension) -> float:
    h = float(axis[1] - axis[0])
    return float(np.sum(values)) * h ** dimension


def heat_from_selfsimilar(field0: SpectralField, t_heat: float, axis=None) -> HeatFrame:
    """Heat solution at time ``t_heat`` from initial ratio ``w_0`` via the OU flow."""
    if t_heat < 0:
        raise UsageError(f"heat time must be >= 0, got {t_heat}")
    d = field0.dimension
    if axis is None:
        axis = heat_lattice(t_heat, d)
    axis = np.asarray(axis, dtype=float)
    R = math.sqrt(1 + 2 * t_heat)
    w_t = evolve_ou(field0, math.log(R))
    y = axis / R
    w_vals = w_t.on_axes([y] * d)
    g1 = np.exp(-0.5 * y * y) / math.sqrt(2 * np.pi)
    v_inf = g1
    for _ in range(d - 1):
        v_inf = np.multiply.outer(v_inf, g1)
    u = R ** (-d) * w_vals * v_inf
    u_inf = R ** (-d) * v_inf  # equals G(t + 1/2, x, 0)
    mass = _lattice_integral(u, axis, d)
    warn = mass < 1 - 1e-6
    return HeatFrame(float(t_heat), R, axis, d, u, u_inf, mass, warn)


def _kernel_matrix(t, x_axis, y_axis):
    diff = x_axis[:, None] - y_axis[None, :]
    return (4 * np.pi * t) ** -0.5 * np.exp(-diff * diff / (4 * t))


def convolve_green(u0, y_axis, t: float, x_axis=None) -> np.ndarray:
    """Direct lattice quadrature of ``int u0(y) G(t, x, y) dy``.

    ``u0`` lives on the tensor lattice spanned by ``y_axis``; the result lives
    on the lattice spanned by ``x_axis`` (default: the same).
    """
    if not t > 0:
        raise UsageError(f"convolution needs t > 0, got {t}")
    u0 = np.asarray(u0, dtype=float)
    y_axis = np.asarray(y_axis, dtype=float)
    x_axis = y_axis if x_axis is None else np.asarray(x_axis, dtype=float)
    h = float(y_axis[1] - y_axis[0])
    k = _kernel_matrix(t, x_axis, y_axis) * h
    out = u0
    for _ in range(u0.ndim):
        out = np.tensordot(out, k, axes=([0], [1]))
    return out


def lp_distance_heat(frame: HeatFrame, p: float) -> float:
    """``||u - u_inf||_{L^p(dx)}`` on the frame lattice."""
    if p < 1:
        raise UsageError(f"p must be >= 1, got {p}")
    diff = np.abs(frame.u - frame.u_inf)
    return _lattice_integral(diff ** p, frame.axis, frame.dimension) ** (1.0 / p)


def u_inf_sup(t_heat: float, dimension: int) -> float:
    """``||u_inf(t)||_inf = (2 pi R^2)^{-d/2}``."""
    return (2 * np.pi * (1 + 2 * t_heat)) ** (-dimension / 2)


def heat_lp_bound(t_heat, p, n, E_p0, H_p0, dimension) -> float:
    """Right-hand side of the improved intermediate-asymptotics estimate in ``L^p(dx)``."""
    q = dimension / 2 * (1 - 1 / p)
    return (2 * np.pi) ** (-q) * A_p(E_p0, p) * (1 + 2 * t_heat) ** (-n * p / (4 * H_p0) - q)


@dataclass
class Trajectory:
    """Samples of an OU trajectory with the diagnostics exported to CSV."""

    initial: SpectralField
    times: np.ndarray
    fields: list
    p_values: tuple = (1.0,)
    quad_order: int | None = None
    rows: list = dc_field(default_factory=list)

    @property
    def columns(self) -> list:
        cols = ["t", "E_1"]
        cols += [f"E_{_p_label(p)}" for p in self.p_values if p != 1.0]
        cols += ["production", "l2_dist", "inf_w", "sup_w", "H_1"]
        return cols

    def column(self, name) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for r in self.rows:
            writer.writerow([format(float(v), ".17g") for v in r])
        return buf.getvalue()


def _p_label(p) -> str:
    return format(float(p), "g")


def _sample_row(field, t, p_values, quad_order):
    rule = gauss_hermite_rule(quad_order, field.dimension)
    grid = synthesize(field, rule)
    bounds = estimate_bounds(field, default_dense_grid(field.dimension, field.max_degree, rule), rule)
    row = [float(t), entropy_p(grid, 1.0)]
    row += [entropy_p(grid, p) for p in p_values if p != 1.0]
    row += [fisher_info(grid), l2_distance_to_one(field), bounds.inf_w, bounds.sup_w, cal_H_p(bounds, 1.0)]
    return row


def sample_trajectory(field0: SpectralField, times, p_values=(1.0,), quad_order=None,
                      max_workers=None) -> Trajectory:
    """Evolve ``field0`` to each time and collect entropies, production and bounds.

    Samples are independent; ``max_workers > 1`` evaluates them on a thread pool.
    """
    times = np.sort(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise UsageError("sample times must be >= 0")
    if quad_order is None:
        quad_order = default_quad_order(field0.max_degree)
    p_values = tuple(float(p) for p in p_values)
    fields = [evolve_ou(field0, t) for t in times]
    args = [(f, t, p_values, quad_order) for f, t in zip(fields, times)]
    if max_workers and max_workers > 1:
        with ThreadPoolExecutor(max_workers) as pool:
            rows = list(pool.map(lambda a: _sample_row(*a), args))
    else:
        rows = [_sample_row(*a) for a in args]
    return Trajectory(field0, times, fields, p_values, quad_order, rows)
