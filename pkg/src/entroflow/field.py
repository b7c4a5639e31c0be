"""Density ratios ``w = v / v_inf`` as Hermite spectral fields and as grid data."""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field as dc_field
from functools import cached_property

import numpy as np

from .errors import DomainError, UsageError
from .hermite import (
    HermiteBasis,
    QuadratureRule,
    as_index,
    default_quad_order,
    evaluate_tensor,
    gauss_hermite_rule,
    hermite_vandermonde,
    integrate_mu,
    project_tensor,
)

TOL_POS = 1e-10
DEFAULT_SPACING = 0.02
MAX_DENSE_POINTS = 2_000_000


def _readonly(a):
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SpectralField:
    """``w = sum_k c_k H_k`` with coefficients in graded-lex order."""

    dimension: int
    max_degree: int
    coefficients: np.ndarray

    def __post_init__(self):
        basis = HermiteBasis(self.dimension, self.max_degree)
        c = _readonly(self.coefficients)
        if c.shape != (basis.size,):
            raise UsageError(
                f"{basis!r} needs {basis.size} coefficients, got shape {c.shape}"
            )
        if not np.all(np.isfinite(c)):
            raise UsageError("coefficients must be finite")
        object.__setattr__(self, "coefficients", c)

    @cached_property
    def basis(self) -> HermiteBasis:
        return HermiteBasis(self.dimension, self.max_degree)

    @classmethod
    def constant(cls, dimension=1, max_degree=0):
        basis = HermiteBasis(dimension, max_degree)
        c = np.zeros(basis.size)
        c[0] = 1.0
        return cls(dimension, max_degree, c)

    @classmethod
    def from_modes(cls, modes, dimension=None, max_degree=None, mass=1.0):
        """Build ``mass + sum a_k H_k`` from a ``{k: a_k}`` mapping."""
        modes = {as_index(k): float(a) for k, a in dict(modes).items()}
        if dimension is None:
            dimension = len(next(iter(modes))) if modes else 1
        if max_degree is None:
            max_degree = max((sum(k) for k in modes), default=0)
        basis = HermiteBasis(dimension, max_degree)
        c = np.zeros(basis.size)
        c[0] = mass
        for k, a in modes.items():
            if len(k) != dimension:
                raise UsageError(f"multi-index {k} does not have dimension {dimension}")
            if k not in basis.position:
                raise UsageError(f"multi-index {k} exceeds max_degree {max_degree}")
            c[basis.position[k]] += a
        return cls(dimension, max_degree, c)

    def coefficient(self, k) -> float:
        k = as_index(k)
        pos = self.basis.position.get(k)
        return 0.0 if pos is None else float(self.coefficients[pos])

    def replace(self, coefficients) -> "SpectralField":
        return SpectralField(self.dimension, self.max_degree, coefficients)

    def tensor(self) -> np.ndarray:
        return self.basis.to_tensor(self.coefficients)

    def on_axes(self, axes, derivative_axis=None) -> np.ndarray:
        return evaluate_tensor(self.tensor(), axes, derivative_axis)

    def __call__(self, x) -> np.ndarray:
        """Pointwise values at ``x`` of shape ``(..., d)`` (or ``(...)`` when d = 1)."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if x.shape[-1] != self.dimension:
            raise UsageError(f"points of dimension {x.shape[-1]} for a {self.dimension}-d field")
        flat = x.reshape(-1, self.dimension)
        phis = [hermite_vandermonde(self.max_degree, flat[:, j]) for j in range(self.dimension)]
        total = np.zeros(flat.shape[0])
        for k, c in zip(self.basis.indices, self.coefficients):
            if c == 0.0:
                continue
            term = np.full(flat.shape[0], c)
            for j, kj in enumerate(k):
                term *= phis[j][:, kj]
            total += term
        return total.reshape(x.shape[:-1])

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "max_degree": self.max_degree,
            "coefficients": [float(c) for c in self.coefficients],
        }

    @classmethod
    def from_dict(cls, data) -> "SpectralField":
        try:
            return cls(int(data["dimension"]), int(data["max_degree"]),
                       np.asarray(data["coefficients"], dtype=float))
        except (KeyError, TypeError) as exc:
            raise UsageError(f"malformed field record: {exc}") from exc

    def to_json(self) -> str:
        coeffs = ", ".join(format(float(c), ".17g") for c in self.coefficients)
        return (
            f'{{"dimension": {self.dimension}, "max_degree": {self.max_degree}, '
            f'"coefficients": [{coeffs}]}}'
        )

    @classmethod
    def from_json(cls, text: str) -> "SpectralField":
        return cls.from_dict(json.loads(text))

    def allclose(self, other, atol=1e-12) -> bool:
        return (
            self.dimension == other.dimension
            and self.max_degree == other.max_degree
            and np.allclose(self.coefficients, other.coefficients, rtol=0, atol=atol)
        )


@dataclass(frozen=True)
class DenseGridSpec:
    """Regular lattice on ``[-half_width, half_width]^dimension``."""

    dimension: int
    half_width: float
    spacing: float = DEFAULT_SPACING

    @property
    def points_per_axis(self) -> int:
        return int(round(2 * self.half_width / self.spacing)) + 1

    @property
    def axis(self) -> np.ndarray:
        return np.linspace(-self.half_width, self.half_width, self.points_per_axis)

    @property
    def actual_spacing(self) -> float:
        return 2 * self.half_width / (self.points_per_axis - 1)

    @property
    def coarse(self) -> bool:
        return self.actual_spacing > 0.05 + 1e-12

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "half_width": self.half_width,
            "spacing": self.actual_spacing,
            "points_per_axis": self.points_per_axis,
        }


def default_dense_grid(dimension, max_degree, rule=None, spacing=DEFAULT_SPACING) -> DenseGridSpec:
    """Lattice wide enough for the oscillation region and all quadrature nodes.

    In high dimension the spacing is widened to keep the lattice under
    ``MAX_DENSE_POINTS`` points, which marks the resulting estimate as coarse.
    """
    half = max(6.0, math.sqrt(2 * max_degree + 4))
    if rule is not None:
        half = max(half, float(np.max(np.abs(rule.nodes))))
    half = math.ceil(half * 10) / 10
    per_axis_cap = int(MAX_DENSE_POINTS ** (1.0 / dimension))
    if int(round(2 * half / spacing)) + 1 > per_axis_cap:
        spacing = 2 * half / (per_axis_cap - 1)
    return DenseGridSpec(dimension, half, spacing)


@dataclass(frozen=True, eq=False)
class GridField:
    """Values of ``w`` at quadrature nodes, optional gradients and dense-lattice values."""

    rule: QuadratureRule
    values: np.ndarray
    gradients: np.ndarray | None = None
    dense_values: np.ndarray | None = None
    dense_grid: DenseGridSpec | None = None
    recipe: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        values = _readonly(self.values)
        if values.shape != self.rule.shape:
            raise UsageError(f"values shape {values.shape} does not match rule {self.rule.shape}")
        if not np.all(np.isfinite(values)):
            raise DomainError("grid values must be finite")
        object.__setattr__(self, "values", values)
        if self.gradients is not None:
            g = _readonly(self.gradients)
            if g.shape != (self.rule.dimension,) + self.rule.shape:
                raise UsageError(f"gradient shape {g.shape} does not match rule")
            object.__setattr__(self, "gradients", g)
        if self.dense_values is not None:
            if self.dense_grid is None:
                raise UsageError("dense values need their grid spec")
            object.__setattr__(self, "dense_values", _readonly(self.dense_values))

    @property
    def dimension(self) -> int:
        return self.rule.dimension

    @property
    def mass(self) -> float:
        return integrate_mu(self.values, self.rule)

    def grad_sq(self) -> np.ndarray:
        if self.gradients is None:
            raise UsageError("this grid field carries no gradients")
        return np.sum(self.gradients ** 2, axis=0)

    def minimum(self) -> float:
        m = float(self.values.min())
        if self.dense_values is not None:
            m = min(m, float(self.dense_values.min()))
        return m

    def maximum(self) -> float:
        m = float(self.values.max())
        if self.dense_values is not None:
            m = max(m, float(self.dense_values.max()))
        return m


@dataclass(frozen=True)
class BoundsEstimate:
    """Grid estimates of ``inf w`` and ``sup w`` with the points attaining them."""

    inf_w: float
    sup_w: float
    argmin: tuple
    argmax: tuple
    grid: dict
    coarse: bool = False
    unbounded_below: bool = False

    @property
    def admissible(self) -> bool:
        return self.inf_w >= TOL_POS

    @property
    def sup_deviation(self) -> float:
        return max(self.sup_w - 1.0, 1.0 - self.inf_w)


def synthesize(field: SpectralField, rule: QuadratureRule, dense_grid=None, gradients=True) -> GridField:
    """Evaluate a spectral field (and its gradient) at every node of ``rule``."""
    if rule.dimension != field.dimension:
        raise UsageError(f"rule dimension {rule.dimension} != field dimension {field.dimension}")
    t = field.tensor()
    axes = rule.axes
    values = evaluate_tensor(t, axes)
    grads = None
    if gradients:
        grads = np.stack([evaluate_tensor(t, axes, j) for j in range(field.dimension)])
    dense = None
    if dense_grid is not None:
        dense = evaluate_tensor(t, [dense_grid.axis] * field.dimension)
    return GridField(rule, values, grads, dense, dense_grid,
                     {"source": "spectral", "max_degree": field.max_degree})


def analyze(grid: GridField, max_degree: int) -> SpectralField:
    """Hermite coefficients ``c_k = int w H_k dmu`` by quadrature."""
    if grid.rule.order < max_degree + 1:
        raise UsageError(
            f"quadrature order {grid.rule.order} too low for degree {max_degree} (need >= {max_degree + 1})"
        )
    basis = HermiteBasis(grid.dimension, max_degree)
    t = project_tensor(grid.values, grid.rule, max_degree)
    return SpectralField(grid.dimension, max_degree, basis.from_tensor(t))


def gradient_sq_norm(field: SpectralField) -> float:
    """``int |grad w|^2 dmu = sum_k |k| c_k^2``."""
    c = field.coefficients
    return float(np.sum(field.basis.degrees * c * c))


def l2_distance_to_one(field: SpectralField) -> float:
    """``||w - 1||_{L^2(dmu)}``, assuming ``c_0 = 1``."""
    c = field.coefficients
    return float(math.sqrt(np.sum(c[1:] ** 2) + (c[0] - 1.0) ** 2))


def lp_norm_mu(grid: GridField, p: float) -> float:
    if p < 1:
        raise UsageError(f"p must be >= 1, got {p}")
    return integrate_mu(np.abs(grid.values) ** p, grid.rule) ** (1.0 / p)


def _leading_part_negative(field: SpectralField, n_dirs=721) -> bool:
    """Whether the top-degree homogeneous part of ``w`` is negative somewhere at infinity."""
    c = field.coefficients
    nz = np.flatnonzero(np.abs(c) > 0)
    if nz.size == 0:
        return False
    top = int(field.basis.degrees[nz].max())
    if top == 0:
        return False
    if top % 2 == 1:
        return True
    d = field.dimension
    if d == 1:
        dirs = np.array([[1.0]])
    elif d == 2:
        th = np.linspace(0, np.pi, n_dirs, endpoint=False)
        dirs = np.stack([np.cos(th), np.sin(th)], axis=1)
    else:
        i = np.arange(n_dirs) + 0.5
        phi = np.arccos(1 - 2 * i / n_dirs)
        th = np.pi * (1 + 5 ** 0.5) * i
        dirs = np.stack([np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=1)
    lead = np.zeros(dirs.shape[0])
    for k, ck in zip(field.basis.indices, c):
        if sum(k) != top or ck == 0.0:
            continue
        term = np.full(dirs.shape[0], ck)
        for j, kj in enumerate(k):
            term *= dirs[:, j] ** kj / math.sqrt(math.factorial(kj))
        lead += term
    return bool(lead.min() < 0)


def estimate_bounds(field: SpectralField, dense_grid: DenseGridSpec | None = None,
                    rule: QuadratureRule | None = None) -> BoundsEstimate:
    """Inf/sup of ``w`` over a dense lattice, plus the nodes of ``rule`` if given.

    Including the nodes guarantees the estimate brackets every value a
    quadrature of ``w`` sees.
    """
    if dense_grid is None:
        dense_grid = default_dense_grid(field.dimension, field.max_degree, rule)
    if dense_grid.dimension != field.dimension:
        raise UsageError("dense grid dimension does not match field")
    min_half = math.sqrt(2 * field.max_degree + 4)
    if dense_grid.half_width < min_half - 1e-12:
        raise UsageError(f"dense grid half width {dense_grid.half_width} < {min_half:.4g}")
    axis = dense_grid.axis
    vals = field.on_axes([axis] * field.dimension)
    i_min = np.unravel_index(np.argmin(vals), vals.shape)
    i_max = np.unravel_index(np.argmax(vals), vals.shape)
    lo, hi = float(vals[i_min]), float(vals[i_max])
    arg_lo = tuple(float(axis[i]) for i in i_min)
    arg_hi = tuple(float(axis[i]) for i in i_max)
    if rule is not None:
        nv = field.on_axes(rule.axes)
        j_min = np.unravel_index(np.argmin(nv), nv.shape)
        j_max = np.unravel_index(np.argmax(nv), nv.shape)
        if nv[j_min] < lo:
            lo, arg_lo = float(nv[j_min]), tuple(float(rule.nodes[i]) for i in j_min)
        if nv[j_max] > hi:
            hi, arg_hi = float(nv[j_max]), tuple(float(rule.nodes[i]) for i in j_max)
    coarse = dense_grid.coarse
    if coarse:
        warnings.warn(f"bounds lattice spacing {dense_grid.actual_spacing:.3g} > 0.05", stacklevel=2)
    grid_meta = dense_grid.to_dict()
    if rule is not None:
        grid_meta["quad_order"] = rule.order
    return BoundsEstimate(lo, hi, arg_lo, arg_hi, grid_meta, coarse, _leading_part_negative(field))


def grid_bounds(grid: GridField) -> BoundsEstimate:
    """Inf/sup of a grid field over its nodes and dense lattice."""
    vals = [grid.values.ravel()]
    pts = [grid.rule.points().reshape(-1, grid.dimension)]
    meta = {"quad_order": grid.rule.order}
    coarse = False
    if grid.dense_values is not None:
        vals.append(grid.dense_values.ravel())
        mesh = np.meshgrid(*[grid.dense_grid.axis] * grid.dimension, indexing="ij")
        pts.append(np.stack(mesh, axis=-1).reshape(-1, grid.dimension))
        meta.update(grid.dense_grid.to_dict())
        coarse = grid.dense_grid.coarse
    v = np.concatenate(vals)
    p = np.concatenate(pts)
    i, j = int(np.argmin(v)), int(np.argmax(v))
    return BoundsEstimate(float(v[i]), float(v[j]), tuple(map(float, p[i])), tuple(map(float, p[j])),
                          meta, coarse, bool(grid.recipe.get("unbounded_below", False)))


def field_grid(field: SpectralField, quad_order=None, dense_grid=None) -> GridField:
    """Quadrature grid of a spectral field with a dense lattice attached."""
    if quad_order is None:
        quad_order = default_quad_order(field.max_degree)
    rule = gauss_hermite_rule(quad_order, field.dimension)
    if dense_grid is None:
        dense_grid = default_dense_grid(field.dimension, field.max_degree, rule)
    g = synthesize(field, rule, dense_grid)
    recipe = dict(g.recipe, unbounded_below=_leading_part_negative(field))
    return GridField(g.rule, g.values, g.gradients, g.dense_values, g.dense_grid, recipe)
