"""Orthonormal Hermite polynomials for the standard Gaussian measure.

The univariate family is the normalized probabilists' Hermite sequence

    h_0 = 1,   h_{n+1}(y) = (y h_n(y) - sqrt(n) h_{n-1}(y)) / sqrt(n + 1),

which is orthonormal in L^2(dmu) with dmu = (2 pi)^{-1/2} exp(-y^2/2) dy.
Tensor products ``H_k(x) = prod_j h_{k_j}(x_j)`` are indexed by multi-indices
and enumerated in graded lexicographic order.
"""
from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import DomainError, UsageError

MAX_DIMENSION = 3


@dataclass(frozen=True)
class MultiIndex:
    """A d-tuple of nonnegative integers."""

    k: tuple

    def __post_init__(self):
        k = tuple(int(v) for v in self.k)
        if len(k) < 1:
            raise UsageError("multi-index needs at least one entry")
        if any(v < 0 for v in k):
            raise UsageError(f"multi-index entries must be nonnegative, got {k}")
        object.__setattr__(self, "k", k)

    @property
    def dimension(self) -> int:
        return len(self.k)

    @property
    def total_degree(self) -> int:
        return sum(self.k)

    def __iter__(self):
        return iter(self.k)

    def __len__(self):
        return len(self.k)

    def __getitem__(self, item):
        return self.k[item]


def as_index(k) -> tuple:
    if isinstance(k, MultiIndex):
        return k.k
    if np.isscalar(k):
        k = (k,)
    return MultiIndex(tuple(k)).k


def graded_lex(dimension: int, max_degree: int) -> list:
    """All multi-indices with ``|k| <= max_degree``, by degree then lexicographically
    decreasing, e.g. ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``."""
    out = []
    for g in range(max_degree + 1):
        block = [k for k in itertools.product(range(g + 1), repeat=dimension) if sum(k) == g]
        out.extend(sorted(block, reverse=True))
    return out


class HermiteBasis:
    """Tensor Hermite basis of total degree at most ``max_degree`` in ``dimension`` variables.

    Index 0 is always the constant function.
    """

    def __init__(self, dimension: int, max_degree: int):
        if not 1 <= dimension <= MAX_DIMENSION:
            raise UsageError(f"dimension must be in 1..{MAX_DIMENSION}, got {dimension}")
        if max_degree < 0:
            raise UsageError(f"max_degree must be >= 0, got {max_degree}")
        self.dimension = int(dimension)
        self.max_degree = int(max_degree)
        self.indices = graded_lex(self.dimension, self.max_degree)
        self.position = {k: i for i, k in enumerate(self.indices)}
        self.degrees = np.array([sum(k) for k in self.indices], dtype=int)
        self._tensor_index = tuple(np.array(self.indices, dtype=int).T)

    @property
    def size(self) -> int:
        return len(self.indices)

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return (
            isinstance(other, HermiteBasis)
            and other.dimension == self.dimension
            and other.max_degree == self.max_degree
        )

    def __hash__(self):
        return hash((self.dimension, self.max_degree))

    def __repr__(self):
        return f"HermiteBasis(dimension={self.dimension}, max_degree={self.max_degree})"

    def to_tensor(self, coefficients) -> np.ndarray:
        """Scatter a graded-lex coefficient vector into a ``(N+1,)*d`` tensor."""
        c = np.asarray(coefficients, dtype=float)
        if c.shape != (self.size,):
            raise UsageError(f"expected {self.size} coefficients, got shape {c.shape}")
        t = np.zeros((self.max_degree + 1,) * self.dimension)
        t[self._tensor_index] = c
        return t

    def from_tensor(self, tensor) -> np.ndarray:
        return np.asarray(tensor)[self._tensor_index].copy()


def hermite_vandermonde(max_degree: int, y) -> np.ndarray:
    """Matrix ``V[i, n] = h_n(y_i)`` for ``n = 0..max_degree``."""
    if max_degree < 0:
        raise UsageError(f"max_degree must be >= 0, got {max_degree}")
    y = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(y)):
        raise DomainError("Hermite evaluation needs finite arguments")
    y = np.atleast_1d(y)
    v = np.empty(y.shape + (max_degree + 1,))
    v[..., 0] = 1.0
    if max_degree >= 1:
        v[..., 1] = y
    for n in range(1, max_degree):
        v[..., n + 1] = (y * v[..., n] - math.sqrt(n) * v[..., n - 1]) / math.sqrt(n + 1)
    return v


def hermite_deriv_vandermonde(max_degree: int, y) -> np.ndarray:
    """Matrix ``D[i, n] = h_n'(y_i) = sqrt(n) h_{n-1}(y_i)``."""
    v = hermite_vandermonde(max_degree, y)
    d = np.zeros_like(v)
    if max_degree >= 1:
        d[..., 1:] = v[..., :-1] * np.sqrt(np.arange(1, max_degree + 1))
    return d


def hermite_eval_all(max_degree: int, y: float) -> np.ndarray:
    """Values ``[h_0(y), ..., h_N(y)]`` at a single point."""
    if not np.isscalar(y) and np.ndim(y) != 0:
        raise UsageError("hermite_eval_all takes a scalar point; use hermite_vandermonde")
    if not math.isfinite(float(y)):
        raise DomainError(f"non-finite argument {y!r}")
    return hermite_vandermonde(max_degree, float(y))[0]


def hermite_deriv_coeff(n: int) -> float:
    """Factor in ``h_n' = sqrt(n) h_{n-1}``; zero for the constant."""
    if n < 0:
        raise UsageError(f"degree must be >= 0, got {n}")
    return math.sqrt(n)


def tensor_eval(k, x) -> float:
    """``H_k(x)`` at one point."""
    k = as_index(k)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (len(k),):
        raise UsageError(f"point of dimension {x.shape} does not match multi-index {k}")
    value = 1.0
    for kj, xj in zip(k, x):
        value *= hermite_vandermonde(kj, xj)[0, kj]
    return float(value)


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Tensor Gauss-Hermite rule for the Gaussian probability measure.

    ``nodes`` and ``weights`` are the 1D rule; the d-dimensional rule is their
    tensor product, and grid values are stored with shape ``(order,) * dimension``.
    """

    order: int
    dimension: int
    nodes: np.ndarray
    weights: np.ndarray

    @property
    def shape(self) -> tuple:
        return (self.order,) * self.dimension

    @property
    def size(self) -> int:
        return self.order ** self.dimension

    @property
    def axes(self) -> list:
        return [self.nodes] * self.dimension

    def tensor_weights(self) -> np.ndarray:
        w = self.weights
        for _ in range(self.dimension - 1):
            w = np.multiply.outer(w, self.weights)
        return w

    def points(self) -> np.ndarray:
        """Node coordinates, shape ``shape + (dimension,)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def integrate(self, values) -> float:
        return integrate_mu(values, self)

    def with_dimension(self, dimension: int) -> "QuadratureRule":
        return gauss_hermite_rule(self.order, dimension)


@functools.lru_cache(maxsize=64)
def _gauss_hermite_1d(m: int):
    offdiag = np.sqrt(np.arange(1, m, dtype=float))
    nodes = eigh_tridiagonal(np.zeros(m), offdiag, eigvals_only=True)
    nodes = 0.5 * (nodes - nodes[::-1])  # exact symmetry
    # Christoffel weights 1 / sum_k h_k(x)^2: same values as squared first
    # eigenvector components, with better relative accuracy in the tails.
    v = hermite_vandermonde(m - 1, nodes)
    weights = 1.0 / np.sum(v * v, axis=1)
    weights = 0.5 * (weights + weights[::-1])
    weights /= weights.sum()
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_hermite_rule(m: int, dimension: int = 1) -> QuadratureRule:
    """Gauss rule with ``m`` nodes per axis for ``dmu``, exact through degree ``2m - 1``."""
    if int(m) != m or m < 1:
        raise UsageError(f"quadrature order must be a positive integer, got {m}")
    if not 1 <= dimension <= MAX_DIMENSION:
        raise UsageError(f"dimension must be in 1..{MAX_DIMENSION}, got {dimension}")
    nodes, weights = _gauss_hermite_1d(int(m))
    return QuadratureRule(int(m), int(dimension), nodes, weights)


def default_quad_order(max_degree: int) -> int:
    """Order used for nonlinear functionals of a degree-N field."""
    return 2 * max_degree + 4


def integrate_mu(values, rule: QuadratureRule) -> float:
    values = np.asarray(values, dtype=float)
    if values.shape != rule.shape:
        raise UsageError(f"values of shape {values.shape} do not match rule grid {rule.shape}")
    out = values
    for _ in range(rule.dimension):
        out = np.tensordot(out, rule.weights, axes=([0], [0]))
    return float(out)


def evaluate_tensor(coef_tensor, axes, derivative_axis=None) -> np.ndarray:
    """Evaluate ``sum_k C[k] H_k`` on the tensor grid spanned by ``axes``.

    With ``derivative_axis=j`` the partial derivative along ``x_j`` is returned.
    """
    c = np.asarray(coef_tensor, dtype=float)
    if c.ndim != len(axes):
        raise UsageError(f"coefficient tensor has {c.ndim} axes, grid has {len(axes)}")
    n = c.shape[0] - 1
    out = c
    for j, axis in enumerate(axes):
        if j == derivative_axis:
            phi = hermite_deriv_vandermonde(n, axis)
        else:
            phi = hermite_vandermonde(n, axis)
        out = np.tensordot(out, phi, axes=([0], [1]))
    return out


def project_tensor(values, rule: QuadratureRule, max_degree: int) -> np.ndarray:
    """Tensor of quadrature inner products ``sum W f H_k`` for all ``k_j <= N``."""
    values = np.asarray(values, dtype=float)
    if values.shape != rule.shape:
        raise UsageError(f"values of shape {values.shape} do not match rule grid {rule.shape}")
    phi = hermite_vandermonde(max_degree, rule.nodes) * rule.weights[:, None]
    out = values
    for _ in range(rule.dimension):
        out = np.tensordot(out, phi, axes=([0], [0]))
    return out
