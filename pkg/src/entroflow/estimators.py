"""Scikit-learn compatible wrappers around the spectral machinery.

Rows of ``X`` are samples: grid values flattened over the quadrature nodes for
:class:`HermiteProjector`, coefficient vectors for :class:`OrnsteinUhlenbeckFlow`.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_consistent_length, check_is_fitted

from .errors import UsageError
from .hermite import HermiteBasis, default_quad_order, evaluate_tensor, gauss_hermite_rule, project_tensor


class HermiteProjector(TransformerMixin, BaseEstimator):
    """Map nodal values to Hermite coefficients and back.

    Parameters
    ----------
    dimension : int
        Number of space variables (1 to 3).
    max_degree : int
        Highest total degree kept.
    quad_order : int or None
        Gauss-Hermite nodes per axis; defaults to ``2 * max_degree + 4``.
    """

    def __init__(self, dimension=1, max_degree=4, quad_order=None):
        self.dimension = dimension
        self.max_degree = max_degree
        self.quad_order = quad_order

    def fit(self, X=None, y=None):
        order = self.quad_order or default_quad_order(self.max_degree)
        if order < self.max_degree + 1:
            raise UsageError(f"quad_order {order} cannot resolve degree {self.max_degree}")
        self.basis_ = HermiteBasis(self.dimension, self.max_degree)
        self.rule_ = gauss_hermite_rule(order, self.dimension)
        self.n_features_in_ = self.rule_.size
        if X is not None:
            self._check_X(X)
        return self

    def _check_X(self, X):
        X = check_array(X)
        if X.shape[1] != self.rule_.size:
            raise UsageError(f"expected {self.rule_.size} nodal values per row, got {X.shape[1]}")
        return X

    def transform(self, X):
        check_is_fitted(self, "rule_")
        X = self._check_X(X)
        out = np.empty((X.shape[0], self.basis_.size))
        for i, row in enumerate(X):
            t = project_tensor(row.reshape(self.rule_.shape), self.rule_, self.max_degree)
            out[i] = self.basis_.from_tensor(t)
        return out

    def inverse_transform(self, C):
        check_is_fitted(self, "rule_")
        C = check_array(C)
        if C.shape[1] != self.basis_.size:
            raise UsageError(f"expected {self.basis_.size} coefficients per row, got {C.shape[1]}")
        return np.stack([
            evaluate_tensor(self.basis_.to_tensor(c), self.rule_.axes).ravel() for c in C
        ])

    @property
    def nodes_(self):
        check_is_fitted(self, "rule_")
        return self.rule_.points().reshape(-1, self.dimension)


class OrnsteinUhlenbeckFlow(TransformerMixin, BaseEstimator):
    """Exact OU propagation ``c_k -> c_k exp(-|k| t)`` of coefficient rows."""

    def __init__(self, t=1.0, dimension=1, max_degree=4):
        self.t = t
        self.dimension = dimension
        self.max_degree = max_degree

    def fit(self, X=None, y=None):
        if self.t < 0:
            raise UsageError(f"t must be >= 0, got {self.t}")
        self.basis_ = HermiteBasis(self.dimension, self.max_degree)
        self.decay_ = np.exp(-self.basis_.degrees * float(self.t))
        self.n_features_in_ = self.basis_.size
        return self

    def transform(self, X):
        check_is_fitted(self, "decay_")
        X = check_array(X)
        if X.shape[1] != self.basis_.size:
            raise UsageError(f"expected {self.basis_.size} coefficients per row, got {X.shape[1]}")
        return X * self.decay_


class DecayRateEstimator(RegressorMixin, BaseEstimator):
    """Least-squares fit of ``log y = log A - rate * x`` on a window.

    Samples with ``y <= floor`` are dropped. ``log_x=True`` fits a power law in
    ``x`` instead (slope of ``log y`` against ``log x``), reported as ``-rate_``.

    Attributes
    ----------
    rate_ : float
        Decay rate (negated slope).
    intercept_ : float
        Fitted ``log A``.
    residual_rms_ : float
        RMS of the log residuals over the fitted samples.
    window_ : tuple
        Window actually used; ``window_shrunk_`` flags samples lost to the floor.
    """

    def __init__(self, window=(0.1, 1.0), floor=1e-12, log_x=False):
        self.window = window
        self.floor = floor
        self.log_x = log_x

    def fit(self, X, y):
        x = np.ravel(check_array(np.reshape(X, (-1, 1)), ensure_all_finite=True))
        y = np.ravel(np.asarray(y, dtype=float))
        check_consistent_length(x, y)
        lo, hi = (-np.inf, np.inf) if self.window is None else self.window
        in_window = (x >= lo - 1e-12) & (x <= hi + 1e-12)
        keep = in_window & (y > self.floor)
        self.window_shrunk_ = bool(np.any(in_window & ~keep))
        if keep.sum() < 2:
            raise UsageError("fewer than two usable samples in the fit window")
        xs = np.log(x[keep]) if self.log_x else x[keep]
        ys = np.log(y[keep])
        slope, intercept = np.polyfit(xs, ys, 1)
        resid = ys - (slope * xs + intercept)
        self.rate_ = float(-slope)
        self.intercept_ = float(intercept)
        self.residual_rms_ = float(np.sqrt(np.mean(resid ** 2)))
        self.window_ = (float(x[keep].min()), float(x[keep].max()))
        self.n_samples_ = int(keep.sum())
        return self

    def predict(self, X):
        check_is_fitted(self, "rate_")
        x = np.ravel(np.asarray(X, dtype=float))
        xs = np.log(x) if self.log_x else x
        return np.exp(self.intercept_ - self.rate_ * xs)

    def score(self, X, y, sample_weight=None):
        """R^2 of the fit in log space."""
        check_is_fitted(self, "rate_")
        x = np.ravel(np.asarray(X, dtype=float))
        y = np.ravel(np.asarray(y, dtype=float))
        keep = y > self.floor
        ly = np.log(y[keep])
        pred = np.log(self.predict(x[keep]))
        ss_res = np.sum((ly - pred) ** 2)
        ss_tot = np.sum((ly - ly.mean()) ** 2)
        return float(1 - ss_res / ss_tot) if ss_tot > 0 else 1.0
