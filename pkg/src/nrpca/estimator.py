"""Scikit-learn style front end for the rank-1 background model."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import DEFAULT_EPS_S
from .solver import SolverConfig, solve


class RankOneBackgroundSubtractor(BaseEstimator, TransformerMixin):
    """Fit a nonnegative rank-1 background to a pixels-by-frames matrix.

    Minimizes ``||X - u v^T||_1 + lam * |u'u - v'v|`` over nonnegative
    factors by projected subgradient descent with momentum.  ``transform``
    returns the sparse residual (the foreground signal) and ``predict``
    thresholds it into a boolean foreground mask.

    Parameters
    ----------
    lam : float, default=1.0
        Weight of the norm-balancing regularizer.
    learning_rate : float, default=1e-4
        Step size of the subgradient iteration.
    momentum : float, default=0.9
        Heavy-ball momentum coefficient in [0, 1).
    iterations : int, default=5000
        Number of update steps.
    batch : int or None, default=None
        Residual entries sampled per step; None uses the exact full sum.
    seed : int, default=0
        Seed for the half-normal initialization (and entry sampling).
    init_scale : float, default=1.0
        Scale of the half-normal draw for the initial pixel factor.
    eps_s : float, default=0.5
        Residual magnitude above which an entry counts as foreground.

    Attributes
    ----------
    u_ : ndarray of shape (m,)
        Nonnegative per-pixel background pattern.
    v_ : ndarray of shape (n,)
        Nonnegative per-frame scaling.
    objective_trace_ : ndarray
        Objective values recorded along the iteration.
    n_iter_ : int
        Iterations run.
    converged_ : bool
        Whether the trailing 10% of the trace was flat to 1e-4 relative.
    """

    def __init__(self, lam=1.0, learning_rate=1e-4, momentum=0.9,
                 iterations=5000, batch=None, seed=0, init_scale=1.0,
                 eps_s=DEFAULT_EPS_S):
        self.lam = lam
        self.learning_rate = learning_rate
        self.momentum = momentum
        self.iterations = iterations
        self.batch = batch
        self.seed = seed
        self.init_scale = init_scale
        self.eps_s = eps_s

    def _config(self) -> SolverConfig:
        return SolverConfig(
            lam=self.lam,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            iterations=self.iterations,
            batch=self.batch,
            seed=self.seed,
            init_scale=self.init_scale,
        )

    def fit(self, X, y=None):
        """Fit the background factors to the pixels-by-frames matrix X."""
        X = self._validate(X)
        result = solve(X, self._config())
        self.u_ = result.decomposition.u
        self.v_ = result.decomposition.v
        self.objective_trace_ = result.objective_trace
        self.n_iter_ = result.iterations_run
        self.converged_ = result.converged
        return self

    def transform(self, X):
        """Residual X - u v^T; the sparse foreground signal."""
        check_is_fitted(self, "u_")
        X = self._validate(X)
        if X.shape != (self.u_.size, self.v_.size):
            raise ValueError(
                f"X has shape {X.shape}; the fitted background is "
                f"({self.u_.size}, {self.v_.size})"
            )
        return X - np.outer(self.u_, self.v_)

    def predict(self, X):
        """Boolean foreground mask: residual magnitude above eps_s."""
        return np.abs(self.transform(X)) > self.eps_s

    def background_(self):
        """Fitted rank-1 background matrix."""
        check_is_fitted(self, "u_")
        return np.outer(self.u_, self.v_)

    def _validate(self, X):
        X = check_array(X, dtype=np.float64, ensure_min_samples=1,
                        ensure_min_features=1)
        if (X < 0).any():
            raise ValueError("pixel intensities must be nonnegative")
        return X
