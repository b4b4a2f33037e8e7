"""Projected subgradient descent with momentum for the rank-1 decomposition.

Minimizes ||X - u v^T||_1 + lam * |u'u - v'v| over entrywise-nonnegative u, v.
The iteration is plain heavy ball with a nonnegativity projection: the
velocity accumulator is deliberately left untouched by the projection.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import os

import numpy as np

from .core import DataMatrix, Decomposition


class SolverDivergenceError(RuntimeError):
    """Objective became non-finite; the learning rate is likely too high."""


@dataclass(frozen=True)
class SolverConfig:
    lam: float = 1.0
    learning_rate: float = 1e-4
    momentum: float = 0.9
    iterations: int = 5000
    batch: int | None = None  # None or "full" = exact subgradient
    seed: int = 0
    init_scale: float = 1.0
    trace_stride: int = 1

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError(f"lam must be nonnegative, got {self.lam}")
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be positive, got {self.learning_rate}")
        if not 0 <= self.momentum < 1:
            raise ValueError(f"momentum must lie in [0, 1), got {self.momentum}")
        if self.iterations < 1:
            raise ValueError(f"iterations must be positive, got {self.iterations}")
        batch = self.batch
        if batch == "full":
            object.__setattr__(self, "batch", None)
        elif batch is not None and (int(batch) != batch or batch < 1):
            raise ValueError(f"batch must be a positive integer or 'full', got {batch!r}")
        if self.init_scale <= 0:
            raise ValueError(f"init_scale must be positive, got {self.init_scale}")
        if self.trace_stride < 1:
            raise ValueError(f"trace_stride must be positive, got {self.trace_stride}")


@dataclass(frozen=True)
class SolveResult:
    decomposition: Decomposition
    objective_trace: np.ndarray
    iterations_run: int
    converged: bool

    @property
    def final_objective(self) -> float:
        return float(self.objective_trace[-1])


def _values(X) -> np.ndarray:
    if isinstance(X, DataMatrix):
        return X.values
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError(f"expected a 2-D data matrix, got shape {X.shape}")
    return X


def objective(X, u, v, lam: float) -> float:
    """||X - u v^T||_1 + lam * |u'u - v'v|."""
    X = _values(X)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if X.shape != (u.size, v.size):
        raise ValueError(f"shape mismatch: X {X.shape} vs factors ({u.size}, {v.size})")
    data_term = np.abs(X - np.outer(u, v)).sum()
    return float(data_term + lam * abs(u @ u - v @ v))


def subgradient(X, u, v, lam: float, sample=None) -> tuple[np.ndarray, np.ndarray]:
    """Subgradient of the objective at (u, v), taking sign(0) = 0 at kinks.

    With sample=None the exact full sum is used.  Otherwise sample is a pair
    of index arrays (rows, cols) of residual entries drawn uniformly with
    replacement; the data term is rescaled by m*n/len(sample) so its
    expectation equals the full data-term subgradient.  The balance
    regularizer is always applied in full: it costs only O(m+n).
    """
    X = _values(X)
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if sample is None:
        signs = np.sign(np.outer(u, v) - X)
        g_u = signs @ v
        g_v = signs.T @ u
    else:
        rows, cols = sample
        scale = X.size / rows.size
        signs = np.sign(u[rows] * v[cols] - X[rows, cols]) * scale
        g_u = np.zeros_like(u)
        g_v = np.zeros_like(v)
        np.add.at(g_u, rows, signs * v[cols])
        np.add.at(g_v, cols, signs * u[rows])
    balance = 2.0 * lam * np.sign(u @ u - v @ v)
    return g_u + balance * u, g_v - balance * v


def solve(X, config: SolverConfig = SolverConfig()) -> SolveResult:
    """Run the projected subgradient iteration from a half-normal start.

    u0 is drawn entrywise from |N(0, init_scale^2)| and v0 is all ones.  Each
    step updates velocity <- momentum * velocity - learning_rate * g and then
    projects w <- max(0, w + velocity).  Deterministic for a fixed seed.
    """
    X = _values(X)
    if (X < 0).any():
        raise ValueError("data matrix must be nonnegative")
    m, n = X.shape
    rng = np.random.default_rng(config.seed)
    u = np.abs(rng.normal(0.0, config.init_scale, size=m))
    v = np.ones(n)
    vel_u = np.zeros(m)
    vel_v = np.zeros(n)
    lam, lr, beta = config.lam, config.learning_rate, config.momentum
    full_batch = config.batch is None
    trace = []

    def record(value):
        if not np.isfinite(value):
            raise SolverDivergenceError(
                f"objective became non-finite at iteration {len(trace)}; "
                f"try a smaller learning rate than {lr}"
            )
        trace.append(value)

    for t in range(config.iterations):
        if full_batch:
            residual = np.outer(u, v)
            residual -= X
            if t % config.trace_stride == 0:
                record(np.abs(residual).sum() + lam * abs(u @ u - v @ v))
            signs = np.sign(residual)
            g_u = signs @ v
            g_v = signs.T @ u
            balance = 2.0 * lam * np.sign(u @ u - v @ v)
            g_u += balance * u
            g_v -= balance * v
        else:
            if t % config.trace_stride == 0:
                record(objective(X, u, v, lam))
            sample = (rng.integers(0, m, size=config.batch),
                      rng.integers(0, n, size=config.batch))
            g_u, g_v = subgradient(X, u, v, lam, sample)
        vel_u = beta * vel_u - lr * g_u
        vel_v = beta * vel_v - lr * g_v
        u = np.maximum(0.0, u + vel_u)
        v = np.maximum(0.0, v + vel_v)
    record(objective(X, u, v, lam))
    trace = np.asarray(trace)
    window = trace[-max(2, trace.size // 10):]
    spread = float(window.max() - window.min())
    converged = spread <= 1e-4 * max(abs(float(trace[-1])), 1e-12)
    return SolveResult(
        decomposition=Decomposition(u, v, lam),
        objective_trace=trace,
        iterations_run=config.iterations,
        converged=converged,
    )


@dataclass(frozen=True)
class MultiRestartResult:
    results: list
    max_relative_distance: float
    reference_index: int
    failures: list

    @property
    def best(self) -> SolveResult:
        return self.results[self.reference_index]


def default_jobs() -> int:
    """Worker count for multi-restart runs, from the NRPCA_JOBS environment."""
    try:
        return max(1, int(os.environ.get("NRPCA_JOBS", "1")))
    except ValueError:
        return 1


def multi_restart(X, n_restarts: int, config: SolverConfig = SolverConfig(),
                  n_jobs: int | None = None) -> MultiRestartResult:
    """Solve n_restarts times with distinct seeds and measure solution spread.

    Returns all runs (in seed order) plus the maximum of
    ||w_ref - w||_2 / ||w_ref||_2 over runs, where w_ref comes from the run
    with the lowest final objective.  Failed runs are collected, not raised,
    unless every run fails.
    """
    if n_restarts < 2:
        raise ValueError(f"n_restarts must be at least 2, got {n_restarts}")
    X = _values(X)
    if n_jobs is None:
        n_jobs = default_jobs()
    configs = [replace(config, seed=config.seed + i) for i in range(n_restarts)]
    if n_jobs > 1:
        from joblib import Parallel, delayed

        raw = Parallel(n_jobs=n_jobs)(
            delayed(_solve_or_error)(X, c) for c in configs
        )
    else:
        raw = [_solve_or_error(X, c) for c in configs]
    results = []
    failures = []
    for c, outcome in zip(configs, raw):
        if isinstance(outcome, SolveResult):
            results.append(outcome)
        else:
            failures.append((c.seed, outcome))
    if not results:
        raise SolverDivergenceError(
            f"all {n_restarts} restarts failed; first error: {failures[0][1]}"
        )
    finals = [r.final_objective for r in results]
    ref_idx = int(np.argmin(finals))
    w_ref = results[ref_idx].decomposition.w
    ref_norm = float(np.linalg.norm(w_ref))
    if ref_norm == 0.0:
        distances = [
            0.0 if np.linalg.norm(r.decomposition.w) == 0.0 else np.inf
            for r in results
        ]
    else:
        distances = [
            float(np.linalg.norm(w_ref - r.decomposition.w)) / ref_norm
            for r in results
        ]
    return MultiRestartResult(
        results=results,
        max_relative_distance=float(max(distances)),
        reference_index=ref_idx,
        failures=failures,
    )


def _solve_or_error(X, config):
    try:
        return solve(X, config)
    except SolverDivergenceError as err:
        return str(err)
