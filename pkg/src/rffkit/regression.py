"""Least squares, ridge (primal and dual) and kernel ridge solvers."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, InputError, SingularMatrixError
from .linalg import spd_solve

DEFAULT_LAMBDA_GRID = np.logspace(-3, 3, 25)
DEFAULT_FOLDS = 5


class Mode(str, enum.Enum):
    OLS = "ols"
    RIDGE_PRIMAL = "ridge_primal"
    RIDGE_DUAL = "ridge_dual"
    KERNEL_RIDGE = "kernel_ridge"


@dataclass
class FitResult:
    mode: Mode
    lam: float
    weights: Optional[np.ndarray] = None
    dual_coefficients: Optional[np.ndarray] = None
    training_design: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if (self.weights is None) == (self.dual_coefficients is None):
            raise ValueError("exactly one of weights / dual_coefficients must be set")
        primal = self.mode in (Mode.OLS, Mode.RIDGE_PRIMAL)
        if primal != (self.weights is not None):
            raise ValueError(f"mode {self.mode.value} does not match the populated coefficients")


@dataclass(frozen=True)
class CvReport:
    lambda_grid: np.ndarray
    fold_mse: np.ndarray
    best_lambda: float
    k: int
    seed: Optional[int]

    @property
    def mean_mse(self) -> np.ndarray:
        return self.fold_mse.mean(axis=1)


def _xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or y.ndim != 1:
        raise InputError(f"expected a 2-d design and a response vector, got {X.shape} and {y.shape}")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"design has {X.shape[0]} rows but y has {y.shape[0]} entries")
    if X.shape[0] == 0:
        raise InputError("empty design")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise InputError("design or response contains non-finite values")
    return X, y


def _check_lambda(lam, positive: bool):
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0 or (positive and lam == 0):
        bound = "positive" if positive else "nonnegative"
        raise ConfigError(f"lambda must be {bound}, got {lam!r}")
    return lam


def _primal_solve(X, y, lam):
    D = X.shape[1]
    A = X.T @ X
    if lam:
        A[np.diag_indices(D)] += lam
    try:
        w, cond = spd_solve(A, X.T @ y, check_condition=(lam == 0), what="X^T X")
    except SingularMatrixError as exc:
        if lam == 0:
            raise SingularMatrixError(
                f"{exc}; the covariates are (nearly) perfectly multicollinear, "
                "drop redundant columns or use a positive lambda"
            ) from None
        raise
    return w, cond


def fit_ols(X, y) -> FitResult:
    """Ordinary least squares through the normal equations (Cholesky)."""
    X, y = _xy(X, y)
    w, cond = _primal_solve(X, y, 0.0)
    return FitResult(Mode.OLS, 0.0, weights=w, diagnostics={"condition": cond})


def fit_ridge_primal(X, y, lam: float) -> FitResult:
    """Solve ``(X^T X + lam I_D) w = X^T y``; ``lam = 0`` is plain OLS."""
    X, y = _xy(X, y)
    lam = _check_lambda(lam, positive=False)
    w, cond = _primal_solve(X, y, lam)
    return FitResult(Mode.RIDGE_PRIMAL, lam, weights=w, diagnostics={"condition": cond})


def fit_ridge_dual(X, y, lam: float) -> FitResult:
    """Solve ``(X X^T + lam I_N) alpha = y``; predictions use ``x X^T alpha``."""
    X, y = _xy(X, y)
    lam = _check_lambda(lam, positive=True)
    G = X @ X.T
    G[np.diag_indices(G.shape[0])] += lam
    alpha, cond = spd_solve(G, y, what="X X^T + lambda I")
    return FitResult(
        Mode.RIDGE_DUAL, lam, dual_coefficients=alpha, training_design=X.copy(), diagnostics={"condition": cond}
    )


def fit_kernel_ridge(K, y, lam: float, training_design=None, kernel=None) -> FitResult:
    """Solve ``(K + lam I) alpha = y`` for a precomputed kernel matrix.

    ``training_design`` and ``kernel`` (a KernelSpec) are optional; when both
    are given, :func:`predict` can take raw covariates instead of a cross
    kernel matrix.
    """
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] != y.shape[0]:
        raise InputError(f"kernel matrix {K.shape} does not match {y.shape[0]} responses")
    if not (np.all(np.isfinite(K)) and np.all(np.isfinite(y))):
        raise InputError("kernel matrix or response contains non-finite values")
    scale = max(np.max(np.abs(K)), 1.0)
    if np.max(np.abs(K - K.T)) > 1e-10 * scale:
        raise InputError("kernel matrix is not symmetric")
    lam = _check_lambda(lam, positive=True)
    A = 0.5 * (K + K.T)
    A[np.diag_indices(A.shape[0])] += lam
    alpha, cond = spd_solve(A, y, what="K + lambda I")
    diag = {"condition": cond}
    if kernel is not None:
        diag["kernel"] = kernel
    td = None if training_design is None else np.asarray(training_design, dtype=float)
    return FitResult(Mode.KERNEL_RIDGE, lam, dual_coefficients=alpha, training_design=td, diagnostics=diag)


def fit_least_squares(X, y, rcond: float = 1e-7) -> FitResult:
    """Minimum-norm least squares via a truncated SVD.

    Unlike :func:`fit_ols` this accepts rank-deficient designs (for example
    more random features than training points). Singular values below
    ``rcond`` times the largest are discarded. The numerical rank is
    reported in ``diagnostics["rank"]`` and ``diagnostics["rank_deficient"]``.
    """
    X, y = _xy(X, y)
    w, _, rank, sv = np.linalg.lstsq(X, y, rcond=rcond)
    return FitResult(
        Mode.OLS,
        0.0,
        weights=w,
        diagnostics={"rank": int(rank), "rank_deficient": int(rank) < X.shape[1], "singular_values": sv},
    )


def predict(fit: FitResult, X_new=None, kernel_cross=None) -> np.ndarray:
    """Predictions ``X_new w`` (primal) or ``k(X_new, X_train) alpha`` (dual).

    Dual fits accept either raw covariates (the training design must be
    retained, and kernel-ridge fits also need their kernel) or a
    precomputed cross kernel matrix via ``kernel_cross``.
    """
    if fit.weights is not None:
        if X_new is None:
            raise InputError("primal fits need raw covariates X_new")
        Xn = np.asarray(X_new, dtype=float)
        if Xn.ndim == 1:
            Xn = Xn[None, :] if Xn.shape[0] == fit.weights.shape[0] else Xn[:, None]
        if Xn.shape[1] != fit.weights.shape[0]:
            raise InputError(f"expected {fit.weights.shape[0]} covariates, got {Xn.shape[1]}")
        return Xn @ fit.weights
    alpha = fit.dual_coefficients
    if kernel_cross is None:
        if X_new is None:
            raise InputError("dual fits need X_new or kernel_cross")
        if fit.training_design is None:
            raise InputError("this fit kept no training design; pass kernel_cross instead")
        Xn = np.asarray(X_new, dtype=float)
        if Xn.ndim == 1:
            Xn = Xn[None, :]
        if fit.mode is Mode.RIDGE_DUAL:
            kernel_cross = Xn @ fit.training_design.T
        else:
            spec = fit.diagnostics.get("kernel")
            if spec is None:
                raise InputError("kernel ridge fit has no kernel attached; pass kernel_cross instead")
            from .kernels import cross_kernel

            kernel_cross = cross_kernel(spec, Xn, fit.training_design)
    kc = np.asarray(kernel_cross, dtype=float)
    if kc.ndim == 1:
        kc = kc[None, :]
    if kc.shape[1] != alpha.shape[0]:
        raise InputError(f"cross kernel has {kc.shape[1]} columns, expected {alpha.shape[0]} training points")
    return kc @ alpha


def mse(y, y_hat) -> float:
    y = np.asarray(y, dtype=float)
    y_hat = np.asarray(y_hat, dtype=float)
    if y.shape != y_hat.shape:
        raise InputError(f"length mismatch: {y.shape} vs {y_hat.shape}")
    return float(np.mean((y - y_hat) ** 2))


def kfold_indices(n: int, k: int, rng=None) -> list[np.ndarray]:
    """Shuffle ``0..n-1`` once and split into ``k`` near-equal folds."""
    if k < 2:
        raise InputError(f"need at least 2 folds, got {k}")
    if n < k:
        raise InputError(f"cannot split {n} points into {k} nonempty folds")
    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    return np.array_split(gen.permutation(n), k)


def kfold_cv_lambda(X, y, lambda_grid=None, k: int = DEFAULT_FOLDS, rng=None) -> CvReport:
    """Pick the ridge penalty with the lowest mean held-out MSE.

    Folds are fixed once from ``rng``; ties go to the larger penalty.
    """
    X, y = _xy(X, y)
    grid = DEFAULT_LAMBDA_GRID if lambda_grid is None else np.asarray(lambda_grid, dtype=float).ravel()
    if grid.size == 0:
        raise InputError("lambda grid is empty")
    if np.any(~np.isfinite(grid)) or np.any(grid <= 0):
        raise ConfigError("lambda grid must hold positive values")
    seed = None if isinstance(rng, np.random.Generator) or rng is None else int(rng)
    folds = kfold_indices(X.shape[0], int(k), rng)
    fold_mse = np.empty((grid.size, len(folds)))
    for j, test in enumerate(folds):
        train = np.setdiff1d(np.arange(X.shape[0]), test, assume_unique=True)
        Xtr, ytr = X[train], y[train]
        gram = Xtr.T @ Xtr
        rhs = Xtr.T @ ytr
        for i, lam in enumerate(grid):
            A = gram + lam * np.eye(X.shape[1])
            w, _ = spd_solve(A, rhs, what="X^T X + lambda I")
            fold_mse[i, j] = mse(y[test], X[test] @ w)
    means = fold_mse.mean(axis=1)
    best = np.flatnonzero(means == means.min())
    best_lambda = float(np.max(grid[best]))
    return CvReport(grid.copy(), fold_mse, best_lambda, int(k), seed)
