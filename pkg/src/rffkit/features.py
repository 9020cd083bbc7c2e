"""Random Fourier feature matrices and the kernels they induce."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .errors import InputError
from .spectral import FrequencyMatrix, Provenance


@dataclass(frozen=True)
class FeatureMatrix:
    """N x 2m basis ``[cos block | sin block]`` with the scaling baked in."""

    phi: np.ndarray
    omega: Union[FrequencyMatrix, tuple]
    scaling: float

    def __array__(self, dtype=None, copy=None):
        return self.phi if dtype is None else self.phi.astype(dtype)

    @property
    def shape(self):
        return self.phi.shape

    @property
    def m(self) -> int:
        return self.phi.shape[1] // 2


def _design(X, d: int) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2:
        raise InputError(f"design must be 2-d, got shape {X.shape}")
    if X.shape[1] != d:
        raise InputError(f"dimension mismatch: design has d={X.shape[1]}, frequencies have d={d}")
    if not np.all(np.isfinite(X)):
        raise InputError("design contains non-finite entries")
    return X


def _as_freq(omega) -> FrequencyMatrix:
    if isinstance(omega, FrequencyMatrix):
        return omega
    return FrequencyMatrix(np.atleast_2d(np.asarray(omega, dtype=float)), Provenance.IID)


def projection(X: np.ndarray, omega: np.ndarray) -> np.ndarray:
    """``X @ omega.T`` accumulated coordinate by coordinate.

    Elementwise accumulation in a fixed order makes each entry depend only
    on its own row, so chunked evaluation is bit-identical to a single pass
    (a BLAS product may change blocking with the chunk shape).
    """
    P = X[:, 0:1] * omega[None, :, 0]
    for k in range(1, X.shape[1]):
        P += X[:, k : k + 1] * omega[None, :, k]
    return P


def _row_chunks(n: int, n_jobs: int):
    bounds = np.linspace(0, n, n_jobs + 1).astype(int)
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _trig_block(X, omega_arrays, weights, scaling):
    cos = sum(np.cos(projection(X, o)) for o in omega_arrays)
    sin = sum(np.sin(projection(X, o)) for o in omega_arrays)
    if weights is not None:
        cos = cos * weights
        sin = sin * weights
    return np.hstack([cos, sin]) * scaling


def _evaluate(X, omega_arrays, weights, scaling, n_jobs):
    if n_jobs <= 1 or X.shape[0] < 2:
        return _trig_block(X, omega_arrays, weights, scaling)
    chunks = _row_chunks(X.shape[0], n_jobs)
    with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
        parts = list(pool.map(lambda ab: _trig_block(X[ab[0] : ab[1]], omega_arrays, weights, scaling), chunks))
    return np.vstack(parts)


def feature_map(X, omega, scale: float = 1.0, n_jobs: int = 1) -> FeatureMatrix:
    """Random Fourier basis ``[cos(X Omega^T), sin(X Omega^T)] * scale / sqrt(m)``.

    Leverage-resampled frequencies carry per-frequency importance weights,
    which multiply both the cosine and the sine column of that frequency.
    ``scale`` is the kernel output scale; with the default of 1 every row
    has unit squared norm.
    """
    omega = _as_freq(omega)
    X = _design(X, omega.d)
    scaling = float(scale) / np.sqrt(omega.m)
    phi = _evaluate(X, [omega.omega], omega.column_weights, scaling, int(n_jobs))
    return FeatureMatrix(phi, omega, scaling)


def feature_map_nonstationary(X, omega1, omega2, scale: float = 1.0, n_jobs: int = 1) -> FeatureMatrix:
    """Features for the two-density spectral representation.

    ``[cos(X O1^T) + cos(X O2^T), sin(X O1^T) + sin(X O2^T)] / (2 sqrt(m))``,
    which equals :func:`feature_map` exactly when ``O1 == O2``.
    """
    omega1, omega2 = _as_freq(omega1), _as_freq(omega2)
    if omega1.omega.shape != omega2.omega.shape:
        raise InputError(
            f"frequency matrices must share a shape, got {omega1.omega.shape} and {omega2.omega.shape}"
        )
    X = _design(X, omega1.d)
    scaling = float(scale) / (2.0 * np.sqrt(omega1.m))
    # with O1 == O2 the sums are exact doublings, so this matches feature_map bit-for-bit
    phi = _evaluate(X, [omega1.omega, omega2.omega], None, scaling, int(n_jobs))
    return FeatureMatrix(phi, (omega1, omega2), scaling)


def approx_kernel(phi, phi_other=None) -> np.ndarray:
    """``Phi Phi^T`` (or the cross matrix ``Phi Phi_other^T``)."""
    A = np.asarray(phi, dtype=float)
    if not np.all(np.isfinite(A)):
        raise InputError("feature matrix contains non-finite entries")
    if phi_other is not None:
        return A @ np.asarray(phi_other, dtype=float).T
    K = A @ A.T
    return 0.5 * (K + K.T)


def sample_function(omega, grid, rng=None, weights: Optional[np.ndarray] = None, scale: float = 1.0) -> np.ndarray:
    """Draw ``f = Phi(grid) w`` with ``w ~ N(0, I_{2m})``.

    Each call draws fresh weights from ``rng``; passing ``weights``
    overrides the draw.
    """
    fm = feature_map(grid, omega, scale)
    if weights is None:
        gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
        weights = gen.standard_normal(fm.phi.shape[1])
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (fm.phi.shape[1],):
        raise InputError(f"weights must have length {fm.phi.shape[1]}, got {weights.shape}")
    return fm.phi @ weights
