"""Exact kernel evaluation, Gram matrices and explicit finite feature maps.

The functions here are the ground truth that the random feature
approximations in :mod:`rffkit.features` are checked against.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kv

from .errors import ConfigError, InputError

# lags below this are treated as exactly zero for the Matern kernel
MATERN_ZERO_LAG = 1e-12


class Family(str, enum.Enum):
    SQUARED_EXPONENTIAL = "se"
    MATERN = "matern"
    CAUCHY = "cauchy"
    LAPLACIAN = "laplacian"
    POLYNOMIAL = "polynomial"

    @classmethod
    def parse(cls, name: str) -> "Family":
        aliases = {
            "se": cls.SQUARED_EXPONENTIAL,
            "rbf": cls.SQUARED_EXPONENTIAL,
            "gaussian": cls.SQUARED_EXPONENTIAL,
            "squared_exponential": cls.SQUARED_EXPONENTIAL,
            "matern": cls.MATERN,
            "cauchy": cls.CAUCHY,
            "laplacian": cls.LAPLACIAN,
            "laplace": cls.LAPLACIAN,
            "polynomial": cls.POLYNOMIAL,
            "poly": cls.POLYNOMIAL,
        }
        try:
            return aliases[name.strip().lower()]
        except KeyError:
            raise ConfigError(f"unknown kernel family {name!r}") from None


# which optional KernelSpec fields each family reads
_READS = {
    Family.SQUARED_EXPONENTIAL: ("sigma", "lengthscale"),
    Family.MATERN: ("sigma", "lengthscale", "smoothness"),
    Family.CAUCHY: ("sigma", "lengthscale"),
    Family.LAPLACIAN: ("sigma",),
    Family.POLYNOMIAL: ("theta", "degree"),
}


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus hyperparameters.

    ``sigma`` is the output scale (``k(x, x) = sigma**2``) for the squared
    exponential, Matern and Cauchy families. For the Laplacian kernel
    ``exp(-sigma * ||x - z||_1)`` it is the decay rate instead, and the
    output scale is 1. Fields a family does not read are ignored and never
    validated.
    """

    family: Family = Family.SQUARED_EXPONENTIAL
    sigma: float = 1.0
    lengthscale: float = 1.0
    smoothness: float = 1.5
    theta: float = 1.0
    degree: int = 2

    def __post_init__(self):
        if not isinstance(self.family, Family):
            object.__setattr__(self, "family", Family.parse(str(self.family)))
        reads = _READS[self.family]
        for name in ("sigma", "lengthscale", "smoothness"):
            if name in reads:
                value = getattr(self, name)
                if not (np.isfinite(value) and value > 0):
                    raise ConfigError(f"{name} must be a positive finite number, got {value!r}")
        if "theta" in reads and not (np.isfinite(self.theta) and self.theta >= 0):
            raise ConfigError(f"theta must be nonnegative, got {self.theta!r}")
        if "degree" in reads:
            if int(self.degree) != self.degree or self.degree < 1:
                raise ConfigError(f"degree must be a positive integer, got {self.degree!r}")

    @property
    def shift_invariant(self) -> bool:
        return self.family is not Family.POLYNOMIAL

    @property
    def output_scale(self) -> float:
        """Multiplier applied to unit-scale random features."""
        if self.family in (Family.LAPLACIAN, Family.POLYNOMIAL):
            return 1.0
        return float(self.sigma)

    def reads(self) -> tuple[str, ...]:
        return _READS[self.family]


def _as_design(X, name="X") -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise InputError(f"{name} must be a nonempty 2-d array, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise InputError(f"{name} contains non-finite entries")
    return X


def _profile(spec: KernelSpec, lag: np.ndarray) -> np.ndarray:
    """Stationary kernel as a function of a lag statistic.

    The lag is the squared Euclidean distance for SE, the Euclidean
    distance for Matern, the L1 distance for Laplacian, and the
    per-coordinate differences (last axis) for Cauchy.
    """
    fam = spec.family
    s2 = spec.output_scale ** 2
    if fam is Family.SQUARED_EXPONENTIAL:
        return s2 * np.exp(-lag / (2.0 * spec.lengthscale ** 2))
    if fam is Family.LAPLACIAN:
        return np.exp(-spec.sigma * lag)
    if fam is Family.CAUCHY:
        return s2 * np.prod(1.0 / (1.0 + (lag / spec.lengthscale) ** 2), axis=-1)
    if fam is Family.MATERN:
        nu = spec.smoothness
        r = np.asarray(lag, dtype=float)
        out = np.ones_like(r)
        pos = r >= MATERN_ZERO_LAG
        t = math.sqrt(2.0 * nu) * r[pos] / spec.lengthscale
        # log-space prefactor keeps large nu from overflowing 2**(1-nu)/Gamma(nu)
        out[pos] = np.exp((1.0 - nu) * math.log(2.0) - gammaln(nu) + nu * np.log(t)) * kv(nu, t)
        # kv underflows to 0 for huge t, which is the correct limit
        out[pos] = np.where(np.isfinite(out[pos]), out[pos], 0.0)
        return s2 * out
    raise AssertionError(fam)


def kernel_eval(spec: KernelSpec, x, z) -> float:
    """Evaluate ``k(x, z)`` in closed form."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if x.shape != z.shape or x.ndim != 1:
        raise InputError(f"x and z must be vectors of equal dimension, got {x.shape} and {z.shape}")
    if spec.family is Family.POLYNOMIAL:
        return float((np.dot(x, z) + spec.theta) ** spec.degree)
    diff = x - z
    if spec.family is Family.SQUARED_EXPONENTIAL:
        return float(_profile(spec, np.dot(diff, diff)))
    if spec.family is Family.LAPLACIAN:
        return float(_profile(spec, np.sum(np.abs(diff))))
    if spec.family is Family.CAUCHY:
        return float(_profile(spec, diff))
    return float(_profile(spec, np.array(np.sqrt(np.dot(diff, diff)))))


def cross_kernel(spec: KernelSpec, X, Z) -> np.ndarray:
    """Kernel matrix ``K[i, j] = k(X[i], Z[j])``."""
    X = _as_design(X, "X")
    Z = _as_design(Z, "Z")
    if X.shape[1] != Z.shape[1]:
        raise InputError(f"dimension mismatch: X has d={X.shape[1]}, Z has d={Z.shape[1]}")
    fam = spec.family
    if fam is Family.POLYNOMIAL:
        return (X @ Z.T + spec.theta) ** spec.degree
    if fam is Family.SQUARED_EXPONENTIAL:
        return _profile(spec, cdist(X, Z, "sqeuclidean"))
    if fam is Family.LAPLACIAN:
        return _profile(spec, cdist(X, Z, "cityblock"))
    if fam is Family.CAUCHY:
        return _profile(spec, X[:, None, :] - Z[None, :, :])
    return _profile(spec, cdist(X, Z, "euclidean"))


def gram_matrix(spec: KernelSpec, X) -> np.ndarray:
    """N x N kernel matrix of the rows of ``X``."""
    X = _as_design(X)
    K = cross_kernel(spec, X, X)
    # polynomial path goes through a BLAS product which need not be exactly symmetric
    return 0.5 * (K + K.T)


def check_gram(K, rtol: float = 1e-12, psd_tol: float = 1e-8) -> None:
    """Raise InputError unless ``K`` is symmetric and positive semidefinite."""
    K = np.asarray(K, dtype=float)
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise InputError(f"Gram matrix must be square, got shape {K.shape}")
    scale = max(np.max(np.abs(K)), np.finfo(float).tiny)
    if np.max(np.abs(K - K.T)) > rtol * scale:
        raise InputError("Gram matrix is not symmetric")
    eig = np.linalg.eigvalsh(K)
    if eig[0] < -psd_tol * max(eig[-1], 0.0):
        raise InputError(f"Gram matrix is not PSD: min eigenvalue {eig[0]:.3e}, max {eig[-1]:.3e}")


def poly2_feature_map(x) -> np.ndarray:
    """Explicit map whose inner products give the degree-2 homogeneous
    polynomial kernel: ``(x1**2, sqrt(2)*x1*x2, x2**2)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (2,):
        raise InputError(f"poly2_feature_map needs 2-dimensional input, got shape {x.shape}")
    x1, x2 = x[..., 0], x[..., 1]
    return np.stack([x1 * x1, math.sqrt(2.0) * x1 * x2, x2 * x2], axis=-1)


def gaussian_taylor_features(x: float, gamma: float, n_terms: int) -> np.ndarray:
    """First ``n_terms`` coordinates of the infinite feature map of the
    1-d Gaussian kernel ``exp(-gamma * (x - z)**2)``.

    Coordinate ``n`` is ``exp(-gamma x^2) * sqrt((2 gamma)^n / n!) * x^n``.
    Magnitudes are assembled in log space so large ``n`` cannot overflow.
    """
    if not (gamma > 0):
        raise ConfigError(f"gamma must be positive, got {gamma!r}")
    if int(n_terms) != n_terms or n_terms < 1:
        raise ConfigError(f"n_terms must be a positive integer, got {n_terms!r}")
    x = float(x)
    n = np.arange(int(n_terms), dtype=float)
    if x == 0.0:
        out = np.zeros(int(n_terms))
        out[0] = 1.0
        return out
    log_mag = -gamma * x * x + 0.5 * (n * math.log(2.0 * gamma) - gammaln(n + 1.0)) + n * math.log(abs(x))
    sign = np.where((x < 0) & (n % 2 == 1), -1.0, 1.0)
    return sign * np.exp(log_mag)

