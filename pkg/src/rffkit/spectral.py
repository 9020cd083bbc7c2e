"""Frequency samplers for shift-invariant kernels.

Every sampler returns a :class:`FrequencyMatrix` whose rows are draws
``omega_j`` from the kernel's spectral density (Bochner's theorem), so that
``E[cos(omega^T (x - z))] = k(x - z) / output_scale**2``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import ndtri

from .errors import (
    DegenerateDistributionError,
    InputError,
    SingularMatrixError,
    UnsupportedDimensionError,
    UnsupportedFamilyError,
)
from .kernels import Family, KernelSpec
from .linalg import rcond_estimate

HALTON_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71)

# candidates drawn per requested frequency before leverage resampling
LEVERAGE_OVERSAMPLING = 8


class Provenance(str, enum.Enum):
    IID = "iid"
    QMC = "qmc"
    ORF = "orf"
    LEVERAGE = "leverage"
    NONSTATIONARY_PAIR = "nonstationary-pair"
    POINT_MASS = "point-mass"


@dataclass(frozen=True)
class FrequencyMatrix:
    omega: np.ndarray
    provenance: Provenance
    column_weights: Optional[np.ndarray] = None
    seed: Optional[int] = None

    def __post_init__(self):
        omega = np.array(self.omega, dtype=float)
        if omega.ndim != 2 or omega.shape[0] < 1 or omega.shape[1] < 1:
            raise InputError(f"frequency matrix must be m x d with m, d >= 1, got {omega.shape}")
        if not np.all(np.isfinite(omega)):
            raise InputError("frequency matrix has non-finite entries")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "provenance", Provenance(self.provenance))
        if (self.column_weights is not None) != (self.provenance is Provenance.LEVERAGE):
            raise InputError("column_weights must be given exactly when provenance is 'leverage'")
        if self.column_weights is not None:
            w = np.array(self.column_weights, dtype=float)
            if w.shape != (omega.shape[0],) or not np.all(w > 0) or not np.all(np.isfinite(w)):
                raise InputError("column_weights must be a positive vector with one entry per frequency")
            w.setflags(write=False)
            object.__setattr__(self, "column_weights", w)

    @property
    def m(self) -> int:
        return self.omega.shape[0]

    @property
    def d(self) -> int:
        return self.omega.shape[1]

    def head(self, m: int) -> "FrequencyMatrix":
        """First ``m`` frequencies (nested subsets of a single draw)."""
        if not 1 <= m <= self.m:
            raise InputError(f"cannot take {m} of {self.m} frequencies")
        w = None if self.column_weights is None else self.column_weights[:m]
        return FrequencyMatrix(self.omega[:m], self.provenance, w, self.seed)


@dataclass(frozen=True)
class LeverageScores:
    scores: np.ndarray
    lam: float
    effective_dimension: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "effective_dimension", float(np.sum(self.scores)))

    def per_frequency(self) -> np.ndarray:
        """Cosine and sine column scores summed for each frequency."""
        m = self.scores.shape[0] // 2
        return self.scores[:m] + self.scores[m:]


def _rng(rng) -> tuple[np.random.Generator, Optional[int]]:
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), (None if rng is None else int(rng))


def _check_counts(m, d):
    for name, v in (("m", m), ("d", d)):
        if int(v) != v or v < 1:
            raise InputError(f"{name} must be a positive integer, got {v!r}")


def _require_samplable(spec: KernelSpec):
    if not spec.shift_invariant:
        raise UnsupportedFamilyError(
            f"{spec.family.value} kernel is not shift-invariant and has no spectral density"
        )


def _draw(spec: KernelSpec, m: int, d: int, gen: np.random.Generator) -> np.ndarray:
    fam = spec.family
    if fam is Family.SQUARED_EXPONENTIAL:
        return gen.standard_normal((m, d)) / spec.lengthscale
    if fam is Family.CAUCHY:
        return gen.laplace(0.0, 1.0 / spec.lengthscale, size=(m, d))
    if fam is Family.LAPLACIAN:
        return spec.sigma * gen.standard_cauchy((m, d))
    if fam is Family.MATERN:
        # multivariate Student-t with 2*nu degrees of freedom, scale 1/lengthscale
        nu = spec.smoothness
        z = gen.standard_normal((m, d))
        u = gen.chisquare(2.0 * nu, size=(m, 1)) / (2.0 * nu)
        return z / (spec.lengthscale * np.sqrt(u))
    raise AssertionError(fam)


def sample_frequencies_iid(spec: KernelSpec, m: int, d: int, rng=None) -> FrequencyMatrix:
    """Draw ``m`` i.i.d. frequencies in ``d`` dimensions from the spectral density.

    SE gives Gaussian rows with standard deviation ``1/lengthscale``; the
    Cauchy kernel gives Laplace coordinates; the Laplacian kernel gives
    Cauchy(0, sigma) coordinates; Matern gives a multivariate Student-t.
    """
    _require_samplable(spec)
    _check_counts(m, d)
    gen, seed = _rng(rng)
    return FrequencyMatrix(_draw(spec, int(m), int(d), gen), Provenance.IID, seed=seed)


def radical_inverse(indices: np.ndarray, base: int) -> np.ndarray:
    """Van der Corput radical inverse of nonnegative integers in ``base``."""
    n = np.array(indices, dtype=np.int64)
    out = np.zeros(n.shape, dtype=float)
    scale = 1.0 / base
    while np.any(n > 0):
        n, digit = np.divmod(n, base)
        out += digit * scale
        scale /= base
    return out


def halton_points(m: int, d: int) -> np.ndarray:
    """First ``m`` points of the ``d``-dimensional Halton sequence.

    Index 0 (the origin) is skipped, so every entry lies strictly in (0, 1).
    """
    _check_counts(m, d)
    if d > len(HALTON_PRIMES):
        raise UnsupportedDimensionError(
            f"Halton sequence supports d <= {len(HALTON_PRIMES)}, got d={d}"
        )
    idx = np.arange(1, int(m) + 1)
    return np.column_stack([radical_inverse(idx, b) for b in HALTON_PRIMES[: int(d)]])


def _quantile(spec: KernelSpec, u: np.ndarray) -> np.ndarray:
    fam = spec.family
    if fam is Family.SQUARED_EXPONENTIAL:
        return ndtri(u) / spec.lengthscale
    if fam is Family.CAUCHY:
        b = 1.0 / spec.lengthscale
        # Laplace quantile, one branch per tail so neither loses precision
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(u < 0.5, b * np.log(2.0 * u), -b * np.log(2.0 * (1.0 - u)))
    if fam is Family.LAPLACIAN:
        return spec.sigma * np.tan(np.pi * (u - 0.5))
    raise UnsupportedFamilyError(
        f"no coordinate-wise quantile for the {fam.value} spectral density; QMC sampling unsupported"
    )


def sample_frequencies_qmc(spec: KernelSpec, m: int, d: int) -> FrequencyMatrix:
    """Deterministic frequencies: Halton points pushed through the spectral quantile."""
    _require_samplable(spec)
    u = halton_points(m, d)
    return FrequencyMatrix(_quantile(spec, u), Provenance.QMC)


def sample_frequencies_orf(spec: KernelSpec, m: int, d: int, rng=None) -> FrequencyMatrix:
    """Orthogonal random features for the SE kernel.

    Frequencies come in independent ``d x d`` blocks ``S O / lengthscale``:
    ``O`` is the orthogonal QR factor of a Gaussian matrix and ``S`` holds
    the row norms of a second, independent Gaussian matrix, so each row has
    the chi(d) norm distribution of an i.i.d. Gaussian row.
    """
    if spec.family is not Family.SQUARED_EXPONENTIAL:
        raise UnsupportedFamilyError(
            f"orthogonal random features are defined for the SE kernel only, got {spec.family.value}"
        )
    _check_counts(m, d)
    gen, seed = _rng(rng)
    m, d = int(m), int(d)
    blocks = []
    for _ in range(-(-m // d)):
        G = gen.standard_normal((d, d))
        G1 = gen.standard_normal((d, d))
        Q, R = np.linalg.qr(G)
        # sign fix makes Q Haar-distributed
        Q = Q * np.where(np.diag(R) < 0, -1.0, 1.0)
        S = np.sqrt(np.sum(G1 * G1, axis=1))
        blocks.append(S[:, None] * Q)
    omega = np.vstack(blocks)[:m] / spec.lengthscale
    return FrequencyMatrix(omega, Provenance.ORF, seed=seed)


def ridge_leverage_scores(Phi, lam: float) -> LeverageScores:
    """Ridge leverage score of every column of the feature matrix.

    ``score_j = [Phi^T (Phi Phi^T + lam I_N)^{-1} Phi]_jj``. The equivalent
    ``2m x 2m`` form ``diag(Phi^T Phi (Phi^T Phi + lam I)^{-1})`` is used
    when it is the smaller system (and always when ``lam == 0``).
    """
    Phi = np.asarray(Phi, dtype=float)
    if Phi.ndim != 2 or not np.all(np.isfinite(Phi)):
        raise InputError("feature matrix must be a finite 2-d array")
    if not (lam >= 0 and np.isfinite(lam)):
        raise InputError(f"lambda must be nonnegative, got {lam!r}")
    n, p = Phi.shape
    if lam == 0 or p <= n:
        A = Phi.T @ Phi
        system = A + lam * np.eye(p)
        try:
            c = cho_factor(system, lower=True)
        except np.linalg.LinAlgError:
            c = None
        if c is None or (lam == 0 and rcond_estimate(c, system) < 1e-12):
            raise SingularMatrixError(
                "Phi^T Phi is singular; leverage scores at lambda=0 need full column rank, increase lambda"
            )
        scores = np.einsum("ij,ji->i", A, cho_solve(c, np.eye(p)))
    else:
        c = cho_factor(Phi @ Phi.T + lam * np.eye(n), lower=True)
        scores = np.einsum("ij,ij->j", Phi, cho_solve(c, Phi))
    return LeverageScores(np.clip(scores, 0.0, 1.0), float(lam))


def resample_by_leverage(candidates: FrequencyMatrix, scores: LeverageScores, m: int, rng=None) -> FrequencyMatrix:
    """Draw ``m`` of the candidate frequencies with replacement,
    ``p_j`` proportional to the frequency's summed cosine+sine score.

    Each draw carries the importance weight ``1/sqrt(m0 p_j)`` so that the
    reweighted features estimate the same kernel as the candidate set.
    """
    m0 = candidates.m
    _check_counts(m, 1)
    if m0 < m:
        raise InputError(f"need at least m={m} candidate frequencies, got {m0}")
    per_freq = scores.per_frequency()
    if per_freq.shape[0] != m0:
        raise InputError(
            f"scores cover {per_freq.shape[0]} frequencies but there are {m0} candidates"
        )
    total = float(np.sum(per_freq))
    if not total > 0:
        raise DegenerateDistributionError("all leverage scores are zero; cannot form a sampling distribution")
    probs = per_freq / total
    gen, seed = _rng(rng)
    idx = gen.choice(m0, size=int(m), replace=True, p=probs)
    weights = 1.0 / np.sqrt(m0 * probs[idx])
    if candidates.column_weights is not None:
        weights = weights * candidates.column_weights[idx]
    return FrequencyMatrix(candidates.omega[idx], Provenance.LEVERAGE, column_weights=weights, seed=seed)


def leverage_probabilities(scores: LeverageScores) -> np.ndarray:
    per_freq = scores.per_frequency()
    return per_freq / np.sum(per_freq)


def sample_frequencies_leverage(
    spec: KernelSpec, X, m: int, lam: float = 1.0, rng=None, oversampling: int = LEVERAGE_OVERSAMPLING
) -> FrequencyMatrix:
    """Oversample i.i.d. candidates, score them on ``X``, resample ``m``."""
    from .features import feature_map

    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    gen, seed = _rng(rng)
    candidates = sample_frequencies_iid(spec, oversampling * int(m), X.shape[1], gen)
    scores = ridge_leverage_scores(feature_map(X, candidates).phi, lam)
    out = resample_by_leverage(candidates, scores, m, gen)
    return FrequencyMatrix(out.omega, out.provenance, out.column_weights, seed)


def sample_frequency_pairs_nonstationary(
    spec1: KernelSpec, spec2: KernelSpec, m: int, d: int, rng=None, shared_draw: bool = False
) -> tuple[FrequencyMatrix, FrequencyMatrix]:
    """Independent frequency matrices from two spectral densities.

    ``shared_draw=True`` reuses the first draw for both (only meaningful
    when the two specs agree); the feature map then reduces to the
    stationary one.
    """
    _require_samplable(spec1)
    _require_samplable(spec2)
    _check_counts(m, d)
    gen, seed = _rng(rng)
    o1 = _draw(spec1, int(m), int(d), gen)
    o2 = o1.copy() if shared_draw else _draw(spec2, int(m), int(d), gen)
    return (
        FrequencyMatrix(o1, Provenance.NONSTATIONARY_PAIR, seed=seed),
        FrequencyMatrix(o2, Provenance.NONSTATIONARY_PAIR, seed=seed),
    )


def sample_point_masses(points, m: int, rng=None, probs=None) -> FrequencyMatrix:
    """1-d frequencies drawn from a finite set of point masses (equal weight by default)."""
    pts = np.asarray(points, dtype=float).ravel()
    if pts.size == 0:
        raise InputError("need at least one point mass")
    _check_counts(m, 1)
    gen, seed = _rng(rng)
    omega = gen.choice(pts, size=int(m), replace=True, p=probs)
    return FrequencyMatrix(omega[:, None], Provenance.POINT_MASS, seed=seed)


def sample_frequencies(spec: KernelSpec, m: int, d: int, sampler: str = "iid", rng=None, X=None, lam: float = 1.0) -> FrequencyMatrix:
    """Dispatch on the sampler name used by the CLI."""
    sampler = Provenance(sampler)
    if sampler is Provenance.IID:
        return sample_frequencies_iid(spec, m, d, rng)
    if sampler is Provenance.QMC:
        return sample_frequencies_qmc(spec, m, d)
    if sampler is Provenance.ORF:
        return sample_frequencies_orf(spec, m, d, rng)
    if sampler is Provenance.LEVERAGE:
        if X is None:
            raise UnsupportedFamilyError("leverage sampling needs data to score candidate frequencies")
        return sample_frequencies_leverage(spec, X, m, lam, rng)
    raise UnsupportedFamilyError(f"sampler {sampler.value!r} cannot be used here")

