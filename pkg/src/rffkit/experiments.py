"""Seeded experiment runners behind the CLI subcommands.

Each runner takes a :class:`RunConfig` and returns a :class:`Report`; the
CLI only parses flags and writes files. Randomness is split into
independent streams keyed by ``(seed, role)`` so that, for example, the
dataset does not change when a different frequency sampler is chosen.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from . import data, model as model_io
from .errors import ConfigError, InputError, SingularMatrixError
from .features import approx_kernel, feature_map, sample_function
from .kernels import Family, KernelSpec, gram_matrix
from .regression import (
    DEFAULT_FOLDS,
    fit_least_squares,
    fit_ols,
    fit_ridge_primal,
    kfold_cv_lambda,
    mse,
    predict,
)
from .report import Report
from .spectral import Provenance, sample_frequencies, sample_point_masses

# rcond for the unregularised random-feature fit; mirrors the pivot
# tolerance of common least-squares routines
LSTSQ_RCOND = 1e-7

ROLE_DATA, ROLE_SPLIT, ROLE_FREQ, ROLE_CV, ROLE_WEIGHTS = range(5)

COMMAND_DEFAULTS = {
    "psd-sample": {"m": 100, "samples": 5, "grid_points": 256},
    "approx-error": {"n": 200, "dim": 2, "m_list": (16, 64, 256, 1024, 4096), "repeats": 10},
    "toy-spatial": {"n": 500, "m": 100},
    "bias-variance": {"n": 100},
    "feature-sweep": {"n": 500, "m_list": (10, 25, 50, 100, 200, 400)},
    "fit": {"m": 100},
    "predict": {},
}


@dataclass
class RunConfig:
    command: str
    seed: int = 0
    kernel: str = "se"
    sigma: float = 1.0
    lengthscale: float = 1.0
    smoothness: float = 1.5
    m: Optional[int] = None
    m_list: Optional[tuple] = None
    sampler: str = "iid"
    samplers: tuple = ("iid",)
    lam: Optional[float] = None
    lev_lambda: float = 1.0
    cv_folds: int = DEFAULT_FOLDS
    n: Optional[int] = None
    train_frac: float = 0.2
    dim: Optional[int] = None
    repeats: Optional[int] = None
    samples: Optional[int] = None
    grid_points: Optional[int] = None
    point_masses: Optional[tuple] = None
    timing: bool = False
    input: Optional[str] = None
    model: Optional[str] = None

    def resolved(self) -> "RunConfig":
        """Copy with per-command defaults filled in."""
        if self.command not in COMMAND_DEFAULTS:
            raise ConfigError(f"unknown command {self.command!r}")
        values = asdict(self)
        for key, default in COMMAND_DEFAULTS[self.command].items():
            if values[key] is None:
                values[key] = default
        return RunConfig(**values)

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(Family.parse(self.kernel), self.sigma, self.lengthscale, self.smoothness)

    def echo(self) -> dict:
        """Everything that determines the output (output paths excluded)."""
        return {k: v for k, v in asdict(self).items() if v is not None}


def stream(seed: int, role: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), role])


def _spatial_split(cfg: RunConfig):
    ds = data.gen_spatial(cfg.n, stream(cfg.seed, ROLE_DATA))
    sp = data.train_test_split(ds.n, cfg.train_frac, stream(cfg.seed, ROLE_SPLIT))
    return ds.subset(sp.train_indices), ds.subset(sp.test_indices)


def run_psd_sample(cfg: RunConfig) -> Report:
    """Random functions drawn from a spectral density on a 1-d periodic grid."""
    cfg = cfg.resolved()
    if cfg.grid_points < 2:
        raise ConfigError("grid needs at least 2 points")
    grid = np.linspace(0.0, 2.0 * np.pi, cfg.grid_points, endpoint=False)
    gen = stream(cfg.seed, ROLE_FREQ)
    if cfg.point_masses:
        omega = sample_point_masses(cfg.point_masses, cfg.m, gen)
        scale = 1.0
    else:
        spec = cfg.kernel_spec()
        if cfg.sampler == Provenance.LEVERAGE.value:
            raise ConfigError("psd-sample does not support the leverage sampler (it needs training data)")
        omega = sample_frequencies(spec, cfg.m, 1, cfg.sampler, gen)
        scale = spec.output_scale
    wgen = stream(cfg.seed, ROLE_WEIGHTS)
    report = Report("psd-sample", cfg.echo(), ["x", "sample_id", "f"])
    for sid in range(cfg.samples):
        f = sample_function(omega, grid[:, None], wgen, scale=scale)
        for x, v in zip(grid, f):
            report.add(float(x), sid, float(v))
    freqs = Report("psd-sample-frequencies", cfg.echo(), ["j", "omega"])
    for j, w in enumerate(omega.omega[:, 0]):
        freqs.add(j, float(w))
    report.companions[".freqs.csv"] = freqs
    return report


def run_approx_error(cfg: RunConfig) -> Report:
    """Kernel approximation error of each sampler against the exact Gram matrix."""
    cfg = cfg.resolved()
    spec = cfg.kernel_spec()
    X = stream(cfg.seed, ROLE_DATA).uniform(*data.SPATIAL_DOMAIN, size=(cfg.n, cfg.dim))
    K = gram_matrix(spec, X)
    cols = ["m", "sampler", "seed", "max_abs_err", "frobenius_err"]
    if cfg.timing:
        cols.append("wall_seconds")
    report = Report("approx-error", cfg.echo(), cols)
    for m in cfg.m_list:
        for sampler in cfg.samplers:
            # QMC is deterministic: one row per m
            reps = 1 if sampler == Provenance.QMC.value else cfg.repeats
            for r in range(reps):
                seed = cfg.seed + r
                t0 = time.perf_counter()
                omega = sample_frequencies(spec, m, cfg.dim, sampler, stream(seed, ROLE_FREQ), X=X, lam=cfg.lev_lambda)
                err = approx_kernel(feature_map(X, omega, spec.output_scale)) - K
                elapsed = time.perf_counter() - t0
                row = [m, sampler, seed, float(np.max(np.abs(err))), float(np.linalg.norm(err))]
                if cfg.timing:
                    row.append(elapsed)
                report.add(*row)
    return report


def _rff_pair(cfg, spec, tr, te, omega):
    """Unregularised and cross-validated ridge fits on shared random features."""
    P = feature_map(tr.X, omega, spec.output_scale).phi
    Pt = feature_map(te.X, omega, spec.output_scale).phi
    f0 = fit_least_squares(P, tr.y, LSTSQ_RCOND)
    plain = (mse(tr.y, predict(f0, P)), mse(te.y, predict(f0, Pt)), f0.diagnostics)
    if cfg.lam is None:
        lam = kfold_cv_lambda(P, tr.y, k=cfg.cv_folds, rng=stream(cfg.seed, ROLE_CV)).best_lambda
    else:
        lam = cfg.lam
    f1 = fit_ridge_primal(P, tr.y, lam)
    ridge = (mse(tr.y, predict(f1, P)), mse(te.y, predict(f1, Pt)), lam)
    return plain, ridge


def run_toy_spatial(cfg: RunConfig) -> Report:
    """Linear OLS vs unregularised random-feature regression vs CV'd kernel ridge."""
    cfg = cfg.resolved()
    spec = cfg.kernel_spec()
    tr, te = _spatial_split(cfg)
    report = Report("toy-spatial", cfg.echo(), ["model", "train_mse", "test_mse", "lambda"])
    design = lambda X: np.column_stack([np.ones(X.shape[0]), X])
    lin = fit_ols(design(tr.X), tr.y)
    report.add("linear", mse(tr.y, predict(lin, design(tr.X))), mse(te.y, predict(lin, design(te.X))), 0.0)
    omega = sample_frequencies(spec, cfg.m, tr.d, cfg.sampler, stream(cfg.seed, ROLE_FREQ), X=tr.X, lam=cfg.lev_lambda)
    plain, ridge = _rff_pair(cfg, spec, tr, te, omega)
    report.add("kernel_regression", plain[0], plain[1], 0.0)
    report.add("kernel_ridge", ridge[0], ridge[1], float(ridge[2]))
    return report


def run_bias_variance(cfg: RunConfig) -> Report:
    """Polynomial OLS of degree 1, 2 and 5 on a small epidemic training set.

    Time is rescaled to [-1, 1] before building the basis; the fitted
    polynomials are the same, but the normal equations stay well conditioned.
    """
    cfg = cfg.resolved()
    ds = data.gen_epidemic(cfg.n, stream(cfg.seed, ROLE_DATA))
    sp = data.train_test_split(ds.n, cfg.train_frac, stream(cfg.seed, ROLE_SPLIT))
    lo, hi = data.EPIDEMIC_DOMAIN
    u = (ds.X[:, 0] - 0.5 * (lo + hi)) / (0.5 * (hi - lo))
    report = Report("bias-variance", cfg.echo(), ["degree", "train_mse", "test_mse"])
    tr, te = sp.train_indices, sp.test_indices
    for degree in (1, 2, 5):
        B = data.polynomial_basis(u, degree)
        fit = fit_ols(B[tr], ds.y[tr])
        report.add(degree, mse(ds.y[tr], predict(fit, B[tr])), mse(ds.y[te], predict(fit, B[te])))
    return report


def run_feature_sweep(cfg: RunConfig) -> Report:
    """Train/test error of both random-feature models as the feature count grows.

    Frequencies for every ``m`` are prefixes of one draw (for QMC, of one
    Halton sequence), so the feature spaces are nested.
    """
    cfg = cfg.resolved()
    spec = cfg.kernel_spec()
    tr, te = _spatial_split(cfg)
    m_list = sorted(int(m) for m in cfg.m_list)
    if cfg.sampler == Provenance.LEVERAGE.value:
        raise ConfigError("feature-sweep needs nested frequency sets; the leverage sampler is not supported")
    full = sample_frequencies(spec, m_list[-1], tr.d, cfg.sampler, stream(cfg.seed, ROLE_FREQ))
    report = Report("feature-sweep", cfg.echo(), ["m", "model", "train_mse", "test_mse", "lambda", "status"])
    for m in m_list:
        omega = full.head(m)
        try:
            plain, ridge = _rff_pair(cfg, spec, tr, te, omega)
        except SingularMatrixError:
            report.add(m, "kernel_regression", float("nan"), float("nan"), 0.0, "singular")
            report.add(m, "kernel_ridge", float("nan"), float("nan"), float("nan"), "singular")
            continue
        status = "rank_deficient" if plain[2]["rank_deficient"] else "ok"
        report.add(m, "kernel_regression", plain[0], plain[1], 0.0, status)
        report.add(m, "kernel_ridge", ridge[0], ridge[1], float(ridge[2]), "ok")
    return report


def run_fit(cfg: RunConfig):
    """Train a random-feature kernel ridge model on a CSV dataset.

    Returns ``(model, in_sample_predictions)``.
    """
    cfg = cfg.resolved()
    if not cfg.input:
        raise ConfigError("fit needs --input CSV")
    ds = data.load_csv(cfg.input)
    spec = cfg.kernel_spec()
    omega = sample_frequencies(spec, cfg.m, ds.d, cfg.sampler, stream(cfg.seed, ROLE_FREQ), X=ds.X, lam=cfg.lev_lambda)
    model, fitted, _ = model_io.fit_rff_model(
        ds.X, ds.y, spec, omega, cfg.lam, cfg.cv_folds, stream(cfg.seed, ROLE_CV)
    )
    return model, fitted


def run_predict(cfg: RunConfig) -> Report:
    """Predictions of a saved model on a covariate CSV.

    The CSV may hold exactly ``d`` covariate columns, or ``d + 1`` columns
    with the response last (as in a training file), which is ignored.
    """
    cfg = cfg.resolved()
    if not cfg.model or not cfg.input:
        raise ConfigError("predict needs --model and --input")
    mdl = model_io.load(cfg.model)
    _, body = data.read_numeric_csv(cfg.input)
    if body.shape[1] == mdl.d + 1:
        body = body[:, :-1]
    elif body.shape[1] != mdl.d:
        raise InputError(
            f"dimension mismatch: model expects d={mdl.d} covariate columns, input has {body.shape[1]}"
        )
    yhat = mdl.predict(body)
    report = Report("predict", cfg.echo(), ["row_index", "prediction"])
    for i, v in enumerate(yhat):
        report.add(i, float(v))
    return report


RUNNERS = {
    "psd-sample": run_psd_sample,
    "approx-error": run_approx_error,
    "toy-spatial": run_toy_spatial,
    "bias-variance": run_bias_variance,
    "feature-sweep": run_feature_sweep,
    "predict": run_predict,
}

