"""Random-feature kernel ridge model and its plain-text file format.

File layout (all numbers with 17 significant digits)::

    rffmodel v1
    family=se sigma=1 lengthscale=1 smoothness=1.5 theta=1 degree=2
    lambda=0.1 m=100 d=2
    <m lines: one frequency per line, d comma-separated values>
    <2m lines: one weight per line, cosine weights first>

Leverage importance weights are folded into the stored weights, so the
file always describes a plain ``[cos | sin] / sqrt(m)`` basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InputError, ModelFormatError
from .features import feature_map
from .kernels import Family, KernelSpec
from .regression import DEFAULT_FOLDS, fit_ridge_primal, kfold_cv_lambda
from .spectral import FrequencyMatrix, Provenance

MAGIC = "rffmodel v1"


@dataclass(frozen=True)
class RFFModel:
    spec: KernelSpec
    lam: float
    omega: np.ndarray
    weights: np.ndarray

    @property
    def m(self) -> int:
        return self.omega.shape[0]

    @property
    def d(self) -> int:
        return self.omega.shape[1]

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        if X.shape[1] != self.d:
            raise InputError(f"model expects d={self.d} covariates, got {X.shape[1]}")
        phi = feature_map(X, FrequencyMatrix(self.omega, Provenance.IID), self.spec.output_scale).phi
        return phi @ self.weights


def fit_rff_model(X, y, spec: KernelSpec, omega: FrequencyMatrix, lam: Optional[float] = None,
                  cv_folds: int = DEFAULT_FOLDS, cv_rng=None, lambda_grid=None):
    """Ridge regression on random features; ``lam=None`` selects it by k-fold CV.

    Returns ``(model, in_sample_predictions, cv_report_or_None)``.
    """
    fm = feature_map(X, omega, spec.output_scale)
    cv = None
    if lam is None:
        cv = kfold_cv_lambda(fm.phi, y, lambda_grid, cv_folds, cv_rng)
        lam = cv.best_lambda
    fit = fit_ridge_primal(fm.phi, y, lam)
    w = fit.weights
    if omega.column_weights is not None:
        cw = omega.column_weights
        w = w * np.concatenate([cw, cw])
    model = RFFModel(spec, float(lam), np.array(omega.omega), w)
    return model, fm.phi @ fit.weights, cv


def _g(v: float) -> str:
    return format(float(v), ".17g")


def dumps(model: RFFModel) -> str:
    s = model.spec
    lines = [
        MAGIC,
        f"family={s.family.value} sigma={_g(s.sigma)} lengthscale={_g(s.lengthscale)} "
        f"smoothness={_g(s.smoothness)} theta={_g(s.theta)} degree={int(s.degree)}",
        f"lambda={_g(model.lam)} m={model.m} d={model.d}",
    ]
    lines += [",".join(_g(v) for v in row) for row in model.omega]
    lines += [_g(v) for v in model.weights]
    return "\n".join(lines) + "\n"


def _fields(line: str, lineno: int, required: tuple[str, ...]) -> dict:
    out = {}
    for tok in line.split():
        key, sep, value = tok.partition("=")
        if not sep:
            raise ModelFormatError(f"line {lineno}: expected key=value, got {tok!r}")
        out[key] = value
    missing = [k for k in required if k not in out]
    if missing:
        raise ModelFormatError(f"line {lineno}: missing field(s) {', '.join(missing)}")
    return out


def _floats(text: str, lineno: int, count: int) -> list[float]:
    parts = text.split(",")
    if len(parts) != count:
        raise ModelFormatError(f"line {lineno}: expected {count} values, got {len(parts)}")
    try:
        vals = [float(p) for p in parts]
    except ValueError:
        raise ModelFormatError(f"line {lineno}: non-numeric value in {text!r}") from None
    if not np.all(np.isfinite(vals)):
        raise ModelFormatError(f"line {lineno}: non-finite value")
    return vals


def loads(text: str) -> RFFModel:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ModelFormatError("empty model file")
    if lines[0].strip() != MAGIC:
        head = lines[0].strip()
        if head.startswith("rffmodel "):
            raise ModelFormatError(f"unsupported model version {head.split(None, 1)[1]!r}, expected v1")
        raise ModelFormatError("not an rffmodel file (bad first line)")
    if len(lines) < 3:
        raise ModelFormatError("truncated model file: header incomplete")
    k = _fields(lines[1], 2, ("family", "sigma", "lengthscale", "smoothness", "theta", "degree"))
    h = _fields(lines[2], 3, ("lambda", "m", "d"))
    try:
        spec = KernelSpec(
            Family.parse(k["family"]), float(k["sigma"]), float(k["lengthscale"]),
            float(k["smoothness"]), float(k["theta"]), int(k["degree"]),
        )
        lam, m, d = float(h["lambda"]), int(h["m"]), int(h["d"])
    except (ValueError, TypeError) as exc:
        raise ModelFormatError(f"bad header value: {exc}") from None
    if m < 1 or d < 1:
        raise ModelFormatError(f"bad dimensions m={m}, d={d}")
    expected = 3 + m + 2 * m
    if len(lines) != expected:
        raise ModelFormatError(f"truncated or oversized model file: {len(lines)} lines, expected {expected}")
    omega = np.array([_floats(lines[3 + i], 4 + i, d) for i in range(m)])
    weights = np.array([_floats(lines[3 + m + i], 4 + m + i, 1)[0] for i in range(2 * m)])
    return RFFModel(spec, lam, omega, weights)


def save(model: RFFModel, path) -> None:
    Path(path).write_text(dumps(model), encoding="utf-8", newline="\n")


def load(path) -> RFFModel:
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such model file: {path}")
    return loads(path.read_text(encoding="utf-8"))
