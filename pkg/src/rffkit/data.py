"""Synthetic datasets, CSV I/O, splitting and polynomial bases."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import InputError

# domains are our choice; the generating functions alone do not fix them
EPIDEMIC_DOMAIN = (0.0, 50.0)
EPIDEMIC_NOISE_VAR = 150.0
SPATIAL_DOMAIN = (-2.0, 2.0)
SPATIAL_NOISE_VAR = 1.0
SPATIAL_DEFAULT_N = 500


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X[:, None]
        if self.X.shape[0] < 1 or self.X.shape[0] != self.y.shape[0]:
            raise InputError(f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InputError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def d(self) -> int:
        return self.X.shape[1]

    def subset(self, idx) -> "Dataset":
        return Dataset(self.X[idx], self.y[idx], dict(self.meta))


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray
    train_fraction: float


def _gen(rng):
    if isinstance(rng, np.random.Generator):
        return rng, None
    return np.random.default_rng(rng), rng


def epidemic_curve(x):
    return 1.0 + x + 0.2 * x * x


def gen_epidemic(n: int, rng=None, noise_var: float = EPIDEMIC_NOISE_VAR, domain=EPIDEMIC_DOMAIN) -> Dataset:
    """Simulated epidemic: ``max(0, 1 + x + 0.2 x^2 + eps)``, ``eps ~ N(0, noise_var)``.

    Negative counts are clamped to zero rather than resampled, so ``n`` is
    preserved.
    """
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    gen, seed = _gen(rng)
    lo, hi = domain
    x = gen.uniform(lo, hi, size=n)
    noise = gen.standard_normal(n) * math.sqrt(noise_var)
    raw = epidemic_curve(x) + noise
    y = np.maximum(raw, 0.0)
    meta = {
        "generator": "epidemic",
        "seed": seed,
        "noise_var": noise_var,
        "domain": tuple(domain),
        "n_clamped": int(np.sum(raw < 0)),
    }
    return Dataset(x[:, None], y, meta)


def spatial_surface(X):
    X = np.asarray(X, dtype=float)
    return np.sum(X[:, :2] ** 2, axis=1)


def gen_spatial(n: int = SPATIAL_DEFAULT_N, rng=None, noise_var: float = SPATIAL_NOISE_VAR, domain=SPATIAL_DOMAIN) -> Dataset:
    """Points uniform on a square with ``y = x1^2 + x2^2 + eps``."""
    if n < 1:
        raise InputError(f"n must be at least 1, got {n}")
    gen, seed = _gen(rng)
    lo, hi = domain
    X = gen.uniform(lo, hi, size=(n, 2))
    y = spatial_surface(X) + gen.standard_normal(n) * math.sqrt(noise_var)
    meta = {"generator": "spatial", "seed": seed, "noise_var": noise_var, "domain": tuple(domain)}
    return Dataset(X, y, meta)


def train_test_split(n: int, fraction: float, rng=None) -> Split:
    """Random partition with ``round(fraction * n)`` training indices."""
    if not 0 < fraction < 1:
        raise InputError(f"train fraction must lie in (0, 1), got {fraction}")
    n_train = int(round(fraction * n))
    if n_train < 1 or n_train >= n:
        raise InputError(f"split of n={n} at fraction {fraction} leaves an empty side")
    gen, _ = _gen(rng)
    perm = gen.permutation(n)
    return Split(np.sort(perm[:n_train]), np.sort(perm[n_train:]), float(fraction))


def polynomial_basis(x, degree: int) -> np.ndarray:
    """Columns ``x**0, x**1, ..., x**degree``."""
    if int(degree) != degree or degree < 0:
        raise InputError(f"degree must be a nonnegative integer, got {degree!r}")
    x = np.asarray(x, dtype=float).ravel()
    return np.vander(x, int(degree) + 1, increasing=True)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(dataset: Dataset, path, header: Optional[list[str]] = None) -> None:
    """Comma-separated, no quoting, ``\\n`` line endings, round-trip exact floats."""
    names = header or [f"x{j + 1}" for j in range(dataset.d)] + ["y"]
    if len(names) != dataset.d + 1:
        raise InputError(f"header needs {dataset.d + 1} names, got {len(names)}")
    lines = [",".join(names)]
    for row, target in zip(dataset.X, dataset.y):
        lines.append(",".join(_fmt(v) for v in row) + "," + _fmt(target))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def read_numeric_csv(path, min_columns: int = 1) -> tuple[list[str], np.ndarray]:
    """Header names and the numeric body of a CSV file.

    Errors name the 1-based data row (the header is not counted) and the
    column.
    """
    path = Path(path)
    if not path.is_file():
        raise InputError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InputError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < min_columns:
        raise InputError(f"{path}: need at least {min_columns} columns, found {len(header)}")
    body = []
    for r, row in enumerate(rows[1:], start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise InputError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
        values = []
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise InputError(
                    f"{path}: row {r} (line {r + 1}), column {c + 1} ({header[c]!r}): cannot parse {cell!r} as a number"
                ) from None
            if not math.isfinite(v):
                raise InputError(f"{path}: row {r} (line {r + 1}), column {c + 1} ({header[c]!r}): non-finite value {cell!r}")
            values.append(v)
        body.append(values)
    if not body:
        raise InputError(f"{path}: no data rows")
    return header, np.array(body, dtype=float)


def load_csv(path) -> Dataset:
    """Dataset from a CSV whose last column is the response."""
    header, body = read_numeric_csv(path, min_columns=2)
    return Dataset(body[:, :-1], body[:, -1], {"generator": "csv", "path": str(path), "columns": header})
