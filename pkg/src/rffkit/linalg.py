"""Symmetric positive-definite solves with a condition estimate."""

from __future__ import annotations

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.linalg.lapack import dpocon

from .errors import SingularMatrixError

MAX_CONDITION = 1e12


def rcond_estimate(factor, A: np.ndarray) -> float:
    """Reciprocal 1-norm condition estimate of ``A`` from its Cholesky factor."""
    c, lower = factor
    anorm = np.linalg.norm(A, 1)
    if anorm == 0:
        return 0.0
    rcond, info = dpocon(c, anorm, uplo="L" if lower else "U")
    return float(rcond) if info == 0 else 0.0


def spd_solve(A: np.ndarray, b: np.ndarray, check_condition: bool = False, what: str = "system"):
    """Solve ``A x = b`` for symmetric positive-definite ``A``.

    Returns ``(x, condition_estimate)``. Raises SingularMatrixError when the
    Cholesky factorisation breaks down, or when ``check_condition`` is set
    and the condition estimate exceeds ``MAX_CONDITION``.
    """
    A = np.asarray(A, dtype=float)
    try:
        factor = cho_factor(A, lower=True, check_finite=True)
    except np.linalg.LinAlgError:
        raise SingularMatrixError(f"{what} is singular or not positive definite") from None
    rcond = rcond_estimate(factor, A)
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if check_condition and cond > MAX_CONDITION:
        raise SingularMatrixError(f"{what} is ill-conditioned (condition estimate {cond:.3g} > {MAX_CONDITION:.0e})")
    return cho_solve(factor, b), cond
