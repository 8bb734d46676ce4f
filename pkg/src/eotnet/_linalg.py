"""Small dense symmetric linear-algebra helpers used throughout the filters.

All covariance-like matrices are inverted through Cholesky solves; explicit
inverses are avoided so long filter runs stay well conditioned.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

__all__ = [
    "sym",
    "as_cov",
    "sqrt_psd",
    "spd_solve",
    "spd_inv",
]


def sym(a: np.ndarray) -> np.ndarray:
    """Symmetrize, removing float drift."""
    return 0.5 * (a + a.T)


def as_cov(a, name: str = "covariance", *, tol: float = 1e-8) -> np.ndarray:
    """Validate a symmetric positive semidefinite matrix and return it symmetrized.

    Raises ValueError on shape, symmetry, or negative-eigenvalue violations.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    scale = max(1.0, float(np.abs(a).max()))
    if np.abs(a - a.T).max() > tol * scale:
        raise ValueError(f"{name} is not symmetric")
    w = np.linalg.eigvalsh(sym(a))
    if w[0] < -tol * scale:
        raise ValueError(f"{name} is not positive semidefinite (min eig {w[0]:.3e})")
    return sym(a)


def sqrt_psd(a: np.ndarray) -> np.ndarray:
    """Factor L with L @ L.T == a for a symmetric PSD matrix.

    Works for singular matrices (unlike Cholesky); eigenvalues slightly below
    zero from rounding are clipped.
    """
    w, v = np.linalg.eigh(sym(np.asarray(a, dtype=float)))
    return v * np.sqrt(np.clip(w, 0.0, None))


def spd_solve(a: np.ndarray, b: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Solve a @ x = b for symmetric positive definite a."""
    try:
        return cho_solve(cho_factor(sym(a), lower=True), b)
    except (LinAlgError, np.linalg.LinAlgError) as exc:
        cond = float(np.linalg.cond(sym(a)))
        raise np.linalg.LinAlgError(
            f"{name} is singular or not positive definite (cond {cond:.3e})"
        ) from exc


def spd_inv(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via Cholesky solve."""
    return sym(spd_solve(a, np.eye(a.shape[0]), name=name))
