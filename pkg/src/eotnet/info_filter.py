"""Information-form correction and prediction primitives.

State is carried as an information vector q = Omega @ x_hat and information
matrix Omega = C^-1, which makes measurement corrections additive and lets
distributed schemes fuse by summation or averaging.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._linalg import spd_inv, spd_solve, sym

__all__ = [
    "InformationState",
    "InnovationPair",
    "innovation",
    "correct",
    "predict",
    "to_moments",
    "from_moments",
]


@dataclass(frozen=True)
class InformationState:
    """Information vector and information matrix for one estimated quantity."""

    q: np.ndarray
    omega: np.ndarray

    def __post_init__(self):
        q = np.asarray(self.q, dtype=float)
        omega = np.asarray(self.omega, dtype=float)
        if q.ndim != 1 or omega.shape != (q.size, q.size):
            raise ValueError(
                f"inconsistent information state shapes {q.shape} / {omega.shape}"
            )
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "omega", omega)

    @property
    def dim(self) -> int:
        return self.q.size


@dataclass(frozen=True)
class InnovationPair:
    """Additive information contribution of one measurement (or one node)."""

    dq: np.ndarray
    domega: np.ndarray

    def __add__(self, other: "InnovationPair") -> "InnovationPair":
        return InnovationPair(self.dq + other.dq, self.domega + other.domega)


def innovation(a: np.ndarray, v: np.ndarray, z: np.ndarray) -> InnovationPair:
    """Innovation pair (A.T V z, A.T V A) for measurement z with model matrix A
    and noise information matrix V."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    v = np.atleast_2d(np.asarray(v, dtype=float))
    z = np.atleast_1d(np.asarray(z, dtype=float))
    if a.shape[0] != v.shape[0] or v.shape[0] != v.shape[1] or z.shape != (a.shape[0],):
        raise ValueError(
            f"dimension mismatch: A {a.shape}, V {v.shape}, z {z.shape}"
        )
    av = a.T @ v
    return InnovationPair(dq=av @ z, domega=sym(av @ a))


def correct(info: InformationState, innov: InnovationPair, weight: float = 1.0) -> InformationState:
    """Additive measurement update, optionally scaled by a consensus weight."""
    return InformationState(
        q=info.q + weight * innov.dq,
        omega=sym(info.omega + weight * innov.domega),
    )


def predict(info: InformationState, f: np.ndarray, ww: np.ndarray) -> InformationState:
    """Time update in information form.

    Uses the inverse-free arrangement: with G = Omega + F.T Ww F,
    Omega' = Ww - Ww F G^-1 F.T Ww and q' = Omega' F Omega^-1 q.  All inner
    inversions are symmetric positive definite solves.
    """
    f = np.asarray(f, dtype=float)
    ww = np.asarray(ww, dtype=float)
    gram = sym(info.omega + f.T @ ww @ f)
    b = ww @ f  # Omega' = Ww - B G^-1 B.T
    omega_next = sym(ww - b @ spd_solve(gram, b.T, name="predicted information gram"))
    x_hat = spd_solve(info.omega, info.q, name="information matrix")
    return InformationState(q=omega_next @ (f @ x_hat), omega=omega_next)


def to_moments(info: InformationState) -> tuple[np.ndarray, np.ndarray]:
    """Recover (x_hat, C) from an information state."""
    cov = spd_inv(info.omega, name="information matrix")
    return cov @ info.q, cov


def from_moments(x_hat, cov) -> InformationState:
    """Build an information state from a mean and positive definite covariance."""
    x_hat = np.asarray(x_hat, dtype=float)
    omega = spd_inv(np.asarray(cov, dtype=float), name="covariance")
    return InformationState(q=omega @ x_hat, omega=omega)
