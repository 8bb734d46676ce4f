"""Object representation and synthetic measurement generation.

A tracked object carries a kinematic state (position, velocity, ...) and an
extent vector [orientation, semi-axis 1, semi-axis 2] describing a
perpendicular axis-symmetric shape (ellipse or rectangle).  Detections are
scattered over the object through a multiplicative noise vector acting on the
shape matrix, plus additive sensor noise.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._linalg import as_cov, sqrt_psd

__all__ = [
    "ShapeKind",
    "Extent",
    "KinematicState",
    "wrap_angle",
    "rot2",
    "shape_matrix",
    "shape_row_jacobians",
    "sample_measurements",
    "extent_vertices",
]

TWO_PI = 2.0 * np.pi


def wrap_angle(angle: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return float(np.pi - (np.pi - angle) % TWO_PI)


def rot2(angle: float) -> np.ndarray:
    """2-D counterclockwise rotation matrix."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


class ShapeKind(enum.Enum):
    ELLIPSE = "ellipse"
    RECTANGLE = "rectangle"


@dataclass(frozen=True)
class Extent:
    """Orientation (rad, counterclockwise from x-axis) and semi-axis lengths (m).

    The orientation is wrapped to (-pi, pi] on construction; semi-axes must be
    strictly positive.
    """

    alpha: float
    l1: float
    l2: float

    def __post_init__(self):
        if not (self.l1 > 0.0 and self.l2 > 0.0):
            raise ValueError(f"semi-axes must be positive, got ({self.l1}, {self.l2})")
        if not np.isfinite([self.alpha, self.l1, self.l2]).all():
            raise ValueError("extent entries must be finite")
        object.__setattr__(self, "alpha", wrap_angle(self.alpha))

    @classmethod
    def from_array(cls, p, min_axis: float = 1e-3) -> "Extent":
        """Build from [alpha, l1, l2], clamping semi-axes to a positive floor."""
        p = np.asarray(p, dtype=float)
        return cls(float(p[0]), max(float(p[1]), min_axis), max(float(p[2]), min_axis))

    def as_array(self) -> np.ndarray:
        return np.array([self.alpha, self.l1, self.l2])


@dataclass(frozen=True)
class KinematicState:
    """Motion vector: 2-D position plus optional velocity (and further blocks)."""

    m: np.ndarray
    mdot: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        object.__setattr__(self, "m", np.asarray(self.m, dtype=float))
        object.__setattr__(self, "mdot", np.asarray(self.mdot, dtype=float))
        if self.m.shape != (2,):
            raise ValueError("position must be a 2-vector")
        if not np.isfinite(self.as_array()).all():
            raise ValueError("kinematic entries must be finite")

    @classmethod
    def from_array(cls, x) -> "KinematicState":
        x = np.asarray(x, dtype=float)
        return cls(x[:2], x[2:])

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.m, self.mdot])

    @property
    def dim(self) -> int:
        return 2 + self.mdot.size


def shape_matrix(p: Extent) -> np.ndarray:
    """Shape matrix compacting orientation and size: Rot(alpha) @ diag(l1, l2)."""
    return rot2(p.alpha) @ np.diag([p.l1, p.l2])


def shape_row_jacobians(p: Extent) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the two rows of the shape matrix w.r.t. [alpha, l1, l2].

    Row m of the shape matrix is a function of the extent vector; J_m is the
    2x3 matrix with J_m[a, b] = d(S[m, a]) / d(p[b]).  With a multiplicative
    noise 2-vector h, the first-order perturbation of row m of S @ h is then
    h.T @ J_m @ dp.
    """
    c, s = np.cos(p.alpha), np.sin(p.alpha)
    j1 = np.array([[-p.l1 * s, c, 0.0], [-p.l2 * c, 0.0, -s]])
    j2 = np.array([[p.l1 * c, s, 0.0], [-p.l2 * s, 0.0, c]])
    return j1, j2


def sample_measurements(
    x: KinematicState,
    p: Extent,
    ch: np.ndarray,
    cv: np.ndarray,
    count: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """Draw position detections y = m + S @ h + v, h ~ N(0, ch), v ~ N(0, cv).

    Scattering sources are placed on/inside the object by the multiplicative
    noise h; v is additive sensor noise.  Returns an array of shape (count, 2).
    """
    ch = as_cov(ch, "multiplicative noise covariance")
    cv = as_cov(cv, "measurement noise covariance")
    if count < 0:
        raise ValueError("count must be nonnegative")
    s_mat = shape_matrix(p)
    lh = sqrt_psd(ch)
    lv = sqrt_psd(cv)
    h = rng.standard_normal((count, 2)) @ lh.T
    v = rng.standard_normal((count, 2)) @ lv.T
    return x.m + h @ s_mat.T + v


# Body-frame corners in fixed counterclockwise order, starting at (+l1, +l2).
_CORNER_SIGNS = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


def extent_vertices(m, p: Extent) -> np.ndarray:
    """Corners of the rectangle centered at m with half-lengths l1, l2 rotated
    by alpha, counterclockwise from the body-frame (+l1, +l2) corner."""
    m = np.asarray(m, dtype=float)
    corners = _CORNER_SIGNS * np.array([p.l1, p.l2])
    return m + corners @ rot2(p.alpha).T
