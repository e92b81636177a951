"""Planar pose algebra and frame conventions.

Conventions used throughout the package:

- World axes: Y is up, the ground plane is XZ.
- A planar heading is a unit vector (u, v) in ground-plane coordinates,
  u along world +X and v along world +Z.  The associated angle theta
  satisfies (u, v) = (cos theta, sin theta), i.e. theta is measured from
  +X toward +Z.
- The forward axis of a 6DoF camera/agent frame is its local +X axis:
  an identity world-from-camera rotation faces theta = 0.
- yaw_rotation(theta) is the world rotation about the vertical axis that
  turns a forward-facing frame to heading theta; it maps +X to
  (cos theta, 0, sin theta), so positions and headings rotate by the same
  planar rotation.
- TURN_LEFT increases theta; a positive goal bearing means the goal is on
  the agent's left.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from realnav.errors import DegeneratePoseError

TWO_PI = 2.0 * math.pi

# Camera-frame forward axis expressed in camera coordinates.
FORWARD_AXIS = np.array([1.0, 0.0, 0.0])

_UNIT_NORM_TOL = 1e-9
_ROTATION_TOL = 1e-6


def wrap_angle(a: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - a) % TWO_PI


@dataclass(frozen=True)
class Heading:
    """Unit heading vector (cos theta, sin theta) in the ground plane."""

    u: float
    v: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.u) and math.isfinite(self.v)):
            raise ValueError("heading components must be finite")
        if abs(self.u * self.u + self.v * self.v - 1.0) > _UNIT_NORM_TOL:
            raise ValueError(
                f"heading ({self.u}, {self.v}) is not unit-norm within {_UNIT_NORM_TOL}"
            )

    @property
    def angle(self) -> float:
        return math.atan2(self.v, self.u)

    def rotated(self, delta: float) -> "Heading":
        """Rotate by delta radians (positive = toward +Z, i.e. left)."""
        c, s = math.cos(delta), math.sin(delta)
        return Heading(self.u * c - self.v * s, self.u * s + self.v * c)


def heading_from_angle(theta: float) -> Heading:
    if not math.isfinite(theta):
        raise ValueError("theta must be finite")
    return Heading(math.cos(theta), math.sin(theta))


def heading_cosine(a: Heading, b: Heading) -> float:
    """Dot product of two unit headings: cos of the angle between them."""
    return a.u * b.u + a.v * b.v


@dataclass(frozen=True)
class Pose3:
    """Planar pose: position (x, z) in meters plus a unit heading."""

    x: float
    z: float
    heading: Heading

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.z)):
            raise ValueError("pose coordinates must be finite")

    @property
    def theta(self) -> float:
        return self.heading.angle


def _frozen_array(a, shape) -> np.ndarray:
    arr = np.asarray(a, dtype=float)
    if arr.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array entries must be finite")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _check_rotation(r: np.ndarray, tol: float = _ROTATION_TOL) -> None:
    if np.max(np.abs(r.T @ r - np.eye(3))) > tol:
        raise ValueError("rotation is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > tol:
        raise ValueError("rotation determinant is not +1")


@dataclass(frozen=True)
class Pose6:
    """Full 6DoF pose: world-from-camera rotation and camera center."""

    rotation: np.ndarray = field()
    position: np.ndarray = field()

    def __post_init__(self) -> None:
        object.__setattr__(self, "rotation", _frozen_array(self.rotation, (3, 3)))
        object.__setattr__(self, "position", _frozen_array(self.position, (3,)))
        _check_rotation(self.rotation)


@dataclass(frozen=True)
class SimilarityTransform:
    """p -> scale * rotation @ p + translation."""

    scale: float
    rotation: np.ndarray = field()
    translation: np.ndarray = field()

    def __post_init__(self) -> None:
        if not (math.isfinite(self.scale) and self.scale > 0.0):
            raise ValueError("scale must be finite and > 0")
        object.__setattr__(self, "rotation", _frozen_array(self.rotation, (3, 3)))
        object.__setattr__(
            self, "translation", _frozen_array(self.translation, (3,))
        )
        _check_rotation(self.rotation)

    @staticmethod
    def identity() -> "SimilarityTransform":
        return SimilarityTransform(1.0, np.eye(3), np.zeros(3))

    def inverse(self) -> "SimilarityTransform":
        inv_scale = 1.0 / self.scale
        rot_t = self.rotation.T
        return SimilarityTransform(
            inv_scale, rot_t, -inv_scale * (rot_t @ self.translation)
        )

    def compose(self, other: "SimilarityTransform") -> "SimilarityTransform":
        """Transform equivalent to applying `other` first, then self."""
        return SimilarityTransform(
            self.scale * other.scale,
            self.rotation @ other.rotation,
            self.scale * (self.rotation @ other.translation) + self.translation,
        )

    @property
    def yaw(self) -> float:
        """Planar rotation angle of the transform (angle of the image of +X)."""
        return math.atan2(self.rotation[2, 0], self.rotation[0, 0])


def apply_similarity(t: SimilarityTransform, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    return t.scale * (t.rotation @ p) + t.translation


def yaw_rotation(theta: float) -> np.ndarray:
    """World rotation about the vertical axis mapping +X to (cos t, 0, sin t)."""
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])


def pose6_to_pose3(p: Pose6) -> Pose3:
    """Project a 6DoF pose to the ground plane.

    The planar position keeps the world X and Z coordinates (altitude is
    dropped); the heading is the normalized ground-plane projection of the
    camera forward axis.  Raises DegeneratePoseError when the forward axis
    is vertical within 1e-6.
    """
    fwd = p.rotation @ FORWARD_AXIS
    fx, fz = float(fwd[0]), float(fwd[2])
    norm = math.hypot(fx, fz)
    if norm <= 1e-6:
        raise DegeneratePoseError(
            "camera forward axis is vertical; planar heading undefined"
        )
    return Pose3(float(p.position[0]), float(p.position[2]), Heading(fx / norm, fz / norm))


def quaternion_to_rotation(w: float, x: float, y: float, z: float) -> np.ndarray:
    """Rotation matrix of a unit quaternion (w, x, y, z)."""
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )
