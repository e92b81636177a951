"""Similarity-transform registration from point correspondences.

Estimates the scale / rotation / translation mapping the real-model frame
into the virtual-model frame by closed-form least squares over >= 3
non-collinear point pairs, then re-expresses an observation database in
the target frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from realnav.errors import DegenerateConfigurationError
from realnav.geometry import SimilarityTransform, apply_similarity

_RANK_RTOL = 1e-9


@dataclass(frozen=True)
class Correspondence:
    source: np.ndarray  # 3-vector, real-model frame
    target: np.ndarray  # 3-vector, virtual-model frame

    def __post_init__(self):
        for name in ("source", "target"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (3,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite 3-vector")
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class AlignmentReport:
    transform: SimilarityTransform
    rmse: float
    n_points: int


def estimate_similarity(correspondences) -> AlignmentReport:
    """Least-squares similarity transform from source to target points.

    Minimizes sum |target_i - T(source_i)|^2 over scale > 0, proper
    rotation and translation (closed-form SVD solution).  Raises
    DegenerateConfigurationError for < 3 pairs or collinear/coincident
    sources.
    """
    corr = list(correspondences)
    n = len(corr)
    if n < 3:
        raise DegenerateConfigurationError(f"need >= 3 correspondences, got {n}")
    src = np.array([c.source for c in corr])
    dst = np.array([c.target for c in corr])

    src_mean = src.mean(axis=0)
    dst_mean = dst.mean(axis=0)
    src_d = src - src_mean
    dst_d = dst - dst_mean

    src_var = (src_d * src_d).sum() / n
    cov = dst_d.T @ src_d / n
    u_mat, s, vt = np.linalg.svd(cov)
    # Collinear or coincident sources leave the rotation about the line
    # (or everything) unconstrained.
    if s[0] <= 0.0 or s[1] <= _RANK_RTOL * s[0]:
        raise DegenerateConfigurationError(
            "correspondences are collinear or coincident"
        )
    d = np.ones(3)
    if np.linalg.det(u_mat) * np.linalg.det(vt) < 0:
        d[2] = -1.0
    rotation = u_mat @ np.diag(d) @ vt
    scale = float((s * d).sum() / src_var)
    if not (scale > 0.0):
        raise DegenerateConfigurationError("recovered scale is not positive")
    translation = dst_mean - scale * (rotation @ src_mean)

    transform = SimilarityTransform(scale, rotation, translation)
    resid = dst - (scale * (src @ rotation.T) + translation)
    rmse = float(math.sqrt((resid * resid).sum() / n))
    return AlignmentReport(transform, rmse, n)


def align_database(records, transform: SimilarityTransform):
    """Re-express observation records in the virtual-model frame.

    Positions are mapped through the transform at ground level; headings
    rotate by the transform's planar (yaw) component.  Image references
    and ids are untouched.
    """
    from realnav.retrieval import ObservationRecord
    from realnav.geometry import Pose3

    yaw = transform.yaw
    out = []
    for rec in records:
        p = apply_similarity(transform, (rec.pose.x, 0.0, rec.pose.z))
        out.append(
            ObservationRecord(
                id=rec.id,
                image_ref=rec.image_ref,
                pose=Pose3(float(p[0]), float(p[2]), rec.pose.heading.rotated(yaw)),
            )
        )
    return out


def load_correspondences(path: str):
    """Parse a correspondence file: 'sx sy sz tx ty tz' per line, # comments."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            parts = stripped.split()
            if len(parts) != 6:
                raise ValueError(
                    f"{path}:{lineno}: expected 6 values, got {len(parts)}"
                )
            try:
                vals = [float(p) for p in parts]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            out.append(Correspondence(np.array(vals[:3]), np.array(vals[3:])))
    return out
