"""Observation database and two-step nearest-pose retrieval.

Given a query pose, retrieval first filters database records by heading
(cosine similarity against the query heading at or above a threshold,
0.96 by default), then returns the record closest in XZ position among
the survivors, breaking exact distance ties by lowest record id.  When no
record passes the heading filter, the records attaining the maximum
cosine are used instead and the result is flagged as a fallback.

The index keeps the heading filter exact (the same float comparison a
full scan would make) while serving the position step from a k-d tree:
neighbors are drawn in distance order with a doubling k until one passes
the filter, then a padded ball query closes the set of potential ties.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from realnav.errors import EmptyDatabaseError, SfmParseError
from realnav.geometry import (
    Pose3,
    Pose6,
    heading_from_angle,
    pose6_to_pose3,
    quaternion_to_rotation,
)

# Above this many tree candidates, fall back to one vectorized scan.
_SCAN_CUTOFF = 4096


@dataclass(frozen=True)
class ObservationRecord:
    id: int
    image_ref: str
    pose: Pose3


@dataclass(frozen=True)
class RetrievalConfig:
    cos_threshold: float = 0.96

    def __post_init__(self):
        if not (-1.0 < self.cos_threshold <= 1.0):
            raise ValueError("cos_threshold must be in (-1, 1]")


@dataclass(frozen=True)
class RetrievalResult:
    record: ObservationRecord
    xz_distance: float
    cosine: float
    fallback: bool


class RetrievalIndex:
    """Immutable retrieval structure over an observation database."""

    def __init__(self, records, config: RetrievalConfig):
        records = list(records)
        if not records:
            raise EmptyDatabaseError("observation database is empty")
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate record ids in database")
        self.records = records
        self.config = config
        self.ids = np.array(ids, dtype=np.int64)
        self.x = np.array([r.pose.x for r in records])
        self.z = np.array([r.pose.z for r in records])
        self.u = np.array([r.pose.heading.u for r in records])
        self.v = np.array([r.pose.heading.v for r in records])
        self.tree = cKDTree(np.column_stack([self.x, self.z]))

    def __len__(self) -> int:
        return len(self.records)


def build_index(records, config: RetrievalConfig | None = None) -> RetrievalIndex:
    return RetrievalIndex(records, config or RetrievalConfig())


def _best_among(index: RetrievalIndex, cand: np.ndarray, qx: float, qz: float):
    """(d2, id, position) lexicographic minimum over candidate rows."""
    dx = index.x[cand] - qx
    dz = index.z[cand] - qz
    d2 = dx * dx + dz * dz
    order = np.lexsort((index.ids[cand], d2))
    best = cand[order[0]]
    return best, float(d2[order[0]])


def retrieve(index: RetrievalIndex, query: Pose3) -> RetrievalResult:
    """Two-step lookup: heading filter, then nearest XZ position."""
    qx, qz = query.x, query.z
    qu, qv = query.heading.u, query.heading.v
    thr = index.config.cos_threshold
    n = len(index.records)

    k = 8
    while True:
        k = min(k, n)
        dists, idxs = index.tree.query([qx, qz], k=k)
        idxs = np.atleast_1d(idxs)
        dists = np.atleast_1d(dists)
        hit = -1
        for j in range(len(idxs)):
            i = int(idxs[j])
            if index.u[i] * qu + index.v[i] * qv >= thr:
                hit = j
                break
        if hit >= 0:
            # Close over potential exact-distance ties with a padded ball.
            radius = float(dists[hit]) * (1.0 + 1e-9) + 1e-12
            cand = np.array(index.tree.query_ball_point([qx, qz], radius),
                            dtype=np.intp)
            cos = index.u[cand] * qu + index.v[cand] * qv
            cand = cand[cos >= thr]
            best, d2 = _best_among(index, cand, qx, qz)
            return RetrievalResult(
                record=index.records[best],
                xz_distance=math.sqrt(d2),
                cosine=float(index.u[best] * qu + index.v[best] * qv),
                fallback=False,
            )
        if k >= n:
            break
        if k >= _SCAN_CUTOFF:
            cos = index.u * qu + index.v * qv
            mask = np.flatnonzero(cos >= thr)
            if mask.size:
                best, d2 = _best_among(index, mask, qx, qz)
                return RetrievalResult(
                    record=index.records[best],
                    xz_distance=math.sqrt(d2),
                    cosine=float(cos[best]),
                    fallback=False,
                )
            break
        k *= 4

    # Angle filter rejected everything: use the best-available heading.
    cos = index.u * qu + index.v * qv
    cmax = cos.max()
    cand = np.flatnonzero(cos == cmax)
    best, d2 = _best_among(index, cand, qx, qz)
    return RetrievalResult(
        record=index.records[best],
        xz_distance=math.sqrt(d2),
        cosine=float(cmax),
        fallback=True,
    )


def retrieve_batch(index: RetrievalIndex, queries) -> list:
    """Elementwise retrieve(); results keep query order."""
    return [retrieve(index, q) for q in queries]


# -- database file formats ----------------------------------------------------


def parse_sfm_images(path: str):
    """Parse a COLMAP images.txt into observation records.

    Two lines per registered image; line 1 carries
    ``IMAGE_ID QW QX QY QZ TX TY TZ CAMERA_ID NAME`` with the
    camera-from-world quaternion/translation, line 2 the 2D points
    (ignored).  The camera center is C = -R^T t; poses are projected to
    the ground plane after inversion to world-from-camera.
    """
    records = []
    pending = None  # (lineno, parsed record) awaiting its points line
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if pending is not None:
                pending = None  # points line consumed (ignored; may be empty)
                continue
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) < 10:
                raise SfmParseError(
                    f"{path}:{lineno}: expected 10 fields on an image line, got {len(parts)}"
                )
            try:
                image_id = int(parts[0])
                qw, qx, qy, qz = (float(p) for p in parts[1:5])
                tx, ty, tz = (float(p) for p in parts[5:8])
                int(parts[8])  # camera id, unused
            except ValueError as exc:
                raise SfmParseError(f"{path}:{lineno}: {exc}") from exc
            name = " ".join(parts[9:])
            norm = math.sqrt(qw * qw + qx * qx + qy * qy + qz * qz)
            if abs(norm - 1.0) > 1e-3:
                raise SfmParseError(
                    f"{path}:{lineno}: quaternion norm {norm:.6f} deviates from 1 beyond 1e-3"
                )
            qw, qx, qy, qz = qw / norm, qx / norm, qy / norm, qz / norm
            r_cw = quaternion_to_rotation(qw, qx, qy, qz)
            t = np.array([tx, ty, tz])
            center = -(r_cw.T @ t)
            pose = pose6_to_pose3(Pose6(r_cw.T, center))
            records.append(ObservationRecord(image_id, name, pose))
            pending = (lineno, records[-1])
    if pending is not None:
        raise SfmParseError(
            f"{path}: odd number of data lines (missing 2D-points line for image"
            f" {pending[1].id})"
        )
    return records


def load_database(path: str):
    """Load the native JSON-lines database: id, image, x, z, theta_rad."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                records.append(
                    ObservationRecord(
                        id=int(obj["id"]),
                        image_ref=str(obj["image"]),
                        pose=Pose3(
                            float(obj["x"]),
                            float(obj["z"]),
                            heading_from_angle(float(obj["theta_rad"])),
                        ),
                    )
                )
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return records


def save_database(records, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "image": rec.image_ref,
                        "x": rec.pose.x,
                        "z": rec.pose.z,
                        "theta_rad": rec.pose.theta,
                    }
                )
                + "\n"
            )
