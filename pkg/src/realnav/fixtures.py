"""Bundled synthetic fixtures: demo map, office grid, synthetic database.

Everything here is deterministic; the files under realnav/data are the
frozen outputs of the builders (a regression test keeps them in sync), so
demos, tests and the acceptance suite run with no external data.
"""

from __future__ import annotations

import math
from importlib import resources

import numpy as np

from realnav.geometry import Pose3, heading_from_angle
from realnav.mapgrid import OccupancyGrid
from realnav.retrieval import ObservationRecord


def _data_path(name: str) -> str:
    return str(resources.files("realnav.data").joinpath(name))


def demo_map_path() -> str:
    """20x20 room at 0.25 m/cell with two interior walls."""
    return _data_path("demo_map.txt")


def demo_db_path() -> str:
    """500 synthetic observations on the demo map (grid poses + jitter)."""
    return _data_path("demo_db.jsonl")


def office_map_path() -> str:
    """100x100 synthetic office at 0.15 m/cell (corridor + six rooms)."""
    return _data_path("office_map.txt")


def build_demo_grid() -> OccupancyGrid:
    """Bordered 5x5 m room with an L-shaped partition forcing detours."""
    nav = np.ones((20, 20), dtype=bool)
    nav[0, :] = nav[-1, :] = False
    nav[:, 0] = nav[:, -1] = False
    nav[4:14, 10] = False  # vertical partition, door gap at the south end
    nav[13, 10:17] = False  # horizontal stub forming the L
    return OccupancyGrid(nav, resolution=0.25, corner_x=0.0, corner_z=0.0)


def build_office_grid() -> OccupancyGrid:
    """15x15 m office: central corridor, five rooms per side, furniture."""
    height = width = 100
    nav = np.ones((height, width), dtype=bool)
    nav[0, :] = nav[-1, :] = False
    nav[:, 0] = nav[:, -1] = False

    # Corridor spine: rows 46..53 stay clear; walls with doors on each side.
    for wall_row in (45, 54):
        nav[wall_row, :] = False
        for door in (9, 28, 48, 68, 88):
            nav[wall_row, door : door + 4] = True
    nav[45, 0] = nav[45, 99] = False
    nav[54, 0] = nav[54, 99] = False

    # Room partitions above and below the corridor.
    for col in (19, 39, 59, 79):
        nav[1:45, col] = False
        nav[55:99, col] = False

    # Furniture blocks (desks/cabinets) to break up the rooms.
    blocks = [
        (8, 16, 5, 12),    # (r0, r1, c0, c1) half-open
        (25, 33, 24, 34),
        (12, 22, 45, 52),
        (30, 40, 62, 74),
        (8, 18, 84, 92),
        (60, 70, 6, 14),
        (72, 82, 26, 36),
        (60, 72, 50, 56),
        (80, 90, 64, 74),
        (62, 74, 86, 94),
    ]
    for r0, r1, c0, c1 in blocks:
        nav[r0:r1, c0:c1] = False
    return OccupancyGrid(nav, resolution=0.15, corner_x=0.0, corner_z=0.0)


def build_demo_database(seed: int = 7, n: int = 500):
    """Synthetic observation records: cell-center poses with Gaussian jitter.

    Eight headings per navigable cell, subsampled to n records with
    positional jitter (sigma 0.04 m) and heading jitter (sigma 5 deg).
    """
    grid = build_demo_grid()
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    candidates = []
    for r in range(grid.height):
        for c in range(grid.width):
            if not grid.nav[r, c]:
                continue
            cx, cz = grid.center_of(r, c)
            for k in range(8):
                candidates.append((cx, cz, k * math.pi / 4.0))
    if n > len(candidates):
        raise ValueError(f"demo map supports at most {len(candidates)} records")
    chosen = np.sort(rng.choice(len(candidates), size=n, replace=False))
    records = []
    for new_id, idx in enumerate(chosen):
        cx, cz, theta = candidates[int(idx)]
        x = cx + rng.normal(0.0, 0.04)
        z = cz + rng.normal(0.0, 0.04)
        t = theta + rng.normal(0.0, math.radians(5.0))
        records.append(
            ObservationRecord(
                id=new_id,
                image_ref=f"img/{new_id:05d}.png",
                pose=Pose3(float(x), float(z), heading_from_angle(float(t))),
            )
        )
    return records


def random_records(rng, n: int, extent: float = 10.0):
    """Uniform random records for retrieval stress tests."""
    xs = rng.uniform(0.0, extent, size=n)
    zs = rng.uniform(0.0, extent, size=n)
    thetas = rng.uniform(-math.pi, math.pi, size=n)
    return [
        ObservationRecord(
            id=i,
            image_ref=f"img/{i:06d}.png",
            pose=Pose3(float(xs[i]), float(zs[i]), heading_from_angle(float(thetas[i]))),
        )
        for i in range(n)
    ]


def random_poses(rng, n: int, extent: float = 10.0):
    xs = rng.uniform(0.0, extent, size=n)
    zs = rng.uniform(0.0, extent, size=n)
    thetas = rng.uniform(-math.pi, math.pi, size=n)
    return [
        Pose3(float(xs[i]), float(zs[i]), heading_from_angle(float(thetas[i])))
        for i in range(n)
    ]
