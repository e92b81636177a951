"""Navigable-space model: occupancy grid, geodesics, motion sweeps.

Map file formats
----------------
Text (``.txt``)::

    width height resolution origin_x origin_z
    <height rows of width characters, '.' navigable, '#' blocked>

The header origin is the world (x, z) of the low corner of cell (0, 0);
cell (c, r) is centered at ``origin + ((c + 0.5) * res, (r + 0.5) * res)``.
Row 0 of the body is the minimum-z row.

Binary PGM (``P5``, maxval <= 255) is also accepted; pixel values >= 128
are navigable.  Resolution and origin come from a sidecar file named
``<map>.meta`` holding one line: ``resolution origin_x origin_z``.
Raster row 0 is the minimum-z row, like the text format.

Cells own their low edges ([low, high) in both axes), so boundary points
resolve unambiguously.  Geodesics run on the 8-connected cell graph
(straight step = resolution, diagonal = resolution * sqrt(2)) between the
snapped endpoint cells, plus the straight-line offsets from each endpoint
to its cell center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from realnav import _kernels
from realnav.errors import EmptyMapError, InvalidEndpointError, MapParseError
from realnav.geometry import Pose3

_SQRT2 = math.sqrt(2.0)

# attempt_move / line_of_sight sample the segment every resolution/4.
_SWEEP_DIVISIONS = 4


@dataclass(frozen=True)
class PathResult:
    length: float
    waypoints: list  # [(x, z), ...] cell-center polyline


class OccupancyGrid:
    """Immutable navigable-space raster.

    `nav` is a bool array of shape (height, width); row index r maps to
    the z axis, column index c to the x axis.
    """

    def __init__(self, nav: np.ndarray, resolution: float, corner_x: float = 0.0,
                 corner_z: float = 0.0):
        nav = np.asarray(nav, dtype=bool)
        if nav.ndim != 2 or nav.shape[0] < 1 or nav.shape[1] < 1:
            raise ValueError("nav must be a 2D array with width, height >= 1")
        if not (math.isfinite(resolution) and resolution > 0):
            raise ValueError("resolution must be finite and > 0")
        self._nav = nav.copy()
        self._nav.setflags(write=False)
        self.resolution = float(resolution)
        self.corner_x = float(corner_x)
        self.corner_z = float(corner_z)
        self.height, self.width = nav.shape
        self._straight_cost = self.resolution
        self._diagonal_cost = self.resolution * _SQRT2
        flat = np.flatnonzero(self._nav.ravel())
        self._nav_flat_idx = flat
        self._nav_flat_idx.setflags(write=False)
        self._inflated = None

    # -- basic queries ----------------------------------------------------

    @property
    def nav(self) -> np.ndarray:
        return self._nav

    @property
    def origin(self) -> tuple:
        """World (x, z) of the center of cell (0, 0)."""
        return (self.corner_x + 0.5 * self.resolution,
                self.corner_z + 0.5 * self.resolution)

    @property
    def n_navigable(self) -> int:
        return int(self._nav_flat_idx.size)

    def cell_of(self, x: float, z: float):
        """(r, c) of the cell owning the point, or None if outside."""
        c = math.floor((x - self.corner_x) / self.resolution)
        r = math.floor((z - self.corner_z) / self.resolution)
        if 0 <= r < self.height and 0 <= c < self.width:
            return (r, c)
        return None

    def center_of(self, r: int, c: int) -> tuple:
        return (self.corner_x + (c + 0.5) * self.resolution,
                self.corner_z + (r + 0.5) * self.resolution)

    def is_navigable(self, x: float, z: float) -> bool:
        cell = self.cell_of(x, z)
        if cell is None:
            return False
        return bool(self._nav[cell])

    def inflated_nav(self) -> np.ndarray:
        """Navigable cells at least one cell away from walls and the edge.

        Used for planning with clearance; computed once and cached (the
        computation is idempotent, so racing threads agree).
        """
        if self._inflated is None:
            margin = ~self._nav
            grown = margin.copy()
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    if dr == 0 and dc == 0:
                        continue
                    shifted = np.zeros_like(margin)
                    r_src = slice(max(0, -dr), margin.shape[0] - max(0, dr))
                    r_dst = slice(max(0, dr), margin.shape[0] - max(0, -dr))
                    c_src = slice(max(0, -dc), margin.shape[1] - max(0, dc))
                    c_dst = slice(max(0, dc), margin.shape[1] - max(0, -dc))
                    shifted[r_dst, c_dst] = margin[r_src, c_src]
                    grown |= shifted
            grown[0, :] = grown[-1, :] = True
            grown[:, 0] = grown[:, -1] = True
            out = ~grown
            out.setflags(write=False)
            self._inflated = out
        return self._inflated

    # -- geodesics ---------------------------------------------------------

    def distance_field(self, r: int, c: int, cut_corners: bool = True,
                       entry_penalty: np.ndarray | None = None) -> np.ndarray:
        """Geodesic cell-path distance from cell (r, c) to every cell.

        cut_corners=False restricts diagonal steps to those a point robot
        can physically take (both orthogonal neighbors free); geodesic
        metrics use the default unrestricted 8-connectivity.
        entry_penalty (int cells, straight-step units) biases planning away
        from penalized cells without changing reachability.
        """
        return _kernels.grid_distance_field(
            self._nav, r, c, self._straight_cost, self._diagonal_cost,
            cut_corners, entry_penalty
        )

    def _snap(self, x: float, z: float, what: str):
        cell = self.cell_of(x, z)
        if cell is None or not self._nav[cell]:
            raise InvalidEndpointError(f"{what} ({x}, {z}) is not navigable")
        return cell

    def geodesic_distance(self, a, b, field: np.ndarray | None = None) -> float:
        """Shortest obstacle-respecting path length in meters, or inf.

        `field` may carry a precomputed distance_field sourced at b's cell
        (callers running many queries against one endpoint cache it).
        """
        ax, az = a
        bx, bz = b
        ca = self._snap(ax, az, "start")
        cb = self._snap(bx, bz, "goal")
        if ca == cb:
            return math.hypot(ax - bx, az - bz)
        if field is None:
            field = self.distance_field(*cb)
        through = float(field[ca])
        if math.isinf(through):
            return math.inf
        cax, caz = self.center_of(*ca)
        cbx, cbz = self.center_of(*cb)
        off_a = math.hypot(ax - cax, az - caz)
        off_b = math.hypot(bx - cbx, bz - cbz)
        # Symmetric summation: grid term + (offset sum) commutes under a<->b.
        return through + (off_a + off_b)

    def descend_step(self, field: np.ndarray, r: int, c: int,
                     cut_corners: bool = True, nav: np.ndarray | None = None):
        """Next cell along one optimal path toward the field's source.

        Deterministic: scans neighbors in kernel order and keeps the
        strictly best (key + step cost).  Must be called with the same
        cut_corners (and nav mask, for fields over alternative masks) the
        field was built with.  Returns None at the source.
        """
        if field[r, c] == 0.0:
            return None
        nav_arr = self._nav if nav is None else nav
        best = None
        best_key = math.inf
        for dr, dc, diag in _kernels.NEIGHBOR_OFFSETS:
            rr, cc = r + dr, c + dc
            if not (0 <= rr < self.height and 0 <= cc < self.width):
                continue
            if not nav_arr[rr, cc]:
                continue
            if diag and not cut_corners and not (
                nav_arr[r, cc] and nav_arr[rr, c]
            ):
                continue
            step = self._diagonal_cost if diag else self._straight_cost
            key = field[rr, cc] + step
            if key < best_key:
                best_key = key
                best = (rr, cc)
        return best

    def shortest_path(self, a, b) -> PathResult:
        """One optimal cell-center polyline from a's cell to b's cell."""
        ax, az = a
        bx, bz = b
        ca = self._snap(ax, az, "start")
        cb = self._snap(bx, bz, "goal")
        if ca == cb:
            return PathResult(math.hypot(ax - bx, az - bz),
                              [self.center_of(*ca)])
        field = self.distance_field(*cb)
        length = self.geodesic_distance(a, b, field=field)
        if math.isinf(length):
            raise InvalidEndpointError("endpoints are in disconnected components")
        waypoints = [self.center_of(*ca)]
        cur = ca
        while cur != cb:
            cur = self.descend_step(field, *cur)
            waypoints.append(self.center_of(*cur))
        return PathResult(length, waypoints)

    # -- sampling and motion ------------------------------------------------

    def sample_navigable_point(self, rng) -> tuple:
        """Uniform point in navigable space: uniform cell, uniform offset."""
        if self._nav_flat_idx.size == 0:
            raise EmptyMapError("grid has no navigable cell")
        flat = int(self._nav_flat_idx[rng.integers(0, self._nav_flat_idx.size)])
        r, c = divmod(flat, self.width)
        x = self.corner_x + (c + rng.random()) * self.resolution
        z = self.corner_z + (r + rng.random()) * self.resolution
        return (x, z)

    def attempt_move(self, pose: Pose3, distance: float) -> Pose3:
        """Advance along the heading, stopping at the last navigable sample.

        The segment is swept in steps of resolution/4 (plus the exact
        endpoint); the returned position is always navigable.  Heading is
        unchanged; blocked motion yields zero displacement.
        """
        if distance <= 0.0:
            return pose
        u, v = pose.heading.u, pose.heading.v
        step = self.resolution / _SWEEP_DIVISIONS
        n_full = int(distance / step)
        ts = [k * step for k in range(1, n_full + 1)]
        if not ts or ts[-1] < distance:
            ts.append(distance)
        good_x, good_z = pose.x, pose.z
        moved = False
        for t in ts:
            px = pose.x + t * u
            pz = pose.z + t * v
            if not self.is_navigable(px, pz):
                break
            good_x, good_z = px, pz
            moved = True
        if not moved:
            return pose
        return Pose3(good_x, good_z, pose.heading)

    def line_of_sight(self, a, b) -> bool:
        """True iff every cell the segment a->b passes through is navigable.

        Exact grid ray traversal (no sampling gaps): near-corner passages
        require the wedge cell to be free, and an exact corner crossing
        requires both orthogonal cells free.
        """
        ax, az = a
        bx, bz = b
        ca = self.cell_of(ax, az)
        cb = self.cell_of(bx, bz)
        if ca is None or cb is None or not (self._nav[ca] and self._nav[cb]):
            return False
        r, c = ca
        rb, cc_b = cb
        dx = bx - ax
        dz = bz - az
        res = self.resolution
        step_c = 1 if dx > 0 else -1
        step_r = 1 if dz > 0 else -1
        # Parameter t values of the next vertical / horizontal cell boundary.
        if dx != 0.0:
            next_x = self.corner_x + (c + (1 if dx > 0 else 0)) * res
            t_max_x = (next_x - ax) / dx
            t_delta_x = res / abs(dx)
        else:
            t_max_x = math.inf
            t_delta_x = math.inf
        if dz != 0.0:
            next_z = self.corner_z + (r + (1 if dz > 0 else 0)) * res
            t_max_z = (next_z - az) / dz
            t_delta_z = res / abs(dz)
        else:
            t_max_z = math.inf
            t_delta_z = math.inf
        max_iters = abs(rb - r) + abs(cc_b - c) + 4
        for _ in range(max_iters):
            if (r, c) == (rb, cc_b):
                return True
            if t_max_x < t_max_z:
                c += step_c
                t_max_x += t_delta_x
            elif t_max_z < t_max_x:
                r += step_r
                t_max_z += t_delta_z
            else:
                # Exact corner crossing: both orthogonal cells must be free.
                if not (
                    0 <= c + step_c < self.width
                    and 0 <= r + step_r < self.height
                    and self._nav[r, c + step_c]
                    and self._nav[r + step_r, c]
                ):
                    return False
                c += step_c
                r += step_r
                t_max_x += t_delta_x
                t_max_z += t_delta_z
            if not (0 <= r < self.height and 0 <= c < self.width):
                return False
            if not self._nav[r, c]:
                return False
        return (r, c) == (rb, cc_b)


# -- file I/O ----------------------------------------------------------------


def grid_from_text(text: str) -> OccupancyGrid:
    lines = text.splitlines()
    if not lines:
        raise MapParseError("line 1: empty map file")
    header = lines[0].split()
    if len(header) != 5:
        raise MapParseError(
            "line 1: header must be 'width height resolution origin_x origin_z'"
        )
    try:
        width, height = int(header[0]), int(header[1])
        resolution = float(header[2])
        ox, oz = float(header[3]), float(header[4])
    except ValueError as exc:
        raise MapParseError(f"line 1: {exc}") from exc
    if width < 1 or height < 1:
        raise MapParseError("line 1: width and height must be >= 1")
    if not (resolution > 0):
        raise MapParseError("line 1: resolution must be > 0")
    body = lines[1:]
    if len(body) < height:
        raise MapParseError(
            f"line {len(lines)}: expected {height} rows, found {len(body)}"
        )
    extra = [ln for ln in body[height:] if ln.strip()]
    if extra:
        raise MapParseError(f"line {height + 2}: trailing content after {height} rows")
    nav = np.zeros((height, width), dtype=bool)
    for r in range(height):
        row = body[r]
        lineno = r + 2
        if len(row) != width:
            raise MapParseError(
                f"line {lineno}: expected {width} characters, found {len(row)}"
            )
        for c, ch in enumerate(row):
            if ch == ".":
                nav[r, c] = True
            elif ch == "#":
                nav[r, c] = False
            else:
                raise MapParseError(f"line {lineno}: unknown cell token {ch!r}")
    return OccupancyGrid(nav, resolution, ox, oz)


def grid_to_text(grid: OccupancyGrid) -> str:
    lines = [
        f"{grid.width} {grid.height} {grid.resolution!r} {grid.corner_x!r} {grid.corner_z!r}"
    ]
    for r in range(grid.height):
        lines.append("".join("." if grid.nav[r, c] else "#" for c in range(grid.width)))
    return "\n".join(lines) + "\n"


def _load_pgm(path: str) -> OccupancyGrid:
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise MapParseError("line 1: not a binary PGM (P5) file")
    # Header tokens may be separated by whitespace and '#' comments.
    tokens = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise MapParseError("line 1: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError as exc:
        raise MapParseError(f"line 1: bad PGM header: {exc}") from exc
    if maxval < 1 or maxval > 255:
        raise MapParseError("line 1: only 8-bit PGM supported")
    raster = data[pos : pos + width * height]
    if len(raster) != width * height:
        raise MapParseError("line 1: PGM raster shorter than width*height")
    nav = np.frombuffer(raster, dtype=np.uint8).reshape(height, width) >= 128
    meta_path = path + ".meta"
    try:
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = fh.read().split()
    except OSError as exc:
        raise MapParseError(f"missing PGM sidecar {meta_path}: {exc}") from exc
    if len(meta) != 3:
        raise MapParseError(
            f"line 1: sidecar {meta_path} must hold 'resolution origin_x origin_z'"
        )
    resolution, ox, oz = (float(t) for t in meta)
    return OccupancyGrid(nav, resolution, ox, oz)


def load_grid(path: str) -> OccupancyGrid:
    """Load a map from text or binary PGM (sniffed by magic number)."""
    with open(path, "rb") as fh:
        magic = fh.read(2)
    if magic == b"P5":
        return _load_pgm(path)
    with open(path, "r", encoding="utf-8") as fh:
        return grid_from_text(fh.read())


def save_grid(grid: OccupancyGrid, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(grid_to_text(grid))
