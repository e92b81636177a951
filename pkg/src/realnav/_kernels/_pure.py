"""Pure-Python Dijkstra kernel (fallback for the compiled extension).

Distance keys are never accumulated by running sums.  Every candidate key
is recomputed from the integer step counts of the pathterminating at the
cell, as ``n_straight * straight_cost + n_diagonal * diagonal_cost``.
Distinct count pairs yield keys separated by far more than float rounding
(|a + b*sqrt(2)| >= 1 / ((|a| + |b|*sqrt(2))) for integers not both zero),
so the minimizing pair per cell is unique and the resulting field is
bit-identical to the compiled backend, which evaluates the same
expression with FMA contraction disabled.
"""

from __future__ import annotations

import math
from heapq import heappop, heappush

import numpy as np

# Neighbor order is part of the kernel contract: tie-breaking in path
# extraction relies on it.
NEIGHBOR_OFFSETS = (
    (-1, -1, 1),
    (-1, 0, 0),
    (-1, 1, 1),
    (0, -1, 0),
    (0, 1, 0),
    (1, -1, 1),
    (1, 0, 0),
    (1, 1, 1),
)


def grid_distance_field(
    nav: np.ndarray, src_r: int, src_c: int, straight_cost: float,
    diagonal_cost: float, cut_corners: bool = True,
    entry_penalty: np.ndarray | None = None,
) -> np.ndarray:
    """Single-source shortest-path field over an 8-connected cell grid.

    nav: bool/uint8 array (height, width), truthy = navigable.
    Returns a float64 array of geodesic cell-path lengths from the source
    cell center to every cell center; +inf marks unreachable or blocked
    cells.  Straight steps cost `straight_cost`, diagonal steps
    `diagonal_cost`.  With cut_corners=False a diagonal step also needs
    both orthogonally adjacent cells navigable (paths a point robot can
    physically follow).  `entry_penalty` (int array, straight-step units)
    adds soft costs for entering cells, e.g. wall-clearance margins; the
    key stays on the integer lattice, preserving exactness.
    """
    height, width = nav.shape
    if not (0 <= src_r < height and 0 <= src_c < width):
        raise ValueError("source cell out of bounds")
    if not nav[src_r, src_c]:
        raise ValueError("source cell is not navigable")

    n = height * width
    nav_flat = np.ascontiguousarray(nav, dtype=np.uint8).ravel().tolist()
    if entry_penalty is None:
        pen_flat = None
    else:
        pen_flat = np.ascontiguousarray(
            entry_penalty, dtype=np.int32
        ).ravel().tolist()
    dist = [math.inf] * n
    n_straight = [0] * n
    n_diag = [0] * n
    done = [False] * n

    src = src_r * width + src_c
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        key, u = heappop(heap)
        if done[u]:
            continue
        done[u] = True
        r, c = divmod(u, width)
        base_s = n_straight[u]
        base_d = n_diag[u]
        for dr, dc, diag in NEIGHBOR_OFFSETS:
            rr = r + dr
            cc = c + dc
            if rr < 0 or rr >= height or cc < 0 or cc >= width:
                continue
            v = rr * width + cc
            if done[v] or not nav_flat[v]:
                continue
            if diag:
                if not cut_corners and not (
                    nav_flat[r * width + cc] and nav_flat[rr * width + c]
                ):
                    continue
                cand_s = base_s
                cand_d = base_d + 1
            else:
                cand_s = base_s + 1
                cand_d = base_d
            if pen_flat is not None:
                cand_s = cand_s + pen_flat[v]
            cand = cand_s * straight_cost + cand_d * diagonal_cost
            if cand < dist[v]:
                dist[v] = cand
                n_straight[v] = cand_s
                n_diag[v] = cand_d
                heappush(heap, (cand, v))

    out = np.array(dist, dtype=np.float64).reshape(height, width)
    return out
