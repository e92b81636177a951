"""In-process baseline policies and the policy factory.

`oracle` is the upper-bound baseline: it replans a shortest path from the
perceived pose every step and tracks it under the discrete action set.
`greedy` beelines toward the goal vector and ignores obstacles (it is the
in-process twin of the client SDK's scripted policy).  `random` is the
lower-bound baseline.
"""

from __future__ import annotations

import math

import numpy as np

from realnav.engine import Action, PolicyContext, StepObservation
from realnav.geometry import wrap_angle
from realnav.mapgrid import OccupancyGrid

# Oracle tuning: stop inside 0.75 * success_radius, align within 5 degrees
# before driving, shortcut along the planned path only with line of sight,
# and price wall-adjacent cells at four extra straight steps.
_ORACLE_STOP_FRACTION = 0.75
_ORACLE_ALIGN_TOL = math.radians(5.0)
_ORACLE_LOS_CAP = 1.0
_ORACLE_GOAL_DIRECT = 0.6
_ORACLE_DESCENT_LIMIT = 48
_ORACLE_MARGIN_PENALTY = 4

_GREEDY_STOP_DISTANCE = 0.15
_GREEDY_TURN_TOL = math.radians(10.0) * 0.5


class OraclePolicy:
    """Shortest-path follower with privileged access to the map.

    Plans a corner-safe distance field over the true grid, with an entry
    penalty on cells within one cell of a wall: routes keep clearance
    wherever possible (so the 10-degree heading quantization cannot graze
    corners) but tight channels stay reachable.  Descended waypoints are
    shortcut by an exact line-of-sight test; after a blocked move the
    policy tracks the conservative next waypoint until it actually moves
    again, which breaks wall-contact limit cycles.
    """

    def __init__(self, grid: OccupancyGrid, cfg):
        self.grid = grid
        self.cfg = cfg
        self._spec = None
        self._field = None
        self._last_position = None
        self._last_was_move = False
        self._blocked_at = None

    def reset(self, spec) -> None:
        self._spec = spec
        self._field = None
        self._last_position = None
        self._last_was_move = False
        self._blocked_at = None

    def _goal_field(self):
        if self._field is None:
            grid = self.grid
            penalty = np.where(grid.inflated_nav(), 0, _ORACLE_MARGIN_PENALTY)
            goal_cell = grid.cell_of(*self._spec.goal)
            self._field = grid.distance_field(
                *goal_cell, cut_corners=False,
                entry_penalty=penalty.astype(np.int32),
            )
        return self._field

    def decide(self, obs: StepObservation, ctx: PolicyContext) -> Action:
        if obs.goal_distance <= _ORACLE_STOP_FRACTION * ctx.cfg.success_radius:
            return Action.STOP
        pose = ctx.perceived_pose
        position = (pose.x, pose.z)
        stuck = (
            self._last_was_move
            and self._last_position is not None
            and position == self._last_position
        )
        self._last_position = position
        if stuck:
            self._blocked_at = position
        elif self._blocked_at is not None and position != self._blocked_at:
            self._blocked_at = None
        # While pinned against an obstacle, track the conservative next
        # waypoint instead of line-of-sight shortcuts near wall corners.
        use_shortcut = self._blocked_at is None
        target = self._pick_target(pose, obs.goal_distance, use_shortcut)
        if target is None:
            self._last_was_move = False
            return Action.TURN_LEFT  # no plan from here; spin and retry
        bearing = wrap_angle(
            math.atan2(target[1] - pose.z, target[0] - pose.x) - pose.theta
        )
        if abs(bearing) > _ORACLE_ALIGN_TOL or stuck:
            self._last_was_move = False
            if bearing == 0.0:
                return Action.TURN_LEFT
            return Action.TURN_LEFT if bearing > 0 else Action.TURN_RIGHT
        self._last_was_move = True
        return Action.MOVE_FORWARD

    def _pick_target(self, pose, goal_distance, use_shortcut=True):
        grid = self.grid
        goal = self._spec.goal
        origin = (pose.x, pose.z)
        if (use_shortcut and goal_distance <= _ORACLE_GOAL_DIRECT
                and grid.line_of_sight(origin, goal)):
            return goal
        field = self._goal_field()
        cell = nearest_navigable_cell(grid, pose.x, pose.z)
        if cell is None or math.isinf(field[cell]):
            return None
        candidates = []
        cur = cell
        goal_cell = grid.cell_of(*goal)
        for _ in range(_ORACLE_DESCENT_LIMIT):
            nxt = grid.descend_step(field, *cur, cut_corners=False)
            if nxt is None:
                candidates.append(goal)
                break
            candidates.append(grid.center_of(*nxt))
            cur = nxt
            if cur == goal_cell:
                candidates[-1] = goal
                break
        if not candidates:
            return goal if grid.line_of_sight(origin, goal) else None
        target = candidates[0]
        if not use_shortcut:
            return target
        for cand in candidates:
            if math.hypot(cand[0] - origin[0], cand[1] - origin[1]) > _ORACLE_LOS_CAP:
                break
            if grid.line_of_sight(origin, cand):
                target = cand
        return target


class GreedyPolicy:
    """Beeline policy driven only by the goal vector."""

    def reset(self, spec) -> None:
        pass

    def decide(self, obs: StepObservation, ctx=None) -> Action:
        if obs.goal_distance <= _GREEDY_STOP_DISTANCE:
            return Action.STOP
        if abs(obs.goal_bearing) > _GREEDY_TURN_TOL:
            return Action.TURN_LEFT if obs.goal_bearing > 0 else Action.TURN_RIGHT
        return Action.MOVE_FORWARD


class RandomPolicy:
    """Uniform over motion actions; stops only when the goal reads close."""

    _MOTIONS = (Action.MOVE_FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT)

    def reset(self, spec) -> None:
        pass

    def decide(self, obs: StepObservation, ctx: PolicyContext) -> Action:
        if obs.goal_distance <= ctx.cfg.success_radius:
            return Action.STOP
        return self._MOTIONS[int(ctx.rng.integers(0, 3))]


def nearest_cell_where(grid: OccupancyGrid, mask: np.ndarray, x: float, z: float,
                       max_rings: int | None = None):
    """Closest mask-true cell to a world point (the point may be off-grid).

    Deterministic: expands square rings around the clamped cell and picks
    the cell minimizing (center distance, r, c).  Returns (r, c) or None.
    """
    c0 = min(max(int(math.floor((x - grid.corner_x) / grid.resolution)), 0),
             grid.width - 1)
    r0 = min(max(int(math.floor((z - grid.corner_z) / grid.resolution)), 0),
             grid.height - 1)
    limit = max_rings if max_rings is not None else max(grid.width, grid.height)
    best = None
    for ring in range(limit + 1):
        # Once a candidate exists, farther rings cannot beat it: any cell at
        # Chebyshev ring m has center distance >= (m - 1) * resolution.
        if best is not None and (ring - 1) * grid.resolution > math.sqrt(best[0]):
            break
        r_lo, r_hi = r0 - ring, r0 + ring
        c_lo, c_hi = c0 - ring, c0 + ring
        for r in range(max(r_lo, 0), min(r_hi, grid.height - 1) + 1):
            on_rim_r = r == r_lo or r == r_hi
            for c in range(max(c_lo, 0), min(c_hi, grid.width - 1) + 1):
                if not on_rim_r and c != c_lo and c != c_hi:
                    continue
                if not mask[r, c]:
                    continue
                cx, cz = grid.center_of(r, c)
                d2 = (cx - x) ** 2 + (cz - z) ** 2
                key = (d2, r, c)
                if best is None or key < best:
                    best = key
    if best is None:
        return None
    return (best[1], best[2])


def nearest_navigable_cell(grid: OccupancyGrid, x: float, z: float,
                           max_rings: int | None = None):
    return nearest_cell_where(grid, grid.nav, x, z, max_rings)


def make_policy(spec_str: str, grid: OccupancyGrid, cfg):
    """Instantiate a policy from its CLI name or transport spec."""
    if spec_str == "oracle":
        return OraclePolicy(grid, cfg)
    if spec_str == "greedy":
        return GreedyPolicy()
    if spec_str == "random":
        return RandomPolicy()
    if isinstance(spec_str, str) and (
        spec_str.startswith("cmd:") or spec_str.startswith("tcp:")
    ):
        from realnav.protocol import ExternalPolicy

        return ExternalPolicy(spec_str, cfg)
    raise ValueError(
        f"unknown policy {spec_str!r} (expected oracle|greedy|random|cmd:...|tcp:...)"
    )
