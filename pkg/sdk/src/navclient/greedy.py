"""Scripted example policy: beeline toward the goal vector.

Mirrors the simulator's in-process greedy baseline decision for decision,
so running it through the SDK reproduces that baseline's trajectories
exactly under the same seed.
"""

from __future__ import annotations

import math

from navclient.session import Observation

_STOP_DISTANCE = 0.15
_TURN_TOLERANCE = math.radians(10.0) * 0.5


class GreedyPolicy:
    """STOP when close, turn toward the goal, otherwise drive forward."""

    def decide(self, obs: Observation) -> str:
        if obs.goal_distance <= _STOP_DISTANCE:
            return "STOP"
        if abs(obs.goal_bearing) > _TURN_TOLERANCE:
            return "TURN_LEFT" if obs.goal_bearing > 0 else "TURN_RIGHT"
        return "MOVE_FORWARD"


def run(session) -> None:
    """Drive a session to completion with the greedy policy."""
    policy = GreedyPolicy()
    for obs in session.observations():
        session.act(policy.decide(obs))
