"""Gaussian sensor (localization) and actuator noise models.

Preset standard deviations per channel and level:

    localization:  small 0.20 m / 7 deg, medium 0.40 m / 15 deg,
                   large 0.80 m / 30 deg
    actuation:     small 0.05 m / 5 deg, medium 0.10 m / 10 deg,
                   large 0.20 m / 20 deg

Sensor noise perturbs only the pose reported to the policy (never the
physical pose): the position moves by a uniformly-directed vector whose
magnitude is |N(0, sensor_pos_sigma)| and the heading rotates by
N(0, sensor_ang_sigma).  Actuation noise perturbs realized motion: a
forward command of 0.25 m gets N(0, act_trans_sigma) added to its length
(clamped at zero: a forward drive cannot teleport backward) and, when
drift_on_move is on (default), N(0, act_rot_sigma) of heading drift
applied before the translation; turn commands of +/-10 deg get
N(0, act_rot_sigma) added.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from realnav.geometry import Pose3

MOVE_DISTANCE = 0.25
TURN_ANGLE = math.radians(10.0)

SENSOR_PRESETS = {
    "none": (0.0, 0.0),
    "small": (0.20, math.radians(7.0)),
    "medium": (0.40, math.radians(15.0)),
    "large": (0.80, math.radians(30.0)),
}
ACTUATION_PRESETS = {
    "none": (0.0, 0.0),
    "small": (0.05, math.radians(5.0)),
    "medium": (0.10, math.radians(10.0)),
    "large": (0.20, math.radians(20.0)),
}


@dataclass(frozen=True)
class NoiseConfig:
    sensor_pos_sigma: float = 0.0
    sensor_ang_sigma: float = 0.0
    act_trans_sigma: float = 0.0
    act_rot_sigma: float = 0.0
    drift_on_move: bool = True

    def __post_init__(self):
        for name in (
            "sensor_pos_sigma",
            "sensor_ang_sigma",
            "act_trans_sigma",
            "act_rot_sigma",
        ):
            val = getattr(self, name)
            if not (math.isfinite(val) and val >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0")


def config_from_presets(sensor: str = "none", actuator: str = "none",
                        drift_on_move: bool = True) -> NoiseConfig:
    if sensor not in SENSOR_PRESETS:
        raise ValueError(f"unknown sensor preset {sensor!r}")
    if actuator not in ACTUATION_PRESETS:
        raise ValueError(f"unknown actuator preset {actuator!r}")
    pos, ang = SENSOR_PRESETS[sensor]
    trans, rot = ACTUATION_PRESETS[actuator]
    return NoiseConfig(pos, ang, trans, rot, drift_on_move)


@dataclass(frozen=True)
class ActuationOutcome:
    """Realized motion to execute: rotate first, then translate."""

    rotation: float  # radians, applied to the heading
    distance: float  # meters, swept through attempt_move


def apply_sensor_noise(true_pose: Pose3, cfg: NoiseConfig, rng) -> Pose3:
    """Noisy copy of the pose for the perception channel.

    Zero-sigma channels are skipped entirely so an all-zero config returns
    the input object unchanged.
    """
    if cfg.sensor_pos_sigma == 0.0 and cfg.sensor_ang_sigma == 0.0:
        return true_pose
    x, z = true_pose.x, true_pose.z
    heading = true_pose.heading
    if cfg.sensor_pos_sigma > 0.0:
        magnitude = abs(rng.normal(0.0, cfg.sensor_pos_sigma))
        direction = rng.uniform(0.0, 2.0 * math.pi)
        x = x + magnitude * math.cos(direction)
        z = z + magnitude * math.sin(direction)
    if cfg.sensor_ang_sigma > 0.0:
        heading = heading.rotated(rng.normal(0.0, cfg.sensor_ang_sigma))
    return Pose3(x, z, heading)


def apply_actuation_noise(action, cfg: NoiseConfig, rng) -> ActuationOutcome:
    """Realized rotation/translation for a motion action.

    `action` is an engine Action (MOVE_FORWARD / TURN_LEFT / TURN_RIGHT);
    STOP is noise-free and rejected here.
    """
    from realnav.engine import Action

    if action == Action.MOVE_FORWARD:
        drift = 0.0
        if cfg.drift_on_move and cfg.act_rot_sigma > 0.0:
            drift = rng.normal(0.0, cfg.act_rot_sigma)
        dist = MOVE_DISTANCE
        if cfg.act_trans_sigma > 0.0:
            dist = max(0.0, MOVE_DISTANCE + rng.normal(0.0, cfg.act_trans_sigma))
        return ActuationOutcome(drift, dist)
    if action == Action.TURN_LEFT or action == Action.TURN_RIGHT:
        commanded = TURN_ANGLE if action == Action.TURN_LEFT else -TURN_ANGLE
        rot = commanded
        if cfg.act_rot_sigma > 0.0:
            rot = commanded + rng.normal(0.0, cfg.act_rot_sigma)
        return ActuationOutcome(rot, 0.0)
    raise ValueError(f"actuation noise undefined for action {action}")


# -- vectorized samplers (noise statistics / calibration) ---------------------


def sample_sensor_position_magnitudes(cfg: NoiseConfig, rng, n: int):
    """n displacement magnitudes |N(0, sensor_pos_sigma)|."""
    import numpy as np

    return np.abs(rng.normal(0.0, cfg.sensor_pos_sigma, size=n))


def sample_sensor_angle_draws(cfg: NoiseConfig, rng, n: int):
    return rng.normal(0.0, cfg.sensor_ang_sigma, size=n)


def sample_translation_draws(cfg: NoiseConfig, rng, n: int):
    """Raw Gaussian length perturbations, before the >= 0 clamp."""
    return rng.normal(0.0, cfg.act_trans_sigma, size=n)


def sample_rotation_draws(cfg: NoiseConfig, rng, n: int):
    return rng.normal(0.0, cfg.act_rot_sigma, size=n)
