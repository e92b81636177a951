"""Episode generation and the observe -> act -> transition loop.

An episode starts from a sampled pose, runs up to max_steps discrete
actions (move forward 0.25 m, turn left/right 10 degrees, STOP) and
succeeds only if STOP is called with the true position within the success
radius (0.20 m) of the goal.  Reaching step max_steps without STOP is a
failure; STOP as the final permitted action may still succeed.

Per step, actuation noise perturbs the realized motion of the true pose,
the perceived pose is the sensor-noised copy of the true pose, and both
the goal vector and the retrieved observation image are computed from the
perceived pose, so localization error corrupts what the policy sees but
never where the robot actually is.

All randomness is drawn from streams keyed by (seed, episode id, step
index, lane), making trajectories replayable and independent of episode
execution order.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from realnav.errors import (
    AbortedEpisodeError,
    EmptyMapError,
    InfeasibleMapError,
    InvalidEndpointError,
    NoEpisodesError,
    ProtocolError,
)
from realnav.geometry import Pose3, heading_from_angle, wrap_angle
from realnav.mapgrid import OccupancyGrid
from realnav.noise import NoiseConfig, apply_actuation_noise, apply_sensor_noise

_ENV_LANE = 0
_POLICY_LANE = 1


class Action(enum.Enum):
    MOVE_FORWARD = "MOVE_FORWARD"
    TURN_LEFT = "TURN_LEFT"
    TURN_RIGHT = "TURN_RIGHT"
    STOP = "STOP"


OBSERVATION_MODES = ("virtual", "real", "hybrid")


@dataclass(frozen=True)
class EpisodeSpec:
    id: int
    start: Pose3
    goal: tuple  # (x, z) meters
    geodesic_start_to_goal: float


@dataclass(frozen=True)
class StepObservation:
    image_ref: str
    goal_distance: float
    goal_bearing: float  # radians in (-pi, pi]
    prev_action: Action | None
    step_index: int
    retrieved_id: int | None = None
    retrieval_fallback: bool = False
    virtual_ref: str | None = None  # hybrid mode only

    @property
    def goal_vector(self) -> tuple:
        return (self.goal_distance, self.goal_bearing)


@dataclass(frozen=True)
class TrajectoryStep:
    step_index: int
    true_pose: Pose3
    perceived_pose: Pose3
    action: Action
    retrieved_id: int | None


@dataclass
class Trajectory:
    spec: EpisodeSpec
    steps: list
    outcome: str  # success | failure | aborted
    final_distance: float
    path_length: float
    error: str | None = None

    @property
    def success(self) -> bool:
        return self.outcome == "success"


@dataclass(frozen=True)
class SimConfig:
    max_steps: int = 200
    success_radius: float = 0.20
    observation_mode: str = "real"
    noise: NoiseConfig = dc_field(default_factory=NoiseConfig)
    seed: int = 0
    image_size: tuple | None = None  # protocol metadata only
    inline_images: bool = False
    message_timeout: float = 30.0

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if not (self.success_radius > 0):
            raise ValueError("success_radius must be > 0")
        if self.observation_mode not in OBSERVATION_MODES:
            raise ValueError(f"observation_mode must be one of {OBSERVATION_MODES}")
        if self.seed < 0:
            raise ValueError("seed must be >= 0")


def _stream(seed: int, episode_id: int, step_index: int, lane: int):
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((seed, episode_id, step_index, lane)))
    )


def policy_rng(cfg: SimConfig, episode_id: int, step_index: int):
    """Per-(seed, episode, step) stream reserved for policy-side draws."""
    return _stream(cfg.seed, episode_id, step_index, _POLICY_LANE)


# -- episode generation --------------------------------------------------------


def generate_episodes(grid: OccupancyGrid, n: int, min_ratio: float, rng,
                      max_rejects: int = 1_000_000):
    """Rejection-sample n episode specs with geodesic/euclidean > min_ratio.

    Start and goal are uniform navigable points (both resampled on any
    rejection), the start heading is uniform in [0, 2pi).  Raises
    InfeasibleMapError after max_rejects consecutive rejections.
    """
    # Ratios below 1 cannot occur (geodesic >= euclidean), so a min_ratio
    # like 0.99 means "no detour requirement".
    if min_ratio < 0.0:
        raise ValueError("min_ratio must be >= 0")
    if grid.n_navigable == 0:
        raise EmptyMapError("grid has no navigable cell")
    specs = []
    consecutive_rejects = 0
    while len(specs) < n:
        if consecutive_rejects >= max_rejects:
            raise InfeasibleMapError(
                f"{max_rejects} consecutive rejections at min_ratio={min_ratio}"
            )
        sx, sz = grid.sample_navigable_point(rng)
        gx, gz = grid.sample_navigable_point(rng)
        theta = rng.uniform(0.0, 2.0 * math.pi)
        euclid = math.hypot(gx - sx, gz - sz)
        if euclid == 0.0:
            consecutive_rejects += 1
            continue
        geo = grid.geodesic_distance((sx, sz), (gx, gz))
        if not math.isfinite(geo) or geo / euclid <= min_ratio:
            consecutive_rejects += 1
            continue
        specs.append(
            EpisodeSpec(
                id=len(specs),
                start=Pose3(sx, sz, heading_from_angle(theta)),
                goal=(gx, gz),
                geodesic_start_to_goal=geo,
            )
        )
        consecutive_rejects = 0
    return specs


# -- step loop -----------------------------------------------------------------


class Terminal:
    """Marker returned by step() when the episode ends."""

    __slots__ = ("outcome", "final_distance")

    def __init__(self, outcome: str, final_distance: float):
        self.outcome = outcome
        self.final_distance = final_distance


class EpisodeState:
    def __init__(self, spec: EpisodeSpec, cfg: SimConfig):
        self.spec = spec
        self.cfg = cfg
        self.true_pose = spec.start
        self.step_index = 0  # observations issued so far - 1
        self.steps = []
        self.path_length = 0.0
        self.terminated = False
        self.outcome = None
        self.final_distance = None
        self._pending = None  # (true, perceived, retrieved_id) of last obs


def _virtual_ref(pose: Pose3) -> str:
    return f"virtual://{pose.x:.6f},{pose.z:.6f},{pose.theta:.6f}"


def _observe(state: EpisodeState, grid: OccupancyGrid, index, cfg: SimConfig,
             rng, prev_action: Action | None) -> StepObservation:
    perceived = apply_sensor_noise(state.true_pose, cfg.noise, rng)
    gx, gz = state.spec.goal
    dx = gx - perceived.x
    dz = gz - perceived.z
    distance = math.hypot(dx, dz)
    bearing = wrap_angle(math.atan2(dz, dx) - perceived.theta)
    retrieved_id = None
    fallback = False
    virtual_ref = None
    if cfg.observation_mode == "virtual":
        image_ref = _virtual_ref(perceived)
    else:
        if index is None:
            raise ValueError(f"{cfg.observation_mode} mode requires a database index")
        from realnav.retrieval import retrieve

        res = retrieve(index, perceived)
        image_ref = res.record.image_ref
        retrieved_id = res.record.id
        fallback = res.fallback
        if cfg.observation_mode == "hybrid":
            virtual_ref = _virtual_ref(perceived)
    state._pending = (state.true_pose, perceived, retrieved_id)
    return StepObservation(
        image_ref=image_ref,
        goal_distance=distance,
        goal_bearing=bearing,
        prev_action=prev_action,
        step_index=state.step_index,
        retrieved_id=retrieved_id,
        retrieval_fallback=fallback,
        virtual_ref=virtual_ref,
    )


def reset(spec: EpisodeSpec, grid: OccupancyGrid, index, cfg: SimConfig):
    """Start an episode; returns (state, first observation)."""
    if not grid.is_navigable(spec.start.x, spec.start.z):
        raise InvalidEndpointError(f"episode {spec.id}: start is not navigable")
    if not grid.is_navigable(*spec.goal):
        raise InvalidEndpointError(f"episode {spec.id}: goal is not navigable")
    state = EpisodeState(spec, cfg)
    rng = _stream(cfg.seed, spec.id, 0, _ENV_LANE)
    obs = _observe(state, grid, index, cfg, rng, prev_action=None)
    return state, obs


def step(state: EpisodeState, action: Action, grid: OccupancyGrid, index,
         cfg: SimConfig):
    """Apply one action; returns the next StepObservation or Terminal."""
    if state.terminated:
        raise ProtocolError("action received after episode terminated")
    true_before, perceived, retrieved_id = state._pending
    state.steps.append(
        TrajectoryStep(state.step_index, true_before, perceived, action, retrieved_id)
    )

    gx, gz = state.spec.goal
    if action == Action.STOP:
        final = math.hypot(state.true_pose.x - gx, state.true_pose.z - gz)
        state.terminated = True
        state.outcome = "success" if final <= cfg.success_radius else "failure"
        state.final_distance = final
        return Terminal(state.outcome, final)

    rng = _stream(cfg.seed, state.spec.id, state.step_index + 1, _ENV_LANE)
    outcome = apply_actuation_noise(action, cfg.noise, rng)
    pose = state.true_pose
    if outcome.rotation != 0.0:
        pose = Pose3(pose.x, pose.z, pose.heading.rotated(outcome.rotation))
    if action == Action.MOVE_FORWARD:
        moved = grid.attempt_move(pose, outcome.distance)
        state.path_length += math.hypot(moved.x - pose.x, moved.z - pose.z)
        pose = moved
    state.true_pose = pose
    state.step_index += 1

    if state.step_index >= cfg.max_steps:
        final = math.hypot(state.true_pose.x - gx, state.true_pose.z - gz)
        state.terminated = True
        state.outcome = "failure"
        state.final_distance = final
        return Terminal("failure", final)

    return _observe(state, grid, index, cfg, rng, prev_action=action)


@dataclass
class PolicyContext:
    """World access handed to in-process policies alongside observations."""

    grid: OccupancyGrid
    spec: EpisodeSpec
    cfg: SimConfig
    perceived_pose: Pose3
    rng: object  # per-(seed, episode, step) policy-lane generator


def run_episode(policy, spec: EpisodeSpec, grid: OccupancyGrid, index,
                cfg: SimConfig) -> Trajectory:
    """Drive one episode to termination; policy failures abort, not crash."""
    state, obs = reset(spec, grid, index, cfg)
    try:
        policy.reset(spec)
        while True:
            ctx = PolicyContext(
                grid=grid,
                spec=spec,
                cfg=cfg,
                perceived_pose=state._pending[1],
                rng=policy_rng(cfg, spec.id, obs.step_index),
            )
            action = policy.decide(obs, ctx)
            result = step(state, action, grid, index, cfg)
            if isinstance(result, Terminal):
                done_cb = getattr(policy, "episode_done", None)
                if done_cb is not None:
                    done_cb(result.outcome, result.final_distance)
                return Trajectory(
                    spec=spec,
                    steps=state.steps,
                    outcome=result.outcome,
                    final_distance=result.final_distance,
                    path_length=state.path_length,
                )
            obs = result
    except (ProtocolError, AbortedEpisodeError) as exc:
        err_cb = getattr(policy, "episode_error", None)
        if err_cb is not None:
            err_cb(str(exc))
        gx, gz = spec.goal
        final = math.hypot(state.true_pose.x - gx, state.true_pose.z - gz)
        return Trajectory(
            spec=spec,
            steps=state.steps,
            outcome="aborted",
            final_distance=final,
            path_length=state.path_length,
            error=str(exc),
        )


# -- suite runner ----------------------------------------------------------------

_WORKER = {}


def _init_worker(grid, index, cfg, policy_spec):
    from realnav.policies import make_policy

    _WORKER["grid"] = grid
    _WORKER["index"] = index
    _WORKER["cfg"] = cfg
    _WORKER["policy"] = make_policy(policy_spec, grid, cfg)


def _run_one(spec: EpisodeSpec) -> Trajectory:
    return run_episode(
        _WORKER["policy"], spec, _WORKER["grid"], _WORKER["index"], _WORKER["cfg"]
    )


def run_suite(policy_spec, specs, grid: OccupancyGrid, index, cfg: SimConfig,
              jobs: int = 1):
    """Run all episodes; results keep spec order regardless of parallelism.

    `policy_spec` is a policy name / external transport string (see
    realnav.policies.make_policy) or an already-constructed policy object
    (jobs=1 only).
    """
    from realnav.policies import make_policy

    if jobs <= 1:
        policy = (
            policy_spec
            if hasattr(policy_spec, "decide")
            else make_policy(policy_spec, grid, cfg)
        )
        try:
            return [run_episode(policy, spec, grid, index, cfg) for spec in specs]
        finally:
            close = getattr(policy, "close", None)
            if close:
                close()
    if hasattr(policy_spec, "decide"):
        raise ValueError("parallel runs need a policy spec string, not an object")
    if isinstance(policy_spec, str) and policy_spec.startswith("tcp:"):
        raise ValueError("tcp policies support --jobs 1 only")
    import multiprocessing as mp

    ctx = mp.get_context("fork")
    with ctx.Pool(jobs, initializer=_init_worker,
                  initargs=(grid, index, cfg, policy_spec)) as pool:
        return pool.map(_run_one, specs)


# -- file formats ----------------------------------------------------------------


def save_episodes(specs, path: str) -> None:
    """Episode set file: one JSON object per line."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in specs:
            fh.write(
                json.dumps(
                    {
                        "id": s.id,
                        "start_x": s.start.x,
                        "start_z": s.start.z,
                        "start_theta": s.start.theta,
                        "goal_x": s.goal[0],
                        "goal_z": s.goal[1],
                        "geodesic": s.geodesic_start_to_goal,
                    }
                )
                + "\n"
            )


def load_episodes(path: str):
    specs = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                specs.append(
                    EpisodeSpec(
                        id=int(obj["id"]),
                        start=Pose3(
                            float(obj["start_x"]),
                            float(obj["start_z"]),
                            heading_from_angle(float(obj["start_theta"])),
                        ),
                        goal=(float(obj["goal_x"]), float(obj["goal_z"])),
                        geodesic_start_to_goal=float(obj["geodesic"]),
                    )
                )
            except (KeyError, ValueError, json.JSONDecodeError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return specs


def trajectory_lines(traj: Trajectory, cfg: SimConfig):
    """JSON lines for one trajectory: per-step records plus a summary."""
    for st in traj.steps:
        yield json.dumps(
            {
                "episode_id": traj.spec.id,
                "step": st.step_index,
                "true_x": st.true_pose.x,
                "true_z": st.true_pose.z,
                "true_theta": st.true_pose.theta,
                "perc_x": st.perceived_pose.x,
                "perc_z": st.perceived_pose.z,
                "perc_theta": st.perceived_pose.theta,
                "image_id": st.retrieved_id,
                "action": st.action.value,
            }
        )
    yield json.dumps(
        {
            "episode_id": traj.spec.id,
            "summary": True,
            "outcome": traj.outcome,
            "steps": len(traj.steps),
            "final_distance": traj.final_distance,
            "path_length": traj.path_length,
            "geodesic": traj.spec.geodesic_start_to_goal,
            "success_radius": cfg.success_radius,
            "error": traj.error,
        }
    )


def write_trajectories(trajectories, cfg: SimConfig, path: str) -> None:
    import os
    import tempfile

    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for traj in trajectories:
                for line in trajectory_lines(traj, cfg):
                    fh.write(line + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_results(path: str):
    """Read a trajectory log back into (results, aborted_ids, success_radius).

    `results` holds one metrics EpisodeResult per completed episode.
    """
    from realnav.metrics import EpisodeResult

    results = []
    aborted = []
    radius = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if not obj.get("summary"):
                continue
            radius = obj.get("success_radius", radius)
            if obj["outcome"] == "aborted":
                aborted.append(int(obj["episode_id"]))
                continue
            results.append(
                EpisodeResult(
                    success=obj["outcome"] == "success",
                    shortest_geodesic=float(obj["geodesic"]),
                    path_length=float(obj["path_length"]),
                    final_distance=float(obj["final_distance"]),
                )
            )
    if not results and not aborted:
        raise NoEpisodesError(f"{path}: no episode summaries found")
    return results, aborted, radius
