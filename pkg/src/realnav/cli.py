"""Command-line entry point.

Subcommands cover the full pipeline:

    realnav align         estimate the model-alignment transform and write
                          the aligned observation database
    realnav gen-episodes  sample an episode set over a map
    realnav run           run a policy over an episode set, writing the
                          trajectory log
    realnav eval          compute SPL / success rate / distance histogram
                          from a trajectory log
    realnav bench         compare the compiled and pure path kernels and
                          indexed vs brute-force retrieval

All commands are deterministic given --seed.  `run` exits nonzero when
any episode aborts (policy/protocol failure) and lists the episode ids.
Flag values may also come from a JSON config file (--config); explicit
flags win.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from realnav import alignment, engine, metrics
from realnav.errors import NoEpisodesError
from realnav.mapgrid import load_grid
from realnav.noise import ACTUATION_PRESETS, NoiseConfig, SENSOR_PRESETS
from realnav.retrieval import (
    RetrievalConfig,
    build_index,
    load_database,
    parse_sfm_images,
    save_database,
)

_RUN_DEFAULTS = {
    "policy": "oracle",
    "noise_sensor": "none",
    "noise_actuator": "none",
    "cos_threshold": 0.96,
    "max_steps": 200,
    "success_radius": 0.20,
    "seed": 0,
    "jobs": 1,
    "obs_mode": "real",
    "timeout": 30.0,
    "sensor_pos_sigma": None,
    "sensor_ang_sigma": None,
    "act_trans_sigma": None,
    "act_rot_sigma": None,
}


def _atomic_write(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _merge(args: argparse.Namespace, key: str):
    """Explicit flag > config file > built-in default."""
    val = getattr(args, key)
    if val is not None:
        return val
    if getattr(args, "_config", None) and key in args._config:
        return args._config[key]
    return _RUN_DEFAULTS[key]


def cmd_align(args) -> int:
    correspondences = alignment.load_correspondences(args.correspondences)
    report = alignment.estimate_similarity(correspondences)
    records = parse_sfm_images(args.images)
    aligned = alignment.align_database(records, report.transform)
    save_database(aligned, args.out)
    print(
        f"aligned {len(aligned)} records with {report.n_points} correspondences; "
        f"rmse {report.rmse:.6f} m"
    )
    return 0


def cmd_gen_episodes(args) -> int:
    grid = load_grid(args.map)
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence((args.seed, 0xE9150DE5)))
    )
    specs = engine.generate_episodes(grid, args.n, args.min_ratio, rng)
    lines = []
    for s in specs:
        lines.append(
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
        )
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote {len(specs)} episodes to {args.out}")
    return 0


def _noise_from_args(args) -> NoiseConfig:
    sensor = _merge(args, "noise_sensor")
    actuator = _merge(args, "noise_actuator")
    if sensor not in SENSOR_PRESETS:
        raise SystemExit(f"unknown sensor noise preset {sensor!r}")
    if actuator not in ACTUATION_PRESETS:
        raise SystemExit(f"unknown actuator noise preset {actuator!r}")
    pos, ang = SENSOR_PRESETS[sensor]
    trans, rot = ACTUATION_PRESETS[actuator]
    overrides = {
        "sensor_pos_sigma": pos,
        "sensor_ang_sigma": ang,
        "act_trans_sigma": trans,
        "act_rot_sigma": rot,
    }
    for key in overrides:
        val = _merge(args, key)
        if val is not None:
            overrides[key] = float(val)
    return NoiseConfig(**overrides)


def cmd_run(args) -> int:
    grid = load_grid(args.map)
    specs = engine.load_episodes(args.episodes)
    obs_mode = _merge(args, "obs_mode")
    index = None
    if args.db is not None:
        records = load_database(args.db)
        index = build_index(
            records, RetrievalConfig(cos_threshold=float(_merge(args, "cos_threshold")))
        )
    elif obs_mode != "virtual":
        raise SystemExit("--db is required unless --obs-mode virtual")
    cfg = engine.SimConfig(
        max_steps=int(_merge(args, "max_steps")),
        success_radius=float(_merge(args, "success_radius")),
        observation_mode=obs_mode,
        noise=_noise_from_args(args),
        seed=int(_merge(args, "seed")),
        message_timeout=float(_merge(args, "timeout")),
    )
    policy_spec = _merge(args, "policy")
    jobs = int(_merge(args, "jobs"))
    trajectories = engine.run_suite(policy_spec, specs, grid, index, cfg, jobs=jobs)
    engine.write_trajectories(trajectories, cfg, args.out)
    aborted = [t.spec.id for t in trajectories if t.outcome == "aborted"]
    n_success = sum(1 for t in trajectories if t.outcome == "success")
    print(
        f"ran {len(trajectories)} episodes: {n_success} success, "
        f"{len(trajectories) - n_success - len(aborted)} failure, "
        f"{len(aborted)} aborted -> {args.out}"
    )
    if aborted:
        print(f"aborted episode ids: {aborted}", file=sys.stderr)
        return 1
    return 0


def cmd_eval(args) -> int:
    results, aborted, radius = engine.load_results(args.log)
    if not results:
        raise NoEpisodesError(f"{args.log}: only aborted episodes, nothing to score")
    edges = metrics.DEFAULT_HISTOGRAM_EDGES
    if radius is not None and abs(edges[0] - radius) > 1e-12:
        edges = (radius,) + tuple(e for e in edges if e > radius)
    report = metrics.compute_report(results, edges)
    print(metrics.format_table(report))
    if aborted:
        print(f"excluded {len(aborted)} aborted episodes: {aborted}", file=sys.stderr)
    if args.json:
        _atomic_write(args.json, report.to_json() + "\n")
    if args.out:
        _atomic_write(args.out, metrics.histogram_csv(report))
        print(f"histogram -> {args.out}")
    return 0


def cmd_bench(args) -> int:
    from realnav.bench import run_benchmark

    print(
        run_benchmark(
            grid_size=args.grid_size,
            fields=args.fields,
            n_records=args.records,
            n_queries=args.queries,
            seed=args.seed if args.seed is not None else 0,
        )
    )
    return 0


def _add_config_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON file with flag defaults")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="realnav", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="estimate alignment and write the aligned db")
    p.add_argument("--correspondences", required=True)
    p.add_argument("--images", required=True, help="COLMAP images.txt")
    p.add_argument("--out", required=True, help="output native JSONL database")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("gen-episodes", help="sample an episode set")
    p.add_argument("--map", required=True)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--min-ratio", type=float, default=1.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_episodes)

    p = sub.add_parser("run", help="run a policy over an episode set")
    p.add_argument("--map", required=True)
    p.add_argument("--db", default=None)
    p.add_argument("--episodes", required=True)
    p.add_argument("--policy", default=None,
                   help="oracle|greedy|random|cmd:<argv>|tcp:<host>:<port>")
    p.add_argument("--noise-sensor", default=None,
                   choices=sorted(SENSOR_PRESETS), dest="noise_sensor")
    p.add_argument("--noise-actuator", default=None,
                   choices=sorted(ACTUATION_PRESETS), dest="noise_actuator")
    p.add_argument("--cos-threshold", type=float, default=None)
    p.add_argument("--max-steps", type=int, default=None)
    p.add_argument("--success-radius", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--obs-mode", default=None, choices=engine.OBSERVATION_MODES)
    p.add_argument("--timeout", type=float, default=None,
                   help="per-message policy timeout, seconds")
    p.add_argument("--sensor-pos-sigma", type=float, default=None)
    p.add_argument("--sensor-ang-sigma", type=float, default=None)
    p.add_argument("--act-trans-sigma", type=float, default=None)
    p.add_argument("--act-rot-sigma", type=float, default=None)
    p.add_argument("--out", required=True)
    _add_config_flag(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a trajectory log")
    p.add_argument("log")
    p.add_argument("--out", default=None, help="histogram CSV path")
    p.add_argument("--json", default=None, help="JSON report path")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bench", help="kernel and retrieval benchmarks")
    p.add_argument("--grid-size", type=int, default=100)
    p.add_argument("--fields", type=int, default=20)
    p.add_argument("--records", type=int, default=100_000)
    p.add_argument("--queries", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    from realnav.errors import (
        AbortedEpisodeError,
        DegenerateConfigurationError,
        EmptyDatabaseError,
        EmptyMapError,
        InfeasibleMapError,
        InvalidEndpointError,
        MapParseError,
        NoEpisodesError,
        ProtocolError,
        SfmParseError,
    )

    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        with open(args.config, "r", encoding="utf-8") as fh:
            args._config = json.load(fh)
    else:
        args._config = None
    try:
        return args.func(args)
    except (
        AbortedEpisodeError,
        DegenerateConfigurationError,
        EmptyDatabaseError,
        EmptyMapError,
        InfeasibleMapError,
        InvalidEndpointError,
        MapParseError,
        NoEpisodesError,
        ProtocolError,
        SfmParseError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
