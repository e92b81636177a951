"""Acceptance suite: one test per release criterion, with a printed
PASS/FAIL line each (run with `pytest tests/test_acceptance.py -v -s`).

Everything runs on bundled synthetic fixtures; no external data.
"""

import math
import time

import numpy as np
import pytest

from realnav import metrics
from realnav.alignment import Correspondence, estimate_similarity
from realnav.cli import main as cli_main
from realnav.engine import SimConfig, generate_episodes, run_suite
from realnav.fixtures import (
    build_office_grid,
    demo_db_path,
    demo_map_path,
    random_poses,
    random_records,
)
from realnav.geometry import apply_similarity
from realnav.mapgrid import OccupancyGrid
from realnav.noise import NoiseConfig, config_from_presets
from realnav.retrieval import RetrievalConfig, build_index, retrieve
from tests.conftest import make_rng
from tests.oracles import brute_force_retrieve, random_similarity

pytestmark = pytest.mark.acceptance

_GEN_SEED = 20250808
_RUN_SEED = 1


def _report(name: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    print(f"ACCEPTANCE {status}: {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def office_grid():
    return build_office_grid()


@pytest.fixture(scope="module")
def office_episodes(office_grid):
    rng = make_rng(_GEN_SEED)
    return generate_episodes(office_grid, 200, 1.1, rng)


def _episode_results(trajectories):
    return [
        metrics.EpisodeResult(
            success=t.outcome == "success",
            shortest_geodesic=t.spec.geodesic_start_to_goal,
            path_length=t.path_length,
            final_distance=t.final_distance,
        )
        for t in trajectories
    ]


def test_retrieval_oracle_equivalence():
    start = time.perf_counter()
    rng = make_rng(101)
    index = build_index(random_records(rng, 100_000),
                        RetrievalConfig(cos_threshold=0.96))
    queries = random_poses(rng, 1000)
    mismatches = 0
    for q in queries:
        got = retrieve(index, q)
        want_pos, want_fb = brute_force_retrieve(index, q)
        if got.record.id != index.records[want_pos].id or got.fallback != want_fb:
            mismatches += 1
    elapsed = time.perf_counter() - start
    _report(
        "retrieval oracle equivalence",
        mismatches == 0 and elapsed < 10.0,
        f"{1000 - mismatches}/1000 agree, {elapsed:.2f}s",
    )


def test_alignment_recovery():
    start = time.perf_counter()
    rng = make_rng(102)
    worst_param = 0.0
    worst_rmse = 0.0
    for _ in range(1000):
        t = random_similarity(rng, scale_range=(0.5, 2.0))
        src = rng.uniform(-10, 10, size=(10, 3))
        dst = np.array([apply_similarity(t, p) for p in src])
        rec = estimate_similarity(
            [Correspondence(s, d) for s, d in zip(src, dst)]
        )
        worst_param = max(
            worst_param,
            abs(rec.transform.scale - t.scale),
            float(np.max(np.abs(rec.transform.rotation - t.rotation))),
            float(np.max(np.abs(rec.transform.translation - t.translation))),
        )
        worst_rmse = max(worst_rmse, rec.rmse)
    elapsed = time.perf_counter() - start
    _report(
        "alignment recovery",
        worst_param < 1e-8 and worst_rmse < 1e-9 and elapsed < 5.0,
        f"max param err {worst_param:.2e}, max rmse {worst_rmse:.2e}, {elapsed:.2f}s",
    )


def test_spl_unit_values():
    one = metrics.spl([metrics.EpisodeResult(True, 2.0, 2.0, 0.0)])
    zero = metrics.spl([metrics.EpisodeResult(False, 2.0, 1.0, 1.0)])
    quarter = metrics.spl(
        [
            metrics.EpisodeResult(True, 1.5, 3.0, 0.1),
            metrics.EpisodeResult(False, 2.0, 2.0, 3.0),
        ]
    )
    exact = one == 1.0 and zero == 0.0 and quarter == 0.25
    rng = make_rng(103)
    bounded = True
    for _ in range(1000):
        results = [
            metrics.EpisodeResult(
                bool(rng.integers(0, 2)),
                float(rng.uniform(0.1, 10)),
                float(rng.uniform(0.0, 20)),
                float(rng.uniform(0.0, 5)),
            )
            for _ in range(int(rng.integers(1, 30)))
        ]
        s = metrics.spl(results)
        if not (0.0 <= s <= metrics.success_rate(results) <= 1.0):
            bounded = False
            break
    _report("SPL unit values", exact and bounded,
            f"examples ({one}, {zero}, {quarter}), bound held: {bounded}")


def test_oracle_ceiling(office_grid, office_episodes):
    cfg = SimConfig(observation_mode="virtual", seed=_RUN_SEED)
    start = time.perf_counter()
    trajectories = run_suite("oracle", office_episodes, office_grid, None, cfg,
                             jobs=1)
    elapsed = time.perf_counter() - start
    results = _episode_results(trajectories)
    sr = metrics.success_rate(results)
    s = metrics.spl(results)
    _report(
        "oracle ceiling",
        sr >= 0.99 and s >= 0.90 and elapsed < 60.0,
        f"success {sr:.4f}, SPL {s:.4f}, {elapsed:.1f}s single-threaded",
    )


def test_noise_degradation_trend(office_grid, office_episodes):
    spls = {}
    for level in ("none", "small", "medium", "large"):
        cfg = SimConfig(
            observation_mode="virtual",
            seed=_RUN_SEED,
            noise=config_from_presets(level, level),
        )
        trajectories = run_suite("oracle", office_episodes, office_grid, None,
                                 cfg, jobs=4)
        spls[level] = metrics.spl(_episode_results(trajectories))
    ordered = [spls["none"], spls["small"], spls["medium"], spls["large"]]
    strictly_decreasing = all(a > b for a, b in zip(ordered, ordered[1:]))
    halved = spls["large"] < 0.5 * spls["none"]
    _report(
        "noise degradation trend",
        strictly_decreasing and halved,
        "SPL " + " > ".join(f"{v:.4f}" for v in ordered),
    )


def test_episode_filter_compliance(office_grid):
    rng = make_rng(104)
    specs = generate_episodes(office_grid, 10_000, 1.1, rng)
    violations = 0
    for s in specs:
        euclid = math.hypot(s.goal[0] - s.start.x, s.goal[1] - s.start.z)
        if not (s.geodesic_start_to_goal / euclid > 1.1):
            violations += 1
    _report(
        "episode filter compliance",
        len(specs) == 10_000 and violations == 0,
        f"{len(specs)} specs, {violations} violations",
    )


def test_run_determinism(tmp_path):
    episodes = tmp_path / "eps.jsonl"
    assert cli_main([
        "gen-episodes", "--map", demo_map_path(), "--n", "50",
        "--min-ratio", "1.1", "--seed", "11", "--out", str(episodes),
    ]) == 0
    logs = []
    for name, jobs in (("a", "1"), ("b", "1"), ("c", "8")):
        log = tmp_path / f"run_{name}.jsonl"
        assert cli_main([
            "run", "--map", demo_map_path(), "--db", demo_db_path(),
            "--episodes", str(episodes), "--policy", "oracle",
            "--noise-sensor", "small", "--noise-actuator", "small",
            "--seed", "33", "--jobs", jobs, "--out", str(log),
        ]) == 0
        logs.append(log.read_bytes())
    _report(
        "run determinism",
        logs[0] == logs[1] == logs[2],
        f"identical logs across reruns and --jobs 8 ({len(logs[0])} bytes)",
    )


def test_noise_statistics():
    n = 1_000_000
    from realnav.noise import (
        sample_rotation_draws,
        sample_sensor_angle_draws,
        sample_sensor_position_magnitudes,
        sample_translation_draws,
    )

    checks = []
    for i, sigma in enumerate((0.20, 0.40, 0.80)):
        cfg = NoiseConfig(sensor_pos_sigma=sigma)
        mags = sample_sensor_position_magnitudes(cfg, make_rng(200 + i), n)
        est = float(mags.mean()) * math.sqrt(math.pi / 2.0)
        checks.append((f"loc pos {sigma}m", est, sigma))
    for i, deg in enumerate((7.0, 15.0, 30.0)):
        sigma = math.radians(deg)
        cfg = NoiseConfig(sensor_ang_sigma=sigma)
        est = float(sample_sensor_angle_draws(cfg, make_rng(210 + i), n).std())
        checks.append((f"loc ang {deg}deg", est, sigma))
    for i, sigma in enumerate((0.05, 0.10, 0.20)):
        cfg = NoiseConfig(act_trans_sigma=sigma)
        est = float(sample_translation_draws(cfg, make_rng(220 + i), n).std())
        checks.append((f"act trans {sigma}m", est, sigma))
    for i, deg in enumerate((5.0, 10.0, 20.0)):
        sigma = math.radians(deg)
        cfg = NoiseConfig(act_rot_sigma=sigma)
        est = float(sample_rotation_draws(cfg, make_rng(230 + i), n).std())
        checks.append((f"act rot {deg}deg", est, sigma))
    worst = max(abs(est - want) / want for (_, est, want) in checks)
    _report(
        "noise statistics",
        worst < 0.01,
        f"12 sigma estimates at 1e6 draws, worst relative error {worst:.4%}",
    )


def test_geodesic_sanity():
    from realnav.fixtures import build_demo_grid

    grid = build_demo_grid()
    rng = make_rng(105)
    symmetric = True
    triangle_ok = True
    for _ in range(1000):
        a = grid.sample_navigable_point(rng)
        b = grid.sample_navigable_point(rng)
        c = grid.sample_navigable_point(rng)
        dab = grid.geodesic_distance(a, b)
        dba = grid.geodesic_distance(b, a)
        dbc = grid.geodesic_distance(b, c)
        dac = grid.geodesic_distance(a, c)
        if dab != dba:
            symmetric = False
            break
        if dac > dab + dbc + 2 * grid.resolution:
            triangle_ok = False
            break
    corridor = OccupancyGrid(np.ones((1, 14), dtype=bool), 0.05)
    d = corridor.geodesic_distance(corridor.center_of(0, 1), corridor.center_of(0, 11))
    corridor_ok = abs(d - 0.5) <= 0.05
    _report(
        "geodesic sanity",
        symmetric and triangle_ok and corridor_ok,
        f"symmetry exact, triangle within 2*res, corridor {d:.4f}m vs 0.5m",
    )
