import json
import math

import numpy as np
import pytest

from realnav.cli import main
from realnav.fixtures import demo_db_path, demo_map_path
from realnav.geometry import yaw_rotation


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture
def episodes_file(tmp_path):
    out = tmp_path / "eps.jsonl"
    code = run_cli(
        "gen-episodes", "--map", demo_map_path(), "--n", "12",
        "--min-ratio", "1.1", "--seed", "5", "--out", str(out),
    )
    assert code == 0
    return str(out)


class TestGenEpisodes:
    def test_deterministic_bytes(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        for out in (a, b):
            assert run_cli(
                "gen-episodes", "--map", demo_map_path(), "--n", "10",
                "--min-ratio", "1.1", "--seed", "3", "--out", str(out),
            ) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_different_seed_differs(self, tmp_path):
        a = tmp_path / "a.jsonl"
        b = tmp_path / "b.jsonl"
        run_cli("gen-episodes", "--map", demo_map_path(), "--n", "10",
                "--min-ratio", "1.1", "--seed", "3", "--out", str(a))
        run_cli("gen-episodes", "--map", demo_map_path(), "--n", "10",
                "--min-ratio", "1.1", "--seed", "4", "--out", str(b))
        assert a.read_bytes() != b.read_bytes()

    def test_min_ratio_respected(self, episodes_file):
        for line in open(episodes_file):
            obj = json.loads(line)
            euclid = math.hypot(obj["goal_x"] - obj["start_x"],
                                obj["goal_z"] - obj["start_z"])
            assert obj["geodesic"] / euclid > 1.1


class TestRunAndEval:
    def test_full_demo_pipeline(self, tmp_path, episodes_file, capsys):
        log = tmp_path / "log.jsonl"
        code = run_cli(
            "run", "--map", demo_map_path(), "--db", demo_db_path(),
            "--episodes", episodes_file, "--policy", "oracle",
            "--noise-sensor", "none", "--noise-actuator", "none",
            "--seed", "7", "--out", str(log),
        )
        assert code == 0
        csv = tmp_path / "hist.csv"
        js = tmp_path / "report.json"
        code = run_cli("eval", str(log), "--out", str(csv), "--json", str(js))
        assert code == 0
        printed = capsys.readouterr().out
        assert "SPL" in printed and "Success rate" in printed
        report = json.loads(js.read_text())
        assert report["success_rate"] >= 0.99
        assert report["n"] == 12
        assert csv.read_text().startswith("bin_low,bin_high,count")

    def test_jobs_do_not_change_output(self, tmp_path, episodes_file):
        logs = []
        for jobs in ("1", "3"):
            log = tmp_path / f"log{jobs}.jsonl"
            assert run_cli(
                "run", "--map", demo_map_path(), "--db", demo_db_path(),
                "--episodes", episodes_file, "--policy", "oracle",
                "--noise-sensor", "small", "--noise-actuator", "small",
                "--seed", "9", "--jobs", jobs, "--out", str(log),
            ) == 0
            logs.append(log.read_bytes())
        assert logs[0] == logs[1]

    def test_virtual_mode_needs_no_db(self, tmp_path, episodes_file):
        log = tmp_path / "log.jsonl"
        assert run_cli(
            "run", "--map", demo_map_path(), "--episodes", episodes_file,
            "--policy", "greedy", "--obs-mode", "virtual",
            "--seed", "2", "--out", str(log),
        ) == 0

    def test_real_mode_without_db_fails(self, tmp_path, episodes_file):
        with pytest.raises(SystemExit):
            run_cli("run", "--map", demo_map_path(), "--episodes", episodes_file,
                    "--policy", "oracle", "--seed", "2",
                    "--out", str(tmp_path / "x.jsonl"))

    def test_eval_empty_log_errors(self, tmp_path, capsys):
        log = tmp_path / "empty.jsonl"
        log.write_text("")
        assert run_cli("eval", str(log)) == 2
        assert "no episode" in capsys.readouterr().err.lower()

    def test_missing_map_file_errors(self, tmp_path, capsys):
        assert run_cli("gen-episodes", "--map", str(tmp_path / "nope.txt"),
                       "--n", "1", "--out", str(tmp_path / "o.jsonl")) == 2
        assert "error" in capsys.readouterr().err

    def test_noise_degrades_spl_end_to_end(self, tmp_path, episodes_file):
        spls = {}
        for preset in ("none", "large"):
            log = tmp_path / f"{preset}.jsonl"
            js = tmp_path / f"{preset}.json"
            assert run_cli(
                "run", "--map", demo_map_path(), "--episodes", episodes_file,
                "--policy", "oracle", "--obs-mode", "virtual",
                "--noise-sensor", preset, "--noise-actuator", preset,
                "--seed", "13", "--out", str(log),
            ) == 0
            assert run_cli("eval", str(log), "--json", str(js)) == 0
            spls[preset] = json.loads(js.read_text())["spl"]
        assert spls["large"] < spls["none"]

    def test_config_file_defaults_and_flag_override(self, tmp_path, episodes_file):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "policy": "greedy", "obs_mode": "virtual", "seed": 21,
            "noise_sensor": "small",
        }))
        log_a = tmp_path / "a.jsonl"
        assert run_cli("run", "--map", demo_map_path(), "--episodes", episodes_file,
                       "--config", str(cfg), "--out", str(log_a)) == 0
        # Flag overrides the config noise preset: different trajectories.
        log_b = tmp_path / "b.jsonl"
        assert run_cli("run", "--map", demo_map_path(), "--episodes", episodes_file,
                       "--config", str(cfg), "--noise-sensor", "none",
                       "--out", str(log_b)) == 0
        assert log_a.read_bytes() != log_b.read_bytes()

    def test_sigma_override_flags(self, tmp_path, episodes_file):
        log = tmp_path / "s.jsonl"
        assert run_cli(
            "run", "--map", demo_map_path(), "--episodes", episodes_file,
            "--policy", "greedy", "--obs-mode", "virtual", "--seed", "2",
            "--noise-sensor", "small", "--sensor-pos-sigma", "0.33",
            "--out", str(log),
        ) == 0


class TestAlign:
    def _write_sfm(self, path, poses):
        lines = ["# COLMAP-style image list"]
        for i, (x, z, theta) in enumerate(poses):
            # Camera-from-world for a yaw-theta, center (x, 0, z) pose.
            rot_wc = yaw_rotation(theta)
            r_cw = rot_wc.T
            qw = math.sqrt(max(0.0, 1.0 + r_cw[0, 0] + r_cw[1, 1] + r_cw[2, 2])) / 2.0
            qx = (r_cw[2, 1] - r_cw[1, 2]) / (4 * qw)
            qy = (r_cw[0, 2] - r_cw[2, 0]) / (4 * qw)
            qz = (r_cw[1, 0] - r_cw[0, 1]) / (4 * qw)
            center = np.array([x, 0.0, z])
            t = -(r_cw @ center)
            lines.append(
                f"{i} {qw} {qx} {qy} {qz} {t[0]} {t[1]} {t[2]} 1 img{i}.png"
            )
            lines.append("")
        path.write_text("\n".join(lines) + "\n")

    def test_align_pipeline(self, tmp_path, capsys):
        sfm = tmp_path / "images.txt"
        poses = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.5), (0.0, 2.0, -0.4),
                 (3.0, 1.0, 2.0), (1.5, 2.5, 1.0)]
        self._write_sfm(sfm, poses)
        # Correspondences realize translation by (1, 0, 2).
        pairs = tmp_path / "pairs.txt"
        rows = []
        for sx, sz, _ in poses[:4]:
            rows.append(f"{sx} 0 {sz}   {sx + 1.0} 0 {sz + 2.0}")
        pairs.write_text("\n".join(rows) + "\n")
        out = tmp_path / "aligned.jsonl"
        code = run_cli("align", "--correspondences", str(pairs),
                       "--images", str(sfm), "--out", str(out))
        assert code == 0
        assert "rmse" in capsys.readouterr().out
        from realnav.retrieval import load_database

        records = load_database(str(out))
        assert len(records) == 5
        assert records[0].pose.x == pytest.approx(1.0, abs=1e-6)
        assert records[0].pose.z == pytest.approx(2.0, abs=1e-6)
        assert records[1].pose.x == pytest.approx(2.0, abs=1e-6)


class TestBench:
    def test_bench_small(self, capsys):
        assert run_cli("bench", "--grid-size", "30", "--fields", "2",
                       "--records", "2000", "--queries", "20") == 0
        out = capsys.readouterr().out
        assert "distance field" in out
        assert "retrieval" in out
