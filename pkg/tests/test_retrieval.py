import math
import time

import numpy as np
import pytest

from realnav.errors import EmptyDatabaseError, SfmParseError
from realnav.geometry import Pose3, heading_from_angle
from realnav.fixtures import random_poses, random_records
from realnav.retrieval import (
    ObservationRecord,
    RetrievalConfig,
    build_index,
    load_database,
    parse_sfm_images,
    retrieve,
    retrieve_batch,
    save_database,
)
from tests.conftest import make_rng
from tests.oracles import brute_force_retrieve, brute_force_retrieve_loop


def rec(i, x, z, theta, image=None):
    return ObservationRecord(i, image or f"img/{i}.png", Pose3(x, z, heading_from_angle(theta)))


class TestBuildIndex:
    def test_single_record(self):
        idx = build_index([rec(0, 1.0, 2.0, 0.5)])
        assert len(idx) == 1

    def test_empty_database(self):
        with pytest.raises(EmptyDatabaseError):
            build_index([])

    def test_duplicate_ids(self):
        with pytest.raises(ValueError, match="duplicate"):
            build_index([rec(3, 0, 0, 0), rec(3, 1, 1, 1)])


class TestRetrieve:
    def test_single_record_always_wins(self):
        idx = build_index([rec(7, 5.0, 5.0, 0.0)])
        out = retrieve(idx, Pose3(0.0, 0.0, heading_from_angle(math.pi)))
        assert out.record.id == 7
        assert out.fallback  # heading opposite, below any threshold

    def test_angle_filter_rejects_near_record(self):
        # A is closer but faces 90 degrees away; B passes the filter.
        idx = build_index(
            [rec(0, 0.1, 0.0, math.pi / 2), rec(1, 1.0, 0.0, 0.0)],
            RetrievalConfig(cos_threshold=0.96),
        )
        out = retrieve(idx, Pose3(0.0, 0.0, heading_from_angle(0.0)))
        assert out.record.id == 1
        assert not out.fallback
        assert out.xz_distance == pytest.approx(1.0)

    def test_tie_broken_by_lowest_id(self):
        # Two records in identical poses and two equidistant mirrored ones.
        idx = build_index(
            [rec(9, 0.5, 0.0, 0.0), rec(4, 0.5, 0.0, 0.0), rec(2, -0.5, 0.0, 0.0)],
            RetrievalConfig(cos_threshold=-0.5 + 1e-9),
        )
        out = retrieve(idx, Pose3(0.0, 0.0, heading_from_angle(0.0)))
        assert out.record.id == 2  # all three tie at distance 0.5

    def test_fallback_flagged_and_nearest_among_best_heading(self):
        idx = build_index(
            [rec(0, 3.0, 0.0, math.pi), rec(1, 1.0, 0.0, math.pi)],
            RetrievalConfig(cos_threshold=0.96),
        )
        out = retrieve(idx, Pose3(0.0, 0.0, heading_from_angle(0.0)))
        assert out.fallback
        assert out.record.id == 1

    def test_matches_loop_oracle_small(self):
        rng = make_rng(11)
        idx = build_index(random_records(rng, 200), RetrievalConfig())
        for q in random_poses(rng, 100):
            got = retrieve(idx, q)
            want_pos, want_fb = brute_force_retrieve_loop(idx, q)
            assert got.record.id == idx.records[want_pos].id
            assert got.fallback == want_fb

    def test_matches_vector_oracle_10k(self):
        rng = make_rng(12)
        idx = build_index(random_records(rng, 10_000), RetrievalConfig())
        queries = random_poses(rng, 1000)
        for q in queries:
            got = retrieve(idx, q)
            want_pos, want_fb = brute_force_retrieve(idx, q)
            assert got.record.id == idx.records[want_pos].id
            assert got.fallback == want_fb

    def test_oracles_agree_with_each_other(self):
        rng = make_rng(13)
        idx = build_index(random_records(rng, 300), RetrievalConfig())
        for q in random_poses(rng, 200):
            a = brute_force_retrieve(idx, q)
            b = brute_force_retrieve_loop(idx, q)
            assert a == b

    def test_deterministic(self):
        rng = make_rng(14)
        idx = build_index(random_records(rng, 500), RetrievalConfig())
        q = Pose3(3.3, 4.4, heading_from_angle(1.0))
        assert retrieve(idx, q).record.id == retrieve(idx, q).record.id

    def test_threshold_monotonicity(self):
        rng = make_rng(15)
        records = random_records(rng, 400)
        queries = random_poses(rng, 50)
        thresholds = [-0.999999, 0.0, 0.5, 0.96, 0.999]
        prev_counts = None
        for thr in thresholds:
            idx = build_index(records, RetrievalConfig(cos_threshold=thr))
            counts = []
            for q in queries:
                cos = idx.u * q.heading.u + idx.v * q.heading.v
                counts.append(int((cos >= thr).sum()))
            if prev_counts is not None:
                assert all(c2 <= c1 for c1, c2 in zip(prev_counts, counts))
            prev_counts = counts

    def test_lowest_threshold_gives_global_nearest(self):
        rng = make_rng(16)
        records = random_records(rng, 400)
        idx = build_index(records, RetrievalConfig(cos_threshold=-0.999999))
        for q in random_poses(rng, 50):
            got = retrieve(idx, q)
            d2 = (idx.x - q.x) ** 2 + (idx.z - q.z) ** 2
            order = np.lexsort((idx.ids, d2))
            assert got.record.id == int(idx.ids[order[0]])

    def test_batch_matches_elementwise(self):
        rng = make_rng(17)
        idx = build_index(random_records(rng, 300), RetrievalConfig())
        queries = random_poses(rng, 40)
        batch = retrieve_batch(idx, queries)
        single = [retrieve(idx, q) for q in queries]
        assert [r.record.id for r in batch] == [r.record.id for r in single]

    def test_config_range(self):
        with pytest.raises(ValueError):
            RetrievalConfig(cos_threshold=-1.0)
        with pytest.raises(ValueError):
            RetrievalConfig(cos_threshold=1.5)


@pytest.mark.perf
def test_index_is_faster_than_bruteforce():
    # Regression guard: indexed retrieval must hold a >= 10x margin over
    # the full scan at 1e5 records.
    rng = make_rng(18)
    idx = build_index(random_records(rng, 100_000), RetrievalConfig())
    queries = random_poses(rng, 2000)
    retrieve(idx, queries[0])
    start = time.perf_counter()
    for q in queries:
        retrieve(idx, q)
    indexed = (time.perf_counter() - start) / len(queries)
    brute_queries = queries[:200]
    start = time.perf_counter()
    for q in brute_queries:
        brute_force_retrieve(idx, q)
    brute = (time.perf_counter() - start) / len(brute_queries)
    assert brute >= 10.0 * indexed, f"indexed {indexed*1e6:.1f}us vs brute {brute*1e6:.1f}us"


COLMAP_HEADER = """\
# Image list with two lines of data per image:
#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME
"""


class TestParseSfm:
    def test_identity_pose(self, tmp_path):
        p = tmp_path / "images.txt"
        p.write_text(COLMAP_HEADER + "1 1 0 0 0 0 0 0 1 frame0001.png\n\n")
        records = parse_sfm_images(str(p))
        assert len(records) == 1
        r = records[0]
        assert r.id == 1 and r.image_ref == "frame0001.png"
        assert (r.pose.x, r.pose.z) == (0.0, 0.0)
        assert r.pose.theta == pytest.approx(0.0, abs=1e-12)

    def test_quarter_turn_quaternion(self, tmp_path):
        p = tmp_path / "images.txt"
        p.write_text("2 0.7071 0 0.7071 0 0 0 0 1 q.png\n\n")
        r = parse_sfm_images(str(p))[0]
        assert r.pose.theta == pytest.approx(math.pi / 2, abs=1e-4)

    def test_camera_center_inversion(self, tmp_path):
        # Camera-from-world translation t; center must be -R^T t.
        p = tmp_path / "images.txt"
        p.write_text("3 1 0 0 0 1.5 0.3 -2.5 1 c.png\n\n")
        r = parse_sfm_images(str(p))[0]
        assert r.pose.x == pytest.approx(-1.5, abs=1e-12)
        assert r.pose.z == pytest.approx(2.5, abs=1e-12)

    def test_odd_line_count(self, tmp_path):
        p = tmp_path / "images.txt"
        p.write_text("1 1 0 0 0 0 0 0 1 a.png\n\n2 1 0 0 0 0 0 0 1 b.png\n")
        with pytest.raises(SfmParseError, match="odd"):
            parse_sfm_images(str(p))

    def test_non_unit_quaternion(self, tmp_path):
        p = tmp_path / "images.txt"
        p.write_text("1 0.9 0 0.5 0 0 0 0 1 a.png\n\n")
        with pytest.raises(SfmParseError, match="norm"):
            parse_sfm_images(str(p))

    def test_malformed_line_number(self, tmp_path):
        p = tmp_path / "images.txt"
        p.write_text("# header\n1 1 0 0 0 0 0 0 1\n\n")
        with pytest.raises(SfmParseError, match=":2"):
            parse_sfm_images(str(p))


class TestNativeDatabase:
    def test_roundtrip(self, tmp_path, rng):
        records = random_records(rng, 50)
        path = tmp_path / "db.jsonl"
        save_database(records, str(path))
        loaded = load_database(str(path))
        assert len(loaded) == 50
        for a, b in zip(records, loaded):
            assert a.id == b.id and a.image_ref == b.image_ref
            assert a.pose.x == b.pose.x and a.pose.z == b.pose.z
            assert a.pose.theta == pytest.approx(b.pose.theta, abs=1e-12)

    def test_bad_line_reports_position(self, tmp_path):
        path = tmp_path / "db.jsonl"
        path.write_text('{"id": 0, "image": "a", "x": 0, "z": 0, "theta_rad": 0}\nnot json\n')
        with pytest.raises(ValueError, match=":2"):
            load_database(str(path))
