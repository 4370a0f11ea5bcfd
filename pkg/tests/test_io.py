"""Tests for the text file formats (MOT records, embeddings, caches, configs)."""

import numpy as np
import pytest

from homtrack import fhe, fileio, geometry, simulator
from homtrack.errors import (
    DimensionMismatch,
    NonInvertibleEntry,
    NonPositiveBox,
    ParseError,
    UnknownKey,
)
from homtrack.geometry import BBox, CorrespondenceSet


class TestMotFormat:
    def test_round_trip(self, tmp_path):
        recs = {
            1: [fileio.MotRecord(1, 4, BBox(10.5, 20.25, 30.0, 40.125), 0.9, 2, 0.8)],
            2: [
                fileio.MotRecord(2, 4, BBox(11, 21, 30, 40), 1.0, 2, 1.0),
                fileio.MotRecord(2, 5, BBox(100, 200, 10, 20), 0.5, 1, 1.0),
            ],
        }
        path = tmp_path / "out.txt"
        fileio.write_mot(recs, path)
        back = fileio.read_mot(path)
        assert back == recs

    def test_minimal_six_fields(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("1,7,10,20,30,40\n")
        recs = fileio.read_mot(path)
        rec = recs[1][0]
        assert rec.track_id == 7 and rec.conf == 1.0 and rec.class_id == -1

    def test_extra_fields_preserved(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("1,7,10,20,30,40,0.9,3,1,-1,-1\n")
        rec = fileio.read_mot(path)[1][0]
        assert rec.extra == ("-1", "-1")
        assert rec.format().endswith(",-1,-1")

    def test_blank_lines_skipped(self, tmp_path):
        path = tmp_path / "m.txt"
        path.write_text("\n1,1,0,0,5,5\n\n")
        assert len(fileio.read_mot(path)[1]) == 1

    @pytest.mark.parametrize(
        "line,exc",
        [
            ("1,1,0,0", ParseError),
            ("x,1,0,0,5,5", ParseError),
            ("1,1,0,0,abc,5", ParseError),
            ("1,1,0,0,inf,5", ParseError),
            ("0,1,0,0,5,5", ParseError),
            ("1,1,0,0,0,5", NonPositiveBox),
            ("1,1,0,0,5,-2", NonPositiveBox),
        ],
    )
    def test_rejects_malformed(self, tmp_path, line, exc):
        path = tmp_path / "bad.txt"
        path.write_text(line + "\n")
        with pytest.raises(exc):
            fileio.read_mot(path)

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("1,1,0,0,5,5\n1,1,0,0\n")
        with pytest.raises(ParseError) as err:
            fileio.read_mot(path)
        assert err.value.line == 2

    def test_mot_to_eval_shape(self, tmp_path):
        recs = {3: [fileio.MotRecord(3, 9, BBox(0, 0, 5, 5), 1.0, 4)]}
        view = fileio.mot_to_eval(recs)
        assert view == {3: [(9, BBox(0, 0, 5, 5), 4)]}

    def test_records_to_detections_with_embeddings(self):
        recs = {1: [fileio.MotRecord(1, -1, BBox(0, 0, 5, 5), 0.7, 2)]}
        emb = {(1, 0): np.ones(4) / 2.0}
        dets = fileio.records_to_detections(recs, emb)
        d = dets[1][0]
        assert d.confidence == 0.7 and d.class_id == 2
        assert np.array_equal(d.embedding, emb[(1, 0)])


class TestEmbeddings:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        emb = {}
        for frame in (1, 2):
            for idx in (0, 1):
                v = rng.standard_normal(8)
                emb[(frame, idx)] = v / np.linalg.norm(v)
        path = tmp_path / "emb.txt"
        fileio.write_embeddings(emb, path)
        back = fileio.read_embeddings(path)
        assert set(back) == set(emb)
        for key in emb:
            assert np.allclose(back[key], emb[key], atol=1e-8)

    def test_dimension_mismatch(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1,0,1,0,0\n1,1,1,0\n")
        with pytest.raises(DimensionMismatch):
            fileio.read_embeddings(path)

    def test_zero_vector_rejected(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1,0,0,0,0\n")
        with pytest.raises(ParseError):
            fileio.read_embeddings(path)

    def test_renormalizes_with_warning(self, tmp_path):
        path = tmp_path / "emb.txt"
        path.write_text("1,0,3,0,4\n")
        with pytest.warns(UserWarning):
            back = fileio.read_embeddings(path)
        assert np.allclose(back[(1, 0)], [0.6, 0.0, 0.8])


class TestHomographyCache:
    def test_round_trip_through_graph(self, tmp_path):
        rng = np.random.default_rng(1)
        graph = fhe.HomographyGraph()
        H12 = np.eye(3) + 0.01 * rng.standard_normal((3, 3))
        H23 = np.eye(3) + 0.01 * rng.standard_normal((3, 3))
        graph.add_direct(1, 2, H12)
        graph.add_direct(2, 3, H23)
        graph.freeze()
        path = tmp_path / "cache.txt"
        fileio.write_homography_cache(graph, path)
        back = fileio.read_homography_cache(path)
        for (a, b) in ((1, 2), (2, 3), (1, 3)):
            assert np.allclose(
                back.homography_between(a, b),
                graph.homography_between(a, b),
                atol=1e-7,
            )

    def test_extra_pairs_written(self, tmp_path):
        graph = fhe.HomographyGraph()
        graph.add_direct(1, 2, np.eye(3))
        graph.add_direct(2, 3, np.eye(3))
        graph.freeze()
        path = tmp_path / "cache.txt"
        fileio.write_homography_cache(graph, path, extra_pairs=[(1, 3)])
        assert sum(1 for _ in open(path)) == 3

    def test_identity_cache(self, tmp_path):
        path = tmp_path / "eye.txt"
        fileio.write_identity_cache(5, path)
        graph = fileio.read_homography_cache(path)
        assert np.allclose(graph.homography_between(5, 1), np.eye(3), atol=1e-12)

    def test_comments_and_self_pairs_skipped(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("# header\n2 2 1 0 0 0 1 0 0 0 1\n1 2 1 0 0 0 1 0 0 0 1\n")
        graph = fileio.read_homography_cache(path)
        assert (2, 2) not in graph.direct and (1, 2) in graph.direct

    def test_singular_entry_rejected(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("1 2 1 0 0 2 0 0 0 0 1\n")
        with pytest.raises(NonInvertibleEntry):
            fileio.read_homography_cache(path)

    def test_wrong_field_count(self, tmp_path):
        path = tmp_path / "cache.txt"
        path.write_text("1 2 1 0 0\n")
        with pytest.raises(ParseError):
            fileio.read_homography_cache(path)


class TestConfig:
    def test_parses_all_sections(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text(
            "iou_weight = 0.7\n"
            "confirm_hits = 3\n"
            "use_vcil = true\n"
            "scenario = turn_left   # trailing comment\n"
            "frames = 25\n"
            "h = 5\n"
            "mode = lerp\n"
        )
        tracker, scenario, extras = fileio.read_config(path)
        assert tracker.iou_weight == 0.7 and tracker.confirm_hits == 3
        assert tracker.use_vcil is True
        assert scenario == {"scenario": "turn_left", "frames": 25}
        assert extras == {"h": 5, "mode": "lerp"}

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("warp_factor = 9\n")
        with pytest.raises(UnknownKey):
            fileio.read_config(path)

    def test_bad_value_names_key(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("iou_weight = banana\n")
        with pytest.raises(TypeError, match="iou_weight"):
            fileio.read_config(path)

    def test_out_of_range_value_rejected(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("iou_weight = 2.0\n")
        with pytest.raises(TypeError):
            fileio.read_config(path)

    def test_missing_equals(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("just_some_words\n")
        with pytest.raises(ParseError):
            fileio.read_config(path)

    def test_scenario_config_from_dict(self):
        cfg = fileio.scenario_config_from_dict(
            {"scenario": "ascend", "frame_width": 640, "frame_height": 480, "seed": 9}
        )
        assert cfg.scenario == "ascend"
        assert cfg.frame_size == (640, 480)
        assert cfg.seed == 9


class TestBundleDir:
    def test_write_bundle_layout(self, tmp_path, hover_bundle):
        out = tmp_path / "seq"
        fileio.write_bundle(hover_bundle, out, corr_window=3)
        for name in ("gt.txt", "det.txt", "emb.txt", "homog_gt.txt", "scenario.cfg"):
            assert (out / name).exists(), name
        # adjacent and within-window pair files present, distant pairs absent
        assert (out / "corr" / "corr_000001_000002.txt").exists()
        assert (out / "corr" / "corr_000001_000004.txt").exists()
        assert not (out / "corr" / "corr_000001_000005.txt").exists()

    def test_bundle_gt_round_trips(self, tmp_path, hover_bundle):
        out = tmp_path / "seq"
        fileio.write_bundle(hover_bundle, out, corr_window=1)
        gt = fileio.read_mot(out / "gt.txt")
        n_written = sum(len(v) for v in gt.values())
        n_src = sum(len(v) for v in hover_bundle.gt.values())
        assert n_written == n_src

    def test_scenario_cfg_reconstructs_config(self, tmp_path, hover_bundle):
        out = tmp_path / "seq"
        fileio.write_bundle(hover_bundle, out, corr_window=1)
        _, overrides, _ = fileio.read_config(out / "scenario.cfg")
        cfg = fileio.scenario_config_from_dict(overrides)
        assert cfg == hover_bundle.config

    def test_correspondence_round_trip(self, tmp_path, hover_bundle):
        corr = hover_bundle.correspondences(2, 5)
        path = tmp_path / "c.txt"
        fileio.write_correspondences(corr, path)
        back = fileio.read_correspondences(path, 2, 5)
        assert np.allclose(back.src, corr.src, atol=1e-7)
        assert np.allclose(back.dst, corr.dst, atol=1e-7)

    def test_correspondence_dir_swapped_fallback(self, tmp_path):
        src = np.array([[0.0, 0.0], [10.0, 0.0], [0.0, 10.0], [10.0, 10.0]])
        dst = src + 5.0
        fileio.write_correspondences(
            CorrespondenceSet(src, dst, 1, 2), tmp_path / "corr_000001_000002.txt"
        )
        provider = fileio.CorrespondenceDir(tmp_path)
        forward = provider(1, 2)
        swapped = provider(2, 1)
        assert np.allclose(forward.src, swapped.dst)
        assert np.allclose(forward.dst, swapped.src)
        with pytest.raises(FileNotFoundError):
            provider(1, 3)
