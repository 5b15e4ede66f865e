"""Synthetic cases, ground truth geometry, and the benchmark harness.

The geometry identities here are the contract the acceptance figures
rest on: an unrotated unit-scale extraction is literally the slice, a
quarter-turn extraction is an index permutation, and the footprint
mask of an unrotated case is exactly the patch window the screen
scores against.
"""

import json

import numpy as np
import pytest

from starscreen.image_io import load_pgm, save_pgm, std_dev
from starscreen.screening import ScreeningConfig, screen
from starscreen.synth_bench import (
    BenchReport,
    CaseGenerationError,
    DEFAULT_SCALE_RANGE,
    GroundTruth,
    MAX_CASE_RETRIES,
    OVERLAP_SUCCESS,
    extract_rotated_square,
    make_case,
    make_framed_box,
    make_textured_scene,
    overlap_preserved,
    run_benchmark,
    write_json_atomic,
    _case_seed,
    _geometric_offset,
)


# ── Extraction geometry ──────────────────────────────────────────────────

class TestExtraction:
    def test_geometric_offset(self):
        assert _geometric_offset(32) == 0.5
        assert _geometric_offset(31) == 0.0

    def test_identity_extraction_is_the_slice(self):
        # even side: continuous center (50.5, 40.5), so the 32px span
        # runs rows 25..56, cols 35..66; odd side centers on the pixel
        scene = make_textured_scene(100, 100, seed=1)
        even = extract_rotated_square(scene, 50, 40, 0.0, 1.0, 32)
        assert np.array_equal(even, scene[25:57, 35:67])
        odd = extract_rotated_square(scene, 50, 40, 0.0, 1.0, 31)
        assert np.array_equal(odd, scene[25:56, 35:66])

    def test_quarter_turn_is_a_permutation(self):
        scene = make_textured_scene(100, 100, seed=1)
        base = extract_rotated_square(scene, 50, 40, 0.0, 1.0, 32)
        turned = extract_rotated_square(scene, 50, 40, 90.0, 1.0, 32)
        assert np.array_equal(turned, np.rot90(base, 1))

    def test_double_scale_covers_double_window(self):
        # scale 2 with out_side 16 samples the same 32px span as scale 1
        # with out_side 32, at the exact centers of its 2x2 blocks, so
        # bilinear interpolation reduces to the block mean
        scene = make_textured_scene(100, 100, seed=2)
        down = extract_rotated_square(scene, 50, 50, 0.0, 2.0, 16)
        assert down.shape == (16, 16)
        span = scene[35:67, 35:67].astype(np.float64)
        means = span.reshape(16, 2, 16, 2).mean(axis=(1, 3))
        want = np.clip(np.floor(means + 0.5), 0, 255).astype(np.uint8)
        assert np.array_equal(down, want)


# ── Footprints and overlap ───────────────────────────────────────────────

class TestFootprint:
    def test_unrotated_footprint_is_the_window(self):
        tr = GroundTruth(cx=50, cy=40, angle=0.0, scale=1.0, side=32.0,
                         template_side=32)
        fp = tr.footprint_mask(100, 100)
        assert int(fp.sum()) == 1024
        want = np.zeros((100, 100), bool)
        want[25:57, 35:67] = True
        assert np.array_equal(fp, want)

    def test_rotated_footprint_keeps_area(self):
        tr = GroundTruth(cx=50, cy=40, angle=45.0, scale=1.0, side=32.0,
                         template_side=32)
        count = int(tr.footprint_mask(100, 100).sum())
        assert abs(count - 1024) <= 30  # rasterization slack only

    def test_overlap_extremes_and_half(self):
        tr = GroundTruth(cx=50, cy=40, angle=0.0, scale=1.0, side=32.0,
                         template_side=32)
        assert overlap_preserved(np.ones((100, 100), bool), tr) == 1.0
        assert overlap_preserved(np.zeros((100, 100), bool), tr) == 0.0
        half = np.zeros((100, 100), bool)
        half[:, :51] = True  # keeps columns <= cx: 16 of 32
        assert overlap_preserved(half, tr) == 0.5

    def test_overlap_accepts_screening_result(self):
        scene = make_textured_scene(96, 72, seed=3)
        tpl = scene[20:52, 30:62].copy()
        res = screen(scene, tpl)
        tr = GroundTruth(cx=45, cy=35, angle=0.0, scale=1.0, side=32.0,
                         template_side=32)
        via_result = overlap_preserved(res, tr)
        via_mask = overlap_preserved(res.region_mask, tr)
        assert via_result == via_mask

    def test_empty_footprint_raises(self):
        tr = GroundTruth(cx=50, cy=50, angle=0.0, scale=0.01, side=0.32,
                         template_side=32)
        with pytest.raises(ValueError):
            overlap_preserved(np.ones((100, 100), bool), tr)

    def test_truth_to_dict(self):
        tr = GroundTruth(cx=1, cy=2, angle=3.0, scale=4.0, side=128.0,
                         template_side=32)
        assert tr.to_dict() == {"cx": 1, "cy": 2, "angle": 3.0, "scale": 4.0,
                                "side": 128.0, "template_side": 32}


# ── Case generation ──────────────────────────────────────────────────────

class TestMakeCase:
    def test_deterministic(self):
        scene = make_textured_scene(200, 160, seed=4)
        t1, g1 = make_case(scene, seed=7)
        t2, g2 = make_case(scene, seed=7)
        assert np.array_equal(t1, t2)
        assert g1 == g2
        t3, g3 = make_case(scene, seed=8)
        assert g3 != g1

    def test_draws_respect_constraints(self):
        scene = make_textured_scene(240, 180, seed=5)
        for seed in range(12):
            tpl, truth = make_case(scene, seed=seed)
            assert tpl.shape == (32, 32)
            lo, hi = DEFAULT_SCALE_RANGE
            assert lo <= truth.scale <= hi
            assert 0.0 <= truth.angle < 360.0
            assert truth.side == truth.scale * 32
            assert std_dev(tpl) >= 20.0
            fp = truth.footprint_mask(240, 180)
            assert fp.sum() > 0
            # the margin rule keeps the footprint strictly interior
            assert not fp[0, :].any() and not fp[-1, :].any()
            assert not fp[:, 0].any() and not fp[:, -1].any()

    def test_scale_range_honored(self):
        scene = make_textured_scene(200, 160, seed=6)
        _, truth = make_case(scene, seed=1, scale_range=(1.0, 1.0))
        assert truth.scale == 1.0 and truth.side == 32.0

    def test_flat_image_exhausts_retries(self):
        flat = np.full((200, 160), 128, np.uint8)
        with pytest.raises(CaseGenerationError, match=str(MAX_CASE_RETRIES)):
            make_case(flat, seed=0)

    def test_bad_arguments(self):
        scene = make_textured_scene(64, 64, seed=7)
        with pytest.raises(ValueError):
            make_case(scene, seed=0, scale_range=(2.0, 1.0))
        with pytest.raises(ValueError):
            make_case(scene, seed=0, out_side=1)

    def test_case_seed_mixing(self):
        seeds = {_case_seed(0, i, c) for i in range(10) for c in range(4)}
        assert len(seeds) == 40  # no collisions across image/case indices
        assert _case_seed(3, 1, 2) == _case_seed(3, 1, 2)


# ── Scene and test-card generators ───────────────────────────────────────

class TestGenerators:
    def test_textured_scene_properties(self):
        for seed in range(4):
            sc = make_textured_scene(80, 60, seed=seed)
            assert sc.shape == (60, 80)
            assert sc.dtype == np.uint8
            assert sc.min() == 0 and sc.max() == 255  # contrast stretched
            assert std_dev(sc) > 20.0
        assert np.array_equal(make_textured_scene(80, 60, 9),
                              make_textured_scene(80, 60, 9))

    def test_framed_box_geometry(self):
        box = make_framed_box(side=129, frame_radius=40, thickness=9,
                              bg=32, fg=224)
        assert box.shape == (129, 129)
        assert set(np.unique(box)) == {32, 224}
        # ring between Chebyshev radii 31 and 40: (2*40+1)^2 - (2*31+1)^2
        assert int((box == 224).sum()) == 81 * 81 - 63 * 63
        assert box[64, 64] == 32  # hollow center
        assert box[64, 64 + 40] == 224
        assert box[64, 64 + 41] == 32

    def test_framed_box_validation(self):
        with pytest.raises(ValueError):
            make_framed_box(side=128)
        with pytest.raises(ValueError):
            make_framed_box(side=65, frame_radius=40, thickness=50)


# ── Benchmark harness ────────────────────────────────────────────────────

def _mini_dataset(n_images=2, w=128, h=96):
    return [(f"img{i}.pgm", make_textured_scene(w, h, seed=100 + i))
            for i in range(n_images)]


class TestRunBenchmark:
    def test_record_schema_and_aggregates(self):
        report = run_benchmark(_mini_dataset(), cases_per_image=2, seed=5)
        assert len(report.cases) + len(report.skipped) == 4
        for c in report.cases:
            assert set(c) == {
                "image", "case", "cx", "cy", "angle", "scale",
                "overlap_preserved", "success", "patch_pruning",
                "region_pruning", "candidates", "screen_time",
            }
            assert c["success"] == (c["overlap_preserved"] >= OVERLAP_SUCCESS)
        agg = report.aggregates()
        assert agg["num_cases"] == len(report.cases)
        assert 0.0 <= agg["success_ratio"] <= 1.0
        assert 0.0 <= agg["mean_patch_pruning"] <= 1.0
        assert "mean_match_time" not in agg

    def test_with_match_adds_fields(self):
        report = run_benchmark(_mini_dataset(1), cases_per_image=1, seed=3,
                               scale_range=(1.0, 1.0), with_match=True,
                               angle_step=90.0)
        assert len(report.cases) == 1
        c = report.cases[0]
        assert "match_time" in c and "match_error_px" in c and "match_score" in c
        agg = report.aggregates()
        assert "mean_match_error_px" in agg

    def test_deterministic_modulo_timing(self):
        a = run_benchmark(_mini_dataset(), cases_per_image=2, seed=9)
        b = run_benchmark(_mini_dataset(), cases_per_image=2, seed=9)
        assert a.to_json(include_timing=False) == b.to_json(include_timing=False)
        js = json.loads(a.to_json(include_timing=False))
        assert "screen_time" not in js["cases"][0]
        assert "mean_screen_time" not in js["aggregates"]
        with_timing = json.loads(a.to_json())
        assert "screen_time" in with_timing["cases"][0]

    def test_directory_dataset_and_skips(self, tmp_path):
        save_pgm(tmp_path / "a.pgm", make_textured_scene(128, 96, seed=50))
        (tmp_path / "broken.pgm").write_bytes(b"P5\n9 9\n255\nshort")
        report = run_benchmark(tmp_path, cases_per_image=1, seed=2)
        assert len(report.cases) == 1
        assert len(report.skipped) == 1
        assert report.skipped[0]["image"] == "broken.pgm"
        assert report.cases[0]["image"] == "a.pgm"

    def test_flat_images_recorded_as_skipped(self):
        flat = [("flat.pgm", np.full((96, 96), 30, np.uint8))]
        report = run_benchmark(flat, cases_per_image=2, seed=0)
        assert report.cases == []
        assert len(report.skipped) == 2
        assert all("case" in s for s in report.skipped)

    def test_missing_directory(self, tmp_path):
        with pytest.raises(NotADirectoryError):
            run_benchmark(tmp_path / "absent")

    def test_save_roundtrip(self, tmp_path):
        report = run_benchmark(_mini_dataset(1), cases_per_image=1, seed=1)
        out = tmp_path / "report.json"
        report.save(out)
        loaded = json.loads(out.read_text())
        assert loaded["seed"] == 1
        assert loaded["template_side"] == 32
        assert len(loaded["cases"]) == 1
        assert loaded["aggregates"]["num_cases"] == 1
        assert loaded["config"]["alpha"] == ScreeningConfig().alpha

    def test_write_json_atomic_overwrites(self, tmp_path):
        p = tmp_path / "x.json"
        write_json_atomic(p, {"v": 1})
        write_json_atomic(p, {"v": 2})
        assert json.loads(p.read_text()) == {"v": 2}
        assert [q for q in tmp_path.iterdir() if q.suffix == ".tmp"] == []

    def test_screened_case_overlap_end_to_end(self):
        """A real case run through the real screen keeps most of its
        footprint (the benchmark's success notion actually fires)."""
        scene = make_textured_scene(160, 120, seed=77)
        tpl, truth = make_case(scene, seed=5, scale_range=(1.0, 1.0))
        res = screen(scene, tpl)
        assert overlap_preserved(res, truth) >= OVERLAP_SUCCESS
