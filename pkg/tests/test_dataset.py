import shutil
import subprocess

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from eigentraj.dataset import (
    BLOCKED, INTERLEAVED, OBSERVATION, PREDICTION, AnnotationRecord, SplitSpec, extract_tracklets, flatten,
    infer_frame_step, leave_one_out, load_annotation_file, load_scenes, parse_annotations, perturb_observation,
    scene_files, to_matrix, unflatten,
)
from eigentraj.errors import ConfigError, DataError, ParseError, ShapeError
from helpers import random_tracklet, straight_tracklet


def track_records(n, ped=1, step=10, start=0):
    return [AnnotationRecord(start + i * step, ped, 0.4 * i, 0.1 * i) for i in range(n)]


# -- parsing -----------------------------------------------------------------

def test_parse_two_records():
    recs = parse_annotations("0 1 0.0 0.0\n10 1 0.4 0.0")
    assert [(r.frame_id, r.pedestrian_id, r.x, r.y) for r in recs] == [(0, 1, 0.0, 0.0), (10, 1, 0.4, 0.0)]


def test_parse_error_reports_line():
    with pytest.raises(ParseError) as exc:
        parse_annotations("a b c")
    assert exc.value.line == 1
    assert str(exc.value).startswith("line 1")


def test_parse_non_numeric_four_fields():
    with pytest.raises(ParseError) as exc:
        parse_annotations("0 1 0 0\n# comment\n10 1 x 0")
    assert exc.value.line == 3


def test_parse_float_formatted_ids_and_tabs():
    recs = parse_annotations("780.0\t1.0\t8.46\t3.59\n790.0\t1.0\t9.57\t3.79\n")
    assert [r.frame_id for r in recs] == [780, 790]
    assert recs[1].x == 9.57


def test_parse_rejects_fractional_ids():
    with pytest.raises(ParseError):
        parse_annotations("0.5 1 0 0")


def test_parse_skips_blank_and_comment_lines():
    assert len(parse_annotations("\n# header\n0 1 0 0\n\n")) == 1


def test_parse_sorted_by_pedestrian_then_frame():
    recs = parse_annotations("0 2 0 0\n0 1 0 0\n10 2 0 0\n10 1 0 0")
    assert [(r.pedestrian_id, r.frame_id) for r in recs] == [(1, 0), (1, 10), (2, 0), (2, 10)]


def test_parse_non_increasing_frames_is_data_error():
    with pytest.raises(DataError):
        parse_annotations("10 1 0 0\n0 1 0 0")


def test_parse_unit_scale_and_field_order():
    recs = parse_annotations("1 0 5 2", unit_scale=0.5, field_order=("ped", "frame", "x", "y"))
    assert (recs[0].frame_id, recs[0].pedestrian_id, recs[0].x, recs[0].y) == (0, 1, 2.5, 1.0)
    with pytest.raises(ConfigError):
        parse_annotations("0 1 0 0", field_order=("frame", "frame", "x", "y"))
    with pytest.raises(ConfigError):
        parse_annotations("0 1 0 0", unit_scale=0.0)


def test_record_count_matches_line_count(corpus_root):
    path = corpus_root / "hotel" / "hotel.txt"
    if shutil.which("wc"):
        lines = int(subprocess.run(["wc", "-l", str(path)], capture_output=True, text=True).stdout.split()[0])
    else:
        lines = path.read_bytes().count(b"\n")
    assert len(load_annotation_file(path)) == lines


def test_missing_file_is_config_error(tmp_path):
    with pytest.raises(ConfigError):
        load_annotation_file(tmp_path / "nope.txt")


# -- windowing -----------------------------------------------------------------

@pytest.mark.parametrize("n, expected", [(20, 1), (22, 3), (19, 0)])
def test_window_counts(n, expected):
    assert len(extract_tracklets(track_records(n))) == expected


def test_window_contents_and_keys():
    recs = track_records(22, step=10, start=100)
    ts = extract_tracklets(recs, scene="eth", source="a.txt")
    assert [t.start_frame for t in ts] == [100, 110, 120]
    assert ts[1].obs.shape == (8, 2) and ts[1].fut.shape == (12, 2)
    np.testing.assert_array_equal(ts[1].obs[0], [0.4, 0.1])
    assert ts[0].key == ("a.txt", 1, 100)
    assert ts[0].scene == "eth"


def test_stride_counts_samples():
    assert len(extract_tracklets(track_records(30), stride=5)) == 3  # starts 0, 5, 10


def test_gapped_windows_skipped():
    recs = track_records(25)
    recs = recs[:10] + recs[11:]  # drop frame 100
    stats = {}
    ts = extract_tracklets(recs, stats=stats)
    assert ts == []
    assert stats["skipped_gapped"] == 5 and stats["tracklets"] == 0


def test_frame_step_inference():
    recs = track_records(22, ped=1, step=6) + track_records(20, ped=2, step=6)
    assert infer_frame_step(recs) == 6
    assert len(extract_tracklets(recs)) == 4
    assert extract_tracklets(recs, frame_step=10) == []


def test_short_pedestrians_counted():
    stats = {}
    extract_tracklets(track_records(5, ped=1) + track_records(20, ped=2), stats=stats)
    assert stats == dict(pedestrians=2, tracklets=1, skipped_short=1, skipped_gapped=0, frame_step=10)


def test_bad_window_parameters():
    with pytest.raises(ConfigError):
        extract_tracklets(track_records(20), t_obs=1)


def test_tracklet_arrays_read_only():
    t = straight_tracklet()
    with pytest.raises(ValueError):
        t.obs[0, 0] = 1.0


# -- flattening and matrices ---------------------------------------------------

def test_interleaved_matrix_column():
    t = straight_tracklet(velocity=(1.0, 0.0))
    m = to_matrix([t], OBSERVATION)
    assert m.data.shape == (16, 1)
    expected = np.zeros(16)
    expected[0::2] = np.arange(8)
    np.testing.assert_array_equal(m.data[:, 0], expected)
    assert m.frames == 8


def test_blocked_layout():
    pts = np.array([[1.0, 2.0], [3.0, 4.0]])
    np.testing.assert_array_equal(flatten(pts, BLOCKED), [1, 3, 2, 4])
    np.testing.assert_array_equal(flatten(pts, INTERLEAVED), [1, 2, 3, 4])


def test_identical_tracklets_rank_one():
    t = straight_tracklet(velocity=(0.3, 0.2), start=(1.0, -2.0))
    m = to_matrix([t] * 5, PREDICTION)
    assert m.data.shape == (24, 5)
    assert np.linalg.matrix_rank(m.data) == 1


def test_matrix_columns_round_trip(rng):
    ts = [random_tracklet(rng, ped=i) for i in range(3)]
    for layout in (INTERLEAVED, BLOCKED):
        m = to_matrix(ts, OBSERVATION, layout)
        for j, t in enumerate(ts):
            np.testing.assert_array_equal(unflatten(m.data[:, j], layout), t.obs)


def test_flatten_shape_errors():
    with pytest.raises(ShapeError):
        flatten(np.zeros((4, 3)))
    with pytest.raises(ShapeError):
        unflatten(np.zeros(5))
    with pytest.raises(ConfigError):
        to_matrix([], OBSERVATION)


@settings(max_examples=200, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 4), st.integers(1, 20), st.just(2)),
              elements=st.floats(-1e6, 1e6)), st.sampled_from([INTERLEAVED, BLOCKED]))
def test_flatten_unflatten_bijective(points, layout):
    np.testing.assert_array_equal(unflatten(flatten(points, layout), layout), points)
    vec = flatten(points, layout)
    np.testing.assert_array_equal(flatten(unflatten(vec, layout), layout), vec)


# -- splits --------------------------------------------------------------------

def test_leave_one_out_simple():
    t1, t2 = straight_tracklet(ped=1), straight_tracklet(ped=2)
    train, test = leave_one_out({"A": [t1], "B": [t2]}, SplitSpec("A"))
    assert train == [t2] and test == [t1]


def test_leave_one_out_unknown_scene():
    with pytest.raises(ConfigError):
        leave_one_out({"A": [], "B": []}, SplitSpec("C"))


def test_split_spec_rejects_overlap():
    with pytest.raises(ConfigError):
        SplitSpec("A", frozenset({"A", "B"}))


def test_leave_one_out_counts(corpus):
    train, test = leave_one_out(corpus, SplitSpec("eth"))
    assert len(train) == len(corpus["hotel"]) + len(corpus["univ"])
    assert len(test) == len(corpus["eth"])


def test_explicit_training_scenes(corpus):
    train, _ = leave_one_out(corpus, SplitSpec("eth", frozenset({"hotel"})))
    assert len(train) == len(corpus["hotel"])


# -- perturbation --------------------------------------------------------------

def test_perturb_zero_sigma_identity(rng):
    t = random_tracklet(rng)
    assert perturb_observation(t, 0.0, 3) is t


def test_perturb_deterministic_and_future_untouched(rng):
    t = random_tracklet(rng)
    a, b = perturb_observation(t, 0.05, 9), perturb_observation(t, 0.05, 9)
    np.testing.assert_array_equal(a.obs, b.obs)
    np.testing.assert_array_equal(a.fut, t.fut)
    assert not np.array_equal(a.obs, t.obs)


def test_perturb_noise_statistics():
    t = straight_tracklet()
    noise = np.concatenate([
        (perturb_observation(t, 0.1, seed).obs - t.obs).ravel() for seed in range(6250)
    ])
    assert noise.size == 100_000
    assert abs(noise.std(ddof=1) - 0.1) < 0.001


def test_perturb_negative_sigma():
    with pytest.raises(ConfigError):
        perturb_observation(straight_tracklet(), -0.1, 0)


# -- corpus loading ------------------------------------------------------------

def test_scene_file_resolution(tmp_path):
    (tmp_path / "a").mkdir()
    (tmp_path / "a" / "x.txt").write_text("")
    (tmp_path / "b.txt").write_text("")
    files = scene_files(tmp_path, ["a", "b"])
    assert [p.name for p in files["a"]] == ["x.txt"] and [p.name for p in files["b"]] == ["b.txt"]
    with pytest.raises(ConfigError):
        scene_files(tmp_path, ["c"])


def test_load_scenes(corpus_root):
    data = load_scenes(corpus_root, ["eth"])
    assert set(data) == {"eth"} and len(data["eth"]) > 0
    assert all(t.scene == "eth" and t.source == "eth.txt" for t in data["eth"])
