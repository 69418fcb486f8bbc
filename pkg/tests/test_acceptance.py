"""Acceptance suite.

Each test covers one acceptance criterion at its stated tolerance and
prints a single PASS line on success (run with ``pytest -s`` to see them
inline).  Slow criteria (the full oracle sweep and the 10k-frame
determinism check) dominate the runtime; the whole suite is still a
single ``pytest`` invocation.
"""

import json
import math
import time

import numpy as np
import pytest
from click.testing import CliRunner

from boxeval.camera import project_box_keypoints
from boxeval.cli import cli
from boxeval.dataio import (
    CATEGORIES,
    SyntheticSpec,
    generate_synthetic,
    parse_frames,
    save_frames,
    serialize_frames,
)
from boxeval.errors import BehindCamera, SchemaError, ValidationError
from boxeval.geom import (
    OrientedBox3,
    SymmetrySpec,
    iou_3d,
    iou_3d_symmetric,
    rotation_about_y,
)
from boxeval.metrics import average_precision
from boxeval.oracle import McConfig, mc_iou

from _util import random_box_pair, random_rotation
from test_camera import canonical_camera
from test_dataio import random_frame

I3 = np.eye(3)
ZERO = np.zeros(3)
ONE = np.ones(3)


def report(name, detail=""):
    print(f"\nACCEPTANCE {name}: PASS {detail}".rstrip())


# ---------------------------------------------------------------------------
# 1. oracle equivalence
# ---------------------------------------------------------------------------


def test_criterion_1_oracle_equivalence():
    rng = np.random.default_rng(20260808)
    pairs = [random_box_pair(rng) for _ in range(1000)]
    start = time.perf_counter()
    deviations = []
    for seed, (x, y) in enumerate(pairs):
        exact = iou_3d(x, y).iou
        estimate, _ = mc_iou(x, y, McConfig(1_000_000, seed))
        deviations.append(abs(exact - estimate))
    elapsed = time.perf_counter() - start
    deviations = np.array(deviations)
    assert deviations.max() < 0.01, f"worst pair deviates {deviations.max():.4f}"
    assert np.median(deviations) < 0.002
    assert elapsed < 300.0, f"oracle sweep took {elapsed:.0f}s (budget 300s)"
    report("1 oracle-equivalence",
           f"(1000 pairs, max dev {deviations.max():.5f}, "
           f"median {np.median(deviations):.6f}, {elapsed:.0f}s)")


# ---------------------------------------------------------------------------
# 2. analytic fixtures
# ---------------------------------------------------------------------------


def test_criterion_2_analytic_fixtures():
    identical = iou_3d(OrientedBox3(I3, ZERO, ONE), OrientedBox3(I3, ZERO, ONE)).iou
    assert abs(identical - 1.0) < 1e-9

    offset = iou_3d(OrientedBox3(I3, ZERO, ONE),
                    OrientedBox3(I3, [0.5, 0.0, 0.0], ONE)).iou
    assert abs(offset - 1 / 3) < 1e-9

    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    rot45 = iou_3d(OrientedBox3(I3, ZERO, ONE), OrientedBox3(rz, ZERO, ONE)).iou
    assert abs(rot45 - math.sqrt(2) / 2) < 1e-6

    disjoint = iou_3d(OrientedBox3(I3, ZERO, ONE),
                      OrientedBox3(I3, [10.0, 0.0, 0.0], ONE)).iou
    assert disjoint == 0.0
    report("2 analytic-fixtures",
           f"(1.0, 1/3, sqrt(2)/2 err {abs(rot45 - math.sqrt(2)/2):.2e}, 0.0)")


# ---------------------------------------------------------------------------
# 3. SE3 / scale invariance
# ---------------------------------------------------------------------------


def test_criterion_3_se3_scale_invariance():
    rng = np.random.default_rng(33)
    worst = 0.0
    for _ in range(100):
        x, y = random_box_pair(rng, max_offset_diagonals=0.6)
        base = iou_3d(x, y).iou
        for _ in range(10):
            q = random_rotation(rng)
            shift = rng.uniform(-10, 10, 3)
            factor = rng.uniform(0.1, 10.0)
            x2 = OrientedBox3(q @ x.rotation,
                              factor * (q @ x.translation) + shift, factor * x.scale)
            y2 = OrientedBox3(q @ y.rotation,
                              factor * (q @ y.translation) + shift, factor * y.scale)
            worst = max(worst, abs(iou_3d(x2, y2).iou - base))
    assert worst < 1e-6, f"max iou drift {worst:.2e}"
    report("3 se3-scale-invariance", f"(1000 transforms, max drift {worst:.2e})")


# ---------------------------------------------------------------------------
# 4. symmetry
# ---------------------------------------------------------------------------


def test_criterion_4_symmetry():
    square = np.array([0.5, 1.2, 0.5])
    gt = OrientedBox3(I3, ZERO, square)
    pred = OrientedBox3(rotation_about_y(math.pi / 2), ZERO, square)
    for n in (4, 8, 100):
        value = iou_3d_symmetric(gt, pred, SymmetrySpec("y", n)).iou
        assert abs(value - 1.0) < 1e-6

    rng = np.random.default_rng(44)
    for _ in range(1000):
        x, y = random_box_pair(rng)
        plain = iou_3d(x, y).iou
        sym = iou_3d_symmetric(x, y, SymmetrySpec("y", 8)).iou
        assert sym >= plain - 1e-12
    report("4 symmetry", "(quarter-turn recovered; sym >= plain on 1000 pairs)")


# ---------------------------------------------------------------------------
# 5. evaluation identity through the CLI
# ---------------------------------------------------------------------------


def test_criterion_5_evaluation_identity(tmp_path):
    spec = SyntheticSpec(categories={cat: 1 for cat in CATEGORIES},
                         num_frames=8, seed=55)
    gt, _ = generate_synthetic(spec)
    gt_path = tmp_path / "gt.jsonl"
    save_frames(gt, gt_path)
    out = tmp_path / "report.json"
    result = CliRunner().invoke(cli, [
        "evaluate", "--ground-truth", str(gt_path), "--predictions", str(gt_path),
        "--output", str(out), "--worker-count", "1", "--symmetry-samples", "16",
    ])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    assert data["config"]["iou_threshold"] == 0.5
    assert data["config"]["azimuth_threshold_deg"] == 15.0
    assert data["config"]["elevation_threshold_deg"] == 10.0
    assert set(data["categories"]) == set(CATEGORIES)
    for cat in CATEGORIES:
        rep = data["categories"][cat]
        assert rep["ap_iou"] == 1.0, cat
        assert rep["ap_azimuth"] == 1.0, cat
        assert rep["ap_elevation"] == 1.0, cat
        assert rep["mean_pixel_error"] == 0.0, cat
    report("5 evaluation-identity", "(9 categories, all AP 1.0, pixel error 0.0)")


# ---------------------------------------------------------------------------
# 6. constructed-noise AP
# ---------------------------------------------------------------------------


def test_criterion_6_constructed_noise_ap(tmp_path):
    counts = {"book": 5, "chair": 4, "laptop": 3}
    spec = SyntheticSpec(categories=counts, num_frames=6, seed=66,
                         corrupt_fraction=0.5, corrupt_rotation_deg=20.0,
                         clean_confidence=0.9, corrupt_confidence=0.5)
    gt, pred = generate_synthetic(spec)
    gt_path, pred_path = tmp_path / "gt.jsonl", tmp_path / "pred.jsonl"
    save_frames(gt, gt_path)
    save_frames(pred, pred_path)
    out = tmp_path / "report.json"
    result = CliRunner().invoke(cli, [
        "evaluate", "--ground-truth", str(gt_path), "--predictions", str(pred_path),
        "--output", str(out), "--worker-count", "1", "--symmetric-categories", "",
    ])
    assert result.exit_code == 0, result.output
    data = json.loads(out.read_text())
    for cat, n in counts.items():
        # clean detections rank first at confidence 0.9 and are the only
        # azimuth TPs (0 deg vs exactly 20 deg > 15 deg threshold), so
        # AP = clean fraction by construction
        n_corrupt = round(0.5 * n)
        expected = (n - n_corrupt) / n
        got = data["categories"][cat]["ap_azimuth"]
        assert abs(got - expected) < 1e-6, (cat, got, expected)
        assert data["categories"][cat]["ap_elevation"] == 1.0

    # hand-computed ranked-list example reproduced exactly
    ap = average_precision([(0.9, True), (0.8, False), (0.7, True)], 2)
    assert abs(ap - 5 / 6) < 1e-12
    report("6 constructed-noise-ap",
           f"(azimuth AP matches clean fraction; ranked example {ap:.6f})")


# ---------------------------------------------------------------------------
# 7. determinism and parallel safety
# ---------------------------------------------------------------------------


def test_criterion_7_parallel_determinism(tmp_path):
    spec = SyntheticSpec(categories={"book": 1, "chair": 1, "cup": 1},
                         num_frames=10_000, seed=77,
                         rotation_noise_deg=6.0, translation_noise_m=0.01)
    gt, pred = generate_synthetic(spec)
    gt_path, pred_path = tmp_path / "gt.jsonl", tmp_path / "pred.jsonl"
    save_frames(gt, gt_path)
    save_frames(pred, pred_path)
    del gt, pred

    runner = CliRunner()
    timings = {}
    outputs = {}
    for workers in (1, 8):
        out = tmp_path / f"report_w{workers}.json"
        start = time.perf_counter()
        result = runner.invoke(cli, [
            "evaluate", "--ground-truth", str(gt_path),
            "--predictions", str(pred_path), "--output", str(out),
            "--worker-count", str(workers), "--symmetry-samples", "16",
        ])
        timings[workers] = time.perf_counter() - start
        assert result.exit_code == 0, result.output
        outputs[workers] = out.read_bytes()
    assert outputs[1] == outputs[8], "reports differ between worker counts"
    speedup = timings[1] / timings[8]
    report("7 parallel-determinism",
           f"(10k frames byte-identical; w1 {timings[1]:.1f}s, "
           f"w8 {timings[8]:.1f}s, speedup {speedup:.2f}x informational)")


# ---------------------------------------------------------------------------
# 8. round-trip and corrupted-file rejection
# ---------------------------------------------------------------------------


def test_criterion_8_round_trip_and_rejection():
    rng = np.random.default_rng(88)
    frames = [random_frame(rng, f"rt/{i:06d}", n_objects=int(rng.integers(0, 4)))
              for i in range(1000)]
    blob = serialize_frames(frames)
    parsed = list(parse_frames(blob))
    assert parsed == frames, "records not bit-exact through serialize/parse"
    assert serialize_frames(parsed) == blob, "serialization is not a fixed point"

    base = json.loads(serialize_frames([random_frame(rng, "c/0", n_objects=1),
                                        random_frame(rng, "c/1", n_objects=1)])
                      .splitlines()[0])

    def corrupt(mutate):
        record = json.loads(json.dumps(base))
        mutate(record)
        return json.dumps(record).encode() + b"\n"

    def drop(key):
        def m(r):
            del r[key]
        return m

    cases = [
        ("missing frame_id", corrupt(drop("frame_id")), SchemaError, "frame_id"),
        ("empty frame_id", corrupt(lambda r: r.update(frame_id="")), SchemaError,
         "frame_id"),
        ("missing camera", corrupt(drop("camera")), SchemaError, "camera"),
        ("camera not object", corrupt(lambda r: r.update(camera=3)), SchemaError,
         "camera"),
        ("missing objects", corrupt(drop("objects")), SchemaError, "objects"),
        ("unknown top-level field", corrupt(lambda r: r.update(bogus=1)),
         SchemaError, "bogus"),
        ("invalid json", b'{"frame_id": "x",\n', SchemaError, None),
        ("not an object", b'[1, 2, 3]\n', SchemaError, None),
        ("rotation wrong shape",
         corrupt(lambda r: r["objects"][0]["box"].update(rotation=[[1, 0], [0, 1]])),
         SchemaError, "objects[0].box.rotation"),
        ("rotation not orthonormal",
         corrupt(lambda r: r["objects"][0]["box"]["rotation"][0].__setitem__(1, 0.1)),
         ValidationError, "objects[0].box.rotation"),
        ("rotation is a reflection",
         corrupt(lambda r: r["objects"][0]["box"].update(
             rotation=[[1, 0, 0], [0, 1, 0], [0, 0, -1]])),
         ValidationError, "objects[0].box.rotation"),
        ("zero scale",
         corrupt(lambda r: r["objects"][0]["box"].update(scale=[0, 1, 1])),
         ValidationError, "objects[0].box.scale"),
        ("negative scale",
         corrupt(lambda r: r["objects"][0]["box"].update(scale=[0.1, -0.2, 0.1])),
         ValidationError, "objects[0].box.scale"),
        ("nan translation",
         corrupt(lambda r: r["objects"][0]["box"].update(translation=[float("nan"), 0, 0])),
         ValidationError, "objects[0].box.translation"),
        ("view not inverse",
         corrupt(lambda r: r["camera"]["view"][0].__setitem__(3, 99.0)),
         ValidationError, "camera"),
        ("skewed intrinsics",
         corrupt(lambda r: r["camera"]["intrinsics"][0].__setitem__(1, 2.0)),
         ValidationError, "camera"),
        ("negative focal length",
         corrupt(lambda r: r["camera"]["intrinsics"][0].__setitem__(0, -500.0)),
         ValidationError, "camera"),
        ("keypoints_2d wrong shape",
         corrupt(lambda r: r["objects"][0].update(keypoints_2d=[[0.1, 0.2, 1.0]] * 8)),
         SchemaError, "objects[0].keypoints_2d"),
        ("keypoints_2d inconsistent",
         corrupt(lambda r: r["objects"][0]["keypoints_2d"][3].__setitem__(0, 0.987)),
         ValidationError, "objects[0].keypoints_2d"),
        ("unknown category",
         corrupt(lambda r: r["objects"][0].update(category="sofa")),
         ValidationError, "objects[0].category"),
        ("bad quaternion",
         corrupt(lambda r: (r["objects"][0]["box"].pop("rotation"),
                            r["objects"][0]["box"].update(quaternion=[1, 1, 0, 0]),
                            r["objects"][0].pop("keypoints_2d"),
                            r["objects"][0].pop("keypoints_3d"))),
         ValidationError, "objects[0].box.quaternion"),
        ("confidence out of range",
         corrupt(lambda r: r["objects"][0].update(confidence=1.5)),
         ValidationError, "objects[0].confidence"),
    ]
    assert len(cases) >= 20
    good_line = json.dumps(base).replace('"c/0"', '"c/good"').encode() + b"\n"
    for name, bad_line, expected_type, expected_field in cases:
        payload = good_line + bad_line  # corruption sits on line 2
        with pytest.raises((SchemaError, ValidationError)) as info:
            list(parse_frames(payload))
        err = info.value
        assert isinstance(err, expected_type), (name, type(err))
        assert err.line == 2, (name, err.line)
        if expected_field is not None:
            assert err.field == expected_field, (name, err.field)

    # duplicate frame id needs its own two-line payload
    dup = json.dumps(base).encode() + b"\n" + json.dumps(base).encode() + b"\n"
    with pytest.raises(ValidationError) as info:
        list(parse_frames(dup))
    assert info.value.line == 2 and info.value.field == "frame_id"
    report("8 round-trip-and-rejection",
           f"(1000 records bit-exact; {len(cases) + 1} corruptions located)")


# ---------------------------------------------------------------------------
# 9. projection checks
# ---------------------------------------------------------------------------


def test_criterion_9_projection_checks():
    from boxeval.camera import project_point

    cam = canonical_camera(fx=1000, fy=1000, w=1000, h=1000, cx=500, cy=500)
    u, v, depth = project_point(cam, [0.0, 0.0, 1.0])
    assert abs(u - 0.5) < 1e-9 and abs(v - 0.5) < 1e-9 and abs(depth - 1.0) < 1e-9

    u, v, depth = project_point(cam, [0.1, 0.0, 1.0])
    assert abs(u - 0.6) < 1e-9 and abs(v - 0.5) < 1e-9

    with pytest.raises(BehindCamera):
        project_point(cam, [0.0, 0.0, -1.0])

    # keypoint pipeline agrees with the direct projection at the same tolerance
    box = OrientedBox3(I3, [0.0, 0.0, 2.0], ONE)
    kp = project_box_keypoints(cam, box)
    assert np.max(np.abs(kp[0] - [0.5, 0.5, 2.0])) < 1e-9
    report("9 projection-checks", "(principal point, shifted point, behind-camera)")
