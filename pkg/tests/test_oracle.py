import numpy as np
import pytest

from boxeval._kernel import backend
from boxeval.errors import ValidationError
from boxeval.geom import OrientedBox3, box_vertices, iou_3d
from boxeval.oracle import McConfig, brute_hull_volume, mc_iou, point_in_box

from _util import random_box, random_box_pair

I3 = np.eye(3)
ZERO = np.zeros(3)
ONE = np.ones(3)


def test_mc_identical_boxes():
    box = OrientedBox3(I3, ZERO, ONE)
    estimate, stderr = mc_iou(box, box, McConfig(100_000, 0))
    assert estimate == 1.0
    assert stderr == 0.0


def test_mc_offset_third():
    a = OrientedBox3(I3, ZERO, ONE)
    b = OrientedBox3(I3, np.array([0.5, 0.0, 0.0]), ONE)
    estimate, stderr = mc_iou(a, b, McConfig(1_000_000, 7))
    assert abs(estimate - 1 / 3) < max(3 * stderr, 0.002)


def test_mc_rot45_within_three_stderr():
    c, s = np.cos(np.pi / 4), np.sin(np.pi / 4)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    a = OrientedBox3(I3, ZERO, ONE)
    b = OrientedBox3(rz, ZERO, ONE)
    estimate, stderr = mc_iou(a, b, McConfig(1_000_000, 11))
    assert abs(estimate - np.sqrt(2) / 2) < 3 * stderr + 1e-9


def test_mc_deterministic_for_fixed_seed():
    rng = np.random.default_rng(5)
    a, b = random_box_pair(rng, max_offset_diagonals=0.3)
    r1 = mc_iou(a, b, McConfig(200_000, 123))
    r2 = mc_iou(a, b, McConfig(200_000, 123))
    assert r1 == r2
    r3 = mc_iou(a, b, McConfig(200_000, 124))
    assert r1 != r3


def test_mc_convergence_rate():
    # deviation from the exact value should shrink roughly like n^(-1/2)
    rng = np.random.default_rng(29)
    counts = [4_000, 32_000, 256_000, 2_048_000]
    mean_devs = []
    pairs = [random_box_pair(rng, max_offset_diagonals=0.3) for _ in range(4)]
    exact = [iou_3d(a, b).iou for a, b in pairs]
    for n in counts:
        devs = [
            abs(mc_iou(a, b, McConfig(n, seed))[0] - e)
            for seed, ((a, b), e) in enumerate(zip(pairs, exact))
        ]
        mean_devs.append(np.mean(devs) + 1e-9)
    slope = np.polyfit(np.log(counts), np.log(mean_devs), 1)[0]
    assert slope < -0.25
    assert mean_devs[-1] < mean_devs[0]


def test_mc_config_validation():
    with pytest.raises(ValidationError):
        McConfig(0, 1)


def test_point_in_box_basics():
    box = OrientedBox3(I3, ZERO, ONE)
    assert point_in_box(box, ZERO)
    assert point_in_box(box, [0.5, 0.5, 0.5])  # corner, boundary inclusive
    assert not point_in_box(box, [2 * np.sqrt(3), 0.0, 0.0])


def test_point_in_box_agrees_with_kernel_containment():
    rng = np.random.default_rng(31)
    kernel = backend()
    for _ in range(20):
        box = random_box(rng)
        pts = box.translation + rng.uniform(-1.5, 1.5, (500, 3)) * np.linalg.norm(box.scale)
        mask = kernel.points_in_box(box.rotation, box.translation, box.scale, pts, 1e-9)
        for point, expected in zip(pts, np.asarray(mask, dtype=bool)):
            assert point_in_box(box, point) == expected


def test_brute_hull_unit_cube_and_tetra():
    cube = box_vertices(OrientedBox3(I3, ZERO, ONE))
    assert brute_hull_volume(cube) == pytest.approx(1.0, abs=1e-12)
    tetra = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    assert brute_hull_volume(tetra) == pytest.approx(1 / 6, abs=1e-12)
    assert brute_hull_volume(np.zeros((10, 3))) == 0.0
    flat = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    assert brute_hull_volume(flat) == 0.0
