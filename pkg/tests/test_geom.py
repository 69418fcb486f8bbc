import math

import numpy as np
import pytest

from boxeval.errors import ValidationError
from boxeval.geom import (
    ConvexPolygon3,
    OrientedBox3,
    SymmetrySpec,
    box_vertices,
    canonicalize_pair,
    clip_polygon_to_aabb,
    convex_hull_volume,
    intersection_points,
    iou_3d,
    iou_3d_symmetric,
    rotation_about_y,
)
from boxeval.oracle import McConfig, brute_hull_volume, mc_iou

from _util import random_box_pair, random_rotation

I3 = np.eye(3)
ZERO = np.zeros(3)
ONE = np.ones(3)


def unit_box(t=ZERO, s=ONE, r=I3):
    return OrientedBox3(r, t, s)


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def test_rejects_non_orthonormal_rotation():
    bad = np.eye(3)
    bad[0, 1] = 1e-3
    with pytest.raises(ValidationError):
        OrientedBox3(bad, ZERO, ONE)


def test_rejects_reflection():
    with pytest.raises(ValidationError):
        OrientedBox3(np.diag([1.0, 1.0, -1.0]), ZERO, ONE)


def test_rejects_non_positive_scale():
    with pytest.raises(ValidationError):
        OrientedBox3(I3, ZERO, np.array([1.0, 0.0, 1.0]))


# ---------------------------------------------------------------------------
# box_vertices
# ---------------------------------------------------------------------------


def test_vertices_identity_unit_cube():
    verts = box_vertices(unit_box())
    expected = 0.5 * np.array(
        [[-1, -1, -1], [-1, -1, 1], [-1, 1, -1], [-1, 1, 1],
         [1, -1, -1], [1, -1, 1], [1, 1, -1], [1, 1, 1]], dtype=float
    )
    np.testing.assert_allclose(verts, expected)


def test_vertices_translation_only():
    t = np.array([1.0, 2.0, 3.0])
    np.testing.assert_allclose(box_vertices(unit_box(t=t)),
                               box_vertices(unit_box()) + t)


def test_vertices_rotation_and_scale():
    # multiply R * diag(s) * u out independently for all 8 corners
    r = rotation_about_y(math.pi / 2)
    s = np.array([2.0, 1.0, 1.0])
    box = unit_box(s=s, r=r)
    verts = box_vertices(box)
    signs = 0.5 * np.array(
        [[-1, -1, -1], [-1, -1, 1], [-1, 1, -1], [-1, 1, 1],
         [1, -1, -1], [1, -1, 1], [1, 1, -1], [1, 1, 1]], dtype=float
    )
    expected = np.array([r @ (s * u) for u in signs])
    np.testing.assert_allclose(verts, expected, atol=1e-12)
    # x and z extents swap: x-extent 1, z-extent 2
    assert verts[:, 0].max() - verts[:, 0].min() == pytest.approx(1.0)
    assert verts[:, 2].max() - verts[:, 2].min() == pytest.approx(2.0)


# ---------------------------------------------------------------------------
# canonicalize_pair
# ---------------------------------------------------------------------------


def test_canonicalize_identity():
    half, y_local = canonicalize_pair(unit_box(), unit_box())
    np.testing.assert_allclose(half, [0.5, 0.5, 0.5])
    np.testing.assert_allclose(y_local.rotation, I3)
    np.testing.assert_allclose(y_local.translation, ZERO)


def test_canonicalize_translation_inverse():
    x = unit_box(t=np.array([5.0, 0.0, 0.0]))
    _, y_local = canonicalize_pair(x, unit_box())
    np.testing.assert_allclose(y_local.translation, [-5.0, 0.0, 0.0])


def test_canonicalize_rotation_composition():
    x = unit_box(r=rotation_about_y(math.pi / 2))
    y = unit_box()
    _, y_local = canonicalize_pair(x, y)
    np.testing.assert_allclose(y_local.rotation, x.rotation.T @ y.rotation, atol=1e-15)
    np.testing.assert_allclose(y_local.rotation, rotation_about_y(-math.pi / 2), atol=1e-15)


def test_canonicalize_keeps_scale_metric():
    rng = np.random.default_rng(5)
    x, y = random_box_pair(rng)
    _, y_local = canonicalize_pair(x, y)
    np.testing.assert_array_equal(y_local.scale, y.scale)


# ---------------------------------------------------------------------------
# clipping
# ---------------------------------------------------------------------------


def square_in_z0(center=(0.0, 0.0), side=1.0):
    cx, cy = center
    h = side / 2.0
    return ConvexPolygon3(np.array(
        [[cx - h, cy - h, 0.0], [cx + h, cy - h, 0.0],
         [cx + h, cy + h, 0.0], [cx - h, cy + h, 0.0]]
    ))


def polygon_area(poly):
    v = poly.vertices
    total = np.zeros(3)
    for i in range(1, len(v) - 1):
        total += np.cross(v[i] - v[0], v[i + 1] - v[0])
    return 0.5 * np.linalg.norm(total)


def test_clip_fully_inside_unchanged():
    poly = square_in_z0()
    out = clip_polygon_to_aabb(poly, [1.0, 1.0, 1.0])
    assert polygon_area(out) == pytest.approx(1.0, abs=1e-12)
    # same vertex set
    assert len(out) == 4


def test_clip_fully_outside_empty():
    poly = square_in_z0(center=(10.0, 0.0))
    out = clip_polygon_to_aabb(poly, [0.5, 0.5, 0.5])
    assert out.is_empty


def test_clip_half_overlap():
    # unit square centered at (1/2, 0) keeps the half with x in [0, 1/2]:
    # a 1/2 x 1 rectangle of area 1/2
    poly = square_in_z0(center=(0.5, 0.0))
    out = clip_polygon_to_aabb(poly, [0.5, 0.5, 0.5])
    assert not out.is_empty
    assert out.vertices[:, 0].min() == pytest.approx(0.0, abs=1e-9)
    assert out.vertices[:, 0].max() == pytest.approx(0.5, abs=1e-9)
    assert out.vertices[:, 1].min() == pytest.approx(-0.5, abs=1e-9)
    assert out.vertices[:, 1].max() == pytest.approx(0.5, abs=1e-9)
    assert polygon_area(out) == pytest.approx(0.5, abs=1e-12)
    # Monte-Carlo area cross-check
    rng = np.random.default_rng(0)
    samples = rng.uniform(-0.5, 0.5, (200_000, 2)) + np.array([0.5, 0.0])
    inside = (np.abs(samples[:, 0]) <= 0.5) & (np.abs(samples[:, 1]) <= 0.5)
    assert polygon_area(out) == pytest.approx(inside.mean() * 1.0, abs=5e-3)


def test_clip_output_within_bounds_and_convex():
    rng = np.random.default_rng(17)
    for _ in range(200):
        half = rng.uniform(0.2, 2.0, 3)
        # random triangle fan polygon in a random plane
        rot = random_rotation(rng)
        radius = rng.uniform(0.3, 3.0)
        angles = np.sort(rng.uniform(0.0, 2 * np.pi, rng.integers(3, 8)))
        pts2 = np.stack([np.cos(angles), np.sin(angles)], axis=1) * radius
        poly3 = np.column_stack([pts2, np.zeros(len(pts2))]) @ rot.T
        poly3 += rng.uniform(-1, 1, 3)
        try:
            poly = ConvexPolygon3(poly3)
        except ValidationError:
            continue  # angle draw produced a degenerate/reflex polygon
        eps = 2e-9 * np.linalg.norm(half) * 2
        out = clip_polygon_to_aabb(poly, half)
        if out.is_empty:
            continue
        assert np.all(np.abs(out.vertices) <= half + eps + 1e-12)
        ConvexPolygon3(out.vertices)  # re-validates convexity/planarity


def test_polygon_validation():
    with pytest.raises(ValidationError):
        ConvexPolygon3(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
    with pytest.raises(ValidationError):  # non-planar
        ConvexPolygon3(np.array(
            [[0, 0, 0], [1, 0, 0], [1, 1, 1], [0, 1, -1]], dtype=float))
    assert ConvexPolygon3().is_empty


# ---------------------------------------------------------------------------
# intersection points and hull volume
# ---------------------------------------------------------------------------


def test_intersection_points_identical_boxes():
    pts = intersection_points(unit_box(), unit_box())
    assert len(pts) == 8
    assert convex_hull_volume(pts) == pytest.approx(1.0, abs=1e-12)


def test_intersection_points_disjoint():
    pts = intersection_points(unit_box(), unit_box(t=np.array([10.0, 0.0, 0.0])))
    assert len(pts) == 0


def test_intersection_points_half_shift_slab():
    pts = intersection_points(unit_box(), unit_box(t=np.array([0.5, 0.0, 0.0])))
    assert convex_hull_volume(pts) == pytest.approx(0.5, abs=1e-12)
    assert pts[:, 0].min() == pytest.approx(0.0, abs=1e-9)
    assert pts[:, 0].max() == pytest.approx(0.5, abs=1e-9)


def test_hull_volume_unit_cube():
    assert convex_hull_volume(box_vertices(unit_box())) == pytest.approx(1.0, abs=1e-12)


def test_hull_volume_tetrahedron():
    pts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]], dtype=float)
    assert convex_hull_volume(pts) == pytest.approx(1 / 6, abs=1e-12)


def test_hull_volume_degenerate_cases():
    assert convex_hull_volume(np.empty((0, 3))) == 0.0
    assert convex_hull_volume(np.array([[1.0, 2.0, 3.0]])) == 0.0
    # coincident within tolerance
    assert convex_hull_volume(np.array([[0, 0, 0]] * 10, dtype=float)) == 0.0
    # collinear
    line = np.outer(np.linspace(0, 1, 5), [1.0, 2.0, 0.5])
    assert convex_hull_volume(line) == 0.0
    # coplanar
    sq = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [1, 1, 0]], dtype=float)
    assert convex_hull_volume(sq) == 0.0


def test_hull_volume_matches_brute_force_oracle():
    rng = np.random.default_rng(23)
    for _ in range(15):
        pts = rng.normal(size=(20, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= rng.uniform(0, 1, (20, 1)) ** (1 / 3)
        vol = convex_hull_volume(pts)
        assert vol <= 4 * np.pi / 3 + 1e-9
        assert vol == pytest.approx(brute_hull_volume(pts), rel=1e-9)


def test_hull_volume_dedup_first():
    cube = box_vertices(unit_box())
    jittered = np.vstack([cube, cube + 1e-12])
    assert convex_hull_volume(jittered) == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# iou_3d
# ---------------------------------------------------------------------------


def test_iou_identical():
    res = iou_3d(unit_box(), unit_box())
    assert res.iou == pytest.approx(1.0, abs=1e-9)
    assert res.intersection_volume == pytest.approx(1.0, abs=1e-9)
    assert res.union_volume == pytest.approx(1.0, abs=1e-9)


def test_iou_axis_offset_third():
    res = iou_3d(unit_box(), unit_box(t=np.array([0.5, 0.0, 0.0])))
    assert res.iou == pytest.approx(1 / 3, abs=1e-9)
    assert res.intersection_volume == pytest.approx(0.5, abs=1e-9)
    assert res.union_volume == pytest.approx(1.5, abs=1e-9)


def test_iou_rot45_closed_form():
    # square vs itself rotated 45 degrees: octagon cross-section of area
    # 2*sqrt(2)-2, so iou = (2 sqrt(2) - 2) / (4 - 2 sqrt(2)) = sqrt(2)/2
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    res = iou_3d(unit_box(), unit_box(r=rz))
    assert res.iou == pytest.approx(math.sqrt(2) / 2, abs=1e-6)


def test_iou_rot45_against_big_monte_carlo():
    c, s = math.cos(math.pi / 4), math.sin(math.pi / 4)
    rz = np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    estimate, stderr = mc_iou(unit_box(), unit_box(r=rz), McConfig(10_000_000, 99))
    assert abs(math.sqrt(2) / 2 - estimate) < 3 * stderr + 1e-6


def test_iou_disjoint_zero():
    res = iou_3d(unit_box(), unit_box(t=np.array([10.0, 0.0, 0.0])))
    assert res.iou == 0.0
    assert res.intersection_volume == 0.0


def test_iou_touching_faces_zero():
    res = iou_3d(unit_box(), unit_box(t=np.array([1.0, 0.0, 0.0])))
    assert res.iou == 0.0


def test_iou_containment():
    big = unit_box(s=3 * ONE)
    small = unit_box(t=np.array([0.2, -0.1, 0.3]), s=0.5 * ONE)
    res = iou_3d(big, small)
    assert res.intersection_volume == pytest.approx(small.volume, rel=1e-9)
    assert res.iou == pytest.approx(small.volume / big.volume, rel=1e-9)


def test_iou_argument_symmetry():
    rng = np.random.default_rng(31)
    for _ in range(200):
        x, y = random_box_pair(rng, max_offset_diagonals=0.8)
        assert abs(iou_3d(x, y).iou - iou_3d(y, x).iou) < 1e-9


def test_iou_bounds_on_random_pairs():
    rng = np.random.default_rng(37)
    for _ in range(1000):
        x, y = random_box_pair(rng)
        res = iou_3d(x, y)
        assert 0.0 <= res.iou <= 1.0
        assert 0.0 <= res.intersection_volume <= min(x.volume, y.volume) + 1e-12
        assert res.union_volume == pytest.approx(
            x.volume + y.volume - res.intersection_volume, rel=1e-12)


def test_iou_se3_and_scale_invariance():
    rng = np.random.default_rng(41)
    for _ in range(30):
        x, y = random_box_pair(rng, max_offset_diagonals=0.5)
        base = iou_3d(x, y).iou
        for _ in range(3):
            q = random_rotation(rng)
            shift = rng.uniform(-5, 5, 3)
            factor = rng.uniform(0.1, 10.0)
            x2 = OrientedBox3(q @ x.rotation, factor * (q @ x.translation) + shift,
                              factor * x.scale)
            y2 = OrientedBox3(q @ y.rotation, factor * (q @ y.translation) + shift,
                              factor * y.scale)
            assert abs(iou_3d(x2, y2).iou - base) < 1e-6


def test_iou_matches_monte_carlo_sample():
    rng = np.random.default_rng(43)
    for i in range(40):
        x, y = random_box_pair(rng, max_offset_diagonals=0.6)
        exact = iou_3d(x, y).iou
        estimate, _ = mc_iou(x, y, McConfig(100_000, i))
        assert abs(exact - estimate) < 0.03


# ---------------------------------------------------------------------------
# symmetric iou
# ---------------------------------------------------------------------------


def test_symmetric_identical():
    res = iou_3d_symmetric(unit_box(), unit_box(), SymmetrySpec("y", 16))
    assert res.iou == pytest.approx(1.0, abs=1e-9)


def test_symmetric_square_cross_section_recovers_quarter_turn():
    s = np.array([0.5, 1.0, 0.5])
    gt = unit_box(s=s)
    pred = OrientedBox3(rotation_about_y(math.pi / 2), ZERO, s)
    for n in (4, 8, 100):
        res = iou_3d_symmetric(gt, pred, SymmetrySpec("y", n))
        assert res.iou == pytest.approx(1.0, abs=1e-6)


def test_symmetric_single_sample_equals_plain():
    s = np.array([0.4, 1.0, 0.8])
    gt = unit_box(s=s)
    pred = OrientedBox3(rotation_about_y(math.pi / 2), ZERO, s)
    plain = iou_3d(gt, pred)
    res = iou_3d_symmetric(gt, pred, SymmetrySpec("y", 1))
    assert res.iou == plain.iou
    assert plain.iou < 1.0


def test_symmetric_never_below_plain():
    rng = np.random.default_rng(47)
    for _ in range(100):
        x, y = random_box_pair(rng, max_offset_diagonals=0.5)
        plain = iou_3d(x, y).iou
        sym = iou_3d_symmetric(x, y, SymmetrySpec("y", 8)).iou
        assert sym >= plain - 1e-12


def test_symmetric_non_decreasing_in_sample_multiples():
    rng = np.random.default_rng(53)
    for _ in range(25):
        x, y = random_box_pair(rng, max_offset_diagonals=0.4)
        v4 = iou_3d_symmetric(x, y, SymmetrySpec("y", 4)).iou
        v8 = iou_3d_symmetric(x, y, SymmetrySpec("y", 8)).iou
        v16 = iou_3d_symmetric(x, y, SymmetrySpec("y", 16)).iou
        assert v8 >= v4 - 1e-12
        assert v16 >= v8 - 1e-12


def test_symmetry_spec_validation():
    with pytest.raises(ValidationError):
        SymmetrySpec("x", 4)
    with pytest.raises(ValidationError):
        SymmetrySpec("y", 0)
