"""Pure NumPy implementation of the box-intersection kernels.

This is the fallback backend used when the compiled extension
(``boxeval._kernel._fastcore``) is not built.  Both backends expose the
same functions with identical semantics; ``tests/test_kernel_parity.py``
holds them to that.

Conventions shared by every kernel:
  * a box is (rotation 3x3, translation 3, scale 3); its world-space
    corner k is R @ (scale * CORNER_SIGNS[k]) + t,
  * corner order: index bit 2 -> x sign, bit 1 -> y sign, bit 0 -> z sign
    (negative half first),
  * clipping / containment use an absolute epsilon of 1e-9 times the
    diagonal of the clipping box, so touching faces classify stably,
  * point sets are deduplicated at 1e-9 (meters) before hull volumes.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull, QhullError

BACKEND_NAME = "pure"

PLANE_EPS_FACTOR = 1e-9
DEDUP_TOL = 1e-9

CORNER_SIGNS = 0.5 * np.array(
    [
        [-1, -1, -1],
        [-1, -1, +1],
        [-1, +1, -1],
        [-1, +1, +1],
        [+1, -1, -1],
        [+1, -1, +1],
        [+1, +1, -1],
        [+1, +1, +1],
    ],
    dtype=np.float64,
)

# Quad faces of the unit box, wound counterclockwise seen from outside.
FACES = np.array(
    [
        [0, 1, 3, 2],  # -x
        [4, 6, 7, 5],  # +x
        [0, 4, 5, 1],  # -y
        [2, 3, 7, 6],  # +y
        [0, 2, 6, 4],  # -z
        [1, 5, 7, 3],  # +z
    ],
    dtype=np.intp,
)


def box_corners(rotation, translation, scale):
    """World-space corners (8, 3) of an oriented box."""
    local = CORNER_SIGNS * np.asarray(scale, dtype=np.float64)
    return local @ np.asarray(rotation, dtype=np.float64).T + np.asarray(
        translation, dtype=np.float64
    )


def clip_polygon(vertices, half_extents, eps):
    """Sutherland-Hodgman clip of a polygon against an origin-centered AABB.

    Clips sequentially against the six planes |p_i| <= h_i.  Points within
    ``eps`` of a plane count as inside.  Degenerate outputs (fewer than
    three vertices) are returned as-is; callers that need a polygon decide
    what to do with them.
    """
    poly = np.asarray(vertices, dtype=np.float64).reshape(-1, 3)
    h = np.asarray(half_extents, dtype=np.float64)
    for axis in range(3):
        for sign in (1.0, -1.0):
            if len(poly) == 0:
                return poly.reshape(0, 3)
            bound = h[axis]
            coord = sign * poly[:, axis]
            out = []
            for i in range(len(poly)):
                s = poly[i - 1]
                e = poly[i]
                cs = coord[i - 1]
                ce = coord[i]
                e_in = ce <= bound + eps
                s_in = cs <= bound + eps
                if e_in:
                    if not s_in:
                        out.append(_plane_crossing(s, e, cs, ce, bound))
                    out.append(e)
                elif s_in:
                    out.append(_plane_crossing(s, e, cs, ce, bound))
            poly = (
                np.array(out, dtype=np.float64)
                if out
                else np.empty((0, 3), dtype=np.float64)
            )
    return poly


def _plane_crossing(s, e, cs, ce, bound):
    denom = ce - cs
    if abs(denom) < 1e-300:
        return 0.5 * (s + e)
    t = (bound - cs) / denom
    t = min(max(t, 0.0), 1.0)
    return s + t * (e - s)


def _dedup(points, tol=DEDUP_TOL):
    """Greedy input-order dedup: keep a point if it is farther than ``tol``
    (max-norm) from every point already kept."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) <= 1:
        return pts
    kept = [pts[0]]
    for p in pts[1:]:
        arr = np.asarray(kept)
        if np.max(np.abs(arr - p), axis=1).min() > tol:
            kept.append(p)
    return np.asarray(kept)


def _one_sided_points(rot_a, t_a, s_a, rot_b, t_b, s_b):
    """Vertices of box b's faces clipped against box a, plus b's corners
    inside a, all expressed in a's canonical frame."""
    rot_ba = rot_a.T @ rot_b
    t_ba = rot_a.T @ (t_b - t_a)
    corners = CORNER_SIGNS * s_b @ rot_ba.T + t_ba
    half = 0.5 * s_a
    eps = PLANE_EPS_FACTOR * float(np.linalg.norm(s_a))
    chunks = []
    for face in FACES:
        clipped = clip_polygon(corners[face], half, eps)
        if len(clipped):
            chunks.append(clipped)
    inside = np.all(np.abs(corners) <= half + eps, axis=1)
    if np.any(inside):
        chunks.append(corners[inside])
    if not chunks:
        return np.empty((0, 3), dtype=np.float64)
    return np.concatenate(chunks, axis=0)


def pair_intersection_points(rot_x, t_x, s_x, rot_y, t_y, s_y):
    """Candidate vertices of the intersection polytope of two boxes.

    Returns a deduplicated (k, 3) array in the canonical frame of box x
    (x axis-aligned and centered at the origin).  Empty when disjoint.
    """
    rot_x = np.asarray(rot_x, dtype=np.float64)
    t_x = np.asarray(t_x, dtype=np.float64)
    s_x = np.asarray(s_x, dtype=np.float64)
    rot_y = np.asarray(rot_y, dtype=np.float64)
    t_y = np.asarray(t_y, dtype=np.float64)
    s_y = np.asarray(s_y, dtype=np.float64)

    pts_x = _one_sided_points(rot_x, t_x, s_x, rot_y, t_y, s_y)
    pts_y = _one_sided_points(rot_y, t_y, s_y, rot_x, t_x, s_x)
    if len(pts_y):
        # Map from y's canonical frame into x's canonical frame.
        rot_yx = rot_x.T @ rot_y
        t_yx = rot_x.T @ (t_y - t_x)
        pts_y = pts_y @ rot_yx.T + t_yx
    both = np.concatenate([pts_x, pts_y], axis=0) if len(pts_y) else pts_x
    return _dedup(both)


def hull_volume(points):
    """Volume of the 3D convex hull of a point set.

    Returns 0.0 for fewer than four distinct points or for rank-deficient
    (collinear / coplanar within tolerance) sets.
    """
    pts = _dedup(points)
    if len(pts) < 4:
        return 0.0
    centered = pts - pts.mean(axis=0)
    singular = np.linalg.svd(centered, compute_uv=False)
    if singular[2] <= DEDUP_TOL:
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        try:
            return float(ConvexHull(pts, qhull_options="QJ").volume)
        except QhullError:
            return 0.0


def iou_pair(rot_x, t_x, s_x, rot_y, t_y, s_y):
    """Exact IoU of two oriented boxes.

    Returns (iou, intersection_volume, union_volume).
    """
    s_x = np.asarray(s_x, dtype=np.float64)
    s_y = np.asarray(s_y, dtype=np.float64)
    vol_x = float(np.prod(s_x))
    vol_y = float(np.prod(s_y))
    pts = pair_intersection_points(rot_x, t_x, s_x, rot_y, t_y, s_y)
    inter = hull_volume(pts)
    inter = min(max(inter, 0.0), vol_x, vol_y)
    union = vol_x + vol_y - inter
    iou = inter / union
    return min(max(iou, 0.0), 1.0), inter, union


def _rot_y(angle):
    c = np.cos(angle)
    s = np.sin(angle)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


IOU_TIE_EPS = 1e-12


def iou_symmetric(rot_g, t_g, s_g, rot_p, t_p, s_p, sample_count):
    """IoU maximized over rotations of the first box about its local y axis.

    Evaluates sample_count uniformly spaced angles in [0, 2*pi) (angle 0
    included, so the result is never below the plain pair IoU).  A later
    angle must beat the incumbent by more than IOU_TIE_EPS, so exact
    symmetries resolve to the earliest sampled angle instead of float
    noise.  Returns (iou, intersection_volume, union_volume,
    best_sample_index).
    """
    rot_g = np.asarray(rot_g, dtype=np.float64)
    best = (-1.0, 0.0, 0.0, 0)
    for k in range(int(sample_count)):
        angle = 2.0 * np.pi * k / sample_count
        rk = rot_g @ _rot_y(angle) if k else rot_g
        iou, inter, union = iou_pair(rk, t_g, s_g, rot_p, t_p, s_p)
        if iou > best[0] + IOU_TIE_EPS:
            best = (iou, inter, union, k)
    return best


def points_in_box(rotation, translation, scale, points, eps):
    """Boolean mask: which points fall inside the box.

    A point is inside when every unit-box coordinate of
    inv(diag(scale)) @ R.T @ (p - t) is within 0.5 + eps (boundary
    inclusive).
    """
    rot = np.asarray(rotation, dtype=np.float64)
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    local = (pts - np.asarray(translation, dtype=np.float64)) @ rot
    local /= np.asarray(scale, dtype=np.float64)
    return np.all(np.abs(local) <= 0.5 + eps, axis=1)
