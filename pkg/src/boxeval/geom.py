"""Exact geometry for 9-DoF oriented boxes.

A box is parameterized by a rotation (3x3, det +1), a translation (meters)
and per-axis edge lengths (meters); its world-space corner for unit corner
u in {-1/2, +1/2}^3 is ``R @ diag(scale) @ u + t``.

The IoU of two boxes is computed exactly: both boxes are mapped by the
inverse *rigid* pose of the first box (scale is not divided out, so
volumes stay metric), the faces of each box are clipped against the other
with Sutherland-Hodgman plane clipping, and the intersection volume is the
volume of the convex hull of the surviving points.  Hot paths run in a
compiled kernel when available (see ``boxeval._kernel``).

Conventions:
  * corner order: index bit 2 -> x sign, bit 1 -> y sign, bit 0 -> z sign,
    negative half first (corner 0 is (-sx/2, -sy/2, -sz/2));
  * +y is the box's up axis; rotational symmetry is modeled about it;
  * point-on-plane classification uses an absolute epsilon of
    1e-9 x (diagonal of the clipping box), so shared faces classify as
    touching and contribute zero volume.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._kernel import backend
from .errors import ValidationError

__all__ = [
    "OrientedBox3",
    "ConvexPolygon3",
    "IoUResult",
    "SymmetrySpec",
    "box_vertices",
    "canonicalize_pair",
    "clip_polygon_to_aabb",
    "intersection_points",
    "convex_hull_volume",
    "iou_3d",
    "iou_3d_symmetric",
    "iou_3d_symmetric_detail",
    "rotation_about_y",
]

ROTATION_TOL = 1e-6
PLANE_EPS_FACTOR = 1e-9


def _frozen_array(values, shape, name):
    arr = np.array(values, dtype=np.float64)
    if arr.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} contains non-finite values")
    arr.flags.writeable = False
    return arr


def check_rotation(matrix, tol=ROTATION_TOL):
    """Raise ValidationError unless ``matrix`` is a proper rotation."""
    r = np.asarray(matrix, dtype=np.float64)
    if r.shape != (3, 3):
        raise ValidationError(f"rotation must be 3x3, got {r.shape}")
    err = np.max(np.abs(r.T @ r - np.eye(3)))
    if err > tol:
        raise ValidationError(
            f"rotation is not orthonormal (max |R^T R - I| = {err:.3g})"
        )
    det = np.linalg.det(r)
    if abs(det - 1.0) > tol:
        raise ValidationError(f"rotation must have determinant +1, got {det:.6g}")
    return r


@dataclass(frozen=True)
class OrientedBox3:
    """A 9-DoF oriented box: rotation, translation, per-axis edge lengths."""

    rotation: np.ndarray
    translation: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        rot = _frozen_array(self.rotation, (3, 3), "rotation")
        check_rotation(rot)
        tr = _frozen_array(self.translation, (3,), "translation")
        sc = _frozen_array(self.scale, (3,), "scale")
        if np.any(sc <= 0.0):
            raise ValidationError(f"scale must be strictly positive, got {sc.tolist()}")
        object.__setattr__(self, "rotation", rot)
        object.__setattr__(self, "translation", tr)
        object.__setattr__(self, "scale", sc)

    @property
    def volume(self) -> float:
        return float(np.prod(self.scale))

    @property
    def diagonal(self) -> float:
        """Full space diagonal of the box, ||scale||."""
        return float(np.linalg.norm(self.scale))

    def vertices(self) -> np.ndarray:
        return box_vertices(self)

    def rotated_about_local_y(self, angle_rad: float) -> "OrientedBox3":
        """The same box spun by ``angle_rad`` about its own local y axis."""
        return OrientedBox3(
            self.rotation @ rotation_about_y(angle_rad), self.translation, self.scale
        )

    def __eq__(self, other):
        if not isinstance(other, OrientedBox3):
            return NotImplemented
        return (
            np.array_equal(self.rotation, other.rotation)
            and np.array_equal(self.translation, other.translation)
            and np.array_equal(self.scale, other.scale)
        )

    def __hash__(self):
        return hash(
            (self.rotation.tobytes(), self.translation.tobytes(), self.scale.tobytes())
        )


@dataclass(frozen=True)
class ConvexPolygon3:
    """A planar convex polygon in 3D; may be empty.

    Vertices are ordered counterclockwise about the polygon's own normal.
    Planarity and convexity are validated at a tolerance relative to the
    polygon diameter.
    """

    vertices: np.ndarray = field(default_factory=lambda: np.empty((0, 3)))

    def __post_init__(self):
        verts = np.array(self.vertices, dtype=np.float64).reshape(-1, 3)
        if len(verts) == 1 or len(verts) == 2:
            raise ValidationError(
                f"a non-empty polygon needs at least 3 vertices, got {len(verts)}"
            )
        if len(verts) and not np.all(np.isfinite(verts)):
            raise ValidationError("polygon vertices contain non-finite values")
        if len(verts) >= 3:
            self._check_planar_convex(verts)
        verts.flags.writeable = False
        object.__setattr__(self, "vertices", verts)

    @staticmethod
    def _check_planar_convex(verts):
        centered = verts - verts.mean(axis=0)
        diameter = float(np.linalg.norm(centered, axis=1).max()) or 1.0
        tol = 1e-8 * diameter
        # best-fit plane normal from the smallest singular vector
        _, singular, vt = np.linalg.svd(centered)
        normal = vt[2]
        if singular[2] > tol * math.sqrt(len(verts)):
            raise ValidationError("polygon vertices are not coplanar")
        edges = np.roll(verts, -1, axis=0) - verts
        crosses = np.cross(edges, np.roll(edges, -1, axis=0))
        dots = crosses @ normal
        area_scale = diameter * diameter
        if np.any(dots < -1e-8 * area_scale) and np.any(dots > 1e-8 * area_scale):
            raise ValidationError("polygon is not convex")

    def __len__(self):
        return len(self.vertices)

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) == 0

    def normal(self) -> np.ndarray:
        """Unit normal implied by the vertex winding."""
        if len(self.vertices) < 3:
            raise ValidationError("empty polygon has no normal")
        v = self.vertices
        n = np.zeros(3)
        for i in range(1, len(v) - 1):
            n += np.cross(v[i] - v[0], v[i + 1] - v[0])
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise ValidationError("degenerate polygon has no normal")
        return n / norm


@dataclass(frozen=True)
class IoUResult:
    """Exact intersection-over-union of a box pair plus its ingredients.

    ``intersection_points`` are the vertices of the intersection polytope,
    expressed in the canonical frame of the first box.
    """

    iou: float
    intersection_volume: float
    union_volume: float
    intersection_points: np.ndarray


@dataclass(frozen=True)
class SymmetrySpec:
    """Rotational symmetry about the box-local y axis.

    ``sample_count`` rotation angles uniformly spaced over [0, 2*pi) are
    tried; angle 0 is always included.
    """

    axis: str = "y"
    sample_count: int = 100

    def __post_init__(self):
        if self.axis != "y":
            raise ValidationError(f"only the local y symmetry axis is supported, got {self.axis!r}")
        if int(self.sample_count) < 1:
            raise ValidationError("sample_count must be >= 1")
        object.__setattr__(self, "sample_count", int(self.sample_count))


def rotation_about_y(angle_rad: float) -> np.ndarray:
    """Rotation matrix about the +y axis."""
    c = math.cos(angle_rad)
    s = math.sin(angle_rad)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def box_vertices(box: OrientedBox3) -> np.ndarray:
    """The 8 world-space corners of a box, in fixed order (see module doc)."""
    return backend().box_corners(box.rotation, box.translation, box.scale)


def canonicalize_pair(x: OrientedBox3, y: OrientedBox3):
    """Map both boxes by the inverse rigid pose of ``x``.

    Returns ``(half_extents, y_local)``: x becomes the axis-aligned box
    |p_i| <= half_extents_i centered at the origin, and ``y_local`` is y
    expressed in that frame.  Only the rigid part of x's pose is inverted;
    scales are untouched so volumes remain metric.
    """
    half_extents = 0.5 * x.scale
    y_local = OrientedBox3(
        x.rotation.T @ y.rotation,
        x.rotation.T @ (y.translation - x.translation),
        y.scale,
    )
    half_extents.flags.writeable = False
    return half_extents, y_local


def clip_polygon_to_aabb(poly: ConvexPolygon3, half_extents) -> ConvexPolygon3:
    """Clip a convex polygon against the box |p_i| <= half_extents_i.

    Sequential Sutherland-Hodgman clipping against the six planes.  Results
    that degenerate below three vertices come back as the empty polygon.
    """
    if poly.is_empty:
        return ConvexPolygon3()
    h = np.asarray(half_extents, dtype=np.float64).reshape(3)
    if np.any(h <= 0):
        raise ValidationError("half extents must be positive")
    eps = PLANE_EPS_FACTOR * 2.0 * float(np.linalg.norm(h))
    from ._kernel import pure as _pure

    clipped = _pure.clip_polygon(poly.vertices, h, eps)
    if len(clipped) < 3:
        return ConvexPolygon3()
    return ConvexPolygon3(clipped)


def intersection_points(x: OrientedBox3, y: OrientedBox3) -> np.ndarray:
    """Vertices of the intersection polytope of two boxes.

    Faces of y are clipped against x, corners of y inside x are added, the
    same is done with roles swapped, and everything is returned deduplicated
    in x's canonical frame.  Empty (0, 3) when the boxes are disjoint.
    """
    return backend().pair_intersection_points(
        x.rotation, x.translation, x.scale, y.rotation, y.translation, y.scale
    )


def convex_hull_volume(points) -> float:
    """Volume of the 3D convex hull of a point set.

    Zero when there are fewer than four distinct points or the set is
    collinear / coplanar within tolerance.  Duplicates within 1e-9 m are
    merged first.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return 0.0
    return float(backend().hull_volume(pts.reshape(-1, 3)))


def iou_3d(x: OrientedBox3, y: OrientedBox3) -> IoUResult:
    """Exact IoU of two oriented boxes in general position."""
    pts = intersection_points(x, y)
    inter = convex_hull_volume(pts)
    inter = min(max(inter, 0.0), x.volume, y.volume)
    union = x.volume + y.volume - inter
    iou = min(max(inter / union, 0.0), 1.0)
    return IoUResult(iou, inter, union, pts)


def iou_3d_symmetric(
    gt: OrientedBox3, pred: OrientedBox3, sym: SymmetrySpec | None = None
) -> IoUResult:
    """IoU maximized over rotations of ``gt`` about its own local y axis.

    For objects with a rotational symmetry the yaw of the annotation is
    arbitrary, so the box is spun through ``sym.sample_count`` angles and
    the best IoU wins.  Angle 0 is always sampled, so the result is never
    below ``iou_3d(gt, pred)``.
    """
    result, _ = iou_3d_symmetric_detail(gt, pred, sym)
    return result


def iou_3d_symmetric_detail(
    gt: OrientedBox3, pred: OrientedBox3, sym: SymmetrySpec | None = None
):
    """Like :func:`iou_3d_symmetric` but also returns the winning angle (rad)."""
    sym = sym or SymmetrySpec()
    _, _, _, best_k = backend().iou_symmetric(
        gt.rotation,
        gt.translation,
        gt.scale,
        pred.rotation,
        pred.translation,
        pred.scale,
        sym.sample_count,
    )
    angle = 2.0 * math.pi * best_k / sym.sample_count
    best_box = gt.rotated_about_local_y(angle) if best_k else gt
    return iou_3d(best_box, pred), angle
