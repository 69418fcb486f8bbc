"""Pinhole camera math and object viewpoint angles.

Coordinate conventions used throughout:
  * world +y is up; a camera's view-space +z axis points at the scene, so
    view-space z is the depth along the optical axis;
  * image coordinates (u, v) are normalized by image width and height and
    grow with view-space x and y;
  * an object's azimuth/elevation describe where the camera sits in the
    *box-local* frame: the box's local +z axis is its front (azimuth 0),
    +y its up.  Azimuth is in [-180, 180) degrees, elevation in [-90, 90].

At the poles (|elevation| = 90) the azimuth is reported as 0 so results
stay deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BehindCamera, DegenerateViewpoint, ValidationError
from .geom import OrientedBox3, box_vertices, check_rotation

__all__ = [
    "CameraFrame",
    "Viewpoint",
    "project_point",
    "project_box_keypoints",
    "viewpoint_of",
    "make_look_at_camera",
]

_RIGID_TOL = 1e-6


def _frozen(arr, shape, name):
    a = np.array(arr, dtype=np.float64)
    if a.shape != shape:
        raise ValidationError(f"{name} must have shape {shape}, got {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} contains non-finite values")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class CameraFrame:
    """Per-frame pinhole camera.

    ``camera_to_world`` is the rigid pose of the camera in the world;
    ``view`` must be its inverse.  ``projection`` is carried along for
    round-tripping but not used by the projection math here, which works
    from the intrinsics directly.
    """

    intrinsics: np.ndarray
    camera_to_world: np.ndarray
    view: np.ndarray
    projection: np.ndarray
    image_width: int
    image_height: int

    def __post_init__(self):
        k = _frozen(self.intrinsics, (3, 3), "intrinsics")
        c2w = _frozen(self.camera_to_world, (4, 4), "camera_to_world")
        view = _frozen(self.view, (4, 4), "view")
        proj = _frozen(self.projection, (4, 4), "projection")
        w = int(self.image_width)
        h = int(self.image_height)
        if w <= 0 or h <= 0:
            raise ValidationError("image dimensions must be positive")

        fx, fy = k[0, 0], k[1, 1]
        cx, cy = k[0, 2], k[1, 2]
        if fx <= 0 or fy <= 0:
            raise ValidationError(f"focal lengths must be positive, got fx={fx}, fy={fy}")
        if not (0 < cx < w) or not (0 < cy < h):
            raise ValidationError(
                f"principal point ({cx}, {cy}) outside image {w}x{h}"
            )
        off = np.array([k[0, 1], k[1, 0], k[2, 0], k[2, 1], k[2, 2] - 1.0])
        if np.max(np.abs(off)) > 1e-9:
            raise ValidationError("intrinsics must be skewless with last row (0, 0, 1)")

        check_rotation(c2w[:3, :3])
        if np.max(np.abs(c2w[3] - np.array([0, 0, 0, 1.0]))) > 1e-9:
            raise ValidationError("camera_to_world last row must be (0, 0, 0, 1)")
        if np.max(np.abs(view @ c2w - np.eye(4))) > _RIGID_TOL:
            raise ValidationError("view is not the inverse of camera_to_world")

        object.__setattr__(self, "intrinsics", k)
        object.__setattr__(self, "camera_to_world", c2w)
        object.__setattr__(self, "view", view)
        object.__setattr__(self, "projection", proj)
        object.__setattr__(self, "image_width", w)
        object.__setattr__(self, "image_height", h)

    @property
    def center(self) -> np.ndarray:
        """Camera center in world coordinates."""
        return self.camera_to_world[:3, 3]

    def __eq__(self, other):
        if not isinstance(other, CameraFrame):
            return NotImplemented
        return (
            np.array_equal(self.intrinsics, other.intrinsics)
            and np.array_equal(self.camera_to_world, other.camera_to_world)
            and np.array_equal(self.view, other.view)
            and np.array_equal(self.projection, other.projection)
            and self.image_width == other.image_width
            and self.image_height == other.image_height
        )

    def __hash__(self):
        return hash((self.intrinsics.tobytes(), self.camera_to_world.tobytes()))


@dataclass(frozen=True)
class Viewpoint:
    """Azimuth/elevation of the camera in an object's local frame (degrees).

    Azimuth is normalized into [-180, 180); elevation must lie in [-90, 90].
    """

    azimuth: float
    elevation: float

    def __post_init__(self):
        az = float(self.azimuth)
        el = float(self.elevation)
        if not math.isfinite(az) or not math.isfinite(el):
            raise ValidationError("viewpoint angles must be finite")
        if not -90.0 <= el <= 90.0:
            raise ValidationError(f"elevation {el} outside [-90, 90]")
        az = (az + 180.0) % 360.0 - 180.0
        object.__setattr__(self, "azimuth", az)
        object.__setattr__(self, "elevation", el)

    def direction(self) -> np.ndarray:
        """Unit vector toward the camera in the box-local frame."""
        az = math.radians(self.azimuth)
        el = math.radians(self.elevation)
        return np.array(
            [math.cos(el) * math.sin(az), math.sin(el), math.cos(el) * math.cos(az)]
        )


def project_point(cam: CameraFrame, world_point) -> tuple[float, float, float]:
    """Project a world point; returns (u, v, depth).

    u and v are normalized by image width/height; depth is the view-space
    distance along the optical axis (meters).  Raises BehindCamera when the
    depth is not positive.
    """
    p = np.asarray(world_point, dtype=np.float64).reshape(3)
    v = cam.view[:3, :3] @ p + cam.view[:3, 3]
    depth = float(v[2])
    if depth <= 0.0:
        raise BehindCamera(f"point has view-space depth {depth:.6g}")
    k = cam.intrinsics
    u_px = k[0, 0] * v[0] / depth + k[0, 2]
    v_px = k[1, 1] * v[1] / depth + k[1, 2]
    return float(u_px / cam.image_width), float(v_px / cam.image_height), depth


def project_box_keypoints(cam: CameraFrame, box: OrientedBox3) -> np.ndarray:
    """The 9 box keypoints as (u, v, depth) rows: center first, then the
    8 corners in ``box_vertices`` order.  Raises BehindCamera if any
    keypoint is not in front of the camera."""
    pts = np.vstack([box.translation[None, :], box_vertices(box)])
    v = pts @ cam.view[:3, :3].T + cam.view[:3, 3]
    depths = v[:, 2]
    if np.any(depths <= 0.0):
        raise BehindCamera(
            f"{int(np.sum(depths <= 0.0))} of 9 keypoints behind the camera"
        )
    k = cam.intrinsics
    u = (k[0, 0] * v[:, 0] / depths + k[0, 2]) / cam.image_width
    w = (k[1, 1] * v[:, 1] / depths + k[1, 2]) / cam.image_height
    return np.column_stack([u, w, depths])


def viewpoint_of(cam: CameraFrame, box: OrientedBox3) -> Viewpoint:
    """Where the camera sits in the box's local frame, as azimuth/elevation.

    Azimuth 0 means the camera is on the box's front (+z) axis; elevation
    is the angle above the box's horizontal (x, z) plane.  Raises
    DegenerateViewpoint when the camera center coincides with the box
    center (within 1e-9 m).
    """
    d = cam.center - box.translation
    norm = float(np.linalg.norm(d))
    if norm < 1e-9:
        raise DegenerateViewpoint("camera center coincides with box center")
    local = box.rotation.T @ (d / norm)
    elevation = math.degrees(math.asin(min(max(local[1], -1.0), 1.0)))
    horizontal = math.hypot(local[0], local[2])
    if horizontal < 1e-12:
        azimuth = 0.0
    else:
        azimuth = math.degrees(math.atan2(local[0], local[2]))
    return Viewpoint(azimuth, elevation)


def make_look_at_camera(
    eye,
    target,
    fx: float = 700.0,
    fy: float | None = None,
    image_width: int = 720,
    image_height: int = 720,
    up=(0.0, 1.0, 0.0),
    near: float = 0.01,
    far: float = 100.0,
) -> CameraFrame:
    """Build a CameraFrame at ``eye`` looking at ``target``.

    The principal point sits at the image center.  A standard perspective
    ``projection`` matrix is derived from the intrinsics to fill the
    record.
    """
    eye = np.asarray(eye, dtype=np.float64).reshape(3)
    target = np.asarray(target, dtype=np.float64).reshape(3)
    fy = fx if fy is None else fy
    forward = target - eye
    n = np.linalg.norm(forward)
    if n < 1e-12:
        raise ValidationError("eye and target coincide")
    forward = forward / n
    up = np.asarray(up, dtype=np.float64)
    right = np.cross(up, forward)
    if np.linalg.norm(right) < 1e-9:
        right = np.cross(np.array([0.0, 0.0, 1.0]), forward)
    right /= np.linalg.norm(right)
    true_up = np.cross(forward, right)

    c2w = np.eye(4)
    c2w[:3, 0] = right
    c2w[:3, 1] = true_up
    c2w[:3, 2] = forward
    c2w[:3, 3] = eye
    view = np.eye(4)
    view[:3, :3] = c2w[:3, :3].T
    view[:3, 3] = -c2w[:3, :3].T @ eye

    cx = image_width / 2.0
    cy = image_height / 2.0
    intrinsics = np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])
    projection = np.array(
        [
            [2.0 * fx / image_width, 0.0, 1.0 - 2.0 * cx / image_width, 0.0],
            [0.0, 2.0 * fy / image_height, 1.0 - 2.0 * cy / image_height, 0.0],
            [0.0, 0.0, (far + near) / (far - near), -2.0 * far * near / (far - near)],
            [0.0, 0.0, 1.0, 0.0],
        ]
    )
    return CameraFrame(intrinsics, c2w, view, projection, image_width, image_height)
