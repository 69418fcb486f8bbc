"""Reading, validating, and writing annotation / prediction files.

Files are UTF-8 JSON lines, one frame object per line (gzip accepted by
``.gz`` extension or magic-byte sniffing).  The full field reference lives
in ``docs/schema.md``; in short a frame is

    {"frame_id": ..., "camera": {...}, "objects": [{...}, ...]}

where each object carries a category from the nine-class set, a box pose
(rotation matrix or unit quaternion, translation, scale), and optional
keypoints.  Keypoints omitted from the input are recomputed from the box
and camera at parse time; keypoints that are present must agree with that
recomputation to 1e-6, so no partially-consistent record survives parsing.

Parsing is strict: unknown fields, wrong shapes, and invariant violations
raise SchemaError / ValidationError carrying the line number and a field
path like ``objects[0].box.scale``.

Serialization writes fields in a fixed canonical order with shortest
round-trip float formatting, so serialize -> parse -> serialize is a fixed
point and values survive bit-exactly.
"""

from __future__ import annotations

import gzip
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .camera import CameraFrame, make_look_at_camera, project_box_keypoints
from .errors import BehindCamera, InvalidSpec, SchemaError, ValidationError
from .geom import OrientedBox3, box_vertices, rotation_about_y

__all__ = [
    "CATEGORIES",
    "ObjectAnnotation",
    "FrameRecord",
    "parse_frames",
    "load_frames",
    "serialize_frames",
    "iter_serialized",
    "save_frames",
    "box_from_json",
    "box_to_json",
    "SyntheticSpec",
    "generate_synthetic",
]

CATEGORIES = (
    "bike",
    "book",
    "bottle",
    "camera",
    "cereal_box",
    "chair",
    "cup",
    "laptop",
    "shoe",
)

_KEYPOINT_TOL = 1e-6


@dataclass(frozen=True)
class ObjectAnnotation:
    """One labeled object in a frame.

    ``keypoints_3d`` is the box center followed by the 8 corners (world
    coordinates); ``keypoints_2d`` the same points as (u, v, depth) in
    normalized image coordinates.  ``confidence`` is None in ground-truth
    files and a score in prediction files.
    """

    instance_id: str
    category: str
    box: OrientedBox3
    keypoints_3d: np.ndarray | None = None
    keypoints_2d: np.ndarray | None = None
    confidence: float | None = None

    def __post_init__(self):
        if not self.instance_id:
            raise ValidationError("instance_id must be non-empty")
        if self.category not in CATEGORIES:
            raise ValidationError(
                f"unknown category {self.category!r}; expected one of {list(CATEGORIES)}"
            )
        for name, shape in (("keypoints_3d", (9, 3)), ("keypoints_2d", (9, 3))):
            value = getattr(self, name)
            if value is None:
                continue
            arr = np.array(value, dtype=np.float64)
            if arr.shape != shape:
                raise ValidationError(f"{name} must have shape {shape}, got {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"{name} contains non-finite values")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.confidence is not None:
            conf = float(self.confidence)
            if not 0.0 <= conf <= 1.0:
                raise ValidationError(f"confidence {conf} outside [0, 1]")
            object.__setattr__(self, "confidence", conf)

    def __eq__(self, other):
        if not isinstance(other, ObjectAnnotation):
            return NotImplemented
        def eq_opt(a, b):
            if a is None or b is None:
                return a is b
            return np.array_equal(a, b)
        return (
            self.instance_id == other.instance_id
            and self.category == other.category
            and self.box == other.box
            and eq_opt(self.keypoints_3d, other.keypoints_3d)
            and eq_opt(self.keypoints_2d, other.keypoints_2d)
            and self.confidence == other.confidence
        )

    def __hash__(self):
        return hash((self.instance_id, self.category, self.box))


@dataclass(frozen=True)
class FrameRecord:
    """One camera frame with its annotated objects."""

    frame_id: str
    camera: CameraFrame
    objects: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if not self.frame_id:
            raise ValidationError("frame_id must be non-empty")
        object.__setattr__(self, "objects", tuple(self.objects))

    def __eq__(self, other):
        if not isinstance(other, FrameRecord):
            return NotImplemented
        return (
            self.frame_id == other.frame_id
            and self.camera == other.camera
            and self.objects == other.objects
        )

    def __hash__(self):
        return hash((self.frame_id, len(self.objects)))


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _require(mapping, key, line, path):
    if not isinstance(mapping, dict):
        raise SchemaError(f"expected an object, got {type(mapping).__name__}",
                          line=line, field=path)
    if key not in mapping:
        raise SchemaError("missing field", line=line,
                          field=f"{path}.{key}" if path else key)
    return mapping[key]


def _check_known(mapping, known, line, path):
    if not isinstance(mapping, dict):
        raise SchemaError(f"expected an object, got {type(mapping).__name__}",
                          line=line, field=path or None)
    for key in mapping:
        if key not in known:
            raise SchemaError("unknown field", line=line,
                              field=f"{path}.{key}" if path else key)


def _as_matrix(value, shape, line, path):
    try:
        arr = np.array(value, dtype=np.float64)
    except (TypeError, ValueError):
        raise SchemaError("not a numeric array", line=line, field=path) from None
    if arr.shape != shape:
        raise SchemaError(f"expected shape {shape}, got {arr.shape}",
                          line=line, field=path)
    if not np.all(np.isfinite(arr)):
        raise ValidationError("contains non-finite values", line=line, field=path)
    return arr


def _as_string(value, line, path):
    if not isinstance(value, str) or not value:
        raise SchemaError("expected a non-empty string", line=line, field=path)
    return value


def _as_int(value, line, path):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError("expected an integer", line=line, field=path)
    return value


def _quaternion_to_matrix(q, line, path):
    w, x, y, z = q
    norm = math.sqrt(w * w + x * x + y * y + z * z)
    if abs(norm - 1.0) > 1e-6:
        raise ValidationError(f"quaternion norm {norm:.6g} != 1", line=line, field=path)
    w, x, y, z = w / norm, x / norm, y / norm, z / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _parse_box(data, line, path):
    _check_known(data, {"rotation", "quaternion", "translation", "scale"}, line, path)
    if "rotation" in data and "quaternion" in data:
        raise SchemaError("give either rotation or quaternion, not both",
                          line=line, field=path)
    if "rotation" in data:
        rotation = _as_matrix(data["rotation"], (3, 3), line, f"{path}.rotation")
        rot_field = f"{path}.rotation"
    elif "quaternion" in data:
        q = _as_matrix(data["quaternion"], (4,), line, f"{path}.quaternion")
        rotation = _quaternion_to_matrix(q, line, f"{path}.quaternion")
        rot_field = f"{path}.quaternion"
    else:
        raise SchemaError("missing field", line=line, field=f"{path}.rotation")
    translation = _as_matrix(_require(data, "translation", line, path),
                             (3,), line, f"{path}.translation")
    scale = _as_matrix(_require(data, "scale", line, path),
                       (3,), line, f"{path}.scale")
    if np.any(scale <= 0):
        raise ValidationError(f"scale must be strictly positive, got {scale.tolist()}",
                              line=line, field=f"{path}.scale")
    try:
        return OrientedBox3(rotation, translation, scale)
    except ValidationError as exc:
        raise ValidationError(exc.message, line=line, field=rot_field) from None


def _parse_camera(data, line, path="camera"):
    known = {"intrinsics", "camera_to_world", "view", "projection",
             "image_width", "image_height"}
    _check_known(data, known, line, path)
    kwargs = {
        "intrinsics": _as_matrix(_require(data, "intrinsics", line, path),
                                 (3, 3), line, f"{path}.intrinsics"),
        "camera_to_world": _as_matrix(_require(data, "camera_to_world", line, path),
                                      (4, 4), line, f"{path}.camera_to_world"),
        "view": _as_matrix(_require(data, "view", line, path),
                           (4, 4), line, f"{path}.view"),
        "projection": _as_matrix(_require(data, "projection", line, path),
                                 (4, 4), line, f"{path}.projection"),
        "image_width": _as_int(_require(data, "image_width", line, path),
                               line, f"{path}.image_width"),
        "image_height": _as_int(_require(data, "image_height", line, path),
                                line, f"{path}.image_height"),
    }
    try:
        return CameraFrame(**kwargs)
    except ValidationError as exc:
        raise ValidationError(exc.message, line=line, field=path) from None


def _parse_object(data, camera, line, index):
    path = f"objects[{index}]"
    known = {"instance_id", "category", "box", "keypoints_3d", "keypoints_2d",
             "confidence"}
    _check_known(data, known, line, path)
    instance_id = _as_string(_require(data, "instance_id", line, path),
                             line, f"{path}.instance_id")
    category = _as_string(_require(data, "category", line, path),
                          line, f"{path}.category")
    if category not in CATEGORIES:
        raise ValidationError(f"unknown category {category!r}",
                              line=line, field=f"{path}.category")
    box = _parse_box(_require(data, "box", line, path), line, f"{path}.box")

    expected_3d = np.vstack([box.translation[None, :], box_vertices(box)])
    if "keypoints_3d" in data:
        kp3 = _as_matrix(data["keypoints_3d"], (9, 3), line, f"{path}.keypoints_3d")
        if np.max(np.abs(kp3 - expected_3d)) > _KEYPOINT_TOL:
            raise ValidationError(
                "keypoints_3d do not match the box (center + 8 corners)",
                line=line, field=f"{path}.keypoints_3d")
    else:
        kp3 = expected_3d

    try:
        expected_2d = project_box_keypoints(camera, box)
    except BehindCamera:
        raise ValidationError(
            "box keypoints cannot be projected (behind the camera)",
            line=line, field=f"{path}.box.translation") from None
    if "keypoints_2d" in data:
        kp2 = _as_matrix(data["keypoints_2d"], (9, 3), line, f"{path}.keypoints_2d")
        if np.max(np.abs(kp2 - expected_2d)) > _KEYPOINT_TOL:
            raise ValidationError(
                "keypoints_2d do not match the projected box keypoints",
                line=line, field=f"{path}.keypoints_2d")
    else:
        kp2 = expected_2d

    confidence = None
    if "confidence" in data:
        value = data["confidence"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError("expected a number", line=line, field=f"{path}.confidence")
        if not 0.0 <= float(value) <= 1.0:
            raise ValidationError(f"confidence {value} outside [0, 1]",
                                  line=line, field=f"{path}.confidence")
        confidence = float(value)

    return ObjectAnnotation(instance_id, category, box, kp3, kp2, confidence)


def _open_source(source):
    if isinstance(source, (str, Path)):
        path = Path(source)
        raw = path.open("rb")
        if path.suffix == ".gz":
            return gzip.open(raw)
        head = raw.read(2)
        raw.seek(0)
        return gzip.open(raw) if head == b"\x1f\x8b" else raw
    if isinstance(source, (bytes, bytearray)):
        raw = io.BytesIO(source)
        return gzip.open(raw) if source[:2] == b"\x1f\x8b" else raw
    return source  # assume binary file-like


def parse_frames(source):
    """Yield validated FrameRecords from a JSONL path, bytes, or stream.

    Every record either satisfies all invariants or parsing stops with a
    SchemaError / ValidationError locating the line and field.
    """
    stream = _open_source(source)
    seen_ids = set()
    for line_no, raw in enumerate(stream, start=1):
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        text = raw.strip()
        if not text:
            continue
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON ({exc.msg})", line=line_no) from None
        if not isinstance(data, dict):
            raise SchemaError("frame record must be a JSON object", line=line_no)
        _check_known(data, {"frame_id", "camera", "objects"}, line_no, "")
        frame_id = _as_string(_require(data, "frame_id", line_no, ""),
                              line_no, "frame_id")
        if frame_id in seen_ids:
            raise ValidationError(f"duplicate frame_id {frame_id!r}",
                                  line=line_no, field="frame_id")
        seen_ids.add(frame_id)
        camera = _parse_camera(_require(data, "camera", line_no, ""), line_no)
        objects_raw = _require(data, "objects", line_no, "")
        if not isinstance(objects_raw, list):
            raise SchemaError("objects must be a list", line=line_no, field="objects")
        objects = tuple(
            _parse_object(obj, camera, line_no, i)
            for i, obj in enumerate(objects_raw)
        )
        yield FrameRecord(frame_id, camera, objects)


def load_frames(source) -> list:
    return list(parse_frames(source))


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def _floats(arr):
    return np.asarray(arr, dtype=np.float64).tolist()


def _frame_to_dict(frame: FrameRecord) -> dict:
    cam = frame.camera
    objects = []
    for obj in frame.objects:
        entry = {
            "instance_id": obj.instance_id,
            "category": obj.category,
            "box": {
                "rotation": _floats(obj.box.rotation),
                "translation": _floats(obj.box.translation),
                "scale": _floats(obj.box.scale),
            },
        }
        if obj.confidence is not None:
            entry["confidence"] = obj.confidence
        entry["keypoints_3d"] = _floats(obj.keypoints_3d)
        entry["keypoints_2d"] = _floats(obj.keypoints_2d)
        objects.append(entry)
    return {
        "frame_id": frame.frame_id,
        "camera": {
            "intrinsics": _floats(cam.intrinsics),
            "camera_to_world": _floats(cam.camera_to_world),
            "view": _floats(cam.view),
            "projection": _floats(cam.projection),
            "image_width": cam.image_width,
            "image_height": cam.image_height,
        },
        "objects": objects,
    }


def iter_serialized(frames):
    """Yield one canonical UTF-8 JSON line (bytes) per frame.

    Field order is fixed and floats use shortest round-trip formatting, so
    serializing, parsing, and serializing again reproduces identical bytes.
    """
    for frame in frames:
        yield (json.dumps(_frame_to_dict(frame), separators=(",", ":"),
                          allow_nan=False) + "\n").encode("utf-8")


def serialize_frames(frames) -> bytes:
    return b"".join(iter_serialized(frames))


def save_frames(frames, path):
    """Write frames to a JSONL file; gzip-compress when path ends in .gz."""
    path = Path(path)
    opener = gzip.open if path.suffix == ".gz" else open
    with opener(path, "wb") as fh:
        for chunk in iter_serialized(frames):
            fh.write(chunk)


def box_from_json(data, line=None, path="box") -> OrientedBox3:
    """Parse a box from a dict or JSON string (shared with the CLI)."""
    if isinstance(data, (str, bytes)):
        try:
            data = json.loads(data)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON ({exc.msg})", line=line, field=path) from None
    if not isinstance(data, dict):
        raise SchemaError("box must be a JSON object", line=line, field=path)
    return _parse_box(data, line, path)


def box_to_json(box: OrientedBox3) -> dict:
    return {
        "rotation": _floats(box.rotation),
        "translation": _floats(box.translation),
        "scale": _floats(box.scale),
    }


# ---------------------------------------------------------------------------
# synthetic fixtures
# ---------------------------------------------------------------------------

# nominal (x, y, z) edge lengths per category, meters
_CATEGORY_SCALES = {
    "bike": (1.70, 1.00, 0.40),
    "book": (0.15, 0.03, 0.22),
    "bottle": (0.08, 0.26, 0.08),
    "camera": (0.13, 0.08, 0.06),
    "cereal_box": (0.20, 0.30, 0.07),
    "chair": (0.45, 0.90, 0.45),
    "cup": (0.09, 0.11, 0.09),
    "laptop": (0.33, 0.25, 0.23),
    "shoe": (0.10, 0.12, 0.28),
}


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a deterministic synthetic scene.

    Boxes sit on the ground plane (y = 0) inside a disk of
    ``scene_radius``; the camera orbits the scene center at
    ``orbit_elevation_deg`` above the horizon.  Predictions are the ground
    truth perturbed by the noise fields; a ``corrupt_fraction`` of each
    category's instances (the first ones in index order) instead get an
    exact ``corrupt_rotation_deg`` spin about their local y axis and a
    lower confidence, which makes the azimuth AP of the output computable
    in closed form.
    """

    categories: dict = field(default_factory=lambda: {"cup": 1, "chair": 1})
    num_frames: int = 30
    seed: int = 0
    orbit_radius: float = 2.0
    orbit_elevation_deg: float = 45.0
    orbit_start_deg: float = 0.0
    orbit_sweep_deg: float = 360.0
    scene_radius: float = 0.6
    box_yaw: str = "random"  # "random" | "zero"
    scale_jitter: float = 0.15
    rotation_noise_deg: float = 0.0
    translation_noise_m: float = 0.0
    scale_noise_frac: float = 0.0
    corrupt_fraction: float = 0.0
    corrupt_rotation_deg: float = 20.0
    clean_confidence: float = 1.0
    corrupt_confidence: float = 0.5
    image_width: int = 720
    image_height: int = 720
    focal_px: float = 700.0
    frame_prefix: str = "synthetic"

    def __post_init__(self):
        cats = dict(self.categories)
        if not cats:
            raise InvalidSpec("categories must not be empty")
        for cat, count in cats.items():
            if cat not in CATEGORIES:
                raise InvalidSpec(f"unknown category {cat!r}")
            if int(count) < 1:
                raise InvalidSpec(f"instance count for {cat!r} must be >= 1")
        object.__setattr__(self, "categories", cats)
        if self.num_frames < 1:
            raise InvalidSpec("num_frames must be >= 1")
        if self.orbit_radius <= 0:
            raise InvalidSpec("orbit_radius must be positive")
        if not -90.0 < self.orbit_elevation_deg < 90.0:
            raise InvalidSpec("orbit_elevation_deg must be in (-90, 90)")
        if self.scene_radius < 0:
            raise InvalidSpec("scene_radius must be >= 0")
        if self.box_yaw not in ("random", "zero"):
            raise InvalidSpec("box_yaw must be 'random' or 'zero'")
        if not 0.0 <= self.corrupt_fraction <= 1.0:
            raise InvalidSpec("corrupt_fraction must be in [0, 1]")
        for name in ("rotation_noise_deg", "translation_noise_m", "scale_noise_frac"):
            if getattr(self, name) < 0:
                raise InvalidSpec(f"{name} must be >= 0")
        if not 0.0 <= self.corrupt_confidence <= 1.0 or not 0.0 <= self.clean_confidence <= 1.0:
            raise InvalidSpec("confidences must be in [0, 1]")

    @classmethod
    def from_dict(cls, data: dict) -> "SyntheticSpec":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise InvalidSpec(f"unknown spec fields: {sorted(unknown)}")
        return cls(**data)


def _random_rotation(rng) -> np.ndarray:
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def _axis_angle(axis, angle) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    axis = axis / np.linalg.norm(axis)
    x, y, z = axis
    c, s = math.cos(angle), math.sin(angle)
    cc = 1.0 - c
    return np.array(
        [
            [x * x * cc + c, x * y * cc - z * s, x * z * cc + y * s],
            [y * x * cc + z * s, y * y * cc + c, y * z * cc - x * s],
            [z * x * cc - y * s, z * y * cc + x * s, z * z * cc + c],
        ]
    )


def generate_synthetic(spec: SyntheticSpec):
    """Build (ground_truth_frames, prediction_frames) for a synthetic scene.

    Deterministic for a fixed spec; with all noise fields zero the
    prediction stream equals the ground truth with confidence 1.0.
    """
    rng = np.random.default_rng(np.random.PCG64(spec.seed))

    # scene layout: instances on the ground plane
    instances = []  # (instance_id, category, box, corrupted)
    for cat in sorted(spec.categories):
        count = spec.categories[cat]
        n_corrupt = int(round(spec.corrupt_fraction * count))
        for idx in range(count):
            nominal = np.array(_CATEGORY_SCALES[cat])
            scale = nominal * (1.0 + rng.uniform(-spec.scale_jitter, spec.scale_jitter, 3))
            if spec.scene_radius > 0:
                radius = spec.scene_radius * math.sqrt(rng.uniform())
                theta = rng.uniform(0.0, 2.0 * math.pi)
            else:
                radius, theta = 0.0, 0.0
            center = np.array(
                [radius * math.sin(theta), scale[1] / 2.0, radius * math.cos(theta)]
            )
            yaw = rng.uniform(0.0, 2.0 * math.pi) if spec.box_yaw == "random" else 0.0
            box = OrientedBox3(rotation_about_y(yaw), center, scale)
            instances.append((f"{cat}_{idx}", cat, box, idx < n_corrupt))

    target = np.mean([box.translation for _, _, box, _ in instances], axis=0)
    elev = math.radians(spec.orbit_elevation_deg)

    gt_frames = []
    pred_frames = []
    for i in range(spec.num_frames):
        az = math.radians(
            spec.orbit_start_deg + spec.orbit_sweep_deg * i / spec.num_frames
        )
        eye = target + spec.orbit_radius * np.array(
            [math.cos(elev) * math.sin(az), math.sin(elev), math.cos(elev) * math.cos(az)]
        )
        cam = make_look_at_camera(
            eye,
            target,
            fx=spec.focal_px,
            image_width=spec.image_width,
            image_height=spec.image_height,
        )
        frame_id = f"{spec.frame_prefix}-{spec.seed}/{i:06d}"

        gt_objects = []
        pred_objects = []
        for instance_id, cat, box, corrupted in instances:
            gt_objects.append(
                ObjectAnnotation(
                    instance_id,
                    cat,
                    box,
                    np.vstack([box.translation[None, :], box_vertices(box)]),
                    project_box_keypoints(cam, box),
                )
            )
            if corrupted:
                pred_box = box.rotated_about_local_y(
                    math.radians(spec.corrupt_rotation_deg)
                )
                confidence = spec.corrupt_confidence
            else:
                rotation, translation, scale = box.rotation, box.translation, box.scale
                if spec.rotation_noise_deg > 0:
                    axis = rng.normal(size=3)
                    angle = math.radians(rng.normal(0.0, spec.rotation_noise_deg))
                    rotation = rotation @ _axis_angle(axis, angle)
                if spec.translation_noise_m > 0:
                    translation = translation + rng.normal(0.0, spec.translation_noise_m, 3)
                if spec.scale_noise_frac > 0:
                    factors = np.clip(
                        1.0 + rng.normal(0.0, spec.scale_noise_frac, 3), 0.05, None
                    )
                    scale = scale * factors
                pred_box = OrientedBox3(rotation, translation, scale)
                confidence = spec.clean_confidence
            pred_objects.append(
                ObjectAnnotation(
                    instance_id,
                    cat,
                    pred_box,
                    np.vstack([pred_box.translation[None, :], box_vertices(pred_box)]),
                    project_box_keypoints(cam, pred_box),
                    confidence=confidence,
                )
            )
        gt_frames.append(FrameRecord(frame_id, cam, tuple(gt_objects)))
        pred_frames.append(FrameRecord(frame_id, cam, tuple(pred_objects)))
    return gt_frames, pred_frames
