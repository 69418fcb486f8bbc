"""boxeval: evaluation toolkit for 9-DoF 3D object detection.

Exact IoU between arbitrarily oriented 3D boxes (polygon clipping plus
convex-hull volume, with rotational-symmetry handling), pinhole projection
and viewpoint angles, detection matching and average precision, JSONL
dataset IO, and an independent Monte-Carlo oracle.  Hot kernels run in a
compiled extension when built, with a pure NumPy fallback.
"""

from ._kernel import backend_name as kernel_backend
from .camera import (
    CameraFrame,
    Viewpoint,
    make_look_at_camera,
    project_box_keypoints,
    project_point,
    viewpoint_of,
)
from .dataio import (
    CATEGORIES,
    FrameRecord,
    ObjectAnnotation,
    SyntheticSpec,
    generate_synthetic,
    load_frames,
    parse_frames,
    save_frames,
    serialize_frames,
)
from .errors import (
    BehindCamera,
    BoxevalError,
    DegenerateViewpoint,
    FrameKeyMismatch,
    InvalidRotation,
    InvalidSpec,
    SchemaError,
    ShapeMismatch,
    TooFewSamples,
    ValidationError,
)
from .geom import (
    ConvexPolygon3,
    IoUResult,
    OrientedBox3,
    SymmetrySpec,
    box_vertices,
    canonicalize_pair,
    clip_polygon_to_aabb,
    convex_hull_volume,
    intersection_points,
    iou_3d,
    iou_3d_symmetric,
)
from .metrics import (
    EvalConfig,
    EvalReport,
    MetricRecord,
    ObjectPrediction,
    annotation_variance,
    average_precision,
    evaluate,
    match_detections,
    pixel_projection_error,
    rotation_error,
    viewpoint_errors,
)
from .oracle import McConfig, brute_hull_volume, mc_iou, point_in_box
from .stats import dataset_stats

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "kernel_backend",
    # geometry
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
    # camera
    "CameraFrame",
    "Viewpoint",
    "project_point",
    "project_box_keypoints",
    "viewpoint_of",
    "make_look_at_camera",
    # metrics
    "ObjectPrediction",
    "MetricRecord",
    "EvalConfig",
    "EvalReport",
    "pixel_projection_error",
    "rotation_error",
    "viewpoint_errors",
    "match_detections",
    "average_precision",
    "evaluate",
    "annotation_variance",
    # data io
    "CATEGORIES",
    "FrameRecord",
    "ObjectAnnotation",
    "SyntheticSpec",
    "parse_frames",
    "load_frames",
    "serialize_frames",
    "save_frames",
    "generate_synthetic",
    # oracle
    "McConfig",
    "mc_iou",
    "point_in_box",
    "brute_hull_volume",
    "dataset_stats",
    # errors
    "BoxevalError",
    "ValidationError",
    "SchemaError",
    "BehindCamera",
    "DegenerateViewpoint",
    "ShapeMismatch",
    "InvalidRotation",
    "FrameKeyMismatch",
    "TooFewSamples",
    "InvalidSpec",
]
