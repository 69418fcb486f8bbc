"""Detection metrics, matching, and average-precision aggregation.

The evaluation protocol per frame:
  1. predictions are sorted by descending confidence (ties by input
     order) and greedily claim the nearest unclaimed ground-truth box of
     the same category whose center lies within ``gate_ratio`` times the
     ground-truth box diagonal -- detection is decided purely by the box
     center;
  2. each matched pair gets a MetricRecord: exact 3D IoU (symmetry
     maximized for categories with a vertical rotational symmetry), mean
     normalized pixel error over the 9 projected keypoints, azimuth /
     elevation / polar / viewpoint errors, and the geodesic rotation
     error;
  3. per category and per metric, average precision is the exact area
     under the precision envelope over all ranked detections (all-point
     interpolation); unmatched predictions count as false positives.

For symmetric categories, azimuth (and the viewpoint error derived from
it) is measured after spinning the ground-truth box to the IoU-maximizing
angle; raw yaw is meaningless for those objects.  Rotation and pixel
errors stay raw, which preserves their diagnostic value for symmetric
classes.

Aggregation is schedule independent: per-frame results are merged in
frame-id order and every accumulation happens over canonically sorted
records, so reports are byte-identical no matter how many workers ran.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .camera import CameraFrame, Viewpoint, project_box_keypoints, viewpoint_of
from .errors import (
    FrameKeyMismatch,
    InvalidRotation,
    ShapeMismatch,
    TooFewSamples,
    ValidationError,
)
from .geom import OrientedBox3, SymmetrySpec, iou_3d, iou_3d_symmetric_detail

__all__ = [
    "ObjectPrediction",
    "MetricRecord",
    "MatchResult",
    "EvalConfig",
    "CategoryReport",
    "EvalReport",
    "pixel_projection_error",
    "rotation_error",
    "viewpoint_errors",
    "match_detections",
    "average_precision",
    "evaluate",
    "annotation_variance",
]

CATEGORY_ORDER = (
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


@dataclass(frozen=True)
class ObjectPrediction:
    """A scored detector output for one frame."""

    category: str
    box: OrientedBox3
    confidence: float = 1.0
    keypoints_2d: np.ndarray | None = None

    def __post_init__(self):
        conf = float(self.confidence)
        if not 0.0 <= conf <= 1.0:
            raise ValidationError(f"confidence {conf} outside [0, 1]")
        object.__setattr__(self, "confidence", conf)
        if self.keypoints_2d is not None:
            kp = np.array(self.keypoints_2d, dtype=np.float64)
            if kp.ndim != 2 or kp.shape[0] != 9 or kp.shape[1] not in (2, 3):
                raise ValidationError(
                    f"keypoints_2d must be 9x2 or 9x3, got {kp.shape}"
                )
            kp.flags.writeable = False
            object.__setattr__(self, "keypoints_2d", kp)


@dataclass(frozen=True)
class MetricRecord:
    """Per matched pair metric values (angles in degrees)."""

    iou: float
    pixel_error: float
    azimuth_error: float
    elevation_error: float
    polar_error: float
    viewpoint_error: float
    rotation_error: float


@dataclass(frozen=True)
class MatchResult:
    pairs: tuple  # (gt_index, pred_index) into the input lists
    unmatched_gt: tuple
    unmatched_predictions: tuple


@dataclass(frozen=True)
class EvalConfig:
    """Thresholds and knobs of the evaluation protocol."""

    iou_threshold: float = 0.5
    azimuth_threshold_deg: float = 15.0
    elevation_threshold_deg: float = 10.0
    symmetric_categories: frozenset = frozenset({"cup", "bottle"})
    symmetry_samples: int = 100
    gate_ratio: float = 0.5
    worker_count: int | None = None

    def __post_init__(self):
        if self.iou_threshold <= 0 or self.azimuth_threshold_deg <= 0 or self.elevation_threshold_deg <= 0:
            raise ValidationError("thresholds must be positive")
        if int(self.symmetry_samples) < 1:
            raise ValidationError("symmetry_samples must be >= 1")
        if self.gate_ratio <= 0:
            raise ValidationError("gate_ratio must be positive")
        object.__setattr__(self, "symmetric_categories", frozenset(self.symmetric_categories))
        object.__setattr__(self, "symmetry_samples", int(self.symmetry_samples))
        if self.worker_count is not None and int(self.worker_count) < 1:
            raise ValidationError("worker_count must be >= 1")

    def resolved_workers(self) -> int:
        if self.worker_count is not None:
            return int(self.worker_count)
        return os.cpu_count() or 1


def pixel_projection_error(gt_keypoints, pred_keypoints) -> float:
    """Mean Euclidean distance between paired normalized 2D keypoints."""
    gt = np.asarray(gt_keypoints, dtype=np.float64)
    pr = np.asarray(pred_keypoints, dtype=np.float64)
    if gt.ndim != 2 or pr.ndim != 2 or gt.shape[0] != pr.shape[0]:
        raise ShapeMismatch(
            f"keypoint sets differ: {gt.shape} vs {pr.shape}"
        )
    return float(np.mean(np.linalg.norm(gt[:, :2] - pr[:, :2], axis=1)))


def rotation_error(rot_gt, rot_pred) -> float:
    """Geodesic angle between two rotations, degrees in [0, 180]."""
    for name, r in (("rot_gt", rot_gt), ("rot_pred", rot_pred)):
        m = np.asarray(r, dtype=np.float64)
        if m.shape != (3, 3) or np.max(np.abs(m.T @ m - np.eye(3))) > 1e-6:
            raise InvalidRotation(f"{name} is not an orthonormal 3x3 matrix")
    rel = np.asarray(rot_gt).T @ np.asarray(rot_pred)
    cos_angle = (np.trace(rel) - 1.0) / 2.0
    return math.degrees(math.acos(min(max(cos_angle, -1.0), 1.0)))


def viewpoint_errors(gt_vp: Viewpoint, pred_vp: Viewpoint):
    """(azimuth_error, elevation_error, polar_error, viewpoint_error) in degrees.

    Azimuth error wraps around +-180; polar error equals the elevation
    error by construction (polar angle = 90 - elevation) and is reported
    under its own name; viewpoint error is the angle between the two view
    direction vectors.
    """
    d_az = abs(gt_vp.azimuth - pred_vp.azimuth)
    azimuth_error = min(d_az, 360.0 - d_az)
    elevation_error = abs(gt_vp.elevation - pred_vp.elevation)
    # |delta(90 - elevation)| collapses to the elevation error exactly
    polar_error = elevation_error
    cos_angle = float(np.dot(gt_vp.direction(), pred_vp.direction()))
    viewpoint_error = math.degrees(math.acos(min(max(cos_angle, -1.0), 1.0)))
    return azimuth_error, elevation_error, polar_error, viewpoint_error


def match_detections(gt_objects, predictions, gate_ratio: float = 0.5) -> MatchResult:
    """Greedy confidence-ordered center matching.

    Each prediction (highest confidence first, input order on ties) claims
    the nearest unclaimed same-category ground truth whose center distance
    is at most ``gate_ratio`` times that ground truth's box diagonal.
    """
    if gate_ratio <= 0:
        raise ValidationError("gate_ratio must be positive")
    gt_objects = list(gt_objects)
    predictions = list(predictions)
    order = sorted(range(len(predictions)), key=lambda i: (-predictions[i].confidence, i))
    claimed = [False] * len(gt_objects)
    pairs = []
    unmatched_pred = []
    for pi in order:
        pred = predictions[pi]
        center = pred.box.translation
        best_gi = -1
        best_dist = math.inf
        for gi, gt in enumerate(gt_objects):
            if claimed[gi] or gt.category != pred.category:
                continue
            dist = float(np.linalg.norm(gt.box.translation - center))
            if dist <= gate_ratio * gt.box.diagonal and dist < best_dist:
                best_dist = dist
                best_gi = gi
        if best_gi >= 0:
            claimed[best_gi] = True
            pairs.append((best_gi, pi))
        else:
            unmatched_pred.append(pi)
    pairs.sort()
    unmatched_gt = tuple(i for i, c in enumerate(claimed) if not c)
    return MatchResult(tuple(pairs), unmatched_gt, tuple(sorted(unmatched_pred)))


def average_precision(records, num_gt: int) -> float:
    """Area under the precision envelope (all-point interpolation).

    ``records`` are (confidence, is_true_positive) pairs; ranking is by
    descending confidence with ties broken by input order.
    """
    if num_gt < 0:
        raise ValidationError("num_gt must be >= 0")
    records = list(records)
    if num_gt == 0 or not records:
        return 0.0
    order = sorted(range(len(records)), key=lambda i: (-records[i][0], i))
    precisions = []
    recalls = []
    tp = 0
    for rank, i in enumerate(order, start=1):
        tp += 1 if records[i][1] else 0
        precisions.append(tp / rank)
        recalls.append(tp / num_gt)
    for i in range(len(precisions) - 2, -1, -1):
        precisions[i] = max(precisions[i], precisions[i + 1])
    ap = 0.0
    prev_recall = 0.0
    for p, r in zip(precisions, recalls):
        ap += (r - prev_recall) * p
        prev_recall = r
    return ap


# ---------------------------------------------------------------------------
# frame evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _PairOutcome:
    frame_id: str
    category: str
    pred_index: int
    confidence: float
    record: MetricRecord | None  # None -> unmatched prediction (pure FP)


def _prediction_from_annotation(obj) -> ObjectPrediction:
    conf = 1.0 if obj.confidence is None else obj.confidence
    return ObjectPrediction(obj.category, obj.box, conf, obj.keypoints_2d)


def _keypoints_2d(obj, camera: CameraFrame):
    if getattr(obj, "keypoints_2d", None) is not None:
        return obj.keypoints_2d
    return project_box_keypoints(camera, obj.box)


def _evaluate_frame(gt_frame, pred_frame, config: EvalConfig):
    """Returns (per-category gt counts, list of _PairOutcome)."""
    camera = gt_frame.camera
    gt_objects = list(gt_frame.objects)
    predictions = [_prediction_from_annotation(o) for o in pred_frame.objects]
    pred_kp = [_keypoints_2d(o, pred_frame.camera) for o in pred_frame.objects]

    gt_counts: dict[str, int] = {}
    for obj in gt_objects:
        gt_counts[obj.category] = gt_counts.get(obj.category, 0) + 1

    match = match_detections(gt_objects, predictions, config.gate_ratio)
    outcomes = []
    for gi, pi in match.pairs:
        gt_obj = gt_objects[gi]
        pred = predictions[pi]
        symmetric = gt_obj.category in config.symmetric_categories
        if symmetric:
            result, angle = iou_3d_symmetric_detail(
                gt_obj.box, pred.box, SymmetrySpec("y", config.symmetry_samples)
            )
            gt_box_for_view = gt_obj.box.rotated_about_local_y(angle) if angle else gt_obj.box
        else:
            result = iou_3d(gt_obj.box, pred.box)
            gt_box_for_view = gt_obj.box
        gt_vp = viewpoint_of(camera, gt_box_for_view)
        pred_vp = viewpoint_of(camera, pred.box)
        az_err, el_err, polar_err, vp_err = viewpoint_errors(gt_vp, pred_vp)
        rot_err = rotation_error(gt_obj.box.rotation, pred.box.rotation)
        pix_err = pixel_projection_error(
            _keypoints_2d(gt_obj, camera), pred_kp[pi]
        )
        record = MetricRecord(
            iou=result.iou,
            pixel_error=pix_err,
            azimuth_error=az_err,
            elevation_error=el_err,
            polar_error=polar_err,
            viewpoint_error=vp_err,
            rotation_error=rot_err,
        )
        outcomes.append(
            _PairOutcome(gt_frame.frame_id, gt_obj.category, pi, pred.confidence, record)
        )
    for pi in match.unmatched_predictions:
        outcomes.append(
            _PairOutcome(
                gt_frame.frame_id,
                predictions[pi].category,
                pi,
                predictions[pi].confidence,
                None,
            )
        )
    return gt_counts, outcomes


def _evaluate_chunk(args):
    frames, config = args
    results = []
    for gt_frame, pred_frame in frames:
        results.append(_evaluate_frame(gt_frame, pred_frame, config))
    return results


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CategoryReport:
    category: str
    num_gt: int
    num_predictions: int
    num_matched: int
    ap_iou: float
    ap_azimuth: float
    ap_elevation: float
    mean_pixel_error: float | None
    curves: dict = field(default_factory=dict)

    def to_dict(self, include_curves: bool = True) -> dict:
        d = {
            "num_gt": self.num_gt,
            "num_predictions": self.num_predictions,
            "num_matched": self.num_matched,
            "ap_iou": self.ap_iou,
            "ap_azimuth": self.ap_azimuth,
            "ap_elevation": self.ap_elevation,
            "mean_pixel_error": self.mean_pixel_error,
        }
        if include_curves:
            d["curves"] = self.curves
        return d


@dataclass(frozen=True)
class EvalReport:
    """Per-category APs, pixel errors, counts, and the PR curves behind them."""

    config: EvalConfig
    categories: dict  # category -> CategoryReport, insertion-sorted by name
    num_frames: int

    @property
    def totals(self) -> dict:
        return {
            "num_frames": self.num_frames,
            "num_gt": sum(c.num_gt for c in self.categories.values()),
            "num_predictions": sum(c.num_predictions for c in self.categories.values()),
            "num_matched": sum(c.num_matched for c in self.categories.values()),
        }

    def _config_dict(self) -> dict:
        return {
            "iou_threshold": self.config.iou_threshold,
            "azimuth_threshold_deg": self.config.azimuth_threshold_deg,
            "elevation_threshold_deg": self.config.elevation_threshold_deg,
            "symmetric_categories": sorted(self.config.symmetric_categories),
            "symmetry_samples": self.config.symmetry_samples,
            "gate_ratio": self.config.gate_ratio,
            "ap_interpolation": "all_point",
        }

    def to_dict(self, include_curves: bool = True) -> dict:
        return {
            "config": self._config_dict(),
            "totals": self.totals,
            "categories": {
                name: rep.to_dict(include_curves)
                for name, rep in sorted(self.categories.items())
            },
        }

    def to_json(self, include_curves: bool = True) -> str:
        return json.dumps(self.to_dict(include_curves), indent=2, allow_nan=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(
            ["category", "metric", "threshold", "value",
             "num_gt", "num_predictions", "num_matched"]
        )
        for name, rep in sorted(self.categories.items()):
            rows = [
                ("ap_iou", self.config.iou_threshold, rep.ap_iou),
                ("ap_azimuth_deg", self.config.azimuth_threshold_deg, rep.ap_azimuth),
                ("ap_elevation_deg", self.config.elevation_threshold_deg, rep.ap_elevation),
                ("mean_pixel_error", "", rep.mean_pixel_error),
            ]
            for metric, threshold, value in rows:
                writer.writerow(
                    [name, metric, threshold,
                     "" if value is None else repr(float(value)),
                     rep.num_gt, rep.num_predictions, rep.num_matched]
                )
        return buf.getvalue()

    def to_markdown(self) -> str:
        """Per-metric tables with the nine categories as columns."""
        def row(label, getter, fmt="{:.4f}"):
            cells = []
            for cat in CATEGORY_ORDER:
                rep = self.categories.get(cat)
                value = getter(rep) if rep is not None else None
                cells.append("-" if value is None else fmt.format(value))
            return f"| {label} | " + " | ".join(cells) + " |"

        header = "| metric | " + " | ".join(CATEGORY_ORDER) + " |"
        rule = "|---" * (len(CATEGORY_ORDER) + 1) + "|"
        sections = [
            (f"Average precision at {self.config.iou_threshold:g} 3D IoU",
             "AP", lambda r: r.ap_iou),
            ("Mean pixel error of 2D projection of box vertices",
             "mean pixel error", lambda r: r.mean_pixel_error),
            (f"Average precision at {self.config.azimuth_threshold_deg:g} deg azimuth error",
             "AP", lambda r: r.ap_azimuth),
            (f"Average precision at {self.config.elevation_threshold_deg:g} deg elevation error",
             "AP", lambda r: r.ap_elevation),
        ]
        lines = ["# Evaluation report", ""]
        for title, label, getter in sections:
            lines += [f"## {title}", "", header, rule, row(label, getter), ""]
        lines += ["## Counts", "", header, rule,
                  row("ground truth", lambda r: r.num_gt, fmt="{:d}"),
                  row("predictions", lambda r: r.num_predictions, fmt="{:d}"),
                  row("matched", lambda r: r.num_matched, fmt="{:d}"), ""]
        return "\n".join(lines)


def _aggregate(config: EvalConfig, frame_results, num_frames: int) -> EvalReport:
    gt_counts: dict[str, int] = {}
    outcomes: list[_PairOutcome] = []
    for counts, frame_outcomes in frame_results:
        for cat, n in counts.items():
            gt_counts[cat] = gt_counts.get(cat, 0) + n
        outcomes.extend(frame_outcomes)

    categories = sorted(set(gt_counts) | {o.category for o in outcomes})
    reports = {}
    for cat in categories:
        cat_outcomes = sorted(
            (o for o in outcomes if o.category == cat),
            key=lambda o: (-o.confidence, o.frame_id, o.pred_index),
        )
        num_gt = gt_counts.get(cat, 0)
        matched = [o for o in cat_outcomes if o.record is not None]
        records_iou = [
            (o.confidence, o.record is not None and o.record.iou >= config.iou_threshold)
            for o in cat_outcomes
        ]
        records_az = [
            (o.confidence,
             o.record is not None
             and o.record.azimuth_error <= config.azimuth_threshold_deg)
            for o in cat_outcomes
        ]
        records_el = [
            (o.confidence,
             o.record is not None
             and o.record.elevation_error <= config.elevation_threshold_deg)
            for o in cat_outcomes
        ]
        mean_pix = (
            sum(o.record.pixel_error for o in matched) / len(matched)
            if matched
            else None
        )
        curves = {
            "iou": _curve(records_iou, num_gt),
            "azimuth": _curve(records_az, num_gt),
            "elevation": _curve(records_el, num_gt),
        }
        reports[cat] = CategoryReport(
            category=cat,
            num_gt=num_gt,
            num_predictions=len(cat_outcomes),
            num_matched=len(matched),
            ap_iou=average_precision(records_iou, num_gt),
            ap_azimuth=average_precision(records_az, num_gt),
            ap_elevation=average_precision(records_el, num_gt),
            mean_pixel_error=mean_pix,
            curves=curves,
        )
    return EvalReport(config=config, categories=reports, num_frames=num_frames)


def _curve(records, num_gt: int) -> dict:
    confidences = []
    precisions = []
    recalls = []
    tp = 0
    for rank, (conf, is_tp) in enumerate(records, start=1):
        tp += 1 if is_tp else 0
        confidences.append(conf)
        precisions.append(tp / rank)
        recalls.append(tp / num_gt if num_gt else 0.0)
    return {"confidence": confidences, "precision": precisions, "recall": recalls}


def evaluate(gt_frames, pred_frames, config: EvalConfig | None = None) -> EvalReport:
    """Run the full protocol over matching ground-truth/prediction streams.

    Both streams must cover exactly the same frame ids; otherwise
    FrameKeyMismatch is raised.  With ``config.worker_count > 1`` frames
    are sharded over a process pool; the report is identical either way.
    """
    config = config or EvalConfig()
    gt_by_id = {f.frame_id: f for f in gt_frames}
    pred_by_id = {f.frame_id: f for f in pred_frames}
    missing = sorted(set(gt_by_id) - set(pred_by_id))
    extra = sorted(set(pred_by_id) - set(gt_by_id))
    if missing or extra:
        raise FrameKeyMismatch(missing, extra)

    keys = sorted(gt_by_id)
    tasks = [(gt_by_id[k], pred_by_id[k]) for k in keys]
    workers = config.resolved_workers()

    if workers <= 1 or len(tasks) < 2:
        frame_results = _evaluate_chunk((tasks, config))
    else:
        chunk_size = max(1, math.ceil(len(tasks) / (workers * 4)))
        chunks = [
            (tasks[i : i + chunk_size], config)
            for i in range(0, len(tasks), chunk_size)
        ]
        frame_results = []
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_evaluate_chunk, chunks):
                frame_results.extend(part)
    return _aggregate(config, frame_results, num_frames=len(keys))


def annotation_variance(boxes) -> tuple[float, float, float]:
    """Spread of repeated annotations of one instance.

    Returns (orientation_std_deg, translation_std_m, scale_std_m):
      * orientation: RMS geodesic angle to the chordal-mean rotation,
      * translation: RMS distance to the mean center,
      * scale: RMS of each box's mean absolute edge-length deviation from
        the mean scale.
    """
    boxes = list(boxes)
    if len(boxes) < 2:
        raise TooFewSamples(f"need at least 2 annotations, got {len(boxes)}")
    rotations = np.stack([b.rotation for b in boxes])
    translations = np.stack([b.translation for b in boxes])
    scales = np.stack([b.scale for b in boxes])

    u, _, vt = np.linalg.svd(rotations.mean(axis=0))
    mean_rot = u @ np.diag([1.0, 1.0, np.linalg.det(u @ vt)]) @ vt
    angles = [
        math.acos(min(max((np.trace(mean_rot.T @ r) - 1.0) / 2.0, -1.0), 1.0))
        for r in rotations
    ]
    orientation_std = math.degrees(math.sqrt(float(np.mean(np.square(angles)))))

    mean_t = translations.mean(axis=0)
    translation_std = math.sqrt(
        float(np.mean(np.sum((translations - mean_t) ** 2, axis=1)))
    )

    mean_s = scales.mean(axis=0)
    per_box_dev = np.mean(np.abs(scales - mean_s), axis=1)
    scale_std = math.sqrt(float(np.mean(per_box_dev**2)))
    return orientation_std, translation_std, scale_std
