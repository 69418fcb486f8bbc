"""Dataset statistics: viewpoint histograms and per-category counts.

For every (frame, object) sample the azimuth and elevation of the camera
in the object's local frame are histogrammed per category.  Frames group
into sequences by the frame-id prefix before the first "/" (a frame id
without "/" is its own sequence), which gives the per-sequence instance
averages alongside raw frame and instance counts.
"""

from __future__ import annotations

import csv
import io

import numpy as np

from .camera import viewpoint_of

__all__ = ["dataset_stats", "stats_to_csv"]


def _sequence_of(frame_id: str) -> str:
    return frame_id.split("/", 1)[0]


def dataset_stats(frames, bins: int = 36) -> dict:
    """Per-category counts plus azimuth/elevation histograms.

    Azimuth bins cover [-180, 180), elevation bins [-90, 90].
    """
    az_edges = np.linspace(-180.0, 180.0, bins + 1)
    el_edges = np.linspace(-90.0, 90.0, bins + 1)

    per_cat: dict[str, dict] = {}
    frame_count = 0
    for frame in frames:
        frame_count += 1
        seq = _sequence_of(frame.frame_id)
        for obj in frame.objects:
            entry = per_cat.setdefault(
                obj.category,
                {
                    "instances": 0,
                    "frames": set(),
                    "sequences": {},
                    "azimuths": [],
                    "elevations": [],
                },
            )
            vp = viewpoint_of(frame.camera, obj.box)
            entry["instances"] += 1
            entry["frames"].add(frame.frame_id)
            entry["sequences"].setdefault(seq, set()).add(obj.instance_id)
            entry["azimuths"].append(vp.azimuth)
            entry["elevations"].append(vp.elevation)

    categories = {}
    for cat in sorted(per_cat):
        entry = per_cat[cat]
        az_counts, _ = np.histogram(entry["azimuths"], bins=az_edges)
        el_counts, _ = np.histogram(entry["elevations"], bins=el_edges)
        n_sequences = len(entry["sequences"])
        distinct = {i for ids in entry["sequences"].values() for i in ids}
        categories[cat] = {
            "num_sequences": n_sequences,
            "num_frames": len(entry["frames"]),
            "num_instances": entry["instances"],
            "num_distinct_instances": len(distinct),
            "avg_instances_per_sequence": (
                len(distinct) / n_sequences if n_sequences else 0.0
            ),
            "azimuth_histogram": {
                "bin_edges_deg": az_edges.tolist(),
                "counts": az_counts.tolist(),
            },
            "elevation_histogram": {
                "bin_edges_deg": el_edges.tolist(),
                "counts": el_counts.tolist(),
            },
        }
    return {"num_frames": frame_count, "bins": bins, "categories": categories}


def stats_to_csv(stats: dict) -> str:
    """Long-form CSV: summary rows then one row per histogram bin."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["category", "kind", "bin_start_deg", "bin_end_deg", "value"])
    for cat, entry in stats["categories"].items():
        for key in ("num_sequences", "num_frames", "num_instances",
                    "num_distinct_instances", "avg_instances_per_sequence"):
            writer.writerow([cat, key, "", "", entry[key]])
        for kind in ("azimuth", "elevation"):
            hist = entry[f"{kind}_histogram"]
            edges = hist["bin_edges_deg"]
            for i, count in enumerate(hist["counts"]):
                writer.writerow([cat, f"{kind}_bin", edges[i], edges[i + 1], count])
    return buf.getvalue()
