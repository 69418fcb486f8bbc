"""Independent brute-force ground truth for the exact geometry.

Everything here is deliberately written against plain NumPy, without
touching the kernels in ``boxeval._kernel``, so the two code paths share
no geometry code: the Monte-Carlo IoU and the brute-force hull volume are
the referees the exact implementations are tested against.

The Monte-Carlo stream uses the counter-based Philox generator keyed by
the seed, so every estimate is reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .geom import OrientedBox3

__all__ = ["McConfig", "mc_iou", "point_in_box", "brute_hull_volume"]

_CHUNK = 1 << 18


@dataclass(frozen=True)
class McConfig:
    """Sample budget and seed for a Monte-Carlo estimate."""

    sample_count: int = 1_000_000
    seed: int = 0

    def __post_init__(self):
        if int(self.sample_count) < 1:
            raise ValidationError("sample_count must be >= 1")
        object.__setattr__(self, "sample_count", int(self.sample_count))
        object.__setattr__(self, "seed", int(self.seed))


def _corners(box: OrientedBox3) -> np.ndarray:
    signs = 0.5 * (
        np.array([(k >> 2, (k >> 1) & 1, k & 1) for k in range(8)], dtype=np.float64)
        * 2.0
        - 1.0
    )
    return (signs * box.scale) @ box.rotation.T + box.translation


def _inside(box: OrientedBox3, pts: np.ndarray, eps: float) -> np.ndarray:
    local = (pts - box.translation) @ box.rotation / box.scale
    return np.all(np.abs(local) <= 0.5 + eps, axis=1)


def point_in_box(box: OrientedBox3, point, eps: float = 1e-9) -> bool:
    """Whether a point lies inside an oriented box (boundary inclusive).

    A point is inside when each component of inv(diag(s)) R^T (p - t) has
    magnitude at most 1/2 + eps.
    """
    p = np.asarray(point, dtype=np.float64).reshape(1, 3)
    return bool(_inside(box, p, eps)[0])


def mc_iou(x: OrientedBox3, y: OrientedBox3, cfg: McConfig | None = None):
    """Monte-Carlo IoU estimate: (estimate, standard_error).

    Samples uniformly over the axis-aligned bounding box of both boxes'
    corners and estimates IoU as hits(x and y) / hits(x or y).  The
    standard error comes from the binomial variance of that conditional
    fraction.  Deterministic for a fixed seed.
    """
    cfg = cfg or McConfig()
    corners = np.vstack([_corners(x), _corners(y)])
    lo = corners.min(axis=0)
    hi = corners.max(axis=0)
    span = hi - lo

    rng = np.random.Generator(np.random.Philox(cfg.seed))
    n_both = 0
    n_either = 0
    remaining = cfg.sample_count
    while remaining > 0:
        n = min(_CHUNK, remaining)
        pts = lo + rng.random((n, 3)) * span
        in_x = _inside(x, pts, 0.0)
        in_y = _inside(y, pts, 0.0)
        n_both += int(np.sum(in_x & in_y))
        n_either += int(np.sum(in_x | in_y))
        remaining -= n

    if n_either == 0:
        return 0.0, 0.0
    p = n_both / n_either
    stderr = float(np.sqrt(p * (1.0 - p) / n_either))
    return float(p), stderr


def brute_hull_volume(points, tol: float = 1e-9) -> float:
    """O(n^4) convex hull volume by supporting-plane enumeration.

    For every point triple, test whether its plane supports the whole set;
    group supporting planes, order each face's points around the face
    centroid, and sum tetrahedra from the cloud centroid.  Far too slow
    for production and kept simple on purpose: this is the referee for the
    fast hull implementations.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    # dedup
    kept: list[np.ndarray] = []
    for p in pts:
        if not kept or np.max(np.abs(np.asarray(kept) - p), axis=1).min() > tol:
            kept.append(p)
    pts = np.asarray(kept)
    n = len(pts)
    if n < 4:
        return 0.0

    centroid = pts.mean(axis=0)
    spread = float(np.linalg.norm(pts - centroid, axis=1).max())
    if spread <= tol:
        return 0.0
    plane_tol = max(1e-12 * spread, 1e-15)

    planes = []  # (unit normal, offset) with normal pointing away from centroid
    for i in range(n - 2):
        for j in range(i + 1, n - 1):
            for k in range(j + 1, n):
                normal = np.cross(pts[j] - pts[i], pts[k] - pts[i])
                norm = np.linalg.norm(normal)
                if norm < 1e-14 * spread * spread:
                    continue
                normal = normal / norm
                off = float(normal @ pts[i])
                side = pts @ normal - off
                if np.all(side <= plane_tol):
                    pass
                elif np.all(side >= -plane_tol):
                    normal, off, side = -normal, -off, -side
                else:
                    continue
                if normal @ centroid > off:
                    continue
                for pn, po in planes:
                    if abs(pn @ normal - 1.0) < 1e-9 and abs(po - off) < plane_tol * 4:
                        break
                else:
                    planes.append((normal, off))

    if not planes:
        return 0.0

    volume = 0.0
    for normal, off in planes:
        on_face = np.abs(pts @ normal - off) <= plane_tol * 4
        face = pts[on_face]
        if len(face) < 3:
            continue
        face_centroid = face.mean(axis=0)
        # 2D angular order around the face centroid
        ref = face[0] - face_centroid
        ref = ref - (ref @ normal) * normal
        ref /= np.linalg.norm(ref)
        other = np.cross(normal, ref)
        rel = face - face_centroid
        angles = np.arctan2(rel @ other, rel @ ref)
        face = face[np.argsort(angles, kind="stable")]
        for a in range(1, len(face) - 1):
            v = np.dot(
                face[0] - centroid,
                np.cross(face[a] - centroid, face[a + 1] - centroid),
            )
            volume += abs(v) / 6.0
    return float(volume)
