"""Benchmark the compiled kernel against the pure NumPy fallback.

Usage:
    python benchmarks/bench_kernels.py [--pairs N] [--symmetry-samples K]

Times the exact pair IoU, the symmetry-maximized IoU, and batch point
containment on identical random inputs, and reports the max result
difference between backends alongside the speedup.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from boxeval._kernel import available_backends  # noqa: E402


def random_rotation(rng):
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


def random_pairs(n, seed=0):
    rng = np.random.default_rng(seed)
    pairs = []
    for _ in range(n):
        sa = rng.uniform(0.05, 3.0, 3)
        sb = rng.uniform(0.05, 3.0, 3)
        ta = rng.uniform(-1.0, 1.0, 3)
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        offset = direction * rng.uniform(0.0, 0.6) * (np.linalg.norm(sa) + np.linalg.norm(sb))
        pairs.append((random_rotation(rng), ta, sa, random_rotation(rng), ta + offset, sb))
    return pairs


def bench(fn, args_list, repeat=1):
    start = time.perf_counter()
    out = []
    for _ in range(repeat):
        out = [fn(*args) for args in args_list]
    return (time.perf_counter() - start) / repeat, out


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--pairs", type=int, default=500)
    parser.add_argument("--symmetry-samples", type=int, default=32)
    parser.add_argument("--containment-points", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    backends = available_backends()
    if "compiled" not in backends:
        print("compiled backend not built; run `python setup.py build_ext --inplace`")
    pairs = random_pairs(args.pairs, args.seed)
    rng = np.random.default_rng(args.seed + 1)
    cloud = rng.uniform(-3, 3, (args.containment_points, 3))

    rows = []
    results = {}
    for name, mod in backends.items():
        t_iou, out_iou = bench(mod.iou_pair, pairs)
        sym_args = [p + (args.symmetry_samples,) for p in pairs[: max(1, args.pairs // 10)]]
        t_sym, out_sym = bench(mod.iou_symmetric, sym_args)
        box = pairs[0]
        t_pts, out_pts = bench(
            mod.points_in_box, [(box[0], box[1], box[2], cloud, 1e-9)], repeat=5
        )
        results[name] = (out_iou, out_sym, out_pts)
        rows.append(
            (name,
             1e6 * t_iou / args.pairs,
             1e6 * t_sym / len(sym_args),
             1e3 * t_pts)
        )

    print(f"{args.pairs} random box pairs, {args.symmetry_samples} symmetry samples, "
          f"{args.containment_points} containment points")
    print(f"{'backend':<10} {'iou_pair us':>12} {'iou_symmetric us':>18} {'containment ms':>16}")
    for name, t1, t2, t3 in rows:
        print(f"{name:<10} {t1:>12.1f} {t2:>18.1f} {t3:>16.2f}")

    if len(results) == 2:
        a, b = results["pure"], results["compiled"]
        d_iou = max(abs(x[0] - y[0]) for x, y in zip(a[0], b[0]))
        d_sym = max(abs(x[0] - y[0]) for x, y in zip(a[1], b[1]))
        same_mask = all(np.array_equal(x, y) for x, y in zip(a[2], b[2]))
        print(f"\nmax |iou difference|: {d_iou:.3e}   "
              f"max |symmetric difference|: {d_sym:.3e}   "
              f"containment masks identical: {same_mask}")
        base = dict((r[0], r) for r in rows)
        print(f"speedup: iou_pair {base['pure'][1] / base['compiled'][1]:.0f}x, "
              f"iou_symmetric {base['pure'][2] / base['compiled'][2]:.0f}x, "
              f"containment {base['pure'][3] / base['compiled'][3]:.1f}x")


if __name__ == "__main__":
    main()
