"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run with:  python3 benchmarks/bench_kernels.py
The same comparison can be forced package-wide via PEGEVAL_NUMBA=0/1.
"""

from __future__ import annotations

import time

import numpy as np

from pegeval import _accel

N_REPEATS = 5


def _best_of(fn, *args) -> float:
    best = float("inf")
    for _ in range(N_REPEATS):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> None:
    try:
        numba_impls = _accel.build_numba_impls()
    except ImportError:
        print("numba not importable; nothing to compare")
        return

    rng = np.random.default_rng(0)
    n_frames = 2_000_000  # ~ a full session of tracks, many times over
    gt_track = rng.integers(0, 13, n_frames)
    pred_track = rng.integers(0, 13, n_frames)
    gt_mask = rng.integers(0, 6, (1080, 1920))
    pred_mask = rng.integers(0, 6, (1080, 1920))

    cases = [
        ("confusion_counts (2M frames, 13 classes)", "confusion_counts",
         (gt_track, pred_track, 13)),
        ("iou_counts (1080x1920, 6 classes)", "iou_counts",
         (gt_mask, pred_mask, 6)),
        ("signed_rank_counts (n=25)", "signed_rank_counts", (25,)),
        ("mwu_counts (10 vs 10)", "mwu_counts", (10, 10)),
    ]

    print(f"{'kernel':45s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}")
    for title, name, args in cases:
        np_fn = getattr(_accel, f"{name}_np")
        nb_fn = numba_impls[name]
        nb_fn(*args)  # trigger compilation outside the timed region
        t_np = _best_of(np_fn, *args)
        t_nb = _best_of(nb_fn, *args)
        print(f"{title:45s} {t_np * 1e3:9.2f}ms {t_nb * 1e3:9.2f}ms {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
