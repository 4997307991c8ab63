"""Numeric kernels with optional numba acceleration.

Every kernel exists as a pure-numpy implementation (``*_np``) and, when numba
is available, an ``@njit``-compiled counterpart. The backend is resolved
lazily on first kernel call (importing numba is expensive, and short-lived
processes such as the bundled stub models never need it) and is selected by
the ``PEGEVAL_NUMBA`` environment variable:

    PEGEVAL_NUMBA=auto   use numba when importable (default)
    PEGEVAL_NUMBA=1      require numba, fail loudly if missing
    PEGEVAL_NUMBA=0      force the pure-numpy path

``benchmarks/bench_kernels.py`` compares the two paths directly.
"""

from __future__ import annotations

import os

import numpy as np

# ---------------------------------------------------------------------------
# pure-numpy implementations
# ---------------------------------------------------------------------------


def confusion_counts_np(gt: np.ndarray, pred: np.ndarray, n_classes: int):
    """Per-class TP/FP/FN over two equal-length label-index arrays."""
    pair = gt.astype(np.int64) * n_classes + pred.astype(np.int64)
    cm = np.bincount(pair, minlength=n_classes * n_classes).reshape(n_classes, n_classes)
    tp = np.diag(cm).copy()
    fn = cm.sum(axis=1) - tp
    fp = cm.sum(axis=0) - tp
    return tp, fp, fn


def iou_counts_np(gt: np.ndarray, pred: np.ndarray, n_classes: int):
    """Per-class intersection and union pixel counts for two index maps."""
    g = gt.reshape(-1).astype(np.int64)
    p = pred.reshape(-1).astype(np.int64)
    inter = np.bincount(g[g == p], minlength=n_classes)[:n_classes]
    area_g = np.bincount(g, minlength=n_classes)[:n_classes]
    area_p = np.bincount(p, minlength=n_classes)[:n_classes]
    union = area_g + area_p - inter
    return inter, union


def signed_rank_counts_np(n: int) -> np.ndarray:
    """Counts of sign assignments of ranks 1..n achieving each W+ value.

    Index w of the result is the number of the 2**n sign vectors whose
    positive-rank sum equals w; the array has length n*(n+1)/2 + 1.
    """
    max_w = n * (n + 1) // 2
    counts = np.zeros(max_w + 1, dtype=np.int64)
    counts[0] = 1
    for r in range(1, n + 1):
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[:-r]
        counts = counts + shifted
    return counts


def mwu_counts_np(n1: int, n2: int) -> np.ndarray:
    """Counts of rank subsets of size n1 (from n1+n2) achieving each U value.

    U = (sum of subset ranks) - n1*(n1+1)/2; result length is n1*n2 + 1 and
    its total is C(n1+n2, n1).
    """
    total = n1 + n2
    max_s = n1 * total - n1 * (n1 - 1) // 2  # sum of the n1 largest ranks
    ways = np.zeros((n1 + 1, max_s + 1), dtype=np.int64)
    ways[0, 0] = 1
    for r in range(1, total + 1):
        for k in range(min(n1, r), 0, -1):
            ways[k, r:] += ways[k - 1, : max_s + 1 - r]
    offset = n1 * (n1 + 1) // 2
    return ways[n1, offset : offset + n1 * n2 + 1].copy()


_NUMPY_IMPLS = {
    "confusion_counts": confusion_counts_np,
    "iou_counts": iou_counts_np,
    "signed_rank_counts": signed_rank_counts_np,
    "mwu_counts": mwu_counts_np,
}


def build_numba_impls() -> dict:
    """Import numba and compile the jitted kernels (raises ImportError without numba)."""
    from numba import njit

    @njit(cache=True)
    def confusion_counts_nb(gt, pred, n_classes):
        tp = np.zeros(n_classes, dtype=np.int64)
        fp = np.zeros(n_classes, dtype=np.int64)
        fn = np.zeros(n_classes, dtype=np.int64)
        for i in range(gt.shape[0]):
            g = gt[i]
            p = pred[i]
            if g == p:
                tp[g] += 1
            else:
                fn[g] += 1
                fp[p] += 1
        return tp, fp, fn

    @njit(cache=True)
    def iou_counts_nb(gt, pred, n_classes):
        inter = np.zeros(n_classes, dtype=np.int64)
        area_g = np.zeros(n_classes, dtype=np.int64)
        area_p = np.zeros(n_classes, dtype=np.int64)
        flat_g = gt.reshape(-1)
        flat_p = pred.reshape(-1)
        for i in range(flat_g.shape[0]):
            g = flat_g[i]
            p = flat_p[i]
            area_g[g] += 1
            area_p[p] += 1
            if g == p:
                inter[g] += 1
        union = area_g + area_p - inter
        return inter, union

    @njit(cache=True)
    def signed_rank_counts_nb(n):
        max_w = n * (n + 1) // 2
        counts = np.zeros(max_w + 1, dtype=np.int64)
        counts[0] = 1
        for r in range(1, n + 1):
            for w in range(max_w, r - 1, -1):
                counts[w] += counts[w - r]
        return counts

    @njit(cache=True)
    def mwu_counts_nb(n1, n2):
        total = n1 + n2
        max_s = n1 * total - n1 * (n1 - 1) // 2
        ways = np.zeros((n1 + 1, max_s + 1), dtype=np.int64)
        ways[0, 0] = 1
        for r in range(1, total + 1):
            k = min(n1, r)
            while k > 0:
                for s in range(max_s, r - 1, -1):
                    ways[k, s] += ways[k - 1, s - r]
                k -= 1
        offset = n1 * (n1 + 1) // 2
        out = np.zeros(n1 * n2 + 1, dtype=np.int64)
        for u in range(n1 * n2 + 1):
            out[u] = ways[n1, offset + u]
        return out

    return {
        "confusion_counts": confusion_counts_nb,
        "iou_counts": iou_counts_nb,
        "signed_rank_counts": signed_rank_counts_nb,
        "mwu_counts": mwu_counts_nb,
    }


_ACTIVE: dict | None = None
_BACKEND: str | None = None


def _resolve() -> dict:
    global _ACTIVE, _BACKEND
    if _ACTIVE is not None:
        return _ACTIVE
    flag = os.environ.get("PEGEVAL_NUMBA", "auto").strip().lower()
    if flag in ("0", "false", "off", "no"):
        _ACTIVE, _BACKEND = _NUMPY_IMPLS, "numpy"
    elif flag in ("1", "true", "on", "yes"):
        _ACTIVE, _BACKEND = build_numba_impls(), "numba"
    else:
        try:
            _ACTIVE, _BACKEND = build_numba_impls(), "numba"
        except ImportError:
            _ACTIVE, _BACKEND = _NUMPY_IMPLS, "numpy"
    return _ACTIVE


def active_backend() -> str:
    """Name of the backend in use ("numba" or "numpy")."""
    _resolve()
    return _BACKEND


def confusion_counts(gt, pred, n_classes):
    return _resolve()["confusion_counts"](gt, pred, n_classes)


def iou_counts(gt, pred, n_classes):
    return _resolve()["iou_counts"](gt, pred, n_classes)


def signed_rank_counts(n):
    return _resolve()["signed_rank_counts"](n)


def mwu_counts(n1, n2):
    return _resolve()["mwu_counts"](n1, n2)
