"""Pure NumPy backend with the reference distance semantics.

Every value here is defined to the bit: squared distances accumulate in
float64 over ascending dimension index with separate multiply and add, the
argmin keeps the lowest tied index, and the seeding cumulative sum runs in
ascending point order. The compiled backend reproduces these exact bits; the
test suite compares the two bytewise.
"""

from __future__ import annotations

import numpy as np

# Cap on the (points x centroids) scratch matrix, in float64 elements.
_SCRATCH_ELEMS = 1 << 22


def assign_chunk(pts: np.ndarray, cent_t: np.ndarray, cent64: np.ndarray,
                 out_idx: np.ndarray, out_sqd: np.ndarray) -> None:
    """Exact nearest-centroid indices and squared distances for one chunk.

    ``cent_t`` is accepted for signature parity with the compiled backend
    and ignored; ``cent64`` is the (k, d) float64 centroid matrix.
    """
    n, d = pts.shape
    k = cent64.shape[0]
    step = max(1, _SCRATCH_ELEMS // max(1, k))
    for s in range(0, n, step):
        block = pts[s:s + step].astype(np.float64)
        acc = np.zeros((block.shape[0], k))
        for j in range(d):
            t = block[:, j, None] - cent64[None, :, j]
            acc += t * t
        idx = np.argmin(acc, axis=1)
        out_idx[s:s + step] = idx
        out_sqd[s:s + step] = acc[np.arange(block.shape[0]), idx]


def seed_scan(pts_t: np.ndarray, c: np.ndarray,
              dmin: np.ndarray, cum: np.ndarray) -> float:
    """Min-distance update against one centroid plus cumulative sum."""
    d, n = pts_t.shape
    if n == 0:
        return 0.0
    acc = np.zeros(n)
    for j in range(d):
        t = pts_t[j].astype(np.float64) - c[j]
        acc += t * t
    np.copyto(dmin, np.where(acc < dmin, acc, dmin))
    np.cumsum(dmin, out=cum)
    return float(cum[-1])
