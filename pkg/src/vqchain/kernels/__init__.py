"""Distance kernels with a compiled fast path and a NumPy reference path.

Both backends implement identical bit-level semantics (see ``pyref``); the
active one is chosen at import time and reported by ``backend_name()``.
``VQCHAIN_BACKEND=python`` in the environment forces the reference path.
"""

from __future__ import annotations

import os

import numpy as np

from . import pyref

# Points per reduction chunk. Fixed: partial sums are grouped per chunk and
# combined in chunk order, so this number is part of the bit contract.
REDUCE_CHUNK = 8192

if os.environ.get("VQCHAIN_BACKEND", "").lower() == "python":
    _impl = pyref
    COMPILED = False
else:
    try:
        from . import _ckern as _impl  # type: ignore[no-redef]
        COMPILED = True
    except ImportError:
        _impl = pyref
        COMPILED = False


def backend_name() -> str:
    return "compiled" if COMPILED else "python"


def prep_centroids(centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Precompute the layouts both backends take: (d, k) f32 and (k, d) f64."""
    cent_t = np.ascontiguousarray(centroids.T, dtype=np.float32)
    cent64 = np.ascontiguousarray(centroids, dtype=np.float64)
    return cent_t, cent64


def assign_chunk(pts: np.ndarray, cent_t: np.ndarray, cent64: np.ndarray,
                 out_idx: np.ndarray, out_sqd: np.ndarray) -> None:
    """Write exact nearest indices (int64) and squared distances (float64)."""
    _impl.assign_chunk(pts, cent_t, cent64, out_idx, out_sqd)


def assign(pts: np.ndarray, centroids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Single-call assignment for moderate inputs; returns (idx, sqdist)."""
    pts = np.ascontiguousarray(pts, dtype=np.float32)
    cent_t, cent64 = prep_centroids(centroids)
    idx = np.empty(pts.shape[0], dtype=np.int64)
    sqd = np.empty(pts.shape[0], dtype=np.float64)
    assign_chunk(pts, cent_t, cent64, idx, sqd)
    return idx, sqd


def seed_scan(pts_t: np.ndarray, c: np.ndarray,
              dmin: np.ndarray, cum: np.ndarray) -> float:
    """One k-means++ round: fold one centroid into dmin, refresh cum."""
    return float(_impl.seed_scan(pts_t, c, dmin, cum))
