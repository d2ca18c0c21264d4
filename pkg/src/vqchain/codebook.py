"""K-means codebook construction, exact nearest-centroid search, and
threshold-aware feature replacement.

Determinism contract: given the same corpus (in order), the same config, and
any thread count, every build produces bit-identical results. Assignment is
chunked; per-chunk partial sums combine in ascending chunk order, never in
completion order.
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import (
    DimensionMismatchError,
    FeatureVector,
    LatentCorpus,
    LatentFrame,
    NonFiniteError,
)

QUANTILE_NAMES = ("p50", "p90", "p95", "p99")
QUANTILE_LEVELS = (0.50, 0.90, 0.95, 0.99)

# Cluster count used by full-scale deployments; desk-scale default is 4096.
FULL_SCALE_K = 40000
DESK_SCALE_K = 4096


@dataclass(frozen=True)
class KMeansConfig:
    """Build parameters. batch_size is "full" for Lloyd iterations or a
    positive integer for mini-batch updates with per-centroid learning rate
    1/count. convergence_tol stops full-batch runs on small relative
    objective change; mini-batch runs always execute max_iters."""

    k: int = DESK_SCALE_K
    max_iters: int = 25
    seed: int = 0
    batch_size: int | str = "full"
    convergence_tol: float = 1e-4

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be >= 1, got {self.max_iters}")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.batch_size != "full":
            if not isinstance(self.batch_size, int) or self.batch_size < 1:
                raise ValueError(
                    f'batch_size must be "full" or a positive integer, '
                    f"got {self.batch_size!r}")
        if not (math.isfinite(self.convergence_tol)
                and self.convergence_tol >= 0):
            raise ValueError("convergence_tol must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class Codebook:
    """K centroids plus the training statistics used for threshold selection.

    counts holds the final-assignment population of each centroid;
    dist_quantiles are the (p50, p90, p95, p99) nearest-centroid distances
    over the training corpus; seed, iterations, and objective record how the
    build ran.
    """

    centroids: np.ndarray
    counts: np.ndarray
    dist_quantiles: tuple[float, float, float, float]
    seed: int
    iterations: int
    objective: float

    def __post_init__(self):
        cent = np.array(self.centroids, dtype=np.float32)
        if cent.ndim != 2 or cent.shape[0] < 1 or cent.shape[1] < 1:
            raise ValueError(f"centroids must be (K, D), got {cent.shape}")
        if not np.isfinite(cent).all():
            raise NonFiniteError("centroids contain non-finite values")
        cent.setflags(write=False)
        object.__setattr__(self, "centroids", cent)
        counts = np.array(self.counts, dtype=np.uint64)
        if counts.shape != (cent.shape[0],):
            raise ValueError(
                f"counts must have shape ({cent.shape[0]},), got {counts.shape}")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        q = tuple(float(v) for v in self.dist_quantiles)
        if len(q) != 4:
            raise ValueError("dist_quantiles must hold (p50, p90, p95, p99)")
        if any(not math.isfinite(v) or v < 0 for v in q):
            raise ValueError("dist_quantiles must be finite and >= 0")
        if any(q[i] > q[i + 1] for i in range(3)):
            raise ValueError("dist_quantiles must be non-decreasing")
        object.__setattr__(self, "dist_quantiles", q)
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not math.isfinite(self.objective) or self.objective < 0:
            raise ValueError("objective must be finite and >= 0")

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]


@dataclass(frozen=True, eq=False)
class ProjectionOutcome:
    """Result of threshold-aware replacement for one feature vector."""

    vector: FeatureVector
    centroid_index: int
    original_distance: float
    clipped: bool


def _ordered_results(fn, arg_tuples, threads: int):
    """Run fn over arg tuples, yielding results in submission order.

    In-flight work is bounded so partial buffers never pile up; with
    threads <= 1 this degenerates to a plain loop with identical semantics.
    """
    if threads <= 1:
        for args in arg_tuples:
            yield fn(*args)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        pending = deque()
        for args in arg_tuples:
            pending.append(pool.submit(fn, *args))
            if len(pending) >= threads * 3:
                yield pending.popleft().result()
        while pending:
            yield pending.popleft().result()


def _chunk_bounds(n: int) -> list[tuple[int, int]]:
    step = kernels.REDUCE_CHUNK
    return [(s, min(s + step, n)) for s in range(0, n, step)]


def _assign_corpus(points: np.ndarray, centroids: np.ndarray,
                   threads: int) -> tuple[np.ndarray, np.ndarray]:
    """Exact assignment of every point; output is independent of threads."""
    n = points.shape[0]
    cent_t, cent64 = kernels.prep_centroids(centroids)
    idx = np.empty(n, dtype=np.int64)
    sqd = np.empty(n, dtype=np.float64)

    def work(s: int, e: int) -> None:
        kernels.assign_chunk(points[s:e], cent_t, cent64, idx[s:e], sqd[s:e])

    for _ in _ordered_results(work, _chunk_bounds(n), threads):
        pass
    return idx, sqd


def _accumulate(points: np.ndarray, idx: np.ndarray, k: int,
                threads: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-centroid float64 sums and counts, chunk-partialed in fixed order."""
    d = points.shape[1]
    sums = np.zeros((k, d))
    counts = np.zeros(k, dtype=np.int64)

    def work(s: int, e: int) -> tuple[np.ndarray, np.ndarray]:
        part = np.zeros((k, d))
        np.add.at(part, idx[s:e], points[s:e].astype(np.float64))
        return part, np.bincount(idx[s:e], minlength=k)

    for part, pcounts in _ordered_results(work, _chunk_bounds(points.shape[0]),
                                          threads):
        sums += part
        counts += pcounts
    return sums, counts


def _seed_kmeanspp(points: np.ndarray, k: int,
                   rng: np.random.Generator) -> np.ndarray:
    """k-means++ seeding: squared-distance weighted draws, uniform fallback
    when every remaining point coincides with a chosen centroid."""
    n = points.shape[0]
    pts_t = np.ascontiguousarray(points.T)
    cent = np.empty((k, points.shape[1]), dtype=np.float32)
    cent[0] = points[int(rng.integers(n))]
    dmin = np.full(n, np.inf)
    cum = np.empty(n)
    for i in range(1, k):
        total = kernels.seed_scan(pts_t, cent[i - 1].astype(np.float64),
                                  dmin, cum)
        if total > 0.0:
            r = rng.random() * total
            j = min(int(np.searchsorted(cum, r, side="right")), n - 1)
        else:
            j = int(rng.integers(n))
        cent[i] = points[j]
    return cent


def _update_centroids(points: np.ndarray, idx: np.ndarray, sqd: np.ndarray,
                      current: np.ndarray, threads: int) -> np.ndarray:
    """One Lloyd update: float64 means rounded to float32, then empty
    centroids repaired in ascending index order, each claiming the point
    farthest from its assigned centroid (claimed points excluded)."""
    k = current.shape[0]
    sums, counts = _accumulate(points, idx, k, threads)
    new = current.copy()
    filled = counts > 0
    new[filled] = (sums[filled] / counts[filled, None]).astype(np.float32)
    empties = np.flatnonzero(~filled)
    if empties.size:
        claim = sqd.copy()
        for e in empties:
            p = int(np.argmax(claim))
            new[e] = points[p]
            claim[p] = -1.0
    return new


def _final_stats(sqd: np.ndarray, idx: np.ndarray, k: int,
                 ) -> tuple[np.ndarray, tuple[float, float, float, float]]:
    counts = np.bincount(idx, minlength=k)
    dist = np.sqrt(sqd)
    q = np.quantile(dist, QUANTILE_LEVELS)
    return counts, (float(q[0]), float(q[1]), float(q[2]), float(q[3]))


def kmeans_build(corpus: LatentCorpus, config: KMeansConfig,
                 threads: int = 1,
                 history: list[float] | None = None) -> Codebook:
    """Build a codebook over the corpus.

    Seeding is k-means++ from config.seed. With batch_size "full" this runs
    Lloyd iterations whose objective (sum of squared nearest-centroid
    distances) never increases: an update that would raise it due to float32
    centroid rounding is rejected and the run stops. A mini-batch size runs
    Sculley-style sequential updates instead. Either way the returned counts,
    quantiles, and objective come from a final full assignment.

    history, when given, receives the objective after seeding and after each
    accepted update.
    """
    if corpus.count < config.k:
        raise ValueError(
            f"k ({config.k}) exceeds corpus size ({corpus.count})")
    points = corpus.vectors
    rng = np.random.default_rng(config.seed)
    centroids = _seed_kmeanspp(points, config.k, rng)

    if config.batch_size == "full":
        centroids, idx, sqd, obj, iters = _fit_full(
            points, centroids, config, threads, history)
    else:
        centroids, idx, sqd, obj, iters = _fit_minibatch(
            points, centroids, config, rng, threads, history)

    counts, quantiles = _final_stats(sqd, idx, config.k)
    return Codebook(centroids=centroids, counts=counts,
                    dist_quantiles=quantiles, seed=config.seed,
                    iterations=iters, objective=obj)


def _fit_full(points, centroids, config, threads, history):
    idx, sqd = _assign_corpus(points, centroids, threads)
    obj = float(np.sum(sqd))
    if history is not None:
        history.append(obj)
    iters = 0
    for _ in range(config.max_iters):
        new = _update_centroids(points, idx, sqd, centroids, threads)
        nidx, nsqd = _assign_corpus(points, new, threads)
        nobj = float(np.sum(nsqd))
        if nobj > obj:
            break
        prev = obj
        centroids, idx, sqd, obj = new, nidx, nsqd, nobj
        iters += 1
        if history is not None:
            history.append(obj)
        if prev - obj <= config.convergence_tol * prev:
            break
    return centroids, idx, sqd, obj, iters


def _fit_minibatch(points, centroids, config, rng, threads, history):
    n = points.shape[0]
    cent64 = centroids.astype(np.float64)
    cent32 = centroids.copy()
    lr_counts = np.zeros(config.k, dtype=np.int64)
    for _ in range(config.max_iters):
        batch = rng.integers(0, n, size=config.batch_size)
        bpts = np.ascontiguousarray(points[batch])
        ids, _ = kernels.assign(bpts, cent32)
        for x, i in zip(bpts, ids):
            lr_counts[i] += 1
            eta = 1.0 / lr_counts[i]
            cent64[i] += eta * (x.astype(np.float64) - cent64[i])
            cent32[i] = cent64[i].astype(np.float32)
    idx, sqd = _assign_corpus(points, cent32, threads)
    obj = float(np.sum(sqd))
    if history is not None:
        history.append(obj)
    return cent32, idx, sqd, obj, config.max_iters


def nearest_centroid(x: FeatureVector, cb: Codebook) -> tuple[int, float]:
    """Index and distance of the nearest centroid; ties take the lowest
    index. Exact: identical to an exhaustive float64 scan."""
    if x.dim != cb.dim:
        raise DimensionMismatchError(
            f"vector dimension {x.dim} vs codebook dimension {cb.dim}")
    idx, sqd = kernels.assign(x.values[None, :], cb.centroids)
    return int(idx[0]), math.sqrt(float(sqd[0]))


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if not math.isfinite(tau):
        raise NonFiniteError(f"tau must be finite, got {tau}")
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    return tau


def project_tokens(tokens: np.ndarray, cb: Codebook, tau: float,
                   ) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Threshold-aware replacement over a (S, D) token matrix.

    Returns (projected tokens, clipped mask, original distances, centroid
    indices). Tokens within tau of their nearest centroid pass through
    bit-unchanged; the rest move along their centroid offset until the
    distance equals tau.
    """
    tokens = np.ascontiguousarray(tokens, dtype=np.float32)
    if tokens.shape[1] != cb.dim:
        raise DimensionMismatchError(
            f"token dimension {tokens.shape[1]} vs codebook dimension {cb.dim}")
    tau = _check_tau(tau)
    idx, sqd = kernels.assign(tokens, cb.centroids)
    dist = np.sqrt(sqd)
    clipped = dist > tau
    if not clipped.any():
        return tokens, clipped, dist, idx
    x64 = tokens.astype(np.float64)
    c64 = cb.centroids.astype(np.float64)[idx]
    scale = np.ones_like(dist)
    np.divide(tau, dist, out=scale, where=clipped)
    moved = c64 + scale[:, None] * (x64 - c64)
    out = np.where(clipped[:, None], moved, x64).astype(np.float32)
    return out, clipped, dist, idx


def threshold_replace(x: FeatureVector, cb: Codebook,
                      tau: float) -> ProjectionOutcome:
    """Replace one feature vector when it strays beyond tau.

    If the nearest-centroid distance d is <= tau the vector is returned
    unchanged. Otherwise the offset is truncated: c + (tau / d) * (x - c),
    which lands at distance tau along the original direction.
    """
    out, clip_mask, dist, idx = project_tokens(x.values[None, :], cb, tau)
    clipped = bool(clip_mask[0])
    vec = FeatureVector(out[0]) if clipped else x
    return ProjectionOutcome(vector=vec, centroid_index=int(idx[0]),
                             original_distance=float(dist[0]), clipped=clipped)


def project_frame(frame: LatentFrame, cb: Codebook, tau: float) -> LatentFrame:
    """Apply threshold_replace to every token of a frame independently."""
    out, _, _, _ = project_tokens(frame.tokens, cb, tau)
    return LatentFrame(tokens=out, frame_index=frame.frame_index)


def suggest_tau(cb: Codebook, quantile: str = "p99") -> float:
    """Threshold suggestion from the stored training-distance quantiles."""
    if quantile not in QUANTILE_NAMES:
        raise ValueError(
            f"unknown quantile {quantile!r}; expected one of {QUANTILE_NAMES}")
    return cb.dist_quantiles[QUANTILE_NAMES.index(quantile)]
