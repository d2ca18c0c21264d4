"""Bit-exact binary formats for corpora and codebooks, plus CSV schemas.

All on-disk integers and floats are little-endian regardless of host.
Corpus layout:   magic "SOULLAT1" | D u32 | N u64 | N*D f32 vectors.
Codebook layout: magic "SOULCB01" | D u32 | K u32 | seed u64 |
                 iterations u32 | objective f64 | p50 p90 p95 p99 f64 |
                 K u64 counts | K*D f32 centroids.
Drift CSV: header "clip,mean_dist,max_dist,frac_clipped,pivotal_cosine",
one row per clip, floats printed with 8 fractional digits, LF endings.
"""

from __future__ import annotations

import struct

import numpy as np

from .codebook import Codebook
from .core import LatentCorpus
from .driftlab import DriftReport

CORPUS_MAGIC = b"SOULLAT1"
CODEBOOK_MAGIC = b"SOULCB01"

DRIFT_CSV_HEADER = "clip,mean_dist,max_dist,frac_clipped,pivotal_cosine"
COMPARISON_CSV_HEADER = "clip,mean_dist_off,mean_dist_on,ratio"

_CORPUS_HEADER = struct.Struct("<IQ")
_CODEBOOK_HEADER = struct.Struct("<IIQI5d")


class FormatError(ValueError):
    """Base for on-disk format violations; offset is the failing byte."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class BadMagicError(FormatError):
    pass


class TruncatedFileError(FormatError):
    pass


class SizeMismatchError(FormatError):
    pass


class NonFinitePayloadError(FormatError):
    pass


def _check_magic(buf: bytes, magic: bytes, path: str) -> None:
    if len(buf) < len(magic):
        raise TruncatedFileError(
            f"{path}: expected at least {len(magic)} bytes for the magic, "
            f"got {len(buf)}", offset=len(buf))
    if buf[:len(magic)] != magic:
        raise BadMagicError(
            f"{path}: bad magic {buf[:len(magic)]!r}, expected {magic!r}",
            offset=0)


def _check_length(buf: bytes, expected: int, path: str) -> None:
    if len(buf) < expected:
        raise TruncatedFileError(
            f"{path}: truncated, expected {expected} bytes, got {len(buf)}",
            offset=len(buf))
    if len(buf) > expected:
        raise SizeMismatchError(
            f"{path}: {len(buf) - expected} trailing bytes, expected "
            f"{expected} bytes, got {len(buf)}", offset=expected)


def _check_finite_f32(arr: np.ndarray, base_offset: int, path: str,
                      what: str) -> None:
    finite = np.isfinite(arr.reshape(-1))
    if not finite.all():
        bad = int(np.argmin(finite))
        raise NonFinitePayloadError(
            f"{path}: non-finite {what} value at element {bad}",
            offset=base_offset + 4 * bad)


def write_corpus(corpus: LatentCorpus, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(CORPUS_MAGIC)
        fh.write(_CORPUS_HEADER.pack(corpus.dim, corpus.count))
        fh.write(np.ascontiguousarray(corpus.vectors, dtype="<f4").tobytes())


def read_corpus(path: str) -> LatentCorpus:
    """Load a corpus file. The free-text provenance label is not part of
    the on-disk format; loaded corpora carry an empty one."""
    with open(path, "rb") as fh:
        buf = fh.read()
    _check_magic(buf, CORPUS_MAGIC, path)
    header_end = 8 + _CORPUS_HEADER.size
    if len(buf) < header_end:
        raise TruncatedFileError(
            f"{path}: truncated header, expected {header_end} bytes, "
            f"got {len(buf)}", offset=len(buf))
    dim, count = _CORPUS_HEADER.unpack_from(buf, 8)
    if dim < 1:
        raise SizeMismatchError(f"{path}: declared dimension {dim} invalid",
                                offset=8)
    if count < 1:
        raise SizeMismatchError(f"{path}: declared count {count} invalid",
                                offset=12)
    _check_length(buf, header_end + 4 * count * dim, path)
    vectors = np.frombuffer(buf, dtype="<f4", count=count * dim,
                            offset=header_end).astype(np.float32)
    vectors = vectors.reshape(count, dim)
    _check_finite_f32(vectors, header_end, path, "vector")
    return LatentCorpus(vectors=vectors)


def write_codebook(cb: Codebook, path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(CODEBOOK_MAGIC)
        fh.write(_CODEBOOK_HEADER.pack(cb.dim, cb.k, cb.seed, cb.iterations,
                                       cb.objective, *cb.dist_quantiles))
        fh.write(np.ascontiguousarray(cb.counts, dtype="<u8").tobytes())
        fh.write(np.ascontiguousarray(cb.centroids, dtype="<f4").tobytes())


def read_codebook(path: str) -> Codebook:
    with open(path, "rb") as fh:
        buf = fh.read()
    _check_magic(buf, CODEBOOK_MAGIC, path)
    header_end = 8 + _CODEBOOK_HEADER.size
    if len(buf) < header_end:
        raise TruncatedFileError(
            f"{path}: truncated header, expected {header_end} bytes, "
            f"got {len(buf)}", offset=len(buf))
    dim, k, seed, iterations, objective, q50, q90, q95, q99 = \
        _CODEBOOK_HEADER.unpack_from(buf, 8)
    if dim < 1:
        raise SizeMismatchError(f"{path}: declared dimension {dim} invalid",
                                offset=8)
    if k < 1:
        raise SizeMismatchError(f"{path}: declared centroid count {k} "
                                f"invalid", offset=12)
    for off, name, value in ((28, "objective", objective),
                             (36, "p50", q50), (44, "p90", q90),
                             (52, "p95", q95), (60, "p99", q99)):
        if not np.isfinite(value):
            raise NonFinitePayloadError(
                f"{path}: non-finite {name}", offset=off)
    counts_end = header_end + 8 * k
    _check_length(buf, counts_end + 4 * k * dim, path)
    counts = np.frombuffer(buf, dtype="<u8", count=k,
                           offset=header_end).astype(np.uint64)
    centroids = np.frombuffer(buf, dtype="<f4", count=k * dim,
                              offset=counts_end).astype(np.float32)
    centroids = centroids.reshape(k, dim)
    _check_finite_f32(centroids, counts_end, path, "centroid")
    return Codebook(centroids=centroids, counts=counts,
                    dist_quantiles=(q50, q90, q95, q99), seed=seed,
                    iterations=iterations, objective=objective)


def write_drift_csv(report: DriftReport, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(DRIFT_CSV_HEADER + "\n")
        for i in range(report.num_clips):
            fh.write(f"{i},{report.mean_dist[i]:.8f},"
                     f"{report.max_dist[i]:.8f},"
                     f"{report.frac_clipped[i]:.8f},"
                     f"{report.pivotal_cosine[i]:.8f}\n")


def read_drift_csv(path: str) -> dict[str, list[float]]:
    """Parse a drift CSV back into column lists keyed by header name."""
    with open(path, "r", newline="") as fh:
        lines = fh.read().split("\n")
    if not lines or lines[0] != DRIFT_CSV_HEADER:
        raise FormatError(f"{path}: unexpected drift CSV header", offset=0)
    names = DRIFT_CSV_HEADER.split(",")
    columns: dict[str, list[float]] = {n: [] for n in names}
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != len(names):
            raise FormatError(f"{path}: malformed row {line!r}", offset=0)
        for name, part in zip(names, parts):
            columns[name].append(float(part))
    return columns


def write_comparison_csv(mean_off, mean_on, ratios, path: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(COMPARISON_CSV_HEADER + "\n")
        for i, (off, on, ratio) in enumerate(zip(mean_off, mean_on, ratios)):
            fh.write(f"{i},{off:.8f},{on:.8f},{ratio:.8f}\n")
