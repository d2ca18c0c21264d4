"""On-disk formats: handcrafted byte layouts, error offsets, round-trips."""

import struct

import numpy as np
import pytest

from vqchain.codebook import Codebook
from vqchain.core import LatentCorpus
from vqchain.driftlab import DriftConfig, DriftReport
from vqchain.io import (
    CODEBOOK_MAGIC,
    COMPARISON_CSV_HEADER,
    CORPUS_MAGIC,
    DRIFT_CSV_HEADER,
    BadMagicError,
    FormatError,
    NonFinitePayloadError,
    SizeMismatchError,
    TruncatedFileError,
    read_codebook,
    read_corpus,
    read_drift_csv,
    write_codebook,
    write_comparison_csv,
    write_corpus,
    write_drift_csv,
)
from vqchain.scheduler import ChainConfig


def _corpus(n=6, d=3, seed=0):
    rng = np.random.default_rng(seed)
    return LatentCorpus(vectors=rng.standard_normal((n, d)).astype(np.float32))


def _codebook(k=4, d=3, seed=1):
    rng = np.random.default_rng(seed)
    return Codebook(centroids=rng.standard_normal((k, d)).astype(np.float32),
                    counts=np.arange(1, k + 1, dtype=np.uint64),
                    dist_quantiles=(0.25, 0.5, 0.75, 1.0),
                    seed=7, iterations=3, objective=12.5)


# -------------------------------------------------------------- corpus bytes

def test_corpus_bytes_handcrafted():
    # two 2-d vectors written field by field must read back identically
    vecs = np.array([[1.5, -2.0], [0.25, 8.0]], dtype=np.float32)
    blob = (CORPUS_MAGIC + struct.pack("<IQ", 2, 2)
            + vecs.astype("<f4").tobytes())
    path = "/tmp/corpus_hand.bin"
    with open(path, "wb") as fh:
        fh.write(blob)
    corpus = read_corpus(path)
    assert corpus.count == 2 and corpus.dim == 2
    assert corpus.vectors.tobytes() == vecs.tobytes()
    # and the writer produces exactly these bytes
    write_corpus(LatentCorpus(vectors=vecs), path)
    with open(path, "rb") as fh:
        assert fh.read() == blob


def test_corpus_round_trip_bit_identical(tmp_path):
    corpus = _corpus(n=100, d=16)
    path = str(tmp_path / "c.bin")
    write_corpus(corpus, path)
    again = read_corpus(path)
    assert again.vectors.tobytes() == corpus.vectors.tobytes()
    # a second write of the loaded corpus is byte-identical
    path2 = str(tmp_path / "c2.bin")
    write_corpus(again, path2)
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_corpus_provenance_not_persisted(tmp_path):
    path = str(tmp_path / "c.bin")
    write_corpus(LatentCorpus(vectors=np.ones((2, 2), dtype=np.float32),
                              provenance="scratch experiment"), path)
    assert read_corpus(path).provenance == ""


def test_corpus_bad_magic_offset_zero(tmp_path):
    path = str(tmp_path / "bad.bin")
    with open(path, "wb") as fh:
        fh.write(b"SOULNOPE" + b"\x00" * 20)
    with pytest.raises(BadMagicError) as err:
        read_corpus(path)
    assert err.value.offset == 0
    assert "(at byte 0)" in str(err.value)


def test_corpus_truncation_reports_actual_length(tmp_path):
    corpus = _corpus(n=4, d=2)
    path = str(tmp_path / "t.bin")
    write_corpus(corpus, path)
    blob = open(path, "rb").read()
    cut = len(blob) - 5
    with open(path, "wb") as fh:
        fh.write(blob[:cut])
    with pytest.raises(TruncatedFileError) as err:
        read_corpus(path)
    assert err.value.offset == cut
    assert f"expected {len(blob)} bytes, got {cut}" in str(err.value)


def test_corpus_trailing_bytes_rejected(tmp_path):
    path = str(tmp_path / "x.bin")
    write_corpus(_corpus(n=2, d=2), path)
    expected = 8 + 12 + 4 * 4
    with open(path, "ab") as fh:
        fh.write(b"JUNK")
    with pytest.raises(SizeMismatchError) as err:
        read_corpus(path)
    assert err.value.offset == expected


def test_corpus_nonfinite_payload_offset(tmp_path):
    vecs = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    blob = bytearray(CORPUS_MAGIC + struct.pack("<IQ", 2, 2)
                     + vecs.astype("<f4").tobytes())
    elem = 3                                    # poison vectors[1][1]
    base = 8 + 12
    blob[base + 4 * elem:base + 4 * (elem + 1)] = struct.pack("<f",
                                                              float("nan"))
    path = "/tmp/nan_corpus.bin"
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    with pytest.raises(NonFinitePayloadError) as err:
        read_corpus(path)
    assert err.value.offset == base + 4 * elem


def test_corpus_zero_count_rejected(tmp_path):
    path = str(tmp_path / "z.bin")
    with open(path, "wb") as fh:
        fh.write(CORPUS_MAGIC + struct.pack("<IQ", 2, 0))
    with pytest.raises(SizeMismatchError) as err:
        read_corpus(path)
    assert err.value.offset == 12


# ------------------------------------------------------------ codebook bytes

def test_codebook_bytes_handcrafted():
    cent = np.array([[1.0, 2.0], [3.0, 4.0]], dtype=np.float32)
    counts = np.array([5, 6], dtype=np.uint64)
    blob = (CODEBOOK_MAGIC
            + struct.pack("<IIQI5d", 2, 2, 9, 4, 7.5, 0.1, 0.2, 0.3, 0.4)
            + counts.astype("<u8").tobytes()
            + cent.astype("<f4").tobytes())
    path = "/tmp/cb_hand.bin"
    with open(path, "wb") as fh:
        fh.write(blob)
    cb = read_codebook(path)
    assert cb.k == 2 and cb.dim == 2
    assert cb.seed == 9 and cb.iterations == 4 and cb.objective == 7.5
    assert cb.dist_quantiles == (0.1, 0.2, 0.3, 0.4)
    assert cb.counts.tobytes() == counts.tobytes()
    assert cb.centroids.tobytes() == cent.tobytes()
    write_codebook(cb, path)
    with open(path, "rb") as fh:
        assert fh.read() == blob


def test_codebook_round_trip_bit_identical(tmp_path):
    cb = _codebook(k=32, d=8)
    path = str(tmp_path / "cb.bin")
    write_codebook(cb, path)
    again = read_codebook(path)
    assert again.centroids.tobytes() == cb.centroids.tobytes()
    assert again.counts.tobytes() == cb.counts.tobytes()
    assert again.dist_quantiles == cb.dist_quantiles
    assert again.seed == cb.seed
    assert again.iterations == cb.iterations
    assert again.objective == cb.objective
    path2 = str(tmp_path / "cb2.bin")
    write_codebook(again, path2)
    assert open(path, "rb").read() == open(path2, "rb").read()


def test_codebook_header_size_is_68():
    cb = _codebook(k=3, d=2)
    write_codebook(cb, "/tmp/cb_size.bin")
    size = len(open("/tmp/cb_size.bin", "rb").read())
    assert size == 68 + 8 * 3 + 4 * 3 * 2


def test_codebook_bad_magic(tmp_path):
    path = str(tmp_path / "bad.bin")
    with open(path, "wb") as fh:
        fh.write(CORPUS_MAGIC + b"\x00" * 80)   # corpus magic, wrong format
    with pytest.raises(BadMagicError) as err:
        read_codebook(path)
    assert err.value.offset == 0


def test_codebook_nonfinite_objective_offset(tmp_path):
    cb = _codebook(k=2, d=2)
    path = str(tmp_path / "cb.bin")
    write_codebook(cb, path)
    blob = bytearray(open(path, "rb").read())
    blob[28:36] = struct.pack("<d", float("inf"))
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    with pytest.raises(NonFinitePayloadError) as err:
        read_codebook(path)
    assert err.value.offset == 28


def test_codebook_nonfinite_centroid_offset(tmp_path):
    cb = _codebook(k=2, d=2)
    path = str(tmp_path / "cb.bin")
    write_codebook(cb, path)
    blob = bytearray(open(path, "rb").read())
    base = 68 + 8 * 2                           # after counts
    blob[base:base + 4] = struct.pack("<f", float("-inf"))
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    with pytest.raises(NonFinitePayloadError) as err:
        read_codebook(path)
    assert err.value.offset == base


def test_codebook_truncated_header(tmp_path):
    path = str(tmp_path / "short.bin")
    with open(path, "wb") as fh:
        fh.write(CODEBOOK_MAGIC + b"\x00" * 10)
    with pytest.raises(TruncatedFileError) as err:
        read_codebook(path)
    assert err.value.offset == 18


def test_codebook_decreasing_quantiles_rejected(tmp_path):
    cb = _codebook(k=2, d=2)
    path = str(tmp_path / "cb.bin")
    write_codebook(cb, path)
    blob = bytearray(open(path, "rb").read())
    blob[36:44] = struct.pack("<d", 99.0)       # p50 above p90
    with open(path, "wb") as fh:
        fh.write(bytes(blob))
    with pytest.raises(ValueError, match="non-decreasing"):
        read_codebook(path)


# --------------------------------------------------------------------- CSVs

def _report(n=3):
    return DriftReport(
        mean_dist=tuple(0.1 * (i + 1) for i in range(n)),
        max_dist=tuple(0.2 * (i + 1) for i in range(n)),
        frac_clipped=tuple(min(1.0, 0.3 * i) for i in range(n)),
        pivotal_cosine=tuple(1.0 - 0.01 * i for i in range(n)),
        drift=DriftConfig(bias=0.02, noise=0.01, ar_coeff=0.98),
        chain=ChainConfig(clip_latent_len=4, overlap=1, num_clips=n))


def test_drift_csv_exact_text(tmp_path):
    path = str(tmp_path / "d.csv")
    write_drift_csv(_report(2), path)
    text = open(path, "rb").read().decode()
    assert text == (
        "clip,mean_dist,max_dist,frac_clipped,pivotal_cosine\n"
        "0,0.10000000,0.20000000,0.00000000,1.00000000\n"
        "1,0.20000000,0.40000000,0.30000000,0.99000000\n")


def test_drift_csv_parse_back(tmp_path):
    report = _report(5)
    path = str(tmp_path / "d.csv")
    write_drift_csv(report, path)
    cols = read_drift_csv(path)
    assert set(cols) == set(DRIFT_CSV_HEADER.split(","))
    assert cols["clip"] == [0.0, 1.0, 2.0, 3.0, 4.0]
    for name, want in (("mean_dist", report.mean_dist),
                       ("max_dist", report.max_dist),
                       ("frac_clipped", report.frac_clipped),
                       ("pivotal_cosine", report.pivotal_cosine)):
        for got, exact in zip(cols[name], want):
            assert abs(got - exact) <= 1e-7


def test_drift_csv_rejects_wrong_header(tmp_path):
    path = str(tmp_path / "bad.csv")
    with open(path, "w") as fh:
        fh.write("clip,mean\n0,1\n")
    with pytest.raises(FormatError, match="header"):
        read_drift_csv(path)


def test_drift_csv_rejects_short_row(tmp_path):
    path = str(tmp_path / "bad.csv")
    with open(path, "w") as fh:
        fh.write(DRIFT_CSV_HEADER + "\n0,1.0,2.0\n")
    with pytest.raises(FormatError, match="malformed"):
        read_drift_csv(path)


def test_comparison_csv_text(tmp_path):
    path = str(tmp_path / "cmp.csv")
    write_comparison_csv([1.0, 4.0], [1.0, 2.0], [1.0, 2.0], path)
    text = open(path, "rb").read().decode()
    assert text == (COMPARISON_CSV_HEADER + "\n"
                    "0,1.00000000,1.00000000,1.00000000\n"
                    "1,4.00000000,2.00000000,2.00000000\n")


def test_csv_uses_lf_line_endings(tmp_path):
    path = str(tmp_path / "d.csv")
    write_drift_csv(_report(2), path)
    raw = open(path, "rb").read()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")
