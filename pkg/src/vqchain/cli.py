"""Command-line surface for corpus generation, codebook builds, drift
simulations, and run comparison.

Exit codes: 0 success, 2 usage or precondition violation, 3 I/O failure.
Every command is deterministic given its flags, --threads included, and
summary output uses machine-readable key=value lines.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import io, kernels
from .codebook import KMeansConfig, kmeans_build, suggest_tau, QUANTILE_NAMES
from .core import DEFAULT_CLIP_LEN, DEFAULT_DIM, DEFAULT_TOKENS, LatentCorpus, LatentFrame
from .driftlab import DriftConfig, compare_series, simulate_long_run
from .scheduler import ChainConfig

# Spread of synthetic blob centers around the origin, in latent units.
BLOB_SPREAD = 3.0


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42,
                        help="RNG seed (default 42)")
    common.add_argument("--threads", type=int,
                        default=os.cpu_count() or 1,
                        help="worker threads (default: machine parallelism); "
                             "results are identical for any value")
    common.add_argument("--verbose", action="store_true",
                        help="progress and timing chatter on stderr")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="vqchain", parents=[common],
        description="latent codebooks, threshold replacement, and "
                    "drift simulations")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-corpus", parents=[common],
                       help="write a synthetic Gaussian-blob corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--n", type=int, required=True, help="vector count")
    p.add_argument("--dim", type=int, default=DEFAULT_DIM)
    p.add_argument("--blobs", type=int, default=8)
    p.add_argument("--blob-std", type=float, default=0.05)

    p = sub.add_parser("build-codebook", parents=[common],
                       help="run k-means over a corpus file")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, default=4096)
    p.add_argument("--iters", type=int, default=25)
    p.add_argument("--batch-size", default="full",
                   help='"full" for Lloyd iterations or an integer for '
                        "mini-batch updates")

    p = sub.add_parser("simulate", parents=[common],
                       help="long-run drift simulation against a codebook")
    p.add_argument("--codebook", required=True)
    p.add_argument("--clips", type=int, required=True)
    p.add_argument("--overlap", type=int, default=2)
    p.add_argument("--clip-len", type=int, default=DEFAULT_CLIP_LEN)
    p.add_argument("--tokens", type=int, default=DEFAULT_TOKENS,
                   help="spatial tokens per frame")
    p.add_argument("--tau", default="p99",
                   help="threshold: a number or one of p50/p90/p95/p99")
    p.add_argument("--bias", type=float, default=0.02)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--ar", type=float, default=0.98)
    p.add_argument("--replacement", choices=("on", "off"), default="on")
    p.add_argument("--report", required=True, help="drift CSV output path")

    p = sub.add_parser("compare", parents=[common],
                       help="compare mitigated and unmitigated drift CSVs")
    p.add_argument("--on", dest="on_path", required=True,
                   help="drift CSV of the replacement-on run")
    p.add_argument("--off", dest="off_path", required=True,
                   help="drift CSV of the replacement-off run")
    p.add_argument("--out", required=True, help="comparison CSV output path")
    return parser


def _cmd_gen_corpus(args) -> int:
    if args.n < 1 or args.dim < 1 or args.blobs < 1 or args.blob_std < 0:
        print("gen-corpus: --n, --dim, --blobs must be >= 1 and "
              "--blob-std >= 0", file=sys.stderr)
        return 2
    rng = np.random.default_rng(args.seed)
    centers = rng.standard_normal((args.blobs, args.dim)) * BLOB_SPREAD
    labels = rng.integers(0, args.blobs, size=args.n)
    noise = rng.standard_normal((args.n, args.dim))
    vectors = (centers[labels] + args.blob_std * noise).astype(np.float32)
    corpus = LatentCorpus(
        vectors=vectors,
        provenance=f"blobs={args.blobs} std={args.blob_std} seed={args.seed}")
    io.write_corpus(corpus, args.out)
    print(f"out={args.out}")
    print(f"n={args.n} dim={args.dim} "
          f"bytes={20 + 4 * args.n * args.dim}")
    return 0


def _cmd_build_codebook(args) -> int:
    corpus = io.read_corpus(args.corpus)
    batch = args.batch_size
    if batch != "full":
        batch = int(batch)
    config = KMeansConfig(k=args.k, max_iters=args.iters, seed=args.seed,
                          batch_size=batch)
    if args.verbose:
        print(f"backend={kernels.backend_name()} threads={args.threads}",
              file=sys.stderr)
    start = time.perf_counter()
    cb = kmeans_build(corpus, config, threads=args.threads)
    elapsed = time.perf_counter() - start
    io.write_codebook(cb, args.out)
    print(f"out={args.out}")
    print(f"objective={cb.objective!r} iterations={cb.iterations}")
    print(f"p50={cb.dist_quantiles[0]!r} p90={cb.dist_quantiles[1]!r} "
          f"p95={cb.dist_quantiles[2]!r} p99={cb.dist_quantiles[3]!r}")
    if args.verbose:
        print(f"build_seconds={elapsed:.2f}", file=sys.stderr)
    return 0


def _resolve_tau(text: str, cb) -> float:
    try:
        return float(text)
    except ValueError:
        pass
    return suggest_tau(cb, text)


def _cmd_simulate(args) -> int:
    cb = io.read_codebook(args.codebook)
    tau = _resolve_tau(args.tau, cb)
    rng = np.random.default_rng(args.seed)
    ref_tokens = cb.centroids[rng.integers(0, cb.k, size=args.tokens)]
    reference = LatentFrame(tokens=ref_tokens, frame_index=0)
    chain = ChainConfig(clip_latent_len=args.clip_len, overlap=args.overlap,
                        num_clips=args.clips, tau=tau,
                        use_replacement=args.replacement == "on",
                        use_overlap=True)
    drift = DriftConfig(bias=args.bias, noise=args.noise, ar_coeff=args.ar,
                        seed=args.seed)
    report = simulate_long_run(reference, cb, chain, drift)
    io.write_drift_csv(report, args.report)
    stitched = chain.clip_latent_len + \
        (chain.clip_latent_len - chain.overlap) * (chain.num_clips - 1)
    print(f"report={args.report}")
    print(f"tau={tau!r} stitched_len={stitched}")
    print(f"final_mean_dist={report.mean_dist[-1]!r} "
          f"frac_clipped={report.frac_clipped[-1]!r}")
    return 0


def _cmd_compare(args) -> int:
    on_cols = io.read_drift_csv(args.on_path)
    off_cols = io.read_drift_csv(args.off_path)
    summary = compare_series(off_cols["mean_dist"], on_cols["mean_dist"])
    io.write_comparison_csv(off_cols["mean_dist"], on_cols["mean_dist"],
                            summary.ratios, args.out)
    print(f"out={args.out}")
    print(f"final_ratio={summary.final_ratio!r}")
    print(f"mitigated={'true' if summary.mitigated else 'false'}")
    return 0


_COMMANDS = {
    "gen-corpus": _cmd_gen_corpus,
    "build-codebook": _cmd_build_codebook,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("--threads must be >= 1", file=sys.stderr)
        return 2
    if not 0 <= args.seed < 2 ** 64:
        print("--seed must fit in an unsigned 64-bit integer",
              file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](args)
    except (io.FormatError, OSError) as exc:
        print(f"vqchain {args.command}: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError) as exc:
        print(f"vqchain {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
