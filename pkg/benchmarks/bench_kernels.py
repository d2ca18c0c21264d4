"""Compare the compiled distance kernels against the NumPy reference.

Both backends implement the same bit-level contract, so besides timing the
script also checks that their outputs match exactly. Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --n 1000000 --k 4096
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from vqchain.kernels import REDUCE_CHUNK, prep_centroids, pyref

try:
    from vqchain.kernels import _ckern
except ImportError:
    _ckern = None


def _time(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_assign(backend, pts, cent_t, cent64, repeats: int):
    n = pts.shape[0]
    idx = np.empty(n, dtype=np.int64)
    sqd = np.empty(n, dtype=np.float64)

    def run():
        for s in range(0, n, REDUCE_CHUNK):
            backend.assign_chunk(pts[s:s + REDUCE_CHUNK], cent_t, cent64,
                                 idx[s:s + REDUCE_CHUNK],
                                 sqd[s:s + REDUCE_CHUNK])

    secs = _time(run, repeats)
    return secs, idx, sqd


def bench_seed(backend, pts_t, cents64, repeats: int):
    n = pts_t.shape[1]

    def run():
        dmin = np.full(n, np.inf)
        cum = np.empty(n)
        for c in cents64:
            backend.seed_scan(pts_t, c, dmin, cum)
        return dmin

    secs = _time(run, repeats)
    return secs, run()


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=200000, help="points")
    ap.add_argument("--k", type=int, default=1024, help="centroids")
    ap.add_argument("--dim", type=int, default=16, help="dimensions")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--repeats", type=int, default=3,
                    help="timed repeats, best is reported")
    ap.add_argument("--seed-rounds", type=int, default=32,
                    help="seeding rounds to time")
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    pts = rng.standard_normal((args.n, args.dim)).astype(np.float32)
    cents = rng.standard_normal((args.k, args.dim)).astype(np.float32)
    cent_t, cent64 = prep_centroids(cents)
    pts_t = np.ascontiguousarray(pts.T)
    seed_cents = cent64[:args.seed_rounds]

    print(f"n={args.n} k={args.k} dim={args.dim} "
          f"(best of {args.repeats} runs)")
    if _ckern is None:
        print("compiled backend not built; timing the reference only")

    py_assign, py_idx, py_sqd = bench_assign(pyref, pts, cent_t, cent64,
                                             args.repeats)
    rate = args.n / py_assign / 1e6
    print(f"assign    python   {py_assign:8.3f}s  {rate:7.2f} Mpts/s")
    if _ckern is not None:
        c_assign, c_idx, c_sqd = bench_assign(_ckern, pts, cent_t, cent64,
                                              args.repeats)
        rate = args.n / c_assign / 1e6
        print(f"assign    compiled {c_assign:8.3f}s  {rate:7.2f} Mpts/s  "
              f"({py_assign / c_assign:.1f}x)")
        same = (c_idx.tobytes() == py_idx.tobytes()
                and c_sqd.tobytes() == py_sqd.tobytes())
        print(f"assign    outputs bit-identical: {same}")
        if not same:
            return 1

    py_seed, py_dmin = bench_seed(pyref, pts_t, seed_cents, args.repeats)
    print(f"seed_scan python   {py_seed:8.3f}s  "
          f"({args.seed_rounds} rounds)")
    if _ckern is not None:
        c_seed, c_dmin = bench_seed(_ckern, pts_t, seed_cents, args.repeats)
        print(f"seed_scan compiled {c_seed:8.3f}s  "
              f"({args.seed_rounds} rounds)  ({py_seed / c_seed:.1f}x)")
        same = c_dmin.tobytes() == py_dmin.tobytes()
        print(f"seed_scan outputs bit-identical: {same}")
        if not same:
            return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
