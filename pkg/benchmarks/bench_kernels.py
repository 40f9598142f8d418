"""Compiled-vs-NumPy kernel timing table.

Runs the two hot kernels (mutual nearest neighbors, voxel downsample) on
both backends over a range of sizes and prints median wall-clock times
with the speedup of the compiled path. Also cross-checks that both
backends return bit-identical arrays on every workload, so the table
doubles as a consistency audit.

Usage: python3 benchmarks/bench_kernels.py [--repeats N] [--seed S]
"""

import argparse
import time

import numpy as np

from semscene.kernels import HAVE_COMPILED, _fallback

if HAVE_COMPILED:
    from semscene.kernels import _core
else:
    _core = None

NN_SIZES = (250, 500, 1000, 2000)
VOXEL_SIZES = (10_000, 100_000, 500_000)


def median_time(fn, repeats):
    best = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best.append(time.perf_counter() - t0)
    return float(np.median(best))


def check_equal(got, want):
    got = got if isinstance(got, tuple) else (got,)
    want = want if isinstance(want, tuple) else (want,)
    for g, w in zip(got, want):
        if not np.array_equal(np.asarray(g), np.asarray(w)):
            raise AssertionError("backend results diverge")


def bench_nn(rng, repeats, rows):
    for n in NN_SIZES:
        a = np.ascontiguousarray(rng.uniform(-2000, 2000, (n, 3)))
        b = np.ascontiguousarray(rng.uniform(-2000, 2000, (n, 3)))
        t_py = median_time(lambda: _fallback.nn_mutual(a, b), repeats)
        if _core is None:
            rows.append((f"nn_mutual {n}x{n}", None, t_py))
            continue
        t_c = median_time(lambda: _core.nn_mutual(a, b), repeats)
        check_equal(_core.nn_mutual(a, b), _fallback.nn_mutual(a, b))
        rows.append((f"nn_mutual {n}x{n}", t_c, t_py))


def bench_voxel(rng, repeats, rows):
    for n in VOXEL_SIZES:
        pts = np.ascontiguousarray(rng.uniform(-3000, 3000, (n, 3)))
        t_py = median_time(lambda: _fallback.voxel_downsample(pts, 50.0), repeats)
        if _core is None:
            rows.append((f"voxel_downsample {n}", None, t_py))
            continue
        t_c = median_time(lambda: _core.voxel_downsample(pts, 50.0), repeats)
        check_equal(_core.voxel_downsample(pts, 50.0),
                    _fallback.voxel_downsample(pts, 50.0))
        rows.append((f"voxel_downsample {n}", t_c, t_py))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=5,
                    help="timing repeats per cell (median reported)")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if args.repeats < 1:
        ap.error("--repeats must be at least 1")

    rng = np.random.default_rng(args.seed)
    rows = []
    bench_nn(rng, args.repeats, rows)
    bench_voxel(rng, args.repeats, rows)

    if _core is None:
        print("compiled extension not available; numpy fallback only\n")
    header = f"{'workload':<26}{'compiled':>12}{'numpy':>12}{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, t_c, t_py in rows:
        if t_c is None:
            print(f"{name:<26}{'-':>12}{t_py * 1e3:>10.2f}ms{'-':>10}")
        else:
            print(f"{name:<26}{t_c * 1e3:>10.2f}ms{t_py * 1e3:>10.2f}ms"
                  f"{t_py / t_c:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
