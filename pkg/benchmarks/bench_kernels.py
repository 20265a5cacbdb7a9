"""Micro-benchmark: compiled kernels against the pure-numpy fallback.

Usage:
    python3 benchmarks/bench_kernels.py [--size 512] [--stack 16] [--repeats 5]

Reports the best wall time of --repeats runs for each kernel and the
compiled/python speedup. Runs fine without the compiled extension; the
cython column is then skipped.
"""

import argparse
import time
from importlib.resources import files

import numpy as np

from hdrcal import _kernels_py, load_crf_csv

try:
    from hdrcal import _kernels
except ImportError:
    _kernels = None


def best_ms(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best * 1e3


def build_cases(size, stack):
    crf = load_crf_csv(str(files("hdrcal.data") / "default_crf.csv"))
    nodes_v, nodes_logi, nodes_irr = crf.nodes()
    dark = crf.black_level
    rng = np.random.default_rng(0)
    n = size * size

    mean_v = rng.uniform(0.0, 66000.0, n)
    u = rng.random(n)
    g = rng.standard_normal(n)
    logh = rng.uniform(nodes_logi[0] - 1.0, nodes_logi[-1] + 1.0, n)
    v = rng.uniform(0.0, 66000.0, n)
    v_stack = rng.uniform(0.0, 66000.0, (stack, n))
    scales = 2.0 ** np.arange(stack, dtype=np.float64)[::-1]
    est = rng.uniform(0.0, 1e6, (stack, n))
    wts = rng.uniform(0.0, 1.0, (stack, n))
    wts[:, : n // 100] = 0.0  # exercise the zero-weight fallback path
    eps = float(np.finfo(np.float32).tiny)

    return [
        (f"capture ({size}x{size})", "capture_kernel",
         (mean_v, np.full(n, 0.012), 2.0, 0.3, dark, 65535.0, u, g)),
        (f"forward ({n} px)", "forward_kernel",
         (logh, nodes_logi, nodes_v, dark)),
        (f"invert ({n} px)", "invert_kernel",
         (v, nodes_v, nodes_logi, nodes_irr, dark)),
        (f"fuse ({stack}x{n} px)", "fuse_kernel",
         (v_stack, scales, 389.6, 37486.7, nodes_v, nodes_logi, nodes_irr,
          dark)),
        (f"merge linear ({stack}x{n})", "weighted_merge_kernel",
         (est, wts, False, eps)),
        (f"merge log ({stack}x{n})", "weighted_merge_kernel",
         (est, wts, True, eps)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=512, help="image side (px)")
    ap.add_argument("--stack", type=int, default=16, help="exposures in stack")
    ap.add_argument("--repeats", type=int, default=5, help="best-of runs")
    args = ap.parse_args()

    cases = build_cases(args.size, args.stack)
    if _kernels is None:
        print("compiled extension not available; timing the fallback only")
    header = f"{'kernel':26s} {'python ms':>10s} {'cython ms':>10s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, name, call_args in cases:
        py_fn = getattr(_kernels_py, name)
        t_py = best_ms(lambda: py_fn(*call_args), args.repeats)
        if _kernels is None:
            print(f"{label:26s} {t_py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        cy_fn = getattr(_kernels, name)
        t_cy = best_ms(lambda: cy_fn(*call_args), args.repeats)
        print(f"{label:26s} {t_py:10.2f} {t_cy:10.2f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
