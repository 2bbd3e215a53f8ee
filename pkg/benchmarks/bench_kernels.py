"""Compiled vs numpy kernels: wall time per call and agreement of outputs.

The two backends share the counter-based generator, so integer outputs are
identical and floating-point outputs differ only in the last bits of libm
versus numpy transcendentals.

    python benchmarks/bench_kernels.py [--paths 20000] [--steps 256] [--repeat 3]
"""

import argparse
import time

import numpy as np

from hdwj._backend import get_kernels

SEED = 12345


def cases(n_paths, n_steps):
    inc = np.random.default_rng(0).standard_normal((n_paths, n_steps, 2))
    dz = np.random.default_rng(1).standard_normal((n_paths, n_steps)) * 0.01
    return {
        "normal_block": lambda k, th: k.normal_block(SEED, 0, 0, n_paths, 0, n_steps, 2, th),
        "stable_block": lambda k, th: k.stable_block(SEED, 2, 0, n_paths, 0, n_steps, 1.5, th),
        "gamma_block": lambda k, th: k.gamma_block(SEED, 4, 0, n_paths, 0, n_steps, 0.3, th),
        "poisson_block": lambda k, th: k.poisson_block(SEED, 6, 0, n_paths, 0, n_steps, 2.0, th),
        "cumulative_running_max": lambda k, th: k.cumulative_running_max(np.zeros(2), inc, th),
        "cogarch_recursion": lambda k, th: k.cogarch_recursion(0.0, 1.0, dz, dz * dz, 1e-3, 10.0,
                                                               np.log(0.5), 4.0),
    }


def best_of(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def max_rel_diff(a, b):
    if isinstance(a, tuple):
        return max(max_rel_diff(x, y) for x, y in zip(a, b))
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = np.maximum(np.abs(a), 1.0)
    return float(np.max(np.abs(a - b) / scale))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--paths", type=int, default=20000)
    ap.add_argument("--steps", type=int, default=256)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args()
    py = get_kernels("python")
    try:
        cy = get_kernels("cython")
    except ImportError:
        print("compiled kernels not built; nothing to compare")
        return
    print(f"{'kernel':<24}{'python s':>11}{'cython s':>11}{'speedup':>9}{'max rel diff':>14}")
    for name, fn in cases(args.paths, args.steps).items():
        tp, op = best_of(lambda: fn(py, args.threads), args.repeat)
        tc, oc = best_of(lambda: fn(cy, args.threads), args.repeat)
        print(f"{name:<24}{tp:11.4f}{tc:11.4f}{tp / tc:9.1f}{max_rel_diff(op, oc):14.2e}")


if __name__ == "__main__":
    main()
