"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--scale 1.0]

Every case runs on both backends and checks that they agree before timing.
"""

from __future__ import annotations

import argparse
import sys
import timeit

import numpy as np

from gasleak import _accel
from gasleak.models.svr import rbf_kernel


def tree_case(rng, n, d):
    X = rng.normal(size=(n, d))
    y = np.sin(X[:, 0]) + X[:, 1] * X[:, 2 % d] + 0.1 * rng.normal(size=n)
    return X, y


def build_cases(scale: float, rng):
    n_tree = max(200, int(14700 * scale))
    X, y = tree_case(rng, n_tree, 15)
    rows = np.arange(n_tree)
    boot = rng.integers(0, n_tree, n_tree)
    tree = _accel.get("python").build_tree(X, y, rows, 15, 2, 1, -1, None)
    Z = rng.normal(size=(max(500, int(6300 * scale)), 15))

    n_svr = max(100, int(1000 * scale))
    Xs = rng.uniform(size=(n_svr, 15))
    ys = np.sin(3 * Xs[:, 0]) + Xs[:, 1]
    K = rbf_kernel(Xs, Xs, 1.0)

    r = np.abs(rng.normal(size=max(10_000, int(500_000 * scale))))
    return {
        f"build_tree full depth, n={n_tree}, d=15":
            lambda b: b.build_tree(X, y, rows, 15, 2, 1, -1, None),
        f"build_tree bootstrap + sqrt features, n={n_tree}":
            lambda b: b.build_tree(X, y, boot, 3, 2, 1, -1,
                                   np.random.default_rng(0).integers(0, 2**62, 3 * n_tree)),
        f"predict_tree, {Z.shape[0]} rows":
            lambda b: b.predict_tree(Z, *tree[:5]),
        f"smo_svr, n={n_svr}, C=10":
            lambda b: b.smo_svr(K, ys, 10.0, 0.01, 1e-3, 1_000_000),
        f"scan_detector, {r.size} samples":
            lambda b: b.scan_detector(r, 1.5, 30, 0.99, 3, False),
    }


def same(a, b) -> bool:
    if isinstance(a, tuple):
        return all(same(x, y) for x, y in zip(a, b))
    return bool(np.array_equal(np.asarray(a), np.asarray(b), equal_nan=True))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)

    if not _accel.compiled_available():
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    py, cy = _accel.get("python"), _accel.get("cython")
    cases = build_cases(args.scale, np.random.default_rng(args.seed))

    print(f"{'kernel':<46}{'python (s)':>12}{'cython (s)':>12}{'speedup':>9}")
    for name, fn in cases.items():
        if not same(fn(py), fn(cy)):
            print(f"{name}: backends disagree", file=sys.stderr)
            return 2
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:<46}{t_py:>12.4f}{t_cy:>12.4f}{t_py / t_cy:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
