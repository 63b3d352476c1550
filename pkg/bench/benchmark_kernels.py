"""Time the compiled kernels against the numpy fallback.

    python bench/benchmark_kernels.py [--repeat N]

Prints one line per kernel with the per-call time of each backend and the
speedup. Both backends are imported directly, so the environment variable
that forces the fallback does not matter here.
"""
import argparse
import timeit

import numpy as np

from deepguard import _pykernels

try:
    from deepguard import _ckernels
except ImportError:
    _ckernels = None


def cases(rng):
    a = rng.random((1, 36, 64))
    b = rng.random((1, 36, 64))
    series = np.cumsum(rng.normal(size=30)) * 1e-3 + 0.01
    beta = np.array([0.001, 0.5, 0.2, 0.1])
    img = rng.random((1, 36, 64))
    rows = np.arange(10, 36)
    centers = np.tile(np.array([20.0, 31.5, 43.0]), (rows.size, 1))
    halves = np.full_like(centers, 0.7)
    values = np.array([0.95, 0.55, 0.95])
    road_c = np.full(rows.size, 31.5)
    road_h = np.linspace(2.0, 20.0, rows.size)

    def paint(k):
        out = np.zeros((36, 64))
        k.paint_rows(out, rows, centers, halves, values, road_c, road_h, 0.45)

    return {
        "mean_sq_diff": lambda k: k.mean_sq_diff(a, b),
        "ar_normal_solve": lambda k: k.ar_normal_solve(series, 3, 1e-6),
        "ar_iterate": lambda k: k.ar_iterate(beta, series[-3:], 6),
        "gamma_p": lambda k: k.gamma_p(2.5, 3.1),
        "box_blur": lambda k: k.box_blur(img, 3),
        "paint_rows": paint,
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'python us':>12}{'cython us':>12}{'speedup':>10}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(_pykernels), number=args.repeat, repeat=3)) / args.repeat
        if _ckernels is None:
            print(f"{name:<16}{t_py * 1e6:>12.2f}{'n/a':>12}{'':>10}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=args.repeat, repeat=3)) / args.repeat
        print(f"{name:<16}{t_py * 1e6:>12.2f}{t_c * 1e6:>12.2f}{t_py / t_c:>9.1f}x")


if __name__ == "__main__":
    main()
