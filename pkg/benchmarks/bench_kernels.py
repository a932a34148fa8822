"""Time the numba kernels against the numpy fallback.

Run ``python benchmarks/bench_kernels.py``; each kernel is called once to
compile before timing, and both paths must agree.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from unionlap import _neighbors
from unionlap.manifolds import model_preset, sample_mixture


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=32000)
    parser.add_argument("--eps", type=float, default=0.054)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args(argv)

    cloud = sample_mixture(model_preset("paper-rect-segment"), args.n, 1)
    X = cloud.points
    w = np.full(args.n, 1.0 / args.n)
    f = np.sin(3 * X[:, 0]) + X[:, 2]

    cases = {
        "radius_neighbors": lambda nb: _neighbors.radius_neighbors(X, args.eps, use_numba=nb),
        "weighted_convolution": lambda nb: _neighbors.weighted_convolution(X, w, args.eps, 0, use_numba=nb),
        "weighted_pair_energy": lambda nb: _neighbors.weighted_pair_energy(X, w, f, args.eps, 0, use_numba=nb),
    }
    print(f"n={args.n} eps={args.eps} best of {args.repeat}")
    print(f"{'kernel':24s} {'numba [s]':>10s} {'numpy [s]':>10s} {'speedup':>8s}")
    for name, fn in cases.items():
        a, b = fn(True), fn(False)
        same = all(np.array_equal(x, y) for x, y in zip(a, b)) if isinstance(a, tuple) else np.allclose(a, b, rtol=1e-12)
        if not same:
            raise SystemExit(f"{name}: numba and numpy results differ")
        t_nb = best_of(lambda: fn(True), args.repeat)
        t_np = best_of(lambda: fn(False), args.repeat)
        print(f"{name:24s} {t_nb:10.3f} {t_np:10.3f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
