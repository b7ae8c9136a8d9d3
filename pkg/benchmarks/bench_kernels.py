"""Compare the compiled and numpy face-loop kernels.

    python benchmarks/bench_kernels.py [--sizes 64 128 256 512] [--repeat 20]

Prints the median wall time per call for each backend and the speedup, after
checking that both backends agree on the same inputs.
"""

import argparse
import statistics
import time

import numpy as np

from ksforced.kernels import available_backends

KERNELS = ("chemotaxis_divergence", "max_face_gradient", "face_dissipation", "face_gradient_sq")


def inputs(n, seed=0):
    rng = np.random.default_rng(seed)
    x = (np.arange(n) + 0.5) / n
    X, Y = np.meshgrid(x, x, indexing="ij")
    u = np.exp(-((X - 0.5) ** 2 + (Y - 0.5) ** 2) / 0.02) + 0.1 * rng.random((n, n))
    v = np.cos(np.pi * X) * np.cos(2 * np.pi * Y) + 0.05 * rng.standard_normal((n, n))
    h = 1.0 / n
    return np.ascontiguousarray(u), np.ascontiguousarray(v), h, h


def call(mod, name, u, v, dx, dy):
    fn = getattr(mod, name)
    if name in ("max_face_gradient", "face_gradient_sq"):
        return fn(v, dx, dy)
    return fn(u, v, dx, dy)


def timeit(fn, repeat):
    fn()  # warm-up
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[64, 128, 256, 512])
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args(argv)

    backends = available_backends()
    if "cython" not in backends:
        print("compiled backend not built; only the numpy kernels are available")
    names = sorted(backends)
    print(f"{'kernel':<24}{'n':>6}" + "".join(f"{b + ' [us]':>16}" for b in names) + f"{'speedup':>10}")
    for n in args.sizes:
        u, v, dx, dy = inputs(n)
        for k in KERNELS:
            ref = call(backends["python"], k, u, v, dx, dy)
            row = {}
            for b in names:
                out = call(backends[b], k, u, v, dx, dy)
                if not np.allclose(out, ref, rtol=1e-12, atol=1e-12 * np.max(np.abs(ref))):
                    raise SystemExit(f"{k} at n={n}: backend {b} disagrees with numpy")
                row[b] = timeit(lambda: call(backends[b], k, u, v, dx, dy), args.repeat)
            speed = row["python"] / row["cython"] if "cython" in row else float("nan")
            print(f"{k:<24}{n:>6}" + "".join(f"{row[b] * 1e6:>16.1f}" for b in names) + f"{speed:>10.2f}")


if __name__ == "__main__":
    main()
