"""Time the numba kernels against the numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--repeat 5]

The first numba call compiles; it is done once before timing.
"""
import argparse
import time

import numpy as np

from fracspec import _kernels
from fracspec.pcf import preset


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def cases(rng):
    ne = 1_000_000
    ei = np.arange(ne, dtype=np.int64)
    fem = (ei, ei + 1, rng.uniform(0.1, 1, ne), rng.uniform(0, 1, ne), rng.uniform(0, 1, ne))
    yield "p1_triplets (1e6 elements)", _kernels.p1_triplets, fem

    n, m = 200_000, 600_000
    tail, head = rng.integers(0, n, m), rng.integers(0, n, m)
    yield "edge_energy (6e5 edges)", _kernels.edge_energy, (tail, head, rng.uniform(0.1, 1, m), rng.standard_normal(n))

    # the identification pairs of a level-11 gasket
    sys, lvl = preset("sierpinski"), 11
    pa, pb = [], []
    for k in range(lvl):
        rest = lvl - k - 1
        pre = np.arange(3**k, dtype=np.int64) * 3 ** (lvl - k)
        for j, a, j2, b in sys.gluing:
            pa.append((pre + j * 3**rest + a * (3**rest - 1) // 2) * 3 + a)
            pb.append((pre + j2 * 3**rest + b * (3**rest - 1) // 2) * 3 + b)
    yield "min_label_components (gasket m=11)", _kernels.min_label_components, (3 ** (lvl + 1), np.concatenate(pa), np.concatenate(pb))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    if not _kernels.HAS_NUMBA:
        print("numba unavailable (or FRACSPEC_DISABLE_JIT set): nothing to compare")
        return
    rng = np.random.default_rng(0)
    print(f"{'kernel':36s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for name, fn, fargs in cases(rng):
        ref = fn(*fargs, backend="numpy")
        got = fn(*fargs, backend="numba")  # compiles
        if isinstance(ref, tuple):
            assert all(np.allclose(a, b) for a, b in zip(ref, got))
        else:
            assert np.allclose(ref, got)
        t_np = best_of(lambda: fn(*fargs, backend="numpy"), args.repeat)
        t_nb = best_of(lambda: fn(*fargs, backend="numba"), args.repeat)
        print(f"{name:36s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.1f}x")


if __name__ == "__main__":
    main()
