"""Compiled kernels vs their numpy fallbacks.

Each case builds one fixed input, checks that both paths return identical
arrays, then reports the best wall time of ``--repeat`` calls.

    python benchmarks/bench_kernels.py --repeat 5
"""

import argparse
import time

import numpy as np

from veinguard._jit import USE_NUMBA, py_func
from veinguard.flowsim.channel import run_channel
from veinguard.models._tree_kernels import (
    MODE_GINI, build_tree_nb, build_tree_numpy, forest_reduce_nb, forest_reduce_numpy,
)
from veinguard.models.base import one_hot
from veinguard.models.trees import Tree, pack
from veinguard.neighbors import _knn_kernel, _knn_numpy


def best_time(fn, args, repeat):
    out = fn(*args)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        times.append(time.perf_counter() - t0)
    return min(times), out


def same(a, b):
    if isinstance(a, tuple):
        return all(np.array_equal(x, y) for x, y in zip(a, b))
    return np.array_equal(a, b)


def cases(scale, rng):
    n = int(60_000 * scale)
    t = np.sort(rng.uniform(0, 30, size=n))
    channel = (t, rng.integers(0, 12, size=n), rng.choice([160, 1024, 1448], size=n), rng.random(n) < 0.98,
               rng.random(n), rng.uniform(0, 0.5, size=n), rng.uniform(0, 1e-6, size=n),
               rng.normal(-60, 3, size=n), rng.normal(-95, 1, size=n), 12, 6e6, 500)
    yield "channel", run_channel, py_func(run_channel), channel

    m = int(8000 * scale)
    X = rng.normal(size=(m, 5))
    y = rng.integers(0, 3, size=m)
    tree = (X, one_hot(y), np.arange(m), MODE_GINI, 0.0, 12, 2, 5, False, np.zeros(1))
    yield "tree build", build_tree_nb, build_tree_numpy, tree

    trees = [Tree(*build_tree_nb(X, one_hot(y), rng.integers(0, m, m), MODE_GINI, 0.0, 8, 2, 2, False,
                                 rng.random(1 << 16))) for _ in range(50)]
    packed = pack(trees)
    reduce_args = (X, *packed, np.zeros(50, dtype=np.int64), np.full(50, 0.02), 3)
    yield "forest predict", forest_reduce_nb, forest_reduce_numpy, reduce_args

    q = int(1500 * scale)
    knn = (X, X[:q], 5, np.arange(q))
    yield "knn", _knn_kernel, _knn_numpy, knn


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--scale", type=float, default=1.0, help="multiply every problem size")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    if not USE_NUMBA:
        print("numba disabled (VEINGUARD_DISABLE_NUMBA); both columns time the fallback")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':<16}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  identical")
    for name, fast, slow, kargs in cases(args.scale, rng):
        t_fast, out_fast = best_time(fast, kargs, args.repeat)
        t_slow, out_slow = best_time(slow, kargs, 1 if name == "channel" else args.repeat)
        print(f"{name:<16}{t_fast:>10.4f}{t_slow:>10.4f}{t_slow / t_fast:>8.1f}x  {same(out_fast, out_slow)}")


if __name__ == "__main__":
    main()
