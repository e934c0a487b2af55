"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_kernels.py [--n 2000] [--d 3] [--repeat 3]

The first numba call of each kernel is a compile and is reported separately.
"""

import argparse
import time

import numpy as np

from klab import _kernels
from klab.nbw import DirectedEdgeIndex
from klab.sampler import sample_regular


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(G, rng):
    indptr = np.asarray(G.indptr, dtype=np.int64)
    indices = np.asarray(G.indices, dtype=np.int64)
    D = DirectedEdgeIndex.from_graph(G)
    src = np.array([0], dtype=np.int64)
    di = _kernels.NUMPY.bfs(indptr, indices, src, -1)
    dj = _kernels.NUMPY.bfs(indptr, indices, np.array([G.n - 1], dtype=np.int64), -1)
    eu, ev = G.edges[:, 0].copy(), G.edges[:, 1].copy()
    steps = 20 * G.num_edges
    picks = (rng.integers(0, G.num_edges, steps), rng.integers(0, G.num_edges, steps),
             rng.integers(0, 2, steps).astype(np.int64))
    nbr0 = np.array([G.neighbors(v) for v in range(G.n)], dtype=np.int64)

    def switch(K):
        K.switch_chain(nbr0.copy(), G.edges.copy(), *picks)

    return {
        "bfs": lambda K: K.bfs(indptr, indices, src, -1),
        "all_pairs": lambda K: K.all_pairs(indptr, indices),
        "ball_excess(r=4)": lambda K: K.ball_excess(indptr, indices, 4),
        "nbw_counts(L=20)": lambda K: K.nbw_counts(D.tail, D.head, D.rev, G.n, 0, 20),
        "path_mask(r=9)": lambda K: K.path_mask(eu, ev, di, dj, 9),
        f"switch_chain({steps} steps)": switch,
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--d", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    if _kernels.NUMBA is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    G = sample_regular(args.n, args.d, rng)
    print(f"graph: n={G.n} d={args.d} edges={G.num_edges}")
    print(f"{'kernel':<28}{'numpy [s]':>12}{'numba [s]':>12}{'compile [s]':>13}{'speedup':>10}")
    for name, fn in cases(G, rng).items():
        t0 = time.perf_counter()
        fn(_kernels.NUMBA)
        first = time.perf_counter() - t0
        t_nb = best_of(lambda: fn(_kernels.NUMBA), args.repeat)
        t_np = best_of(lambda: fn(_kernels.NUMPY), args.repeat)
        print(f"{name:<28}{t_np:>12.4f}{t_nb:>12.4f}{max(first - t_nb, 0):>13.2f}{t_np / t_nb:>10.1f}x")


if __name__ == "__main__":
    main()
