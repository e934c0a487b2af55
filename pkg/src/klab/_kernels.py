"""Hot inner loops, in two interchangeable implementations.

Each kernel exists as a numba ``@njit`` function and as a pure-numpy
function with the same signature and bit-identical results. The active
backend is chosen once at import time::

    KLAB_BACKEND=numba   # default when numba is importable
    KLAB_BACKEND=numpy   # force the fallback

Both implementations stay importable as :data:`NUMBA` / :data:`NUMPY`
namespaces so tests and ``benchmarks/bench_kernels.py`` can compare them.

Graphs are passed in CSR form (``indptr``, ``indices``, int64, neighbor
lists sorted). Distances use ``-1`` for "not reached".
"""

import os
from types import SimpleNamespace

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

# Counts above this trigger an overflow report before any int64 wraps.
_COUNT_LIMIT = np.int64(2**62)


# ---------------------------------------------------------------------------
# pure numpy implementations
# ---------------------------------------------------------------------------

def _gather(indptr, indices, verts):
    starts = indptr[verts]
    lens = indptr[verts + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64)
    offs = np.repeat(starts - np.concatenate(([0], np.cumsum(lens)[:-1])), lens)
    return indices[offs + np.arange(total)]


def bfs_np(indptr, indices, sources, max_dist):
    n = indptr.shape[0] - 1
    dist = np.full(n, -1, dtype=np.int64)
    frontier = np.unique(np.asarray(sources, dtype=np.int64))
    dist[frontier] = 0
    level = 0
    while frontier.size and (max_dist < 0 or level < max_dist):
        nb = _gather(indptr, indices, frontier)
        nb = np.unique(nb[dist[nb] < 0])
        level += 1
        dist[nb] = level
        frontier = nb
    return dist


def all_pairs_np(indptr, indices):
    n = indptr.shape[0] - 1
    out = np.empty((n, n), dtype=np.int32)
    for s in range(n):
        out[s] = bfs_np(indptr, indices, np.array([s], dtype=np.int64), -1)
    return out


def ball_excess_np(indptr, indices, radius):
    n = indptr.shape[0] - 1
    out = np.zeros(n, dtype=np.int64)
    for s in range(n):
        dist = bfs_np(indptr, indices, np.array([s], dtype=np.int64), radius)
        verts = np.flatnonzero(dist >= 0)
        inside = dist[_gather(indptr, indices, verts)] >= 0
        n_edges = int(inside.sum()) // 2
        out[s] = n_edges - verts.size + 1
    return out


def nbw_counts_np(tail, head, rev, n, start, max_len):
    """Row ``L`` holds the number of NBWs of length ``L`` from ``start`` to each vertex."""
    counts = np.zeros((max_len + 1, n), dtype=np.int64)
    counts[0, start] = 1
    if max_len == 0 or tail.size == 0:
        return counts, True
    x = (tail == start).astype(np.int64)
    deg = np.bincount(head, minlength=n)
    limit = _COUNT_LIMIT // max(int(deg.max()), 1)
    for length in range(1, max_len + 1):
        if x.max(initial=0) > limit:
            return counts, False
        in_sum = np.zeros(n, dtype=np.int64)
        np.add.at(in_sum, head, x)
        counts[length] = in_sum
        if length < max_len:
            x = in_sum[tail] - x[rev]
    return counts, True


def switch_chain_np(nbr, edges, pick1, pick2, flips):
    accepted = 0
    for t in range(pick1.shape[0]):
        accepted += _switch_once_py(nbr, edges, pick1[t], pick2[t], flips[t])
    return accepted


def _switch_once_py(nbr, edges, e1, e2, flip):
    if e1 == e2:
        return 0
    a, b = edges[e1, 0], edges[e1, 1]
    c, dd = edges[e2, 0], edges[e2, 1]
    if flip:
        c, dd = dd, c
    if a == c or a == dd or b == c or b == dd:
        return 0
    if np.any(nbr[a] == dd) or np.any(nbr[b] == c):
        return 0
    # {a,b},{c,dd} -> {a,dd},{b,c}
    nbr[a][nbr[a] == b] = dd
    nbr[b][nbr[b] == a] = c
    nbr[c][nbr[c] == dd] = b
    nbr[dd][nbr[dd] == c] = a
    edges[e1, 0], edges[e1, 1] = a, dd
    edges[e2, 0], edges[e2, 1] = b, c
    return 1


def path_mask_np(eu, ev, dist_i, dist_j, r):
    du, dv = dist_i[eu], dist_i[ev]
    ju, jv = dist_j[eu], dist_j[ev]
    big = np.int64(1 << 40)
    du = np.where(du < 0, big, du)
    dv = np.where(dv < 0, big, dv)
    ju = np.where(ju < 0, big, ju)
    jv = np.where(jv < 0, big, jv)
    return (np.minimum(du + jv, dv + ju) + 1) <= r


NUMPY = SimpleNamespace(
    name="numpy",
    bfs=bfs_np,
    all_pairs=all_pairs_np,
    ball_excess=ball_excess_np,
    nbw_counts=nbw_counts_np,
    switch_chain=switch_chain_np,
    path_mask=path_mask_np,
)


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

def _build_numba():
    njit = numba.njit(cache=True, nogil=True)

    @njit
    def bfs_nb(indptr, indices, sources, max_dist):
        n = indptr.shape[0] - 1
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        tail = 0
        for s in sources:
            if dist[s] < 0:
                dist[s] = 0
                queue[tail] = s
                tail += 1
        h = 0
        while h < tail:
            u = queue[h]
            h += 1
            du = dist[u]
            if max_dist >= 0 and du >= max_dist:
                continue
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = du + 1
                    queue[tail] = w
                    tail += 1
        return dist

    @njit
    def all_pairs_nb(indptr, indices):
        n = indptr.shape[0] - 1
        out = np.empty((n, n), dtype=np.int32)
        src = np.empty(1, dtype=np.int64)
        for s in range(n):
            src[0] = s
            d = bfs_nb(indptr, indices, src, -1)
            for v in range(n):
                out[s, v] = d[v]
        return out

    @njit
    def ball_excess_nb(indptr, indices, radius):
        n = indptr.shape[0] - 1
        out = np.zeros(n, dtype=np.int64)
        dist = np.full(n, -1, dtype=np.int64)
        queue = np.empty(n, dtype=np.int64)
        for s in range(n):
            dist[s] = 0
            queue[0] = s
            tail = 1
            h = 0
            while h < tail:
                u = queue[h]
                h += 1
                if dist[u] >= radius:
                    continue
                for k in range(indptr[u], indptr[u + 1]):
                    w = indices[k]
                    if dist[w] < 0:
                        dist[w] = dist[u] + 1
                        queue[tail] = w
                        tail += 1
            half_edges = 0
            for t in range(tail):
                u = queue[t]
                for k in range(indptr[u], indptr[u + 1]):
                    if dist[indices[k]] >= 0:
                        half_edges += 1
            out[s] = half_edges // 2 - tail + 1
            for t in range(tail):
                dist[queue[t]] = -1
        return out

    @njit
    def nbw_counts_nb(tail, head, rev, n, start, max_len):
        counts = np.zeros((max_len + 1, n), dtype=np.int64)
        counts[0, start] = 1
        m = tail.shape[0]
        if max_len == 0 or m == 0:
            return counts, True
        deg = np.zeros(n, dtype=np.int64)
        for e in range(m):
            deg[head[e]] += 1
        limit = _COUNT_LIMIT // max(deg.max(), 1)
        x = np.zeros(m, dtype=np.int64)
        for e in range(m):
            if tail[e] == start:
                x[e] = 1
        in_sum = np.zeros(n, dtype=np.int64)
        for length in range(1, max_len + 1):
            if m and x.max() > limit:
                return counts, False
            in_sum[:] = 0
            for e in range(m):
                in_sum[head[e]] += x[e]
            counts[length] = in_sum
            if length < max_len:
                nx_ = np.empty(m, dtype=np.int64)
                for e in range(m):
                    nx_[e] = in_sum[tail[e]] - x[rev[e]]
                x = nx_
        return counts, True

    @njit
    def _has(nbr, u, v):
        for k in range(nbr.shape[1]):
            if nbr[u, k] == v:
                return True
        return False

    @njit
    def _replace(nbr, u, old, new):
        for k in range(nbr.shape[1]):
            if nbr[u, k] == old:
                nbr[u, k] = new
                return

    @njit
    def switch_chain_nb(nbr, edges, pick1, pick2, flips):
        accepted = 0
        for t in range(pick1.shape[0]):
            e1 = pick1[t]
            e2 = pick2[t]
            if e1 == e2:
                continue
            a = edges[e1, 0]
            b = edges[e1, 1]
            c = edges[e2, 0]
            dd = edges[e2, 1]
            if flips[t]:
                c, dd = dd, c
            if a == c or a == dd or b == c or b == dd:
                continue
            if _has(nbr, a, dd) or _has(nbr, b, c):
                continue
            _replace(nbr, a, b, dd)
            _replace(nbr, b, a, c)
            _replace(nbr, c, dd, b)
            _replace(nbr, dd, c, a)
            edges[e1, 0] = a
            edges[e1, 1] = dd
            edges[e2, 0] = b
            edges[e2, 1] = c
            accepted += 1
        return accepted

    @njit
    def path_mask_nb(eu, ev, dist_i, dist_j, r):
        m = eu.shape[0]
        out = np.zeros(m, dtype=np.bool_)
        for e in range(m):
            u = eu[e]
            v = ev[e]
            best = -1
            if dist_i[u] >= 0 and dist_j[v] >= 0:
                best = dist_i[u] + dist_j[v]
            if dist_i[v] >= 0 and dist_j[u] >= 0:
                alt = dist_i[v] + dist_j[u]
                if best < 0 or alt < best:
                    best = alt
            out[e] = best >= 0 and best + 1 <= r
        return out

    return SimpleNamespace(
        name="numba",
        bfs=bfs_nb,
        all_pairs=all_pairs_nb,
        ball_excess=ball_excess_nb,
        nbw_counts=nbw_counts_nb,
        switch_chain=switch_chain_nb,
        path_mask=path_mask_nb,
    )


NUMBA = _build_numba() if numba is not None else None


def select(name=None):
    """Return the kernel namespace for ``name`` (``"numba"`` or ``"numpy"``)."""
    name = (name or os.environ.get("KLAB_BACKEND", "numba")).lower()
    if name == "numpy" or NUMBA is None:
        return NUMPY
    if name != "numba":
        raise ValueError(f"unknown KLAB_BACKEND {name!r}")
    return NUMBA


K = select()
