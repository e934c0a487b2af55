"""Non-backtracking walk counts and the excess-based bounds on them."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from . import _kernels
from .errors import Disconnected, IndexOutOfRange, Overflow, PreconditionViolated, ValidationError
from .graph import INFINITY, Graph, Subgraph, ball, dist, excess, path_neighborhood


@dataclass(frozen=True)
class DirectedEdgeIndex:
    """The ``2|E|`` oriented edges of a graph, ordered by ``(tail, head)``.

    ``rev[e]`` is the index of the reversed edge. The non-backtracking
    relation sends ``(u, v)`` to every ``(v, w)`` with ``w != u``.
    """

    n: int
    tail: np.ndarray
    head: np.ndarray
    rev: np.ndarray

    @classmethod
    def from_graph(cls, G: Graph) -> "DirectedEdgeIndex":
        tail = np.repeat(np.arange(G.n, dtype=np.int64), G.degrees)
        head = np.asarray(G.indices, dtype=np.int64)
        key = tail * G.n + head
        rev = np.searchsorted(key, head * G.n + tail).astype(np.int64)
        return cls(G.n, tail, head, rev)

    @property
    def size(self) -> int:
        return int(self.tail.size)

    def index(self, u: int, v: int) -> int:
        key = self.tail * self.n + self.head
        k = int(np.searchsorted(key, u * self.n + v))
        if k >= key.size or key[k] != u * self.n + v:
            raise IndexOutOfRange(f"({u}, {v}) is not an edge")
        return k

    @cached_property
    def transfer(self) -> sp.csr_matrix:
        """Sparse 0/1 matrix ``B[e, f] = 1`` iff ``f`` continues ``e`` without backtracking."""
        rows, cols = [], []
        starts = np.searchsorted(self.tail, np.arange(self.n + 1))
        for e in range(self.size):
            v = self.head[e]
            for f in range(starts[v], starts[v + 1]):
                if f != self.rev[e]:
                    rows.append(e)
                    cols.append(f)
        data = np.ones(len(rows), dtype=np.int64)
        return sp.csr_matrix((data, (rows, cols)), shape=(self.size, self.size))


def _exact_counts(dei: DirectedEdgeIndex, start: int, max_len: int) -> list[list[int]]:
    # Python ints never overflow; used only when int64 would.
    n, m = dei.n, dei.size
    tail, head, rev = dei.tail.tolist(), dei.head.tolist(), dei.rev.tolist()
    rows = [[0] * n for _ in range(max_len + 1)]
    rows[0][start] = 1
    x = [1 if t == start else 0 for t in tail]
    for length in range(1, max_len + 1):
        in_sum = [0] * n
        for e in range(m):
            in_sum[head[e]] += x[e]
        rows[length] = in_sum
        x = [in_sum[tail[e]] - x[rev[e]] for e in range(m)]
    return rows


def nbw_count_table(G: Graph, i: int, max_len: int, exact: bool = False):
    """Counts of NBWs from ``i`` to every vertex, for all lengths ``0..max_len``.

    Returns an int64 array of shape ``(max_len + 1, n)``, or a list of lists of
    Python ints when ``exact`` is set and int64 would overflow.
    """
    G._check_vertex(i)
    if max_len < 0:
        raise ValidationError("length must be nonnegative")
    dei = DirectedEdgeIndex.from_graph(G)
    counts, ok = _kernels.K.nbw_counts(dei.tail, dei.head, dei.rev, G.n, int(i), int(max_len))
    if ok:
        return counts
    if not exact:
        raise Overflow(f"NBW counts from vertex {i} exceed int64 before length {max_len}")
    return _exact_counts(dei, int(i), int(max_len))


def count_nbw(G: Graph, i: int, j: int, length: int, exact: bool = False) -> int:
    """Number of non-backtracking walks of exactly ``length`` steps from ``i`` to ``j``."""
    G._check_vertex(j)
    table = nbw_count_table(G, i, length, exact=exact)
    return int(table[length][j])


@dataclass(frozen=True)
class BoundCheck:
    count: int
    bound: int
    omega: int
    length: int
    holds: bool


def verify_nbw_bound(G: Graph, i: int, j: int, k: int) -> BoundCheck:
    """Check ``#NBW(i -> j, dist + k - 1) <= 2**(omega k)``.

    ``omega`` is the excess of ``ball({i, j}, dist + k)``, which contains every
    walk being counted.
    """
    if k < 1:
        raise ValidationError("k must be at least 1")
    dd = dist(G, i, j)
    if dd is INFINITY:
        raise Disconnected(f"vertices {i} and {j} lie in different components")
    length = dd + k - 1
    omega = excess(ball(G, [i, j], dd + k))
    count = count_nbw(G, i, j, length, exact=True)
    bound = 2 ** (omega * k)
    return BoundCheck(count, bound, omega, length, count <= bound)


def _edges_in_parent(S: Graph) -> set:
    if isinstance(S, Subgraph):
        return set(map(tuple, S.parent_edges().tolist()))
    return set(S.edge_set)


def verify_escape_bound(G: Graph, H_sub: Graph, i: int, j: int, ell: int, k: int) -> BoundCheck:
    """Count length-``ell + k`` NBWs ``i -> j`` in ``G`` that leave ``H_sub``.

    Requires ``E_ell(i, j, G) ⊆ H_sub`` and compares against ``2**(omega (k+1) + 1)``
    with ``omega`` the excess of ``ball({i, j}, ell + k)``.
    """
    if k < 0 or ell < 0:
        raise ValidationError("ell and k must be nonnegative")
    if isinstance(H_sub, Subgraph) and H_sub.parent is not G and H_sub.parent != G:
        raise PreconditionViolated("H_sub is not a subgraph of G")
    h_edges = _edges_in_parent(H_sub)
    if not h_edges <= G.edge_set:
        raise PreconditionViolated("H_sub is not a subgraph of G")
    core = path_neighborhood(G, i, j, ell)
    if not _edges_in_parent(core) <= h_edges:
        raise PreconditionViolated("E_ell(i, j, G) is not contained in H_sub")
    h_verts = H_sub.vertices if isinstance(H_sub, Subgraph) else np.arange(H_sub.n)
    if i not in h_verts or j not in h_verts:
        raise PreconditionViolated("i and j must be vertices of H_sub")

    length = ell + k
    total = count_nbw(G, i, j, length, exact=True)
    if isinstance(H_sub, Subgraph):
        inside = count_nbw(H_sub, H_sub.local(i), H_sub.local(j), length, exact=True)
    else:
        inside = count_nbw(H_sub, i, j, length, exact=True)
    omega = excess(ball(G, [i, j], length))
    bound = 2 ** (omega * (k + 1) + 1)
    escaped = total - inside
    return BoundCheck(escaped, bound, omega, length, escaped <= bound)
