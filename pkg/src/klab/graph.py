"""Simple undirected graphs, neighborhoods, excess and deficit bookkeeping.

Graphs are immutable. Adjacency is stored in CSR form with sorted neighbor
lists, which keeps iteration order (and therefore every derived output)
deterministic. Subgraphs remember their parent and the parent labels of
their vertices; their deficit function is derived lazily, following the
two conventions

* restriction (balls, path neighborhoods): ``g_H(v) = g_G(v)``;
* vertex removal ``G^(X)``: ``g'(v) = g(v) + deg_G(v) - deg_{G^(X)}(v)``.

Unless given explicitly, the deficit of a top-level graph is ``d - deg(v)``.
"""

from __future__ import annotations

import functools
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from .errors import DeficitViolation, DuplicateEdge, IndexOutOfRange, SelfLoop, ValidationError


@functools.total_ordering
class _Infinity:
    """Distance between vertices in different components.

    Compares greater than every integer but refuses arithmetic, so an
    unreachable pair can never leak into a sum as a large number.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INFINITY"

    def __eq__(self, other):
        return other is self

    def __lt__(self, other):
        return False

    def __gt__(self, other):
        return other is not self

    def __hash__(self):
        return hash("klab.INFINITY")

    def __reduce__(self):
        return (_Infinity, ())


INFINITY = _Infinity()


def _csr_from_edges(n, edges):
    if len(edges) == 0:
        return np.zeros(n + 1, dtype=np.int64), np.empty(0, dtype=np.int64)
    src = np.concatenate([edges[:, 0], edges[:, 1]])
    dst = np.concatenate([edges[:, 1], edges[:, 0]])
    order = np.lexsort((dst, src))
    src, dst = src[order], dst[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(src, minlength=n), out=indptr[1:])
    return indptr, dst.astype(np.int64)


def _normalize_edges(n, edges, check=True):
    arr = np.asarray(edges, dtype=np.int64).reshape(-1, 2) if len(edges) else np.empty((0, 2), dtype=np.int64)
    if check and arr.size:
        if arr.min() < 0 or arr.max() >= n:
            bad = arr[(arr < 0) | (arr >= n)][0]
            raise IndexOutOfRange(f"vertex {int(bad)} outside [0, {n})")
        loops = arr[:, 0] == arr[:, 1]
        if loops.any():
            raise SelfLoop(f"self-loop at vertex {int(arr[loops][0, 0])}")
    arr = np.sort(arr, axis=1)
    if arr.size:
        order = np.lexsort((arr[:, 1], arr[:, 0]))
        arr = arr[order]
        if check:
            dup = np.all(arr[1:] == arr[:-1], axis=1)
            if dup.any():
                u, v = arr[1:][dup][0]
                raise DuplicateEdge(f"edge ({int(u)}, {int(v)}) given more than once")
    return arr


class Graph:
    """Simple undirected graph on vertices ``0..n-1``.

    Parameters
    ----------
    n : int
        Number of vertices.
    edges : array_like of shape (m, 2)
        Unordered vertex pairs.
    d : int, optional
        Target degree. Needed for the default deficit ``d - deg``.
    deficit : array_like of int, optional
        Explicit deficit function ``g``.
    """

    def __init__(self, n, edges=(), d=None, deficit=None, *, _checked=False):
        n = int(n)
        if n < 0:
            raise ValidationError("vertex count must be nonnegative")
        self.n = n
        if _checked:
            self.edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        else:
            self.edges = _normalize_edges(n, edges)
        self.edges.setflags(write=False)
        self.indptr, self.indices = _csr_from_edges(n, self.edges)
        self.indptr.setflags(write=False)
        self.indices.setflags(write=False)
        self.d = None if d is None else int(d)
        if deficit is not None:
            deficit = np.asarray(deficit, dtype=np.int64).copy()
            if deficit.shape != (n,):
                raise ValidationError("deficit must have one entry per vertex")
            if (deficit < 0).any():
                raise DeficitViolation("deficit must be nonnegative")
            deficit.setflags(write=False)
        self._deficit = deficit
        if self.d is not None:
            self._check_deficit(self.d)

    # -- basic accessors -------------------------------------------------
    @property
    def num_edges(self) -> int:
        return int(self.edges.shape[0])

    @functools.cached_property
    def degrees(self) -> np.ndarray:
        deg = np.diff(self.indptr)
        deg.setflags(write=False)
        return deg

    def degree(self, v: int) -> int:
        self._check_vertex(v)
        return int(self.indptr[v + 1] - self.indptr[v])

    def neighbors(self, v: int) -> np.ndarray:
        self._check_vertex(v)
        return self.indices[self.indptr[v]: self.indptr[v + 1]]

    def has_edge(self, u: int, v: int) -> bool:
        nb = self.neighbors(u)
        k = np.searchsorted(nb, v)
        return bool(k < nb.size and nb[k] == v)

    @functools.cached_property
    def edge_set(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    def adjacency(self, dtype=float) -> np.ndarray:
        A = np.zeros((self.n, self.n), dtype=dtype)
        if self.num_edges:
            A[self.edges[:, 0], self.edges[:, 1]] = 1
            A[self.edges[:, 1], self.edges[:, 0]] = 1
        return A

    def is_regular(self, d: int | None = None) -> bool:
        d = self.d if d is None else d
        return bool(self.n > 0 and np.all(self.degrees == d))

    # -- deficit ----------------------------------------------------------
    def deficit_for(self, d: int | None = None) -> np.ndarray:
        """Deficit function, defaulting to ``d - deg`` when none was given."""
        if self._deficit is not None:
            return self._deficit
        d = self._resolve_d(d)
        return (d - self.degrees).astype(np.int64)

    def extensible(self, d: int | None = None) -> np.ndarray:
        d = self._resolve_d(d)
        return self.degrees < d - self.deficit_for(d)

    def _resolve_d(self, d):
        if d is None:
            d = self.d
        if d is None:
            raise ValidationError("a target degree d is required")
        return int(d)

    def _check_deficit(self, d):
        g = self.deficit_for(d)
        bad = self.degrees + g > d
        if bad.any():
            v = int(np.flatnonzero(bad)[0])
            raise DeficitViolation(f"vertex {v}: deg {self.degrees[v]} + g {g[v]} exceeds d={d}")

    def with_degree(self, d: int) -> "Graph":
        """Same graph with target degree ``d`` attached."""
        return Graph(self.n, self.edges, d=d, deficit=self._deficit, _checked=True)

    def _check_vertex(self, v):
        if not 0 <= int(v) < self.n:
            raise IndexOutOfRange(f"vertex {v} outside [0, {self.n})")

    # -- comparison -------------------------------------------------------
    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.n == other.n
            and self.edges.shape == other.edges.shape
            and bool(np.array_equal(self.edges, other.edges))
        )

    def __hash__(self):
        return hash((self.n, self.edges.tobytes()))

    def __repr__(self):
        return f"{type(self).__name__}(n={self.n}, m={self.num_edges}, d={self.d})"

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        out = {"n": self.n, "edges": self.edges.tolist()}
        if self.d is not None:
            out["d"] = self.d
        return out


class Subgraph(Graph):
    """A graph carved out of ``parent``; local vertex ``k`` is parent vertex ``vertices[k]``.

    ``kind`` is ``"restrict"`` or ``"remove"`` and selects the deficit convention.
    """

    def __init__(self, parent: Graph, vertices, edges_local, kind: str):
        vertices = np.asarray(vertices, dtype=np.int64)
        vertices.setflags(write=False)
        self.parent = parent
        self.vertices = vertices
        self.kind = kind
        super().__init__(len(vertices), edges_local, d=parent.d, _checked=True)

    def deficit_for(self, d=None):
        key = ("_deficit_cache", d)
        cache = self.__dict__.setdefault("_dcache", {})
        if key in cache:
            return cache[key]
        g = self.parent.deficit_for(d)[self.vertices]
        if self.kind == "remove":
            g = g + self.parent.degrees[self.vertices] - self.degrees
        g = g.astype(np.int64)
        g.setflags(write=False)
        cache[key] = g
        return g

    @functools.cached_property
    def _local_index(self) -> dict:
        return {int(v): k for k, v in enumerate(self.vertices.tolist())}

    def local(self, v: int) -> int:
        """Local index of parent vertex ``v``."""
        try:
            return self._local_index[int(v)]
        except KeyError:
            raise IndexOutOfRange(f"parent vertex {v} not in subgraph") from None

    def parent_edges(self) -> np.ndarray:
        return self.vertices[self.edges] if self.num_edges else np.empty((0, 2), dtype=np.int64)

    def __eq__(self, other):
        base = Graph.__eq__(self, other)
        if base is NotImplemented or not base:
            return base
        if isinstance(other, Subgraph):
            return bool(np.array_equal(self.vertices, other.vertices))
        return True

    __hash__ = Graph.__hash__


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def build_graph(n: int, edges: Iterable[Sequence[int]], d: int | None = None, deficit=None) -> Graph:
    """Validate ``edges`` and build an immutable :class:`Graph`."""
    edges = list(edges) if not isinstance(edges, np.ndarray) else edges
    return Graph(n, edges, d=d, deficit=deficit)


def _vertex_array(G, X):
    X = np.unique(np.asarray(list(X) if not isinstance(X, np.ndarray) else X, dtype=np.int64))
    if X.size and (X[0] < 0 or X[-1] >= G.n):
        raise IndexOutOfRange(f"vertex set not contained in [0, {G.n})")
    return X


def distances_from(G: Graph, sources, max_dist: int = -1) -> np.ndarray:
    """BFS hop counts from a vertex set; ``-1`` marks unreached vertices."""
    src = _vertex_array(G, np.atleast_1d(sources))
    return _kernels.K.bfs(G.indptr, G.indices, src, int(max_dist))


def dist(G: Graph, u: int, v: int):
    """Geodesic distance, or :data:`INFINITY` across components."""
    G._check_vertex(u)
    G._check_vertex(v)
    if u == v:
        return 0
    dv = distances_from(G, [u])[v]
    return INFINITY if dv < 0 else int(dv)


def all_pairs_distances(G: Graph) -> np.ndarray:
    """Dense ``n x n`` hop-count matrix (int32, ``-1`` for unreachable)."""
    return _kernels.K.all_pairs(G.indptr, G.indices)


def induced_subgraph(G: Graph, verts, kind: str = "restrict") -> Subgraph:
    verts = _vertex_array(G, verts)
    local = np.full(G.n, -1, dtype=np.int64)
    local[verts] = np.arange(verts.size)
    if G.num_edges:
        keep = (local[G.edges[:, 0]] >= 0) & (local[G.edges[:, 1]] >= 0)
        e = local[G.edges[keep]]
    else:
        e = np.empty((0, 2), dtype=np.int64)
    return Subgraph(G, verts, e, kind)


def edge_subgraph(G: Graph, edge_mask: np.ndarray, extra_vertices=()) -> Subgraph:
    """Subgraph made of the masked edges, their endpoints and ``extra_vertices``."""
    chosen = G.edges[edge_mask]
    verts = np.unique(np.concatenate([chosen.ravel(), np.asarray(list(extra_vertices), dtype=np.int64)]))
    local = np.full(G.n, -1, dtype=np.int64)
    local[verts] = np.arange(verts.size)
    return Subgraph(G, verts, local[chosen] if chosen.size else np.empty((0, 2), dtype=np.int64), "restrict")


def ball(G: Graph, X, r: int) -> Subgraph:
    """Induced subgraph on ``{j : dist(X, j) <= r}``; deficit by restriction."""
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    X = _vertex_array(G, np.atleast_1d(X))
    if X.size == 0:
        return induced_subgraph(G, X)
    dd = _kernels.K.bfs(G.indptr, G.indices, X, int(r))
    return induced_subgraph(G, np.flatnonzero(dd >= 0))


def path_neighborhood(G: Graph, i: int, j: int, r: int) -> Subgraph:
    """Union of all edges lying on some ``i -> j`` walk of length at most ``r``.

    An edge ``{u, v}`` is kept iff ``dist(i,u) + 1 + dist(v,j) <= r`` for one
    of its two orientations. The result is empty when ``dist(i, j) > r``.
    """
    if r < 0:
        raise ValidationError("radius must be nonnegative")
    G._check_vertex(i)
    G._check_vertex(j)
    di = _kernels.K.bfs(G.indptr, G.indices, np.array([i], dtype=np.int64), int(r))
    dj = di if i == j else _kernels.K.bfs(G.indptr, G.indices, np.array([j], dtype=np.int64), int(r))
    if di[j] < 0:
        return induced_subgraph(G, [])
    if G.num_edges:
        mask = _kernels.K.path_mask(G.edges[:, 0], G.edges[:, 1], di, dj, int(r))
    else:
        mask = np.zeros(0, dtype=bool)
    return edge_subgraph(G, mask, extra_vertices=(i, j))


def num_components(G: Graph) -> int:
    return len(components(G))


def components(G: Graph) -> list[np.ndarray]:
    """Connected components in discovery order, scanning vertices upward from 0."""
    seen = np.zeros(G.n, dtype=bool)
    out = []
    for v in range(G.n):
        if seen[v]:
            continue
        dd = _kernels.K.bfs(G.indptr, G.indices, np.array([v], dtype=np.int64), -1)
        comp = np.flatnonzero(dd >= 0)
        seen[comp] = True
        out.append(comp)
    return out


def excess(G: Graph) -> int:
    """#edges - #vertices + #components (0 exactly for forests)."""
    return G.num_edges - G.n + num_components(G)


def remove_vertices(G: Graph, X) -> Subgraph:
    """``G^(X)``: drop ``X`` and incident edges; removed edges count as deficit."""
    X = _vertex_array(G, X)
    keep = np.setdiff1d(np.arange(G.n, dtype=np.int64), X)
    return induced_subgraph(G, keep, kind="remove")


@dataclass(frozen=True)
class StructureStats:
    max_ball_excess: int
    count_cyclic_balls: int
    count_over_omega: int
    radius: int
    omega: int


def structure_stats(G: Graph, R: int, omega: int = 0) -> StructureStats:
    """Excess statistics of all radius-``R`` balls."""
    if R < 1:
        raise ValidationError("R must be at least 1")
    if G.n == 0:
        return StructureStats(0, 0, 0, R, omega)
    exc = _kernels.K.ball_excess(G.indptr, G.indices, int(R))
    return StructureStats(int(exc.max()), int((exc > 0).sum()), int((exc > omega).sum()), R, omega)


def structure_radius(n: int, d: int, kappa: float = 0.5, lo: int = 2, hi: int = 5) -> int:
    """``floor(kappa * log_{d-1} n)`` clipped to ``[lo, hi]``."""
    raw = int(np.floor(kappa * np.log(n) / np.log(d - 1))) if n > 1 else lo
    return int(min(max(raw, lo), hi))


def component_deficit_sums(S: Graph, d: int | None = None) -> list[int]:
    """Sum of the deficit over each connected component, in discovery order."""
    g = S.deficit_for(d)
    return [int(g[c].sum()) for c in components(S)]


# ---------------------------------------------------------------------------
# JSON
# ---------------------------------------------------------------------------

def graph_to_json(G: Graph, meta: dict | None = None) -> str:
    payload = G.to_dict()
    if meta is not None:
        payload["meta"] = meta
    return json.dumps(payload, sort_keys=False, separators=(",", ":")) + "\n"


def graph_from_dict(data: dict) -> Graph:
    if "n" not in data or "edges" not in data:
        raise ValidationError("graph JSON needs 'n' and 'edges'")
    d = data.get("d")
    edges = [tuple(e) for e in data["edges"]]
    if any(len(e) != 2 for e in edges):
        raise ValidationError("each edge must be a pair")
    return build_graph(int(data["n"]), edges, d=d)


def write_graph(G: Graph, path, meta: dict | None = None) -> None:
    Path(path).write_text(graph_to_json(G, meta))


def read_graph(path) -> Graph:
    return graph_from_dict(json.loads(Path(path).read_text()))
