"""Random regular graphs and local resampling of ball boundaries by switchings.

A switching encoded by oriented edges ``(v1, v2), (v3, v4)`` replaces
``{v1, v2}, {v3, v4}`` by ``{v1, v4}, {v2, v3}``.

Resampling a ball ``T = ball(center, ell)`` pairs each boundary edge
``(l_i, a_i)`` (``l_i`` inside, ``a_i`` outside) with an independent uniform
oriented edge ``(b_i, c_i)`` of ``G^(T)``. Entry ``i`` is switched when it is
admissible, which turns ``{l_i, a_i}, {b_i, c_i}`` into ``{l_i, c_i}, {a_i, b_i}``.
The transformed entry is ``(l_i, c_i, b_i, a_i)``. It keeps its index, so
applying the map twice restores both the graph and the data exactly.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    BallTooLarge,
    DegreeTooLarge,
    InvalidData,
    NotSwitchable,
    OddProduct,
    RetryBudgetExceeded,
    ValidationError,
)
from .graph import Graph, distances_from

# (d^2 - 1)/4 above this makes pairing rejection too slow; fall back to the switch chain.
PAIRING_LOG_COST_LIMIT = 9.5
DEFAULT_SWEEPS = 100


def as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _check_params(n, d):
    if n < 0 or d < 0:
        raise ValidationError("n and d must be nonnegative")
    if (n * d) % 2:
        raise OddProduct(f"n*d = {n * d} is odd")
    if d >= n and not (n == 0 and d == 0):
        raise DegreeTooLarge(f"d={d} must be smaller than n={n}")


def _pairing_once(n, d, rng):
    stubs = rng.permutation(np.repeat(np.arange(n, dtype=np.int64), d)).reshape(-1, 2)
    u, v = stubs.min(axis=1), stubs.max(axis=1)
    if np.any(u == v):
        return None
    key = np.sort(u * n + v)
    if np.any(key[1:] == key[:-1]):
        return None
    return np.column_stack([key // n, key % n])


def _pairing(n, d, rng, max_rounds):
    for _ in range(max_rounds):
        edges = _pairing_once(n, d, rng)
        if edges is not None:
            return edges
    raise RetryBudgetExceeded(f"no simple pairing in {max_rounds} rounds (n={n}, d={d})")


def _circulant(n, d):
    offsets = list(range(1, d // 2 + 1))
    if d % 2:
        offsets.append(n // 2)
    edges = set()
    for s in offsets:
        for v in range(n):
            u, w = v, (v + s) % n
            edges.add((min(u, w), max(u, w)))
    return np.array(sorted(edges), dtype=np.int64)


def switch_chain(edges: np.ndarray, n: int, d: int, steps: int, rng) -> np.ndarray:
    """Run the double-edge-swap chain on a simple ``d``-regular edge list.

    Each step proposes a uniform pair of edges and one of its two rewirings,
    rejecting proposals that would create a loop or a multi-edge. The
    proposal is symmetric, so the uniform law on simple graphs is stationary.
    """
    edges = np.array(edges, dtype=np.int64)
    m = edges.shape[0]
    nbr = np.full((n, d), -1, dtype=np.int64)
    fill = np.zeros(n, dtype=np.int64)
    for a, b in edges:
        nbr[a, fill[a]] = b
        fill[a] += 1
        nbr[b, fill[b]] = a
        fill[b] += 1
    pick1 = rng.integers(0, m, steps)
    pick2 = rng.integers(0, m, steps)
    flips = rng.integers(0, 2, steps).astype(np.bool_)
    _kernels.K.switch_chain(nbr, edges, pick1, pick2, flips)
    return edges


def sample_regular(n: int, d: int, rng=None, method: str = "auto", max_rounds: int = 100_000,
                   sweeps: int = DEFAULT_SWEEPS) -> Graph:
    """Random simple ``d``-regular graph on ``n`` vertices.

    ``method="pairing"`` draws configuration-model pairings until one is
    simple, which is exactly uniform. ``method="switch"`` relabels a
    circulant graph at random and runs ``sweeps * nd/2`` steps of the
    double-edge-swap chain. ``"auto"`` uses pairing unless its expected
    number of rounds is prohibitive.

    For ``d > (n - 1) / 2`` the complement (degree ``n - 1 - d``) is sampled
    instead; complementation is a bijection, so uniformity carries over.
    """
    n, d = int(n), int(d)
    _check_params(n, d)
    rng = as_rng(rng)
    if 2 * d > n - 1:
        H = sample_regular(n, n - 1 - d, rng, method, max_rounds, sweeps)
        full = np.ones((n, n), dtype=bool)
        full[H.edges[:, 0], H.edges[:, 1]] = False
        iu, ju = np.triu_indices(n, 1)
        keep = full[iu, ju]
        return Graph(n, np.column_stack([iu[keep], ju[keep]]), d=d)
    if d == 0:
        return Graph(n, [], d=0)
    if method == "auto":
        method = "pairing" if (d * d - 1) / 4 <= PAIRING_LOG_COST_LIMIT else "switch"
    if method == "pairing":
        edges = _pairing(n, d, rng, max_rounds)
    elif method == "switch":
        perm = rng.permutation(n)
        start = perm[_circulant(n, d)]
        m = start.shape[0]
        edges = switch_chain(start, n, d, sweeps * m, rng)
    else:
        raise ValidationError(f"unknown method {method!r}")
    return Graph(n, edges, d=d)


def simple_switch(G: Graph, pair) -> Graph:
    """Replace ``{v1, v2}, {v3, v4}`` by ``{v1, v4}, {v2, v3}`` for ``pair = ((v1, v2), (v3, v4))``."""
    (v1, v2), (v3, v4) = pair
    vs = [int(v) for v in (v1, v2, v3, v4)]
    for v in vs:
        G._check_vertex(v)
    if len(set(vs)) != 4:
        raise NotSwitchable("the two edges share a vertex")
    if not (G.has_edge(v1, v2) and G.has_edge(v3, v4)):
        raise NotSwitchable("both oriented edges must be present")
    if G.has_edge(v1, v4) or G.has_edge(v2, v3):
        raise NotSwitchable("switch would create a multi-edge")
    drop = {_key(v1, v2), _key(v3, v4)}
    kept = [e for e in G.edge_set if e not in drop]
    return Graph(G.n, kept + [_key(v1, v4), _key(v2, v3)], d=G.d, deficit=G._deficit)


def _key(u, v):
    u, v = int(u), int(v)
    return (u, v) if u < v else (v, u)


# ---------------------------------------------------------------------------
# resampling data
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ResamplingData:
    """Boundary records ``(l, a, b, c)`` of ``ball(center, ell)`` and the admissible indices."""

    center: int
    ell: int
    entries: np.ndarray
    admissible: tuple

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=np.int64).reshape(-1, 4)
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)
        object.__setattr__(self, "admissible", tuple(sorted(int(i) for i in self.admissible)))

    @property
    def mu(self) -> int:
        return int(self.entries.shape[0])

    def __eq__(self, other):
        if not isinstance(other, ResamplingData):
            return NotImplemented
        return (
            self.center == other.center
            and self.ell == other.ell
            and self.admissible == other.admissible
            and np.array_equal(self.entries, other.entries)
        )

    def to_dict(self) -> dict:
        return {
            "center": int(self.center),
            "ell": int(self.ell),
            "entries": self.entries.tolist(),
            "admissible": list(self.admissible),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "ResamplingData":
        try:
            return cls(int(data["center"]), int(data["ell"]), data["entries"], data["admissible"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidData(f"malformed resampling data: {exc}") from exc


@dataclass(frozen=True, eq=False)
class EnlargedSample:
    graph: Graph
    data: ResamplingData

    def __eq__(self, other):
        if not isinstance(other, EnlargedSample):
            return NotImplemented
        return self.graph == other.graph and self.data == other.data


def _regular_degree(G):
    d = G.d if G.d is not None else (int(G.degrees[0]) if G.n else 0)
    if not G.is_regular(d):
        raise ValidationError("resampling needs a regular graph")
    return d


def ball_boundary(G: Graph, center: int, ell: int):
    """``(inside_mask, boundary)`` with boundary the sorted ``(l, a)`` pairs leaving the ball."""
    if ell < 0:
        raise ValidationError("ell must be nonnegative")
    inside = distances_from(G, [center], int(ell)) >= 0
    tail = np.repeat(np.arange(G.n, dtype=np.int64), G.degrees)
    head = np.asarray(G.indices)
    leaving = inside[tail] & ~inside[head]
    boundary = np.column_stack([tail[leaving], head[leaving]])  # already (l, a)-sorted
    return inside, boundary


def _outside_edges(G, inside):
    e = G.edges
    return e[~inside[e[:, 0]] & ~inside[e[:, 1]]]


def admissible_indices(G: Graph, entries: np.ndarray) -> list[int]:
    """Indices ``i`` with ``I_i J_i = 1``.

    ``I_i``: the four vertices of entry ``i`` are distinct and induce exactly
    the two edges ``{l, a}``, ``{b, c}``. ``J_i``: entry ``i`` shares at most
    one vertex with every other entry.
    """
    entries = np.asarray(entries, dtype=np.int64).reshape(-1, 4)
    mu = entries.shape[0]
    ok = np.ones(mu, dtype=bool)
    for i in range(mu):
        l, a, b, c = (int(x) for x in entries[i])
        if len({l, a, b, c}) != 4:
            ok[i] = False
            continue
        if G.has_edge(l, b) or G.has_edge(l, c) or G.has_edge(a, b) or G.has_edge(a, c):
            ok[i] = False
    # J: pairwise vertex overlaps via a sparse incidence count
    if mu > 1:
        vs = [frozenset(int(x) for x in row) for row in entries]
        owners: dict[int, list[int]] = {}
        for i, s in enumerate(vs):
            for v in s:
                owners.setdefault(v, []).append(i)
        for i, s in enumerate(vs):
            if not ok[i]:
                continue
            seen: dict[int, int] = {}
            for v in s:
                for j in owners[v]:
                    if j != i:
                        seen[j] = seen.get(j, 0) + 1
            if any(cnt >= 2 for cnt in seen.values()):
                ok[i] = False
    return [int(i) for i in np.flatnonzero(ok)]


def propose_resampling(G: Graph, center: int, ell: int, rng=None) -> ResamplingData:
    """Draw resampling data for ``ball(center, ell)``; boundary sorted by ``(l, a)``."""
    _regular_degree(G)
    G._check_vertex(center)
    rng = as_rng(rng)
    inside, boundary = ball_boundary(G, center, ell)
    outside = _outside_edges(G, inside)
    if outside.shape[0] == 0:
        raise BallTooLarge(f"no edges remain outside ball({center}, {ell})")
    mu = boundary.shape[0]
    pick = rng.integers(0, outside.shape[0], mu)
    flip = rng.integers(0, 2, mu).astype(bool)
    bc = outside[pick].copy()
    bc[flip] = bc[flip][:, ::-1]
    entries = np.column_stack([boundary, bc]) if mu else np.empty((0, 4), dtype=np.int64)
    return ResamplingData(int(center), int(ell), entries, admissible_indices(G, entries))


def validate_data(G: Graph, S: ResamplingData) -> None:
    """Raise :class:`InvalidData` unless ``S`` is resampling data for ``G``."""
    try:
        G._check_vertex(S.center)
        inside, boundary = ball_boundary(G, S.center, S.ell)
    except ValidationError as exc:
        raise InvalidData(str(exc)) from exc
    E = S.entries
    if E.shape[0] != boundary.shape[0]:
        raise InvalidData("number of entries differs from the boundary size")
    if E.size and (E.min() < 0 or E.max() >= G.n):
        raise InvalidData("entry vertex out of range")
    got = sorted(map(tuple, E[:, :2].tolist()))
    want = sorted(map(tuple, boundary.tolist()))
    if got != want:
        raise InvalidData("(l, a) records do not match the ball boundary")
    for b, c in E[:, 2:].tolist():
        if inside[b] or inside[c] or not G.has_edge(b, c):
            raise InvalidData(f"({b}, {c}) is not an edge outside the ball")
    if tuple(admissible_indices(G, E)) != S.admissible:
        raise InvalidData("admissible set does not match the data")


def apply_resampling(G: Graph, S: ResamplingData, check: bool = True) -> Graph:
    """Switch every admissible entry; the rest stay in place."""
    if check:
        validate_data(G, S)
    if not S.admissible:
        return G
    edges = set(G.edge_set)
    for i in S.admissible:
        l, a, b, c = (int(x) for x in S.entries[i])
        edges.discard(_key(l, a))
        edges.discard(_key(b, c))
        edges.add(_key(l, c))
        edges.add(_key(a, b))
    out = Graph(G.n, sorted(edges), d=G.d)
    if check and not out.is_regular(_regular_degree(G)):
        raise InvalidData("switching broke regularity")
    return out


def transform_data(S: ResamplingData) -> ResamplingData:
    """Data after switching: admissible ``(l, a, b, c)`` becomes ``(l, c, b, a)``."""
    E = np.array(S.entries)
    idx = list(S.admissible)
    if idx:
        E[idx, 1], E[idx, 3] = S.entries[idx, 3], S.entries[idx, 1]
    return ResamplingData(S.center, S.ell, E, S.admissible)


def involution(sample: EnlargedSample, check: bool = True) -> EnlargedSample:
    """``(G, S) -> (T_S(G), T(S))``."""
    G2 = apply_resampling(sample.graph, sample.data, check=check)
    return EnlargedSample(G2, transform_data(sample.data))


def enumerate_regular(n: int, d: int) -> list[Graph]:
    """All labelled simple ``d``-regular graphs on ``n`` vertices (tiny ``n`` only)."""
    _check_params(n, d)
    pairs = list(itertools.combinations(range(n), 2))
    out = []
    for chosen in itertools.combinations(pairs, n * d // 2):
        deg = np.bincount(np.asarray(chosen).ravel(), minlength=n)
        if np.all(deg == d):
            out.append(Graph(n, list(chosen), d=d))
    return out
