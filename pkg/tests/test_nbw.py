import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cycle, k4
from klab.errors import Disconnected, Overflow, PreconditionViolated
from klab.graph import build_graph
from klab.nbw import DirectedEdgeIndex, count_nbw, nbw_count_table, verify_escape_bound, verify_nbw_bound
from klab.sampler import sample_regular
from oracles import nbw_dfs


def adj(G):
    return {v: G.neighbors(v).tolist() for v in range(G.n)}


def test_cycle_antipode():
    assert count_nbw(cycle(6), 0, 3, 3) == 2


def test_length_zero():
    G = k4()
    assert count_nbw(G, 1, 1, 0) == 1
    assert count_nbw(G, 1, 2, 0) == 0


def test_tree_counts_only_at_distance():
    T = build_graph(6, [(0, 1), (1, 2), (1, 3), (3, 4), (4, 5)])
    for L in range(7):
        assert count_nbw(T, 0, 5, L) == (1 if L == 4 else 0)


def test_k4_closed_length_three():
    assert count_nbw(k4(), 0, 0, 3) == nbw_dfs(adj(k4()), 0, 0, 3) == 6


def test_directed_index_structure():
    G = sample_regular(12, 3, 1)
    dei = DirectedEdgeIndex.from_graph(G)
    assert dei.size == 2 * G.num_edges
    assert np.all(dei.tail[dei.rev] == dei.head)
    assert np.all(dei.rev[dei.rev] == np.arange(dei.size))
    rows = np.asarray(dei.transfer.sum(axis=1)).ravel()
    assert np.all(rows == G.degrees[dei.head] - 1)
    again = DirectedEdgeIndex.from_graph(G)
    assert np.array_equal(again.tail, dei.tail) and np.array_equal(again.head, dei.head)


def test_overflow_reported_and_exact_fallback():
    G = sample_regular(40, 6, 0)
    with pytest.raises(Overflow):
        nbw_count_table(G, 0, 40)
    huge = count_nbw(G, 0, 5, 40, exact=True)
    assert isinstance(huge, int) and huge > 2**63


@pytest.mark.parametrize("seed", range(5))
def test_total_count_regular(seed):
    d = 3 + seed % 3
    G = sample_regular(30, d, seed)
    table = nbw_count_table(G, 0, 7)
    for L in range(1, 8):
        assert table[L].sum() == d * (d - 1) ** (L - 1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 9), st.data())
def test_transfer_matches_dfs(n, data):
    pairs = list(itertools.combinations(range(n), 2))
    chosen = data.draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    G = build_graph(n, chosen)
    a = adj(G)
    i = data.draw(st.integers(0, n - 1))
    table = nbw_count_table(G, i, 6)
    for j in range(n):
        for L in range(7):
            assert table[L][j] == nbw_dfs(a, i, j, L)


def test_bound_examples():
    T = build_graph(4, [(0, 1), (1, 2), (2, 3)])
    chk = verify_nbw_bound(T, 0, 3, 1)
    assert (chk.count, chk.bound, chk.holds) == (1, 1, True)
    chk = verify_nbw_bound(cycle(8), 0, 4, 1)
    assert chk.omega == 1 and chk.count == 2 and chk.holds
    with pytest.raises(Disconnected):
        verify_nbw_bound(build_graph(4, [(0, 1), (2, 3)]), 0, 3, 1)


def test_bound_exhaustive_on_random_cubic():
    G = sample_regular(200, 3, 11)
    from klab.graph import all_pairs_distances

    D = all_pairs_distances(G)
    rng = np.random.default_rng(0)
    for i in rng.choice(200, 15, replace=False):
        for j in np.flatnonzero((D[i] >= 0) & (D[i] <= 4)):
            for k in (1, 2, 3):
                assert verify_nbw_bound(G, int(i), int(j), k).holds


def test_escape_bound():
    G = cycle(10)
    chk = verify_escape_bound(G, G, 0, 3, 3, 2)
    assert chk.count == 0
    # cycle with a chord; H is the chordless arc 0..5
    C = build_graph(8, [(i, (i + 1) % 8) for i in range(8)] + [(0, 4)])
    H = build_graph(8, [(i, i + 1) for i in range(5)])
    chk = verify_escape_bound(C, H, 1, 3, 2, 4)
    a = adj(C)
    inside = {v: [w for w in a[v] if (min(v, w), max(v, w)) in H.edge_set] for v in range(8)}
    want = nbw_dfs(a, 1, 3, 6) - nbw_dfs(inside, 1, 3, 6)
    assert chk.count == want and chk.holds
    with pytest.raises(PreconditionViolated):
        verify_escape_bound(C, build_graph(8, [(0, 1)]), 1, 3, 2, 1)
