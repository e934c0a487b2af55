import numpy as np
import pytest

from klab import _kernels
from klab.graph import build_graph
from klab.nbw import DirectedEdgeIndex
from klab.sampler import sample_regular

pytestmark = pytest.mark.skipif(_kernels.NUMBA is None, reason="numba not importable")


def csr(G):
    return np.asarray(G.indptr, dtype=np.int64), np.asarray(G.indices, dtype=np.int64)


@pytest.fixture(params=[0, 1, 2])
def graph(request):
    rng = np.random.default_rng(request.param)
    G = sample_regular(80, 3, rng)
    # drop a few edges so the graph is irregular and possibly disconnected
    keep = rng.random(G.num_edges) > 0.2
    return build_graph(80, G.edges[keep])


def test_bfs_all_pairs_excess(graph):
    ip, ix = csr(graph)
    src = np.array([0, 5], dtype=np.int64)
    for r in (-1, 0, 2):
        assert np.array_equal(_kernels.NUMPY.bfs(ip, ix, src, r), _kernels.NUMBA.bfs(ip, ix, src, r))
    assert np.array_equal(_kernels.NUMPY.all_pairs(ip, ix), _kernels.NUMBA.all_pairs(ip, ix))
    for r in (1, 3):
        assert np.array_equal(_kernels.NUMPY.ball_excess(ip, ix, r), _kernels.NUMBA.ball_excess(ip, ix, r))


def test_nbw_counts(graph):
    D = DirectedEdgeIndex.from_graph(graph)
    args = (D.tail, D.head, D.rev, graph.n, 3, 8)
    a, b = _kernels.NUMPY.nbw_counts(*args), _kernels.NUMBA.nbw_counts(*args)
    assert a[1] == b[1] and np.array_equal(a[0], b[0])


def test_path_mask(graph):
    ip, ix = csr(graph)
    di = _kernels.NUMPY.bfs(ip, ix, np.array([0], dtype=np.int64), -1)
    dj = _kernels.NUMPY.bfs(ip, ix, np.array([7], dtype=np.int64), -1)
    eu, ev = graph.edges[:, 0].copy(), graph.edges[:, 1].copy()
    assert np.array_equal(_kernels.NUMPY.path_mask(eu, ev, di, dj, 6), _kernels.NUMBA.path_mask(eu, ev, di, dj, 6))


def test_switch_chain():
    G = sample_regular(40, 3, 0, method="pairing")
    rng = np.random.default_rng(5)
    steps = 2000
    pick1 = rng.integers(0, G.num_edges, steps)
    pick2 = rng.integers(0, G.num_edges, steps)
    flips = rng.integers(0, 2, steps).astype(np.int64)
    outs = []
    for K in (_kernels.NUMPY, _kernels.NUMBA):
        nbr = np.array([G.neighbors(v) for v in range(G.n)], dtype=np.int64)
        edges = G.edges.copy()
        acc = K.switch_chain(nbr, edges, pick1, pick2, flips)
        outs.append((acc, nbr, edges))
    assert outs[0][0] == outs[1][0] > 0
    assert np.array_equal(outs[0][1], outs[1][1]) and np.array_equal(outs[0][2], outs[1][2])


def test_select(monkeypatch):
    assert _kernels.select("numpy") is _kernels.NUMPY
    assert _kernels.select("numba") is _kernels.NUMBA
    with pytest.raises(ValueError):
        _kernels.select("fortran")
