import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import k4
from klab.errors import DegreeDomain, NotUpperHalfPlane, SeriesDiverging, UnrealizableGeometry, ValidationError
from klab.graph import build_graph, dist, excess, path_neighborhood
from klab.sampler import sample_regular
from klab.tree_green import (
    SpectralPoint,
    TreeExtensionSpec,
    km_cdf,
    km_density,
    localized_green,
    m_d,
    m_d_alt,
    m_sc,
    nbw_series_green,
    q_param,
    rooted_tree_green,
    tree_extension_green,
    tree_green_entry,
)
from oracles import km_rho, stieltjes_by_quadrature, truncated_tree_column

# frozen from oracles.py (quadrature and depth-20 truncated trees)
M_SC_2I = 0.41421356237309515j
M_D_3_2I = 0.38148713966109277j
TREE_D3_2I_DIST1 = 0.11173499627127437
ROOTED_D3_2I_DEPTH1 = 0.3786796564403572j
ROOTED_D3_2I_DIST3 = -0.01040764008565378


def grid(k=10):
    return [complex(x, y) for x in np.linspace(-3, 3, k) for y in np.geomspace(1e-3, 10, k)]


def test_spectral_point():
    assert SpectralPoint(1 + 2j).eta == 2.0
    for bad in (1.0, 1 - 1j, complex("nan")):
        with pytest.raises(NotUpperHalfPlane):
            SpectralPoint(bad)
    with pytest.raises(NotUpperHalfPlane):
        m_sc(0.5)


def test_m_sc_values():
    assert abs(m_sc(2j) - M_SC_2I) < 1e-12
    for T in (1e2, 1e4, 1e6):
        m = m_sc(1j * T)
        assert abs(m * 1j * T + 1) < 2 / T**2
    for z in grid():
        m = m_sc(z)
        assert m.imag > 0 and abs(m) <= 1 + 1e-15
        assert abs(z + m + 1 / m) < 1e-12


def test_m_d():
    assert abs(m_d(2j, 3) - M_D_3_2I) < 1e-12
    assert abs(stieltjes_by_quadrature(2j, 3) - M_D_3_2I) < 1e-10
    for d in (3, 4, 7, 20):
        for z in grid(6):
            a, b = m_d(z, d), m_d_alt(z, d)
            assert abs(a - b) < 1e-12
            assert a.imag > 0
    with pytest.raises(DegreeDomain):
        m_d(1j, 2)


@pytest.mark.parametrize("z", [0.3 + 0.5j, -1.1 + 0.2j, 2.5 + 0.1j, 4j])
def test_m_d_is_stieltjes_of_density(z):
    for d in (3, 5, 10):
        assert abs(m_d(z, d) - stieltjes_by_quadrature(z, d)) < 1e-8


def test_km_density():
    assert abs(km_density(0.0, 3) - 2 / (3 * math.pi)) < 1e-15
    assert km_density(2.0, 4) == 0 and km_density(-2.0, 4) == 0 and km_density(3.0, 4) == 0
    for d in (3, 5, 10):
        total, _ = quad(lambda x: km_rho(x, d), -2, 2, epsabs=1e-13, limit=300)
        assert abs(total - 1) < 1e-8
        xs = np.linspace(-2.5, 2.5, 11)
        assert np.allclose(km_density(xs, d), [km_rho(x, d) for x in xs], atol=1e-15)


def test_km_cdf():
    for d in (3, 5, 10):
        for x in (-1.7, -0.3, 0.0, 0.9, 1.99):
            ref, _ = quad(lambda t: km_rho(t, d), -2, x, epsabs=1e-13, limit=300)
            assert abs(km_cdf(x, d) - ref) < 1e-9
        assert km_cdf(-5, d) == 0 and km_cdf(5, d) == 1


def test_q_param():
    assert abs(q_param(2j, 5) - 0.41421356237309515 / 2) < 1e-12
    for z in grid(5):
        qs = [q_param(z, d) for d in range(3, 12)]
        assert all(q <= 1 / math.sqrt(d - 1) + 1e-15 for q, d in zip(qs, range(3, 12)))
        assert all(a > b for a, b in zip(qs, qs[1:]))


def test_tree_entries():
    assert abs(tree_green_entry(0, 2j, 3) - M_D_3_2I) < 1e-12
    assert abs(tree_green_entry(1, 2j, 3) - TREE_D3_2I_DIST1) < 1e-12
    col, _, level = truncated_tree_column(3, 20, 2j)
    for k in range(6):
        assert abs(col[np.flatnonzero(level == k)[0]] - tree_green_entry(k, 2j, 3)) < 1e-10
    z = 0.4 + 0.3j
    ratios = [abs(tree_green_entry(k + 1, z, 4) / tree_green_entry(k, z, 4)) for k in range(5)]
    assert np.allclose(ratios, q_param(z, 4))


def test_rooted_tree():
    for z in grid(5):
        assert abs(rooted_tree_green(0, 0, z, 4) - m_sc(z)) < 1e-12
    assert abs(rooted_tree_green(0, 1, 2j, 3) - ROOTED_D3_2I_DEPTH1) < 1e-12
    assert abs(rooted_tree_green(3, 0, 2j, 3) - ROOTED_D3_2I_DIST3) < 1e-12
    assert abs(rooted_tree_green(2, 60, 0.5 + 0.2j, 3) - tree_green_entry(2, 0.5 + 0.2j, 3)) < 1e-12
    with pytest.raises(UnrealizableGeometry):
        rooted_tree_green(-1, 0, 1j, 3)
    with pytest.raises(UnrealizableGeometry):
        rooted_tree_green(1, 0.5, 1j, 3)


def test_extension_of_a_point():
    one = build_graph(1, [])
    for z in grid(4):
        P = tree_extension_green(TreeExtensionSpec.free(one, 4), z)
        assert abs(P[0, 0] - m_d(z, 4)) < 1e-12
        P1 = tree_extension_green(TreeExtensionSpec(one, 4, [1]), z)
        assert abs(P1[0, 0] - rooted_tree_green(0, 0, z, 4)) < 1e-12


@pytest.mark.parametrize("seed", range(4))
def test_extension_of_a_tree(seed):
    rng = np.random.default_rng(seed)
    n = 12
    deg = np.zeros(n, dtype=int)
    edges = []
    for v in range(1, n):
        u = int(rng.choice(np.flatnonzero(deg[:v] < 3)))
        edges.append((u, v))
        deg[u] += 1
        deg[v] += 1
    T = build_graph(n, edges)
    z = complex(rng.uniform(-2, 2), rng.uniform(0.05, 1))
    P = tree_extension_green(TreeExtensionSpec.free(T, 4), z)
    assert P.residual < 1e-10
    for i in range(n):
        for j in range(n):
            assert abs(P[i, j] - tree_green_entry(dist(T, i, j), z, 4)) < 1e-10


def test_localized_green():
    G = sample_regular(5000, 3, 0)
    z = 0.5 + 0.3j
    # a pair at distance 2 with tree-like neighborhood
    j = int(G.neighbors(int(G.neighbors(0)[0]))[1])
    E = path_neighborhood(G, 0, j, 4)
    assert excess(E) == 0
    assert abs(localized_green(G, 0, j, 4, z, 3) - tree_green_entry(2, z, 3)) < 1e-10
    far = int(np.flatnonzero(np.arange(5000) > 4000)[0])
    assert localized_green(G, 0, far, 2, z, 3) == 0


def test_series_matches_solve_on_k4():
    G = k4()
    z = 9j  # |z| = 2d - 1 at d = 5
    spec = TreeExtensionSpec.free(G, 5)
    P = tree_extension_green(spec, z)
    for j in range(4):
        s = nbw_series_green(spec, 0, j, z, 25)
        assert s.omega == 3
        assert abs(s.value - P[0, j]) <= s.tail_bound + 1e-14
    tree = build_graph(3, [(0, 1), (1, 2)])
    s = nbw_series_green(TreeExtensionSpec.free(tree, 3), 0, 2, 1j, 5)
    assert abs(s.value - tree_green_entry(2, 1j, 3)) < 1e-14


def test_series_divergence_and_deficit():
    with pytest.raises(SeriesDiverging):
        nbw_series_green(TreeExtensionSpec.free(k4(), 3), 0, 1, 0.1j, 10)
    with pytest.raises(ValidationError):
        nbw_series_green(TreeExtensionSpec(k4(), 5, [1, 0, 0, 0]), 0, 1, 9j, 10)


def test_bounded_excess_entry_bound():
    # |P_ij| <= (1 + delta_ij / 2)|m_sc| when sqrt(d-1) >= 2^(omega+2); omega = 1 needs d >= 65
    rng = np.random.default_rng(3)
    d = 65
    for _ in range(10):
        n = int(rng.integers(4, 9))
        edges = [(v, v + 1) for v in range(n - 1)] + [(0, n - 1)]
        C = build_graph(n, edges)
        z = complex(rng.uniform(-1.9, 1.9), rng.uniform(1e-3, 1))
        P = tree_extension_green(TreeExtensionSpec.free(C, d), z)
        bound = abs(m_sc(z)) * (1 + 0.5 * np.eye(n))
        assert np.all(np.abs(P.entries) <= bound)
