import csv
import io
import json
import math
import warnings

import numpy as np
import pytest

from conftest import cycle, k4
from klab.errors import DegreeDomain, EmptyDomain, NotCentered
from klab.graph import build_graph
from klab.local_law import (
    SpectrumBundle,
    SweepRecord,
    delocalization_stats,
    diagonal_variance,
    domain_grid,
    edge_margin,
    empirical_stieltjes,
    index_set_flatness,
    km_histogram,
    km_ks_distance,
    km_sample,
    local_law_error,
    que_statistic,
    r_star,
    records_to_csv,
    records_to_jsonl,
    spectrum,
)
from klab.resolvent import green_full
from klab.sampler import sample_regular
from klab.tree_green import km_density, m_d, tree_extension_green, TreeExtensionSpec

S2 = math.sqrt(2)


def test_k4_spectrum():
    S = spectrum(k4(), 3)
    assert np.allclose(S.eigenvalues, np.array([-1, -1, -1, 3]) / S2, atol=1e-12)
    assert S.trivial_mask().tolist() == [False, False, False, True]
    with pytest.raises(DegreeDomain):
        spectrum(cycle(8, d=2), 2)


def test_perron_eigenvalue():
    S = spectrum(sample_regular(300, 3, 1), 3, vectors=False)
    assert abs(S.eigenvalues[-1] - 3 / S2) < 1e-8


def test_empirical_stieltjes():
    assert empirical_stieltjes(SpectrumBundle.synthetic([0.0], 3), 0.3j) == pytest.approx(-1 / 0.3j)
    z = 2j
    want = 0.25 / (3 / S2 - z) + 0.75 / (-1 / S2 - z)
    assert abs(empirical_stieltjes(spectrum(k4(), 3), z) - want) < 1e-14
    T = 1e3
    m = empirical_stieltjes(spectrum(k4(), 3), 1j * T)
    assert abs(m + 1 / (1j * T)) < 10 * T ** -3


def test_stieltjes_matches_trace():
    G = sample_regular(400, 3, 2)
    z = 0.5 + 0.1j
    m = empirical_stieltjes(spectrum(G, 3, vectors=False), z)
    tr = green_full(G, z, 3).diag().mean()
    assert abs(m - tr) < 1e-8 and m.imag > 0


def test_domain_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        grid = domain_grid(1000, 4, 3, resolution=(11, 4))
    assert grid.points
    for p in grid.points:
        assert p.eta >= grid.eta_floor
        assert abs(p.z - 2) >= grid.margin and abs(p.z + 2) >= grid.margin
    res = sorted(round(p.z.real, 12) for p in grid.points)
    assert res == sorted(-x for x in res)
    assert not grid.contains(0.5 + 0.5 * grid.eta_floor * 1j)
    with pytest.warns(UserWarning):
        domain_grid(1000, 3, 3)
    with pytest.raises(EmptyDomain):
        domain_grid(1000, 4.5, 3, eta_floor="paper")
    assert edge_margin(1000, 4.5) < 1


def test_r_star_values():
    assert r_star(500, 4.5, 10) == 7
    assert r_star(2000, 4.5, 10) == 9


def test_delocalization_k4():
    S = spectrum(k4(), 3)
    st = delocalization_stats(S, 0.1)
    assert st.n_bulk == 3
    assert 1 <= st.max_sup_norm_scaled <= 2
    # trivial constant vector would give exactly 1
    assert abs(math.sqrt(4) * np.abs(S.eigenvectors[:, -1]).max() - 1) < 1e-12


def test_que_exact_k4():
    S = spectrum(k4(), 3)
    q = np.array([1.0, -1.0, 0.0, 0.0])
    st = que_statistic(S, q, normalize=None)
    V = S.eigenvectors[:, :3]
    assert st.density == pytest.approx(np.abs(q @ V ** 2).max())
    # dens values sum over the degenerate eigenspace to q . (1 - 1/4) rows = 0
    assert abs((q @ V ** 2).sum()) < 1e-12
    assert que_statistic(S, np.zeros(4)).density == 0
    with pytest.raises(NotCentered):
        que_statistic(S, [1.0, 0, 0, 0])
    assert index_set_flatness(S, range(4)) < 1e-12


def test_ks_bands():
    point = SpectrumBundle.synthetic(np.zeros(1000), 3)
    assert km_ks_distance(point, 3) > 0.45
    assert km_ks_distance(SpectrumBundle.synthetic(np.full(100, -2.5), 3), 3) == 1.0
    iid = SpectrumBundle.synthetic(km_sample(10_000, 3, 0), 3)
    assert km_ks_distance(iid, 3) < 2.0 / math.sqrt(10_000)


def test_histogram():
    S = SpectrumBundle.synthetic(km_sample(20_000, 5, 1), 5)
    c, emp, rho = km_histogram(S, 5, 40)
    assert len(c) == 40 and np.allclose(rho, km_density(c, 5))
    assert abs(emp.sum() * 0.1 - 1) < 1e-12
    assert np.abs(emp - rho).max() < 0.05


def test_local_law_r0_and_k4():
    G = sample_regular(60, 3, 0)
    z = 0.3 + 0.2j
    rep = local_law_error(G, z, 3, 0, pair_budget=100, rng=0)
    Gm = green_full(G, z, 3)
    single = tree_extension_green(TreeExtensionSpec.free(build_graph(1, []), 3), z)[0, 0]
    assert single == pytest.approx(m_d(z, 3))
    assert rep.near_max == pytest.approx(np.abs(Gm.diag() - m_d(z, 3)).max())
    assert rep.n_near == 60 and rep.n_tree_vertices == 60
    # whole graph inside the neighborhood: P is G itself
    rep = local_law_error(k4(), z, 3, 3, pair_budget=0)
    assert rep.near_max < 1e-12 and rep.n_far == 0


def test_local_law_trend_small():
    z = 0.5 + 0.3j
    rep = local_law_error(sample_regular(300, 3, 3), z, 3, 5, pair_budget=500, rng=0, near_budget=300)
    assert rep.n_near == 300 and rep.n_far == 500
    assert rep.max == max(rep.near_max, rep.far_max)
    assert rep.n_tree_vertices > 0
    assert np.median(rep.tree_diag_errors) < 0.2
    json.dumps(rep.to_dict())


def test_diagonal_variance_positive():
    Gm = green_full(sample_regular(300, 3, 0), 0.5 + 0.1j, 3)
    assert diagonal_variance(Gm) > 1e-4
    assert diagonal_variance(green_full(k4(), 1j, 3)) < 1e-24


def test_records():
    recs = [SweepRecord(1, 10, 3, (0.5, 0.1), "m_diff", 0.25, 3, 4.5),
            SweepRecord(2, 10, 3, (0.5, 0.1), "rep", {"a": 1}, None, None, 0.1)]
    lines = records_to_jsonl(recs, header={"tool": "klab"}).splitlines()
    assert json.loads(lines[0]) == {"header": {"tool": "klab"}}
    assert json.loads(lines[1])["value"] == 0.25 and "wall_time" not in json.loads(lines[1])
    assert json.loads(lines[2])["wall_time"] == 0.1
    rows = list(csv.reader(io.StringIO(records_to_csv(recs)), ))
    assert rows[0][0] == "seed" and rows[1][6] == "0.25" and json.loads(rows[2][6]) == {"a": 1}
