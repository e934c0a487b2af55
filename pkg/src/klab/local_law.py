"""Spectral diagnostics: density, local-law error, delocalization and flatness.

Everything here is a measurement on one finite graph. Trend checks across
sizes and seeds live with the callers (CLI sweeps, acceptance tests).
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from collections import OrderedDict
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla

from .dense import GreenMatrix, SpectralPoint, as_point, solve_refined
from .errors import DegreeDomain, EigFailed, EmptyDomain, NotCentered, ValidationError
from .graph import Graph, all_pairs_distances, excess, path_neighborhood
from .resolvent import _check_cap, green_full, normalized_adjacency
from .tree_green import TreeExtensionSpec, _km_cdf_table, extension_operator, km_cdf, m_d, m_sc, q_param

EIG_TOL = 1e-8
QUANTILES = (0.5, 0.9, 0.99)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectrumBundle:
    """Eigenvalues of ``H = A / sqrt(d - 1)`` in ascending order, optionally with eigenvectors (columns)."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray | None
    n: int
    d: int

    @property
    def trivial_value(self) -> float:
        return self.d / math.sqrt(self.d - 1)

    def trivial_mask(self, tol: float = 1e-6) -> np.ndarray:
        return np.abs(self.eigenvalues - self.trivial_value) < tol

    @classmethod
    def synthetic(cls, eigenvalues, d: int) -> "SpectrumBundle":
        lam = np.sort(np.asarray(eigenvalues, dtype=float))
        return cls(lam, None, lam.size, int(d))


def spectrum(G: Graph, d: int, vectors: bool = True) -> SpectrumBundle:
    """Full symmetric eigendecomposition of the normalized adjacency."""
    if int(d) != d or d < 3:
        raise DegreeDomain(f"degree must be an integer >= 3, got {d}")
    _check_cap(G.n)
    H = normalized_adjacency(G, d)
    try:
        if vectors:
            lam, V = sla.eigh(H, check_finite=False)
        else:
            lam, V = sla.eigh(H, eigvals_only=True, check_finite=False), None
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise EigFailed(str(exc)) from exc
    if V is not None and G.n:
        res = np.linalg.norm(H @ V - V * lam, axis=0).max()
        if not res < EIG_TOL:
            raise EigFailed(f"eigenpair residual {res:.2e} above {EIG_TOL:.0e}")
    return SpectrumBundle(lam, V, G.n, int(d))


def empirical_stieltjes(S: SpectrumBundle, z) -> complex:
    """``(1/N) sum_j 1 / (lambda_j - z)``."""
    z = as_point(z).z
    return complex(np.mean(1.0 / (S.eigenvalues - z)))


# ---------------------------------------------------------------------------
# spectral domain
# ---------------------------------------------------------------------------

def paper_eta_floor(n: int, alpha: float) -> float:
    return math.log(n) ** (48 * alpha + 1) / n


def desk_eta_floor(n: int) -> float:
    return math.log(n) ** 2 / n


def edge_margin(n: int, alpha: float) -> float:
    return math.log(n) ** (1 - alpha / 2)


@dataclass(frozen=True)
class DomainGrid:
    points: tuple
    n: int
    alpha: float
    d: int
    eta_floor: float
    margin: float

    def contains(self, z) -> bool:
        return in_domain(z, self.eta_floor, self.margin)


def in_domain(z, eta_floor: float, margin: float) -> bool:
    z = complex(z)
    return z.imag >= eta_floor and abs(z - 2) >= margin and abs(z + 2) >= margin


def domain_grid(n: int, alpha: float, d: int, resolution=(9, 5), eta_floor="desk",
                eta_max: float = 1.0, re_max: float = 2.5, symmetric: bool = True) -> DomainGrid:
    """Rectangular grid (linear in ``Re z``, log in ``Im z``) clipped to the spectral domain.

    ``eta_floor`` is ``"paper"`` for ``(log N)^(48 alpha + 1) / N``, ``"desk"``
    for ``(log N)^2 / N``, or a number. The edge condition
    ``|z +- 2| >= (log N)^(1 - alpha/2)`` is always applied.
    """
    if alpha <= 0:
        raise ValidationError("alpha must be positive")
    if alpha <= 4:
        warnings.warn(f"alpha={alpha} is outside the proven range alpha > 4", stacklevel=2)
    if n < 3:
        raise ValidationError("n must be at least 3")
    if eta_floor == "paper":
        floor = paper_eta_floor(n, alpha)
    elif eta_floor == "desk":
        floor = desk_eta_floor(n)
    else:
        floor = float(eta_floor)
    margin = edge_margin(n, alpha)
    n_re, n_eta = resolution
    if floor >= eta_max:
        raise EmptyDomain(f"eta floor {floor:.3g} is above eta_max={eta_max}")
    res = np.linspace(-re_max, re_max, n_re) if n_re > 1 else np.array([0.0])
    if not symmetric:
        res = np.linspace(-re_max, re_max, n_re + 1)[1:] if n_re > 1 else res
    etas = np.geomspace(floor, eta_max, n_eta) if n_eta > 1 else np.array([floor])
    pts = []
    for eta in etas:
        for E in res:
            z = complex(float(E), float(eta))
            if in_domain(z, floor, margin):
                pts.append(SpectralPoint(z))
    if not pts:
        raise EmptyDomain(f"no grid point satisfies the domain constraints at n={n}, alpha={alpha}")
    return DomainGrid(tuple(pts), int(n), float(alpha), int(d), floor, margin)


def ell_star(n: int, alpha: float, d: int) -> int:
    """``floor(alpha log_{d-1} log N)``."""
    return int(math.floor(alpha * math.log(math.log(n)) / math.log(d - 1)))


def r_star(n: int, alpha: float, d: int) -> int:
    return 2 * ell_star(n, alpha, d) + 1


# ---------------------------------------------------------------------------
# local law
# ---------------------------------------------------------------------------

@dataclass
class LocalLawReport:
    z: complex
    r: int
    n_near: int
    n_near_total: int
    n_far: int
    near_max: float
    near_quantiles: dict
    far_max: float
    far_quantiles: dict
    max: float
    quantiles: dict
    m: complex
    m_d: complex
    m_diff: float
    n_tree_vertices: int
    tree_diag_errors: list = field(default_factory=list)
    scale: float = 0.0

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("z", "m", "m_d"):
            out[key] = [self.__dict__[key].real, self.__dict__[key].imag]
        return out


def _quantiles(x):
    if len(x) == 0:
        return {str(p): 0.0 for p in QUANTILES}
    return {str(p): float(np.quantile(x, p)) for p in QUANTILES}


class _ExtensionCache:
    """LU factors of tree-extension operators, keyed by the neighborhood's vertex and edge sets."""

    def __init__(self, z, d, size=4):
        self.z, self.d, self.size = z, d, size
        self._store = OrderedDict()

    def entry(self, E, i, j):
        key = (E.vertices.tobytes(), E.edges.tobytes())
        hit = self._store.get(key)
        if hit is None:
            M = extension_operator(TreeExtensionSpec(E, self.d), self.z)
            hit = (M, sla.lu_factor(M, check_finite=False))
            self._store[key] = hit
            if len(self._store) > self.size:
                self._store.popitem(last=False)
        else:
            self._store.move_to_end(key)
        M, lu = hit
        rhs = np.zeros(E.n, dtype=complex)
        rhs[E.local(j)] = 1.0
        col = sla.lu_solve(lu, rhs, check_finite=False)
        if not np.max(np.abs(M @ col - rhs)) < 1e-10:
            col, _ = solve_refined(M, rhs)
        return complex(col[E.local(i)])


def local_law_error(G: Graph, z, d: int, r: int, pair_budget: int = 2000, rng=None,
                    near_budget: int | None = None, green: GreenMatrix | None = None,
                    distances: np.ndarray | None = None) -> LocalLawReport:
    """Compare ``G_ij`` with the localized ``P_ij`` over near and far pairs.

    Near pairs (``dist <= r``, ``i <= j``) are evaluated exhaustively, or on a
    uniform subsample of ``near_budget`` pairs when there are more. Far pairs,
    where ``P_ij = 0``, are sampled ``pair_budget`` times. Vertices whose
    ``E_r(i, i)`` is a tree have ``P_ii = m_d``; their errors are listed
    separately.
    """
    z = as_point(z)
    if r < 0:
        raise ValidationError("r must be nonnegative")
    rng = np.random.default_rng(rng)
    Gm = green if green is not None else green_full(G, z, d)
    E = Gm.entries
    D = all_pairs_distances(G) if distances is None else distances
    n = G.n
    full_edges = G.edges.tobytes()

    iu, ju = np.triu_indices(n)
    dij = D[iu, ju]
    near = (dij >= 0) & (dij <= r)
    ni, nj = iu[near], ju[near]
    n_near_total = int(ni.size)
    if near_budget is not None and ni.size > near_budget:
        pick = np.sort(rng.choice(ni.size, size=near_budget, replace=False))
        ni, nj = ni[pick], nj[pick]

    cache = _ExtensionCache(z, d)
    near_err = np.empty(ni.size)
    for k, (i, j) in enumerate(zip(ni.tolist(), nj.tolist())):
        Er = path_neighborhood(G, i, j, r)
        if Er.n == n and Er.edges.tobytes() == full_edges:
            # No vertex has a free slot, so the extension is G itself.
            p = E[i, j]
        else:
            p = cache.entry(Er, i, j)
        near_err[k] = abs(E[i, j] - p)

    far_err = np.empty(0)
    if pair_budget > 0:
        far_mask = (dij < 0) | (dij > r)
        far_mask &= iu != ju
        n_far_total = int(far_mask.sum())
        if n_far_total:
            fi, fj = iu[far_mask], ju[far_mask]
            pick = rng.integers(0, n_far_total, pair_budget)
            far_err = np.abs(E[fi[pick], fj[pick]])

    md = m_d(z, d)
    tree_errs = []
    diag = np.diagonal(E)
    for v in range(n):
        Ev = path_neighborhood(G, v, v, r)
        if excess(Ev) == 0:
            tree_errs.append(float(abs(diag[v] - md)))

    m = complex(np.mean(diag))
    both = np.concatenate([near_err, far_err])
    return LocalLawReport(
        z=z.z,
        r=int(r),
        n_near=int(near_err.size),
        n_near_total=n_near_total,
        n_far=int(far_err.size),
        near_max=float(near_err.max(initial=0.0)),
        near_quantiles=_quantiles(near_err),
        far_max=float(far_err.max(initial=0.0)),
        far_quantiles=_quantiles(far_err),
        max=float(both.max(initial=0.0)),
        quantiles=_quantiles(both),
        m=m,
        m_d=md,
        m_diff=float(abs(m - md)),
        n_tree_vertices=len(tree_errs),
        tree_diag_errors=tree_errs,
        scale=float(abs(m_sc(z)) * q_param(z, d) ** r),
    )


def diagonal_variance(Gm: GreenMatrix) -> float:
    """Across-vertex variance ``mean |G_ii - mean G_ii|^2``."""
    g = Gm.diag()
    return float(np.mean(np.abs(g - g.mean()) ** 2))


# ---------------------------------------------------------------------------
# eigenvectors
# ---------------------------------------------------------------------------

def bulk_mask(S: SpectrumBundle, bulk_margin: float = 0.1) -> np.ndarray:
    """Eigenvalues with ``|lambda| <= 2 - margin``, trivial eigenvalues excluded."""
    lam = S.eigenvalues
    return (np.abs(lam) <= 2 - bulk_margin) & ~S.trivial_mask()


@dataclass(frozen=True)
class DelocalizationStats:
    max_sup_norm_scaled: float
    per_vector: tuple
    n_bulk: int


def delocalization_stats(S: SpectrumBundle, bulk_margin: float = 0.1) -> DelocalizationStats:
    """``sqrt(N) * ||v||_inf`` for every bulk eigenvector."""
    if S.eigenvectors is None:
        raise ValidationError("spectrum was computed without eigenvectors")
    idx = np.flatnonzero(bulk_mask(S, bulk_margin))
    vals = math.sqrt(S.n) * np.abs(S.eigenvectors[:, idx]).max(axis=0) if idx.size else np.empty(0)
    per = tuple((int(k), float(S.eigenvalues[k]), float(v)) for k, v in zip(idx, vals))
    return DelocalizationStats(float(vals.max(initial=0.0)), per, int(idx.size))


@dataclass(frozen=True)
class QUEStatistic:
    density: float
    isotropic: float
    n_bulk: int


def _centered(test, normalize):
    q = np.asarray(test, dtype=float)
    scale = np.abs(q).sum()
    if abs(q.sum()) > 1e-10 * max(scale, 1.0):
        raise NotCentered(f"test vector sums to {q.sum():.3e}, not 0")
    if normalize == "l2" and np.any(q):
        q = q / np.linalg.norm(q)
    elif normalize == "linf" and np.any(q):
        q = q / np.abs(q).max()
    elif normalize not in ("l2", "linf", None):
        raise ValidationError(f"unknown normalization {normalize!r}")
    return q


def que_statistic(S: SpectrumBundle, test, bulk_margin: float = 0.1, normalize: str | None = "l2") -> QUEStatistic:
    """Max over bulk eigenvectors of ``|sum_i q_i v_i^2|`` and ``|<q, v>|``."""
    if S.eigenvectors is None:
        raise ValidationError("spectrum was computed without eigenvectors")
    q = _centered(test, normalize)
    if q.shape != (S.n,):
        raise ValidationError("test vector has the wrong length")
    V = S.eigenvectors[:, bulk_mask(S, bulk_margin)]
    if V.shape[1] == 0:
        return QUEStatistic(0.0, 0.0, 0)
    dens = np.abs(q @ (V * V)).max()
    iso = np.abs(q @ V).max()
    return QUEStatistic(float(dens), float(iso), int(V.shape[1]))


def index_set_flatness(S: SpectrumBundle, X, bulk_margin: float = 0.1) -> float:
    """Max over bulk eigenvectors of ``|sum_{i in X} v_i^2 - |X|/N|``."""
    if S.eigenvectors is None:
        raise ValidationError("spectrum was computed without eigenvectors")
    X = np.unique(np.asarray(list(X), dtype=np.int64))
    V = S.eigenvectors[:, bulk_mask(S, bulk_margin)]
    if V.shape[1] == 0:
        return 0.0
    mass = (V[X] ** 2).sum(axis=0)
    return float(np.abs(mass - X.size / S.n).max())


# ---------------------------------------------------------------------------
# Kesten-McKay comparison
# ---------------------------------------------------------------------------

def km_ks_distance(S: SpectrumBundle, d: int) -> float:
    """Kolmogorov distance between the nontrivial eigenvalues and the Kesten-McKay law."""
    lam = np.sort(S.eigenvalues[~S.trivial_mask()])
    if lam.size == 0:
        raise ValidationError("no nontrivial eigenvalues")
    F = km_cdf(lam, d)
    k = np.arange(1, lam.size + 1)
    upper = np.abs(k / lam.size - F).max()
    lower = np.abs((k - 1) / lam.size - F).max()
    return float(max(upper, lower))


def km_sample(size: int, d: int, rng=None) -> np.ndarray:
    """I.i.d. draws from the Kesten-McKay law by inverting its tabulated CDF."""
    rng = np.random.default_rng(rng)
    theta, cdf = _km_cdf_table(int(d))
    th = np.interp(rng.random(size), cdf, theta)
    return -2 * np.cos(th)


def km_histogram(S: SpectrumBundle, d: int, bins: int):
    """``(centers, empirical density, Kesten-McKay density)`` on ``[-2, 2]``."""
    from .tree_green import km_density

    if bins < 1:
        raise ValidationError("bins must be positive")
    lam = S.eigenvalues[~S.trivial_mask()]
    edges = np.linspace(-2.0, 2.0, bins + 1)
    counts, _ = np.histogram(lam, bins=edges)
    width = edges[1] - edges[0]
    emp = counts / max(lam.size, 1) / width
    centers = (edges[:-1] + edges[1:]) / 2
    return centers, emp, km_density(centers, d)


# ---------------------------------------------------------------------------
# sweep records
# ---------------------------------------------------------------------------

@dataclass
class SweepRecord:
    seed: int | None
    n: int
    d: int
    z: tuple
    metric: str
    value: object
    r: int | None = None
    alpha: float | None = None
    wall_time: float | None = None

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "n": self.n,
            "d": self.d,
            "z": [float(self.z[0]), float(self.z[1])] if self.z is not None else None,
            "metric": self.metric,
            "value": self.value,
            "r": self.r,
            "alpha": self.alpha,
        }
        if self.wall_time is not None:
            out["wall_time"] = self.wall_time
        return out


def records_to_jsonl(records, header: dict | None = None) -> str:
    lines = []
    if header is not None:
        lines.append(json.dumps({"header": header}, sort_keys=True))
    lines.extend(json.dumps(r.to_dict(), sort_keys=True) for r in records)
    return "\n".join(lines) + "\n"


def records_to_csv(records, header: dict | None = None) -> str:
    buf = io.StringIO()
    if header is not None:
        buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "n", "d", "z_re", "z_im", "metric", "value", "r", "alpha"])
    for rec in records:
        zr, zi = rec.z if rec.z is not None else ("", "")
        value = rec.value if not isinstance(rec.value, (dict, list)) else json.dumps(rec.value, sort_keys=True)
        w.writerow([rec.seed, rec.n, rec.d, zr, zi, rec.metric, value, rec.r, rec.alpha])
    return buf.getvalue()
