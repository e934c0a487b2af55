"""Stieltjes transforms, the Kesten-McKay density and tree Green's functions.

Conventions: the adjacency matrix is normalized as ``H = A / sqrt(d - 1)``,
so the spectrum of the infinite ``d``-regular tree is ``[-2, 2]``. The
quantity ``t = -m_sc / sqrt(d - 1)`` is the per-hop factor of tree
Green's functions and ``q = |t|``.

The tree extension of a finite graph ``G0`` with deficit ``g`` hangs
``d - g(v) - deg(v)`` rooted trees (root degree ``d - 1``) off each vertex.
Integrating those trees out leaves a complex self-loop at ``v`` of weight
``-m_sc (d - g(v) - deg(v)) / (d - 1)`` in the normalized matrix, so the
Green's function restricted to ``G0`` is a finite linear solve.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np
from scipy.integrate import cumulative_simpson

from .dense import GreenMatrix, SpectralPoint, as_point, solve_refined  # noqa: F401 (SpectralPoint re-exported)
from .errors import (
    DeficitViolation,
    DegreeDomain,
    SeriesDiverging,
    SingularSystem,
    SolveFailed,
    UnrealizableGeometry,
    ValidationError,
)
from .graph import Graph, Subgraph, components, excess, induced_subgraph, path_neighborhood
from .graph import dist as graph_dist
from .nbw import nbw_count_table

FIXED_POINT_TOL = 1e-12


def _check_d(d):
    if int(d) != d or d < 3:
        raise DegreeDomain(f"degree must be an integer >= 3, got {d}")
    return int(d)


def m_sc(z) -> complex:
    """Semicircle Stieltjes transform: the root of ``m^2 + z m + 1 = 0`` with ``Im m > 0``."""
    z = as_point(z).z
    # sqrt(z-2)*sqrt(z+2) ~ z at infinity and is analytic off [-2, 2]; the
    # root of larger modulus is then (-z - s)/2 and ours is its reciprocal.
    s = np.sqrt(z - 2) * np.sqrt(z + 2)
    big = (-z - s) / 2
    m = 1 / big
    if m.imag <= 0:
        m = big
    m = complex(m)
    if abs(z + m + 1 / m) > FIXED_POINT_TOL * max(1.0, abs(z)):
        # one Newton step on f(m) = m^2 + z m + 1
        m = m - (m * m + z * m + 1) / (2 * m + z)
    return m


def m_d(z, d: int) -> complex:
    """Kesten-McKay Stieltjes transform ``1 / (-z - d m_sc / (d - 1))``."""
    d = _check_d(d)
    ms = m_sc(z)
    return 1 / (-as_point(z).z - d * ms / (d - 1))


def m_d_alt(z, d: int) -> complex:
    """Second closed form ``m_sc / (1 - m_sc^2 / (d - 1))``."""
    d = _check_d(d)
    ms = m_sc(z)
    return ms / (1 - ms * ms / (d - 1))


def km_density(x, d: int):
    """Kesten-McKay density for ``H = A / sqrt(d - 1)``; vectorized in ``x``."""
    d = _check_d(d)
    x = np.asarray(x, dtype=float)
    inside = np.abs(x) < 2
    xs = np.where(inside, x, 0.0)
    out = np.where(inside, np.sqrt(4 - xs * xs) / (2 * np.pi) / (1 + 1 / (d - 1) - xs * xs / d), 0.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=32)
def _km_cdf_table(d: int, points: int = 200_001):
    # x = -2 cos(theta) removes the square-root endpoints; the integrand is smooth.
    theta = np.linspace(0.0, np.pi, points)
    s = np.sin(theta)
    f = (2 * s * s / np.pi) / (1 + 1 / (d - 1) - 4 * np.cos(theta) ** 2 / d)
    cdf = cumulative_simpson(f, x=theta, initial=0.0)
    cdf /= cdf[-1]
    return theta, cdf


def km_cdf(x, d: int):
    """Cumulative distribution of the Kesten-McKay law (tabulated, accurate to ~1e-12)."""
    d = _check_d(d)
    theta, cdf = _km_cdf_table(d)
    x = np.asarray(x, dtype=float)
    th = np.arccos(np.clip(-x / 2, -1.0, 1.0))
    out = np.interp(th, theta, cdf)
    out = np.where(x <= -2, 0.0, np.where(x >= 2, 1.0, out))
    return out if out.ndim else float(out)


def q_param(z, d: int) -> float:
    """``|m_sc(z)| / sqrt(d - 1)``."""
    d = _check_d(d)
    return abs(m_sc(z)) / np.sqrt(d - 1)


def hop_factor(z, d: int) -> complex:
    """Per-hop factor ``-m_sc(z) / sqrt(d - 1)`` of tree Green's functions."""
    d = _check_d(d)
    return -m_sc(z) / np.sqrt(d - 1)


def tree_green_entry(distance: int, z, d: int) -> complex:
    """Green's function of the infinite ``d``-regular tree at the given distance."""
    if distance < 0:
        raise ValidationError("distance must be nonnegative")
    return m_d(z, d) * hop_factor(z, d) ** int(distance)


def rooted_tree_green(dist: int, ancestor_depth: int, z, d: int) -> complex:
    """Green's function of the rooted tree (root degree ``d - 1``).

    ``ancestor_depth`` is the depth of the lowest common ancestor of the two
    vertices. At the root this equals ``m_sc(z)``.
    """
    if int(dist) != dist or int(ancestor_depth) != ancestor_depth or dist < 0 or ancestor_depth < 0:
        raise UnrealizableGeometry(
            f"(dist={dist}, ancestor_depth={ancestor_depth}) does not occur in a rooted tree"
        )
    t = hop_factor(z, d)
    return m_d(z, d) * (1 - t ** (2 * int(ancestor_depth) + 2)) * t ** int(dist)


# ---------------------------------------------------------------------------
# tree extensions
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TreeExtensionSpec:
    """A finite graph ``g0`` with deficit ``g``, to be tree-extended to degree ``d``."""

    g0: Graph
    d: int
    g: np.ndarray = None

    def __post_init__(self):
        d = _check_d(self.d)
        object.__setattr__(self, "d", d)
        g = self.g0.deficit_for(d) if self.g is None else np.asarray(self.g, dtype=np.int64)
        if g.shape != (self.g0.n,):
            raise ValidationError("deficit must have one entry per vertex")
        if (g < 0).any():
            raise DeficitViolation("deficit must be nonnegative")
        slots = d - g - self.g0.degrees
        if (slots < 0).any():
            v = int(np.flatnonzero(slots < 0)[0])
            raise DeficitViolation(f"vertex {v}: deg + g exceeds d={d}")
        g = g.copy()
        g.setflags(write=False)
        object.__setattr__(self, "g", g)

    @classmethod
    def free(cls, g0: Graph, d: int) -> "TreeExtensionSpec":
        """Extension with ``g = 0``: every vertex is completed to degree ``d``."""
        return cls(g0, d, np.zeros(g0.n, dtype=np.int64))

    @property
    def slots(self) -> np.ndarray:
        """Number of rooted trees attached at each vertex."""
        return self.d - self.g - self.g0.degrees


def extension_operator(spec: TreeExtensionSpec, z) -> np.ndarray:
    """``H2 - z``: normalized adjacency of ``g0`` plus the self-loop weights, shifted by ``z``."""
    z = as_point(z).z
    d = spec.d
    M = spec.g0.adjacency(complex) / np.sqrt(d - 1)
    loops = -m_sc(z) * spec.slots / (d - 1)
    M[np.diag_indices_from(M)] += loops - z
    return M


def _solve_extension(spec, z, rhs):
    M = extension_operator(spec, z)
    try:
        return solve_refined(M, rhs)
    except SolveFailed as exc:
        raise SingularSystem(str(exc), residual=exc.residual) from exc


def tree_extension_green(spec: TreeExtensionSpec, z) -> GreenMatrix:
    """Green's function of the tree extension, restricted to the vertices of ``g0``."""
    z = as_point(z)
    n = spec.g0.n
    P, res = _solve_extension(spec, z, np.eye(n, dtype=complex))
    labels = spec.g0.vertices if isinstance(spec.g0, Subgraph) else None
    return GreenMatrix(z, P, res, None if labels is None else np.asarray(labels))


def tree_extension_column(spec: TreeExtensionSpec, j: int, z) -> np.ndarray:
    """Column ``j`` (local index) of the tree-extension Green's function."""
    rhs = np.zeros(spec.g0.n, dtype=complex)
    rhs[j] = 1.0
    col, _ = _solve_extension(spec, z, rhs)
    return col


def localized_green(G: Graph, i: int, j: int, r: int, z, d: int) -> complex:
    """``P_ij`` of the tree extension of the radius-``r`` path neighborhood of ``(i, j)``.

    Exactly zero when ``dist(i, j) > r``.
    """
    d = _check_d(d)
    if (G.degrees > d).any():
        raise ValidationError(f"graph has a vertex of degree above {d}")
    E = path_neighborhood(G, i, j, r)
    if E.n == 0:
        return 0j
    spec = TreeExtensionSpec(E, d)
    col = tree_extension_column(spec, E.local(j), z)
    return complex(col[E.local(i)])


class SeriesValue(NamedTuple):
    value: complex
    tail_bound: float
    omega: int
    ratio: float


def nbw_series_green(spec: TreeExtensionSpec, i: int, j: int, z, max_len: int) -> SeriesValue:
    """``P_ij`` as ``m_d * sum_k #NBW_k(i, j) t^k``, truncated at ``max_len``.

    Only valid for ``g = 0``. The tail is bounded with the walk-count estimate
    ``#NBW(dist + k - 1) <= 2^(omega k)``, which needs ``2^omega q < 1``;
    ``omega`` is the excess of the component containing ``i``.
    """
    if np.any(spec.g != 0):
        raise ValidationError("the walk series needs a zero deficit")
    if max_len < 0:
        raise ValidationError("max_len must be nonnegative")
    G0, d = spec.g0, spec.d
    comp = next(c for c in components(G0) if i in c)
    omega = excess(induced_subgraph(G0, comp))
    q = q_param(z, d)
    ratio = (2.0 ** omega) * q
    if ratio >= 1:
        raise SeriesDiverging(f"2^omega q = {ratio:.4g} >= 1 (omega={omega})")
    md = m_d(z, d)
    if j not in comp:
        return SeriesValue(0j, 0.0, omega, ratio)
    t = hop_factor(z, d)
    table = nbw_count_table(G0, i, max_len, exact=True)
    counts = [int(table[k][j]) for k in range(max_len + 1)]
    value = md * sum(c * t ** k for k, c in enumerate(counts) if c)
    dist_ij = graph_dist(G0, i, j)
    first = max(max_len - dist_ij + 2, 1)
    tail = abs(md) * q ** (dist_ij - 1) * ratio ** first / (1 - ratio)
    return SeriesValue(complex(value), float(tail), omega, ratio)
