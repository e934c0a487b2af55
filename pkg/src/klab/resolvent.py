"""Exact Green's functions of finite graphs, minors, and edge-averaged functionals."""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .dense import GreenMatrix, SpectralPoint, as_point, solve_refined
from .errors import DegreeDomain, SizeCapExceeded, ValidationError, ZeroDiagonal
from .graph import Graph, remove_vertices
from .tree_green import m_d, m_sc

DEFAULT_DENSE_CAP = 6000


def dense_cap() -> int:
    return int(os.environ.get("KLAB_DENSE_CAP", DEFAULT_DENSE_CAP))


def _check_cap(n):
    cap = dense_cap()
    if n > cap:
        raise SizeCapExceeded(f"n={n} exceeds the dense cap {cap} (set KLAB_DENSE_CAP to raise it)")


def normalized_adjacency(G: Graph, d: int) -> np.ndarray:
    """``A / sqrt(d - 1)``, with the scale fixed by ``d`` regardless of actual degrees."""
    if d < 2:
        raise DegreeDomain("normalization needs d >= 2")
    return G.adjacency(float) / np.sqrt(d - 1)


def green_full(G: Graph, z, d: int) -> GreenMatrix:
    """``(H - z)^{-1}`` for ``H = A / sqrt(d - 1)``."""
    z = as_point(z)
    _check_cap(G.n)
    M = normalized_adjacency(G, d).astype(complex)
    M[np.diag_indices_from(M)] -= z.z
    I = np.eye(G.n, dtype=complex)
    X, _ = solve_refined(M, I)
    X = (X + X.T) / 2
    res = float(np.max(np.abs(M @ X - I), initial=0.0))
    labels = getattr(G, "vertices", None)
    return GreenMatrix(z, X, res, None if labels is None else np.asarray(labels))


def green_column(G: Graph, j: int, z, d: int) -> np.ndarray:
    """Single column ``G[:, j]`` by one solve; usable above the dense cap only for moderate n."""
    z = as_point(z)
    G._check_vertex(j)
    M = normalized_adjacency(G, d).astype(complex)
    M[np.diag_indices_from(M)] -= z.z
    rhs = np.zeros(G.n, dtype=complex)
    rhs[j] = 1.0
    col, _ = solve_refined(M, rhs)
    return col


def green_minor(G: Graph, X, z, d: int) -> GreenMatrix:
    """Resolvent of ``H`` with the vertices ``X`` deleted; rows labelled by surviving vertices."""
    sub = remove_vertices(G, X)
    return green_full(sub, z, d)


def schur_minor_entry(Gm: GreenMatrix, i: int, j: int, k: int) -> complex:
    """``G^(k)_ij = G_ij - G_ik G_kj / G_kk`` for vertex labels ``i, j != k``."""
    if i == k or j == k:
        raise ValidationError("i and j must differ from the removed vertex k")
    a, b, c = Gm.row_of(i), Gm.row_of(j), Gm.row_of(k)
    gkk = Gm.entries[c, c]
    if gkk == 0:
        raise ZeroDiagonal(f"G_kk vanishes at vertex {k}", vertex=k)
    return complex(Gm.entries[a, b] - Gm.entries[a, c] * Gm.entries[c, b] / gkk)


def ward_residual(Gm: GreenMatrix) -> float:
    """``max_i | sum_j |G_ij|^2 - Im G_ii / eta |``."""
    if Gm.n == 0:
        return 0.0
    row = np.sum(np.abs(Gm.entries) ** 2, axis=1)
    return float(np.max(np.abs(row - Gm.diag().imag / Gm.z.eta)))


@dataclass(frozen=True)
class QValue:
    z: SpectralPoint
    q_of_g: complex
    n: int
    d: int


def _check_regular(G, d):
    if int(d) != d or d < 3:
        raise DegreeDomain(f"degree must be an integer >= 3, got {d}")
    if not G.is_regular(d):
        raise ValidationError(f"graph is not {d}-regular")


def q_functional(G: Graph, z, d: int, green: GreenMatrix | None = None) -> QValue:
    """Edge average ``(1/(N d)) sum_{(i,j)} G^(i)_jj`` from a single resolvent.

    The minor diagonal comes from the Schur identity ``G_jj - G_ij^2 / G_ii``.
    """
    z = as_point(z)
    _check_regular(G, d)
    Gm = green if green is not None else green_full(G, z, d)
    E = Gm.entries
    diag = np.diagonal(E)
    zero = np.flatnonzero(diag == 0)
    if zero.size:
        raise ZeroDiagonal(f"G_ii vanishes at vertex {int(zero[0])}", vertex=int(zero[0]))
    tail = np.repeat(np.arange(G.n), G.degrees)
    head = np.asarray(G.indices)
    terms = diag[head] - E[tail, head] ** 2 / diag[tail]
    return QValue(z, complex(terms.sum() / (G.n * d)), G.n, int(d))


def q_functional_bruteforce(G: Graph, z, d: int) -> QValue:
    """Same functional with one minor solve per vertex (reference for small graphs)."""
    z = as_point(z)
    _check_regular(G, d)
    total = 0j
    for i in range(G.n):
        Gi = green_minor(G, [i], z, d)
        for j in G.neighbors(i):
            k = Gi.row_of(int(j))
            total += Gi.entries[k, k]
    return QValue(z, complex(total / (G.n * d)), G.n, int(d))


def sce_residual_from_q(Q: complex, z, d: int, ell: int) -> complex:
    """``(Q - m_sc) (1 - (d-2)/(d-1) m_d m_sc^(2 ell + 1))``."""
    ms = m_sc(z)
    delta = Q - ms
    return complex(delta - (d - 2) / (d - 1) * m_d(z, d) * ms ** (2 * ell + 1) * delta)


def sce_residual(G: Graph, z, d: int, ell: int, green: GreenMatrix | None = None) -> complex:
    """Self-consistent-equation residual of the edge functional."""
    if ell < 0:
        raise ValidationError("ell must be nonnegative")
    Q = q_functional(G, z, d, green=green).q_of_g
    return sce_residual_from_q(Q, z, d, ell)
