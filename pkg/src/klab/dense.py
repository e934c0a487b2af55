"""Dense complex solves with iterative refinement, and the GreenMatrix container."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .errors import NotUpperHalfPlane, SolveFailed

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class SpectralPoint:
    """A point ``z`` of the open upper half plane."""

    z: complex

    def __post_init__(self):
        z = complex(self.z)
        if not np.isfinite(z.real) or not np.isfinite(z.imag):
            raise NotUpperHalfPlane(f"z={z} is not finite")
        if not z.imag > 0:
            raise NotUpperHalfPlane(f"Im z must be positive, got z={z}")
        object.__setattr__(self, "z", z)

    @property
    def eta(self) -> float:
        return self.z.imag

    @property
    def E(self) -> float:
        return self.z.real

    def __complex__(self):
        return self.z


def as_point(z) -> SpectralPoint:
    return z if isinstance(z, SpectralPoint) else SpectralPoint(z)


@dataclass(frozen=True, eq=False)
class GreenMatrix:
    """Dense resolvent-type matrix with the residual of its defining solve.

    ``labels[k]`` is the vertex (in the caller's numbering) of row ``k``.
    """

    z: SpectralPoint
    entries: np.ndarray
    residual: float
    labels: np.ndarray = field(default=None)

    def __post_init__(self):
        self.entries.setflags(write=False)
        if self.labels is None:
            object.__setattr__(self, "labels", np.arange(self.entries.shape[0], dtype=np.int64))

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])

    def __getitem__(self, key):
        return self.entries[key]

    def row_of(self, v: int) -> int:
        hits = np.flatnonzero(self.labels == v)
        if hits.size == 0:
            raise KeyError(v)
        return int(hits[0])

    def diag(self) -> np.ndarray:
        return np.diagonal(self.entries)

    def symmetry_error(self) -> float:
        return float(np.max(np.abs(self.entries - self.entries.T), initial=0.0))

    def to_dict(self) -> dict:
        E = self.entries
        return {
            "z": [self.z.z.real, self.z.z.imag],
            "n": self.n,
            "residual": self.residual,
            "labels": self.labels.tolist(),
            "entries": np.stack([E.real, E.imag], axis=-1).tolist(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def solve_refined(M: np.ndarray, rhs: np.ndarray, tol: float = RESIDUAL_TOL, max_steps: int = 3):
    """Solve ``M X = rhs`` by LU plus a few refinement sweeps.

    Returns ``(X, residual)`` with residual the max-norm of ``M X - rhs``.
    Raises :class:`SolveFailed` if the tolerance is still missed.
    """
    if M.shape[0] == 0:
        return np.zeros_like(rhs, dtype=complex), 0.0
    try:
        lu = sla.lu_factor(M, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SolveFailed(f"factorization failed: {exc}", residual=np.inf) from exc
    X = sla.lu_solve(lu, rhs, check_finite=False)
    res = float(np.max(np.abs(M @ X - rhs)))
    steps = 0
    while not res < tol and steps < max_steps:
        X = X - sla.lu_solve(lu, M @ X - rhs, check_finite=False)
        res = float(np.max(np.abs(M @ X - rhs)))
        steps += 1
    if not res < tol:
        raise SolveFailed(f"residual {res:.3e} above {tol:.0e}", residual=res)
    return X, res
