"""Coarse-scale operators, the symmetrized generator, restriction and lifting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


class BasisRankError(np.linalg.LinAlgError):
    pass


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


@dataclass
class ReducedSystem:
    """Galerkin reduction ``M0 = R0^T M R0``, ``A0 = R0^T A R0``.

    With ``M0 = C C^T`` the symmetrized generator is ``G = C^-1 A0 C^-T``,
    similar to ``M0^-1 A0``; coarse coefficients c map to ``y = C^T c``.
    """

    R0: sp.spmatrix
    M: sp.spmatrix
    A: sp.spmatrix
    M0: np.ndarray
    A0: np.ndarray
    C: np.ndarray
    G: np.ndarray

    @property
    def dim(self) -> int:
        return self.M0.shape[0]

    def lift(self, c: np.ndarray) -> np.ndarray:
        return self.R0 @ c

    def restrict_load(self, fine_load: np.ndarray) -> np.ndarray:
        """``R0^T F``."""
        return self.R0.T @ fine_load

    def project(self, v: np.ndarray) -> np.ndarray:
        """Coarse coefficients of the M-orthogonal projection of the fine vector v."""
        return sla.cho_solve((self.C, True), self.R0.T @ (self.M @ v))

    def solve_mass(self, g: np.ndarray) -> np.ndarray:
        return sla.cho_solve((self.C, True), g)

    def to_sym(self, c: np.ndarray) -> np.ndarray:
        return self.C.T @ c

    def from_sym(self, y: np.ndarray) -> np.ndarray:
        return sla.solve_triangular(self.C, y, lower=True, trans="T")

    def load_sym(self, g: np.ndarray) -> np.ndarray:
        """``C^-1 g``: a restricted load ``g = R0^T F`` in symmetrized variables."""
        return sla.solve_triangular(self.C, g, lower=True)


def reduce(R0, M, A) -> ReducedSystem:
    R0 = sp.csc_matrix(R0) if sp.issparse(R0) else np.asarray(R0, dtype=float)
    M0 = _dense(R0.T @ (M @ R0))
    A0 = _dense(R0.T @ (A @ R0))
    M0 = 0.5 * (M0 + M0.T)
    A0 = 0.5 * (A0 + A0.T)
    try:
        C = sla.cholesky(M0, lower=True)
    except sla.LinAlgError as exc:
        lam = sla.eigvalsh(M0)[0]
        raise BasisRankError(f"coarse mass matrix is not SPD (smallest eigenvalue {lam:.3e})") from exc
    # a tiny normalized pivot bounds the normalized smallest eigenvalue from above
    if np.min(np.diag(C) ** 2 / np.diag(M0)) < 1e-10:
        lam = sla.eigvalsh(M0)[0]
        raise BasisRankError(f"coarse basis is numerically rank deficient (smallest eigenvalue {lam:.3e})")
    X = sla.solve_triangular(C, A0, lower=True)
    G = sla.solve_triangular(C, X.T, lower=True)
    G = 0.5 * (G + G.T)
    return ReducedSystem(R0, M, A, M0, A0, C, G)


def gram_min_singular(M0: np.ndarray) -> float:
    """Smallest singular value of the diagonally normalized coarse mass matrix."""
    d = 1.0 / np.sqrt(np.diag(M0))
    return float(sla.svdvals(d[:, None] * M0 * d[None, :])[-1])
