"""Local spectral problems on coarse elements and the auxiliary projection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import element_operators, spectral_weight
from .grid import CoarseGrid, FineGrid, PartitionOfUnity

# patches above this size use shift-invert Lanczos instead of a dense pencil solve
DENSE_LIMIT = 1600


class SpectralError(RuntimeError):
    pass


@dataclass
class AuxiliarySpace:
    """Per-element eigenpairs of the pencil (a_i, s_i).

    ``vectors[i]`` has shape (n_local, L) in the element's node numbering
    (``coarse.element_nodes(i)``); ``eigenvalues[i]`` holds L + 1 values so the
    first discarded one is available for the spectral gap.
    """

    coarse: CoarseGrid
    L: int
    eigenvalues: np.ndarray  # (n_elements, L + 1)
    vectors: np.ndarray  # (n_elements, n_local, L)
    S_local: list  # sparse (n_local, n_local) per element
    A_local: list
    regularized: list[int] = field(default_factory=list)

    @property
    def gap(self) -> float:
        return float(self.eigenvalues[:, self.L].min())

    @property
    def n_elements(self) -> int:
        return self.vectors.shape[0]

    def s_vectors(self, i: int) -> np.ndarray:
        """``S_i phi_j`` for all j (columns), local numbering."""
        return np.asarray(self.S_local[i] @ self.vectors[i])


def local_spectral_basis(A_i, S_i, L: int):
    """Return (eigenvalues[:L+1], S-orthonormal eigenvectors[:, :L], regularized)."""
    n = A_i.shape[0]
    if L + 1 > n:
        raise SpectralError(f"L + 1 = {L + 1} exceeds the {n} dofs of the element")
    S_i = sp.csc_matrix(S_i)
    regularized = False
    if np.min(S_i.diagonal()) <= 0:
        S_i = S_i + 1e-14 * S_i.diagonal().sum() * sp.identity(n, format="csc")
        regularized = True
    if n <= DENSE_LIMIT:
        Ad, Sd = _dense(A_i), S_i.toarray()
        try:
            lam, vec = sla.eigh(Ad, Sd, subset_by_index=[0, L])
        except sla.LinAlgError:
            Sd = Sd + 1e-14 * np.trace(Sd) * np.eye(n)
            regularized = True
            lam, vec = sla.eigh(Ad, Sd, subset_by_index=[0, L])
    else:
        # A + S is SPD, so shifting by sigma = -1 keeps the factorization nonsingular
        lam, vec = spla.eigsh(sp.csc_matrix(A_i), k=L + 1, M=S_i, sigma=-1.0, which="LM")
        order = np.argsort(lam)
        lam, vec = lam[order], vec[:, order]
    vec = vec[:, :L]
    # re-orthonormalize (handles tied eigenvalues and the iterative path)
    G = vec.T @ (S_i @ vec)
    C = sla.cholesky(0.5 * (G + G.T), lower=True)
    vec = sla.solve_triangular(C, vec.T, lower=True).T
    lam = np.maximum(lam, 0.0)
    return lam, vec, regularized


def _dense(a) -> np.ndarray:
    return a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)


def build_auxiliary(fine: FineGrid, coarse: CoarseGrid, pou: PartitionOfUnity, kappa: np.ndarray,
                    L: int) -> AuxiliarySpace:
    weight = spectral_weight(kappa, pou)
    n_loc = (coarse.ratio + 1) ** 2
    ne = coarse.n_elements
    lams = np.zeros((ne, L + 1))
    vecs = np.zeros((ne, n_loc, L))
    S_all, A_all, reg = [], [], []
    for i in range(ne):
        A_i, S_i = element_operators(fine, coarse, kappa, weight, i)
        lam, vec, r = local_spectral_basis(A_i, S_i, L)
        lams[i], vecs[i] = lam, vec
        S_all.append(S_i.tocsr())
        A_all.append(A_i.tocsr())
        if r:
            reg.append(i)
    return AuxiliarySpace(coarse, L, lams, vecs, S_all, A_all, reg)


def _broken(aux: AuxiliarySpace, v: np.ndarray) -> np.ndarray:
    """Restrict v to every element; accepts interior-dof, full nodal, or broken input."""
    v = np.asarray(v, dtype=float)
    if v.ndim == 2:
        return v
    fine = aux.coarse.fine
    if v.size == fine.n_interior:
        v = fine.to_full(v)
    elif v.size != fine.n_nodes:
        raise ValueError(f"vector of length {v.size} does not match the grid")
    return v[element_node_table(aux.coarse)]


def element_node_table(coarse: CoarseGrid) -> np.ndarray:
    """(n_elements, n_local) global node ids of every element."""
    return np.stack([coarse.element_nodes(i) for i in range(coarse.n_elements)])


def aux_coefficients(aux: AuxiliarySpace, v: np.ndarray) -> np.ndarray:
    """``s_i(v, phi_j^(i))`` as an (n_elements, L) array."""
    vb = _broken(aux, v)
    return np.stack([aux.vectors[i].T @ (aux.S_local[i] @ vb[i]) for i in range(aux.n_elements)])


def aux_projection(aux: AuxiliarySpace, v: np.ndarray) -> np.ndarray:
    """s-orthogonal projection onto the auxiliary space.

    The result is element-wise (broken): an (n_elements, n_local) array of the
    projection restricted to each element.
    """
    coef = aux_coefficients(aux, v)
    return np.einsum("ekj,ej->ek", aux.vectors, coef)


def s_inner(aux: AuxiliarySpace, v: np.ndarray, w: np.ndarray) -> float:
    """Global ``s(v, w) = sum_i s_i(v, w)`` for (possibly broken) v, w."""
    vb, wb = _broken(aux, v), _broken(aux, w)
    return float(sum(vb[i] @ (aux.S_local[i] @ wb[i]) for i in range(aux.n_elements)))
