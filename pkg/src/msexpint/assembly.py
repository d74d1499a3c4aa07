"""Q1 finite element assembly on boxes of fine cells.

Every operator is assembled on a coarse-aligned box of cells with the box's own
node numbering and then restricted to the requested dofs.  The global operators
are the special case box = domain, restricted to interior nodes.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import CoarseGrid, FineGrid, OversampleRegion, PartitionOfUnity, box_cell_nodes


class CoefficientError(ValueError):
    pass


_GAUSS = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


def _reference_matrices() -> tuple[np.ndarray, np.ndarray]:
    """Unit-square Q1 stiffness and mass by 2x2 Gauss quadrature (weights 1/4)."""
    K = np.zeros((4, 4))
    Mm = np.zeros((4, 4))
    for x in _GAUSS:
        for y in _GAUSS:
            phi = np.array([(1 - x) * (1 - y), x * (1 - y), (1 - x) * y, x * y])
            dx = np.array([-(1 - y), 1 - y, -y, y])
            dy = np.array([-(1 - x), -x, 1 - x, x])
            K += 0.25 * (np.outer(dx, dx) + np.outer(dy, dy))
            Mm += 0.25 * np.outer(phi, phi)
    return K, Mm


# stiffness is scale-free in 2D; mass scales with h^2
K_REF, M_REF = _reference_matrices()


def _check_weights(w: np.ndarray, name: str) -> None:
    bad = np.flatnonzero(~(w > 0) | ~np.isfinite(w))
    if bad.size:
        raise CoefficientError(f"{name} must be positive and finite; cell {bad[0]} has {w.ravel()[bad[0]]}")


def assemble_box(nx: int, ny: int, weights: np.ndarray, local: np.ndarray) -> sp.csr_matrix:
    """Assemble ``sum_c weights[c] * local`` over an ``nx x ny`` cell box (all box nodes)."""
    conn = box_cell_nodes(nx, ny)
    w = np.asarray(weights, dtype=float).ravel()
    rows = np.repeat(conn, 4, axis=1).ravel()
    cols = np.tile(conn, (1, 4)).ravel()
    vals = (w[:, None] * local.ravel()[None, :]).ravel()
    n = (nx + 1) * (ny + 1)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def _restrict(mat: sp.csr_matrix, keep: np.ndarray) -> sp.csr_matrix:
    return mat[keep][:, keep].tocsr()


def _region_weights(grid: FineGrid, field: np.ndarray, region: OversampleRegion | None):
    field = np.asarray(field, dtype=float).reshape(grid.n, grid.n)
    if region is None:
        return grid.n, grid.n, field
    ex0, ex1, ey0, ey1 = region.box
    r = region.coarse.ratio
    return (ex1 - ex0) * r, (ey1 - ey0) * r, field[ey0 * r : ey1 * r, ex0 * r : ex1 * r]


def _assemble(grid, field, region, dofs, local, name):
    nx, ny, w = _region_weights(grid, field, region)
    _check_weights(w, name)
    mat = assemble_box(nx, ny, w, local)
    if dofs == "all":
        return mat
    if dofs != "interior":
        raise ValueError(f"dofs must be 'interior' or 'all', got {dofs!r}")
    if region is None:
        return _restrict(mat, grid.interior_nodes)
    return _restrict(mat, np.flatnonzero(region.interior))


def assemble_stiffness(grid: FineGrid, kappa: np.ndarray, region: OversampleRegion | None = None,
                       dofs: str = "interior") -> sp.csr_matrix:
    """Stiffness matrix of ``int kappa grad u . grad v``.

    Without ``region`` the matrix lives on the interior dofs (Dirichlet
    elimination).  With a region, ``dofs="all"`` keeps every box node (natural
    boundary) and ``dofs="interior"`` keeps the box-interior nodes (zero trace).
    """
    return _assemble(grid, kappa, region, dofs, K_REF, "kappa")


def assemble_mass(grid: FineGrid, weight: np.ndarray | None = None, region: OversampleRegion | None = None,
                  dofs: str = "interior") -> sp.csr_matrix:
    if weight is None:
        weight = np.ones((grid.n, grid.n))
    return _assemble(grid, weight, region, dofs, grid.h**2 * M_REF, "weight")


def element_operators(grid: FineGrid, coarse: CoarseGrid, kappa: np.ndarray, weight: np.ndarray, i: int):
    """Sparse (A_i, S_i) on all nodes of coarse element ``i`` (natural boundary)."""
    ex, ey = coarse.element_xy(i)
    r = coarse.ratio
    sl = np.s_[ey * r : (ey + 1) * r, ex * r : (ex + 1) * r]
    kap = np.asarray(kappa, dtype=float).reshape(grid.n, grid.n)[sl]
    wt = np.asarray(weight, dtype=float).reshape(grid.n, grid.n)[sl]
    _check_weights(kap, "kappa")
    _check_weights(wt, "weight")
    A = assemble_box(r, r, kap, K_REF)
    S = assemble_box(r, r, wt, grid.h**2 * M_REF)
    return A, S


def spectral_weight(kappa: np.ndarray, pou: PartitionOfUnity) -> np.ndarray:
    """Cellwise ``kappa * sum_i |grad chi_i|^2``."""
    return np.asarray(kappa, dtype=float).reshape(pou.grad_sq.shape) * pou.grad_sq


def nonlinear_load(M, f, u: np.ndarray) -> np.ndarray:
    """``M f(u)`` with ``f`` applied nodewise."""
    fu = np.asarray(f(u), dtype=float) * np.ones(np.shape(u))
    bad = np.flatnonzero(~np.isfinite(fu))
    if bad.size:
        raise OverflowError(f"reaction is not finite at node {bad[0]} (u={u[bad[0]]})")
    return M @ fu


def cell_energies(grid: FineGrid, kappa: np.ndarray, u_full: np.ndarray) -> np.ndarray:
    """Per-cell ``int_c kappa |grad u|^2`` for a full nodal vector; shape (n, n)."""
    uc = np.asarray(u_full)[grid.cell_nodes]
    e = np.einsum("ci,ij,cj->c", uc, K_REF, uc)
    return (np.asarray(kappa, dtype=float).ravel() * e).reshape(grid.n, grid.n)
