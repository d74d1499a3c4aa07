"""Constraint energy minimizing basis functions on oversampled patches."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import K_REF, assemble_stiffness
from .grid import CoarseGrid, FineGrid, OversampleRegion, box_cell_nodes, oversample
from .spectral import AuxiliarySpace


class BasisError(RuntimeError):
    pass


@dataclass
class MultiscaleBasis:
    R0: sp.csc_matrix  # (n_interior, n_elements * L)
    element: np.ndarray  # column -> coarse element
    index: np.ndarray  # column -> eigenindex j
    layers: int
    L: int
    gap: float
    decay: np.ndarray  # (n_cols, layers + 1): energy fraction outside K_{i,l}

    @property
    def n_cols(self) -> int:
        return self.R0.shape[1]

    def decay_ratios(self) -> np.ndarray:
        """``decay[:, l + 1] / decay[:, l]`` for l >= 1; nan where the denominator vanishes."""
        d = self.decay
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(d[:, 1:-1] > 0, d[:, 2:] / d[:, 1:-1], np.nan)
        return r


def patch_constraints(aux: AuxiliarySpace, region: OversampleRegion) -> tuple[sp.csc_matrix, list[tuple[int, int]]]:
    """Constraint matrix B with ``B[:, k] = S_e phi_j^(e)`` on the patch-interior dofs.

    Columns run over all auxiliary functions of the elements inside the patch;
    ``labels[k] = (e, j)``.
    """
    coarse = aux.coarse
    n_nodes = coarse.fine.n_nodes
    where = -np.ones(n_nodes, dtype=np.int64)
    where[region.nodes[region.interior]] = np.arange(int(region.interior.sum()))
    rows, cols, vals, labels = [], [], [], []
    for e in region.elements:
        sv = aux.s_vectors(e)
        loc = where[coarse.element_nodes(e)]
        keep = loc >= 0
        for j in range(aux.L):
            k = len(labels)
            labels.append((int(e), j))
            rows.append(loc[keep])
            cols.append(np.full(keep.sum(), k))
            vals.append(sv[keep, j])
    B = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(int(region.interior.sum()), len(labels)),
    )
    return B, labels


def _kkt_solve(A: sp.spmatrix, B: sp.spmatrix, rhs_cols: list[int], region: OversampleRegion) -> np.ndarray:
    n, k = B.shape
    K = sp.bmat([[A, B], [B.T, None]], format="csc")
    rhs = np.zeros((n + k, len(rhs_cols)))
    rhs[n + np.asarray(rhs_cols), np.arange(len(rhs_cols))] = 1.0
    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        rank = np.linalg.matrix_rank(B.toarray())
        raise BasisError(
            f"singular saddle system for element {region.element}, layers {region.layers}: "
            f"constraint rank {rank} of {k}"
        ) from exc
    sol = lu.solve(rhs)
    if not np.all(np.isfinite(sol)):
        raise BasisError(f"non-finite saddle solution for element {region.element}, layers {region.layers}")
    return sol[:n]


def solve_patch(fine: FineGrid, aux: AuxiliarySpace, kappa: np.ndarray, region: OversampleRegion,
                targets: list[int] | None = None) -> np.ndarray:
    """Minimizers for ``phi_j^(i)``, i = region.element, on the patch-interior dofs.

    Returns an array (n_patch_interior, len(targets)).
    """
    if targets is None:
        targets = list(range(aux.L))
    A = assemble_stiffness(fine, kappa, region, dofs="interior")
    B, labels = patch_constraints(aux, region)
    pos = {lab: k for k, lab in enumerate(labels)}
    return _kkt_solve(A, B, [pos[(region.element, j)] for j in targets], region)


def solve_local_minimizer(fine: FineGrid, aux: AuxiliarySpace, kappa: np.ndarray, region: OversampleRegion,
                          j: int) -> np.ndarray:
    """Basis function for ``phi_j^(i)`` zero-extended to all interior dofs of the domain."""
    psi = solve_patch(fine, aux, kappa, region, [j])[:, 0]
    out = np.zeros(fine.n_interior)
    out[region.interior_dofs] = psi
    return out


def _patch_decay(region: OversampleRegion, kappa: np.ndarray, psi_patch: np.ndarray) -> np.ndarray:
    """Energy fraction of each column outside K_{i,l}, l = 0..layers."""
    coarse = region.coarse
    nx, ny = region.shape
    ex0, _, ey0, _ = region.box
    r = coarse.ratio
    full = np.zeros(((nx + 1) * (ny + 1), psi_patch.shape[1]))
    full[region.interior] = psi_patch
    conn = box_cell_nodes(nx, ny)
    kap = np.asarray(kappa, dtype=float).reshape(coarse.fine.n, coarse.fine.n)[ey0 * r : ey0 * r + ny, ex0 * r : ex0 * r + nx]
    uc = full[conn]  # (cells, 4, cols)
    e = np.einsum("cik,ij,cjk->ck", uc, K_REF, uc) * kap.ravel()[:, None]
    e = np.maximum(e, 0.0).reshape(ny, nx, -1)
    total = e.sum(axis=(0, 1))
    out = np.zeros((psi_patch.shape[1], region.layers + 1))
    mask = np.ones((ny, nx), dtype=bool)
    for l in range(region.layers + 1):
        bx0, bx1, by0, by1 = region.sub_box(l)
        mask[(by0 - ey0) * r : (by1 - ey0) * r, (bx0 - ex0) * r : (bx1 - ex0) * r] = False
        out[:, l] = e[mask].sum(axis=0) / total
    return out


def build_basis(fine: FineGrid, coarse: CoarseGrid, aux: AuxiliarySpace, kappa: np.ndarray,
                m: int) -> MultiscaleBasis:
    L = aux.L
    rows, cols, vals = [], [], []
    decay = np.zeros((coarse.n_elements * L, m + 1))
    for i in range(coarse.n_elements):
        region = oversample(coarse, i, m)
        psi = solve_patch(fine, aux, kappa, region)
        decay[i * L : (i + 1) * L] = _patch_decay(region, kappa, psi)
        dofs = region.interior_dofs
        for j in range(L):
            nz = psi[:, j] != 0
            rows.append(dofs[nz])
            cols.append(np.full(nz.sum(), i * L + j))
            vals.append(psi[nz, j])
    R0 = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(fine.n_interior, coarse.n_elements * L),
    )
    element = np.repeat(np.arange(coarse.n_elements), L)
    index = np.tile(np.arange(L), coarse.n_elements)
    return MultiscaleBasis(R0, element, index, m, L, aux.gap, decay)


def kappa_checksum(kappa: np.ndarray) -> str:
    return hashlib.sha256(np.ascontiguousarray(kappa, dtype=np.float64).tobytes()).hexdigest()


def cache_header(fine: FineGrid, coarse: CoarseGrid, m: int, L: int, kappa: np.ndarray) -> dict:
    return {"n_fine": fine.n, "N_coarse": coarse.N, "layers": m, "L": L, "kappa_sha256": kappa_checksum(kappa)}


def save_basis(path: str | Path, basis: MultiscaleBasis, header: dict) -> None:
    R0 = basis.R0.tocsc()
    with open(path, "wb") as fh:
        np.savez(
            fh,
            header=np.array(json.dumps(header, sort_keys=True)),
            shape=np.array(R0.shape),
            data=R0.data, indices=R0.indices, indptr=R0.indptr,
            element=basis.element, index=basis.index, decay=basis.decay,
            gap=np.array(basis.gap),
        )


def load_basis(path: str | Path, header: dict) -> MultiscaleBasis | None:
    """Cached basis if the file exists and its header matches ``header``, else None."""
    path = Path(path)
    if not path.exists():
        return None
    with np.load(path) as z:
        if json.loads(str(z["header"])) != header:
            return None
        R0 = sp.csc_matrix((z["data"], z["indices"], z["indptr"]), shape=tuple(z["shape"]))
        return MultiscaleBasis(R0, z["element"], z["index"], header["layers"], header["L"],
                               float(z["gap"]), z["decay"])
