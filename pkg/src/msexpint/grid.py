"""Structured fine/coarse grids on the unit square.

Node ``(ix, iy)`` of an ``n x n`` fine grid has global id ``iy * (n + 1) + ix``;
cell ``(cx, cy)`` has id ``cy * n + cx``.  Cell-wise fields are stored as
arrays of shape ``(n, n)`` indexed ``[cy, cx]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.sparse as sp


class GridError(ValueError):
    """Inconsistent grid configuration."""


@dataclass(frozen=True)
class FineGrid:
    n: int

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def n_nodes(self) -> int:
        return (self.n + 1) ** 2

    @property
    def n_cells(self) -> int:
        return self.n**2

    @property
    def n_interior(self) -> int:
        return (self.n - 1) ** 2

    @cached_property
    def coords(self) -> np.ndarray:
        """(n_nodes, 2) array of node coordinates."""
        t = np.linspace(0.0, 1.0, self.n + 1)
        x, y = np.meshgrid(t, t)
        return np.column_stack([x.ravel(), y.ravel()])

    @cached_property
    def interior_nodes(self) -> np.ndarray:
        """Global node ids of interior nodes, in dof order."""
        i = np.arange(1, self.n)
        ix, iy = np.meshgrid(i, i)
        return (iy * (self.n + 1) + ix).ravel()

    @cached_property
    def dof_of_node(self) -> np.ndarray:
        """Interior dof index of every node, ``-1`` on the boundary."""
        out = -np.ones(self.n_nodes, dtype=np.int64)
        out[self.interior_nodes] = np.arange(self.n_interior)
        return out

    @cached_property
    def cell_nodes(self) -> np.ndarray:
        """(n_cells, 4) node ids per cell, local order (0,0), (1,0), (0,1), (1,1)."""
        return box_cell_nodes(self.n, self.n)

    def to_full(self, u: np.ndarray) -> np.ndarray:
        """Zero-extend an interior dof vector to all nodes."""
        out = np.zeros(self.n_nodes)
        out[self.interior_nodes] = u
        return out

    def interpolate(self, func) -> np.ndarray:
        """Nodal interpolant of ``func(x, y)`` on the interior dofs."""
        xy = self.coords[self.interior_nodes]
        return np.asarray(func(xy[:, 0], xy[:, 1]), dtype=float) * np.ones(len(xy))


def box_cell_nodes(nx: int, ny: int) -> np.ndarray:
    """Q1 connectivity of an ``nx x ny`` cell box with its own node numbering."""
    cx, cy = np.meshgrid(np.arange(nx), np.arange(ny))
    n0 = (cy * (nx + 1) + cx).ravel()
    return np.column_stack([n0, n0 + 1, n0 + nx + 1, n0 + nx + 2])


@dataclass(frozen=True)
class CoarseGrid:
    N: int
    fine: FineGrid

    @property
    def H(self) -> float:
        return 1.0 / self.N

    @property
    def ratio(self) -> int:
        """Fine cells per coarse element side."""
        return self.fine.n // self.N

    @property
    def n_elements(self) -> int:
        return self.N**2

    @property
    def n_vertices(self) -> int:
        return (self.N + 1) ** 2

    def element_xy(self, i: int) -> tuple[int, int]:
        return i % self.N, i // self.N

    def element_cells(self, i: int) -> np.ndarray:
        """Fine cell ids of element ``i``."""
        return self.box_cells(*self._element_box(i))

    def _element_box(self, i: int) -> tuple[int, int, int, int]:
        ex, ey = self.element_xy(i)
        return ex, ex + 1, ey, ey + 1

    def box_cells(self, ex0: int, ex1: int, ey0: int, ey1: int) -> np.ndarray:
        r, n = self.ratio, self.fine.n
        cx, cy = np.meshgrid(np.arange(ex0 * r, ex1 * r), np.arange(ey0 * r, ey1 * r))
        return (cy * n + cx).ravel()

    def box_nodes(self, ex0: int, ex1: int, ey0: int, ey1: int) -> np.ndarray:
        """Global node ids of a coarse-aligned box, in the box's own numbering."""
        r, n = self.ratio, self.fine.n
        ix, iy = np.meshgrid(np.arange(ex0 * r, ex1 * r + 1), np.arange(ey0 * r, ey1 * r + 1))
        return (iy * (n + 1) + ix).ravel()

    def element_nodes(self, i: int) -> np.ndarray:
        return self.box_nodes(*self._element_box(i))

    def neighborhood(self, v: int) -> list[int]:
        """Elements touching coarse vertex ``v`` (1 to 4 of them)."""
        vx, vy = v % (self.N + 1), v // (self.N + 1)
        out = []
        for ey in (vy - 1, vy):
            for ex in (vx - 1, vx):
                if 0 <= ex < self.N and 0 <= ey < self.N:
                    out.append(ey * self.N + ex)
        return out

    @cached_property
    def element_of_cell(self) -> np.ndarray:
        n, r = self.fine.n, self.ratio
        c = np.arange(n)
        cx, cy = np.meshgrid(c // r, c // r)
        return (cy * self.N + cx).ravel()


@dataclass(frozen=True)
class OversampleRegion:
    """Element ``element`` enlarged by ``layers`` coarse layers, clipped to the domain.

    ``nodes`` lists the global ids of the box nodes in box numbering; ``interior``
    flags the nodes strictly inside the box (zero trace on its boundary, which
    also covers the global Dirichlet condition).
    """

    element: int
    layers: int
    box: tuple[int, int, int, int]
    coarse: CoarseGrid = field(repr=False)

    @property
    def shape(self) -> tuple[int, int]:
        """Fine cells (nx, ny) of the box."""
        ex0, ex1, ey0, ey1 = self.box
        r = self.coarse.ratio
        return (ex1 - ex0) * r, (ey1 - ey0) * r

    @cached_property
    def cells(self) -> np.ndarray:
        return self.coarse.box_cells(*self.box)

    @cached_property
    def nodes(self) -> np.ndarray:
        return self.coarse.box_nodes(*self.box)

    @cached_property
    def interior(self) -> np.ndarray:
        nx, ny = self.shape
        ix, iy = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1))
        return ((ix > 0) & (ix < nx) & (iy > 0) & (iy < ny)).ravel()

    @cached_property
    def interior_dofs(self) -> np.ndarray:
        """Global interior-dof indices of the nodes flagged in ``interior``."""
        return self.coarse.fine.dof_of_node[self.nodes[self.interior]]

    @cached_property
    def elements(self) -> np.ndarray:
        ex0, ex1, ey0, ey1 = self.box
        ex, ey = np.meshgrid(np.arange(ex0, ex1), np.arange(ey0, ey1))
        return (ey * self.coarse.N + ex).ravel()

    def sub_box(self, layers: int) -> tuple[int, int, int, int]:
        return _layer_box(self.coarse, self.element, layers)

    @property
    def is_domain(self) -> bool:
        return self.box == (0, self.coarse.N, 0, self.coarse.N)


def _layer_box(coarse: CoarseGrid, i: int, m: int) -> tuple[int, int, int, int]:
    ex, ey = coarse.element_xy(i)
    N = coarse.N
    return max(ex - m, 0), min(ex + m + 1, N), max(ey - m, 0), min(ey + m + 1, N)


def oversample(coarse: CoarseGrid, i: int, m: int) -> OversampleRegion:
    if m < 0:
        raise GridError(f"layer count must be nonnegative, got {m}")
    if not 0 <= i < coarse.n_elements:
        raise GridError(f"element index {i} out of range")
    return OversampleRegion(i, m, _layer_box(coarse, i, m), coarse)


@dataclass(frozen=True)
class PartitionOfUnity:
    """Bilinear coarse hats sampled on fine nodes and the per-cell sum of squared gradients."""

    values: sp.csr_matrix  # (n_vertices, n_nodes)
    grad_sq: np.ndarray  # (n, n) per fine cell, at cell midpoints

    def hat(self, v: int) -> np.ndarray:
        return self.values[v].toarray().ravel()


def partition_of_unity(fine: FineGrid, coarse: CoarseGrid) -> PartitionOfUnity:
    H, N = coarse.H, coarse.N
    xy = fine.coords
    rows, cols, vals = [], [], []
    # each node touches up to 4 hats: the vertices of the coarse element containing it
    ex = np.minimum((xy[:, 0] / H).astype(np.int64), N - 1)
    ey = np.minimum((xy[:, 1] / H).astype(np.int64), N - 1)
    xi = xy[:, 0] / H - ex
    eta = xy[:, 1] / H - ey
    node = np.arange(fine.n_nodes)
    for dx, dy in ((0, 0), (1, 0), (0, 1), (1, 1)):
        w = (xi if dx else 1 - xi) * (eta if dy else 1 - eta)
        keep = w > 0
        rows.append(((ey + dy) * (N + 1) + ex + dx)[keep])
        cols.append(node[keep])
        vals.append(w[keep])
    values = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(coarse.n_vertices, fine.n_nodes),
    )
    r = coarse.ratio
    loc = (np.arange(fine.n) % r + 0.5) / r  # midpoint local coordinate in the element
    g1 = 2.0 * ((1 - loc) ** 2 + loc**2) / H**2
    grad_sq = g1[:, None] + g1[None, :]  # [cy, cx]: y-derivative part + x-derivative part
    return PartitionOfUnity(values, grad_sq)


def build_grids(n_fine: int, N_coarse: int) -> tuple[FineGrid, CoarseGrid, PartitionOfUnity]:
    if n_fine < 2 or N_coarse < 2:
        raise GridError(f"n_fine={n_fine} and N_coarse={N_coarse} must both be >= 2")
    if n_fine % N_coarse:
        raise GridError(f"n_fine={n_fine} is not divisible by N_coarse={N_coarse}")
    fine = FineGrid(n_fine)
    coarse = CoarseGrid(N_coarse, fine)
    return fine, coarse, partition_of_unity(fine, coarse)


def default_layers(H: float, kappa_max: float, c: float = 1.0 / math.log(10.0), rounding: str = "ceil") -> int:
    """Oversampling layers ``ceil(c * ln(kappa_max / H))``, at least 1.

    ``rounding="floor"`` reproduces the calibration pairs (1/8, 1e2) -> 2 and
    (1/16, 1e4) -> 5; no constant makes the ceiling hit both.
    """
    if not 0 < H < 1:
        raise GridError(f"coarse size H={H} outside (0, 1)")
    if kappa_max < 1:
        raise GridError(f"contrast {kappa_max} < 1")
    if rounding not in ("ceil", "floor"):
        raise GridError(f"rounding must be 'ceil' or 'floor', got {rounding!r}")
    x = c * math.log(kappa_max / H)
    # slack so exact integers are not pushed across by round-off
    m = math.ceil(x - 1e-9) if rounding == "ceil" else math.floor(x + 1e-9)
    return max(1, m)
