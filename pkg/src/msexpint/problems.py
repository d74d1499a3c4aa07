"""Problem catalogue, synthetic high-contrast fields and the cell raster format."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import FineGrid


class RasterError(ValueError):
    pass


@dataclass(frozen=True)
class SemilinearProblem:
    kappa: np.ndarray
    reaction: Callable[[np.ndarray], np.ndarray] | None
    tag: str
    u0: Callable[[np.ndarray, np.ndarray], np.ndarray]
    T: float
    epsilon: float | None = None

    @property
    def kappas(self) -> list[np.ndarray]:
        return [self.kappa]

    @property
    def initial(self) -> list[Callable]:
        return [self.u0]

    @property
    def species(self) -> tuple[str, ...]:
        return ("u",)


@dataclass(frozen=True)
class CoupledProblem:
    kappa_u: np.ndarray
    kappa_v: np.ndarray
    reaction: Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]
    tag: str
    u0: Callable
    v0: Callable
    T: float
    epsilon: float | None = None

    @property
    def kappas(self) -> list[np.ndarray]:
        return [self.kappa_u, self.kappa_v]

    @property
    def initial(self) -> list[Callable]:
        return [self.u0, self.v0]

    @property
    def species(self) -> tuple[str, ...]:
        return ("u", "v")


def _bubble(x, y):
    return x * (1 - x) * y * (1 - y)


def allen_cahn(eps: float = 1.0):
    s = 1.0 / eps**2

    def f(u):
        return s * (u - u**3)

    return f


def coupled_reaction(u, v):
    return u - u**3 - v, u - v


# contrast and final time of each catalogued example
_DEFAULTS = {1: (1e2, 0.2, None), 2: (1e3, 0.2, None), 3: (1e4, 0.016, 0.1), 4: (1e4, 0.016, 0.05), 5: (1e4, 0.016, None)}
# synthesized analogue of each of the four permeability rasters: (style, seed offset)
FIELD_STYLES = {1: ("channels", 0), 2: ("mixed", 1), 3: ("channels", 2), 4: ("mixed", 3)}


def paper_field(index: int, grid: FineGrid, contrast: float, seed: int = 0) -> np.ndarray:
    style, off = FIELD_STYLES[index]
    return synth_channel_field(seed + 101 * off, contrast, style, grid)


def catalogue(example_id: int, grid: FineGrid, contrast: float | None = None, epsilon: float | None = None,
              seed: int = 0, kappa: np.ndarray | None = None, v_kappa: str = "kappa1",
              T: float | None = None):
    """Examples 1-5 on analogue fields (``kappa`` overrides the synthesized field)."""
    if example_id not in _DEFAULTS:
        raise ValueError(f"unknown example id {example_id}")
    c_def, T_def, eps_def = _DEFAULTS[example_id]
    contrast = c_def if contrast is None else contrast
    if contrast < 1:
        raise ValueError(f"contrast must be >= 1, got {contrast}")
    T = T_def if T is None else T
    eps = eps_def if epsilon is None else epsilon
    if example_id in (3, 4) and not (eps and eps > 0):
        raise ValueError("examples 3 and 4 need epsilon > 0")

    def field_for(k):
        return kappa if kappa is not None else paper_field(k, grid, contrast, seed)

    if example_id == 1:
        return SemilinearProblem(field_for(1), None, "zero", _bubble, T)
    if example_id == 2:
        return SemilinearProblem(field_for(2), allen_cahn(1.0), "u-u^3", _bubble, T)
    if example_id == 3:
        e = eps
        return SemilinearProblem(field_for(3), allen_cahn(e), "(u-u^3)/eps^2", lambda x, y: e * _bubble(x, y), T, e)
    if example_id == 4:
        e = eps

        def front(x, y):
            return np.tanh((0.25 - np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2)) / np.sqrt(e))

        return SemilinearProblem(field_for(4), allen_cahn(e), "(u-u^3)/eps^2", front, T, e)
    if v_kappa not in ("kappa1", "kappa4"):
        raise ValueError(f"v_kappa must be 'kappa1' or 'kappa4', got {v_kappa!r}")
    kv = kappa if kappa is not None else paper_field(int(v_kappa[-1]), grid, contrast, seed)
    return CoupledProblem(
        field_for(3), kv, coupled_reaction, "coupled",
        lambda x, y: 0.05 * np.sin(x) * np.sin(y),
        lambda x, y: np.sin(np.pi * (x - 0.25)) * np.cos(2 * np.pi * (y - 0.125)),
        T, eps,
    )


def synth_channel_field(seed: int, contrast: float, style: str, grid: FineGrid,
                        fraction: tuple[float, float] = (0.08, 0.22)) -> np.ndarray:
    """Cellwise field with background 1 and inclusions at ``contrast``.

    ``channels`` are long thin strips crossing several coarse blocks, ``blobs``
    are discs, ``mixed`` combines both.  Features are added until the
    high-value cell fraction reaches ``fraction[0]`` and never past ``fraction[1]``.
    """
    if contrast < 1:
        raise ValueError(f"contrast must be >= 1, got {contrast}")
    if style not in ("channels", "blobs", "mixed"):
        raise ValueError(f"unknown field style {style!r}")
    rng = np.random.default_rng(seed)
    n = grid.n
    t = (np.arange(n) + 0.5) / n
    x, y = np.meshgrid(t, t)
    mask = np.zeros((n, n), dtype=bool)
    w_min = max(1.5 / n, 0.012)

    def channel():
        horizontal = rng.random() < 0.5
        a, b = (x, y) if horizontal else (y, x)
        c = rng.uniform(0.08, 0.92)
        width = rng.uniform(w_min, 2.5 * w_min)
        s0 = rng.uniform(0.0, 0.3)
        s1 = rng.uniform(0.65, 1.0)
        tilt = rng.uniform(-0.15, 0.15)
        return (np.abs(b - c - tilt * (a - 0.5)) < width / 2) & (a > s0) & (a < s1)

    def blob():
        cx, cy = rng.uniform(0.1, 0.9, size=2)
        r = rng.uniform(0.025, 0.06)
        return (x - cx) ** 2 + (y - cy) ** 2 < r**2

    makers = {"channels": [channel], "blobs": [blob], "mixed": [channel, blob]}[style]
    for _ in range(200):
        make = makers[int(rng.integers(len(makers)))]
        cand = mask | make()
        if cand.mean() > fraction[1]:
            continue
        mask = cand
        if mask.mean() >= fraction[0]:
            break
    kappa = np.ones((n, n))
    kappa[mask] = contrast
    return kappa


def write_raster(path: str | Path, values: np.ndarray) -> None:
    """``nx ny`` header then ``nx*ny`` values, row-major (rows are y)."""
    values = np.asarray(values, dtype=float)
    ny, nx = values.shape
    with open(path, "w") as fh:
        fh.write(f"{nx} {ny}\n")
        for row in values:
            fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_raster(path: str | Path, grid: FineGrid | None = None, positive: bool = True) -> np.ndarray:
    text = Path(path).read_text().split("\n", 1)
    head = text[0].split()
    if len(head) != 2:
        raise RasterError(f"{path}: header must be 'nx ny', got {text[0]!r}")
    try:
        nx, ny = int(head[0]), int(head[1])
    except ValueError:
        raise RasterError(f"{path}: malformed header {text[0]!r}") from None
    if nx <= 0 or ny <= 0:
        raise RasterError(f"{path}: nonpositive raster size {nx} x {ny}")
    body = text[1].split() if len(text) > 1 else []
    if len(body) != nx * ny:
        raise RasterError(f"{path}: expected {nx * ny} values, found {len(body)}")
    try:
        vals = np.array([float(v) for v in body])
    except ValueError as exc:
        raise RasterError(f"{path}: {exc}") from None
    if positive:
        bad = np.flatnonzero(~(vals > 0) | ~np.isfinite(vals))
        if bad.size:
            k = int(bad[0])
            raise RasterError(f"{path}: value {body[k]} at cell {k} (x={k % nx}, y={k // nx}) is not positive")
    if grid is not None and (nx, ny) != (grid.n, grid.n):
        raise RasterError(f"{path}: raster is {nx} x {ny} but the fine grid has {grid.n} x {grid.n} cells")
    return vals.reshape(ny, nx)


def write_field_dump(path: str | Path, grid: FineGrid, u_interior: np.ndarray) -> None:
    """Nodal dump: ``nx ny`` node counts, then all nodal values (boundary included)."""
    write_raster(path, grid.to_full(u_interior).reshape(grid.n + 1, grid.n + 1))
