"""theta-scheme time stepping (backward Euler, Crank-Nicolson) for fine and coarse systems."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .expint import BlowUpError
from .reduced import ReducedSystem


class PicardError(RuntimeError):
    def __init__(self, step: int, residual: float):
        super().__init__(f"Picard iteration did not converge at step {step} (last update {residual:.3e})")
        self.step = step
        self.residual = residual


@dataclass(frozen=True)
class ThetaConfig:
    theta: float = 1.0
    strategy: str = "picard"  # or "lagged"
    tol: float = 1e-10
    max_iter: int = 50

    def __post_init__(self):
        if self.theta not in (1.0, 0.5):
            raise ValueError(f"theta must be 1 or 1/2, got {self.theta}")
        if self.strategy not in ("picard", "lagged"):
            raise ValueError(f"unknown nonlinear strategy {self.strategy!r}")

    @classmethod
    def from_scheme(cls, scheme: str, **kw) -> "ThetaConfig":
        try:
            return cls({"FDBE": 1.0, "FDCN": 0.5}[scheme], **kw)
        except KeyError:
            raise ValueError(f"unknown theta scheme {scheme!r}") from None


class _Factor:
    """Reusable solver for ``M + delta theta A`` (sparse LU or dense Cholesky)."""

    def __init__(self, mat):
        if sp.issparse(mat):
            self._lu = spla.splu(sp.csc_matrix(mat))
            self.solve = self._lu.solve
        else:
            cf = sla.cho_factor(np.asarray(mat))
            self.solve = lambda b: sla.cho_solve(cf, b)


Load = Callable[..., object]


class ThetaStepper:
    """theta-scheme for ``M u' + A u = F(u)`` over several species sharing one step size.

    ``Ms[k]``/``As[k]`` may be sparse (fine) or dense (coarse); ``load`` maps the
    list of species states to the list of load vectors F_k.
    """

    def __init__(self, Ms: Sequence, As: Sequence, cfg: ThetaConfig, delta: float):
        self.Ms, self.As, self.cfg, self.delta = list(Ms), list(As), cfg, delta
        th = cfg.theta
        self.factors = [_Factor(M + delta * th * A) for M, A in zip(self.Ms, self.As)]

    def step(self, us: Sequence[np.ndarray], load: Load | None, n: int = 0) -> list[np.ndarray]:
        d, th, cfg = self.delta, self.cfg.theta, self.cfg
        if d == 0:
            return [u.copy() for u in us]
        F_prev = load(us) if load is not None else None
        base = []
        for k, (M, A, u) in enumerate(zip(self.Ms, self.As, us)):
            b = M @ u - d * (1 - th) * (A @ u)
            if F_prev is not None:
                b = b + d * (1 - th) * F_prev[k]
            base.append(b)
        if F_prev is None:
            return [fac.solve(b) for fac, b in zip(self.factors, base)]
        new = [fac.solve(b + d * th * F) for fac, b, F in zip(self.factors, base, F_prev)]
        if cfg.strategy == "lagged":
            return new
        for _ in range(cfg.max_iter):
            F = load(new)
            nxt = [fac.solve(b + d * th * f) for fac, b, f in zip(self.factors, base, F)]
            diff = np.sqrt(sum(np.sum((a - b) ** 2) for a, b in zip(nxt, new)))
            size = np.sqrt(sum(np.sum(a**2) for a in nxt))
            new = nxt
            if not np.isfinite(diff):
                raise BlowUpError(n, "non-finite Picard iterate")
            if diff <= cfg.tol * size:
                return new
        raise PicardError(n, diff / max(size, np.finfo(float).tiny))


def theta_step(M, A, cfg: ThetaConfig, u_prev: np.ndarray, f: Callable | None, delta: float) -> np.ndarray:
    """One theta step with ``F(u) = M f(u)`` (nodal reaction)."""
    load = None if f is None else (lambda us: [M @ (np.asarray(f(us[0]), dtype=float) * np.ones_like(us[0]))])
    return ThetaStepper([M], [A], cfg, delta).step([u_prev], load)[0]


def fine_load(Ms: Sequence, reaction: Callable | None):
    """Nodal load ``[M f_k(u)]`` for a single reaction ``f(u)`` or a coupled ``f(u, v) -> (f_u, f_v)``."""
    if reaction is None:
        return None

    def load(us):
        fs = reaction(*us)
        if len(us) == 1:
            fs = [fs]
        out = []
        for M, u, f in zip(Ms, us, fs):
            f = np.asarray(f, dtype=float) * np.ones_like(u)
            if not np.all(np.isfinite(f)):
                raise OverflowError("reaction is not finite")
            out.append(M @ f)
        return out

    return load


def theta_integrate(Ms, As, cfg: ThetaConfig, reaction, u0s, Nt: int, T: float) -> list[np.ndarray]:
    """Fine-space theta integration of one or more species; returns the final states."""
    stepper = ThetaStepper(Ms, As, cfg, T / Nt)
    load = fine_load(Ms, reaction)
    us = [np.asarray(u, dtype=float) for u in u0s]
    for n in range(1, Nt + 1):
        try:
            us = stepper.step(us, load, n)
        except OverflowError as exc:
            raise BlowUpError(n, str(exc)) from exc
        if not all(np.all(np.isfinite(u)) for u in us):
            raise BlowUpError(n)
    return us


def reference_solution(Ms, As, reaction, u0s, Nt_ref: int, T: float, cfg: ThetaConfig | None = None):
    """Fine backward Euler reference at t = T (one vector per species)."""
    return theta_integrate(Ms, As, cfg or ThetaConfig(1.0), reaction, u0s, Nt_ref, T)


def coarse_theta_integrate(systems: Sequence[ReducedSystem], cfg: ThetaConfig, reaction, c0s, Nt: int,
                           T: float) -> list[np.ndarray]:
    """theta-scheme in the coarse spaces with ``F0 = R0^T M f(R0 c)``."""
    stepper = ThetaStepper([s.M0 for s in systems], [s.A0 for s in systems], cfg, T / Nt)
    load = None
    if reaction is not None:
        fl = fine_load([s.M for s in systems], reaction)

        def load(cs):
            return [s.restrict_load(F) for s, F in zip(systems, fl([s.lift(c) for s, c in zip(systems, cs)]))]

    cs = [np.asarray(c, dtype=float) for c in c0s]
    for n in range(1, Nt + 1):
        try:
            cs = stepper.step(cs, load, n)
        except OverflowError as exc:
            raise BlowUpError(n, str(exc)) from exc
        if not all(np.all(np.isfinite(c)) for c in cs):
            raise BlowUpError(n)
    return cs
