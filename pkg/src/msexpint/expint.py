"""phi-functions and explicit exponential Runge-Kutta stepping on a reduced system.

All stepping happens in symmetrized coordinates ``y = C^T c`` where the linear
part is ``-G`` with ``G`` symmetric positive semi-definite.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .reduced import ReducedSystem

SCHEMES = ("EIRK1", "EIRK22")


class BlowUpError(FloatingPointError):
    def __init__(self, step: int, msg: str = "non-finite state"):
        super().__init__(f"{msg} at step {step}")
        self.step = step


@dataclass(frozen=True)
class PhiSet:
    delta: float
    phi0: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray

    def __getitem__(self, k: int) -> np.ndarray:
        return (self.phi0, self.phi1, self.phi2)[k]


def phi_set(G: np.ndarray, delta: float) -> PhiSet:
    """phi_0, phi_1, phi_2 of ``-delta G`` from one exponential of an augmented block matrix.

    ``expm([[Z, I, 0], [0, 0, I], [0, 0, 0]])`` carries ``exp(Z)``, ``phi_1(Z)``
    and ``phi_2(Z)`` along its first block row.
    """
    if delta < 0:
        raise ValueError(f"step size must be nonnegative, got {delta}")
    G = np.atleast_2d(np.asarray(G, dtype=float))
    n = G.shape[0]
    W = np.zeros((3 * n, 3 * n))
    W[:n, :n] = -delta * G
    W[:n, n : 2 * n] = np.eye(n)
    W[n : 2 * n, 2 * n :] = np.eye(n)
    E = sla.expm(W)
    if not np.all(np.isfinite(E[:n])):
        raise OverflowError("phi-function evaluation produced non-finite entries")
    return PhiSet(delta, E[:n, :n], E[:n, n : 2 * n], E[:n, 2 * n :])


@dataclass(frozen=True)
class ExpRKConfig:
    """Explicit exponential RK with nodes c_1 = 0 and (for two stages) c_2 = 1."""

    stages: int = 1

    def __post_init__(self):
        if self.stages not in (1, 2):
            raise ValueError(f"only 1 or 2 stages are supported, got {self.stages}")

    @property
    def nodes(self) -> tuple[float, ...]:
        return (0.0,) if self.stages == 1 else (0.0, 1.0)

    def coefficients(self, phis: PhiSet):
        """(alpha, beta): alpha[i][j] for j < i, beta[i], as matrices in phi_k(-delta G)."""
        if self.stages == 1:
            return [[]], [phis.phi1]
        c2 = self.nodes[1]
        # c_2 = 1 makes phi_k(-c_2 delta G) = phi_k(-delta G)
        return [[], [c2 * phis.phi1]], [phis.phi1 - phis.phi2 / c2, phis.phi2 / c2]

    @classmethod
    def from_scheme(cls, scheme: str) -> "ExpRKConfig":
        try:
            return cls({"EIRK1": 1, "EIRK22": 2}[scheme])
        except KeyError:
            raise ValueError(f"unknown exponential scheme {scheme!r}") from None


Reaction = Callable[..., object]


def _sym_loads(systems: Sequence[ReducedSystem], ys: Sequence[np.ndarray], reaction: Reaction | None):
    """Projected reactions ``C^-1 R0^T M f(u)`` in symmetrized coordinates."""
    if reaction is None:
        return [np.zeros_like(y) for y in ys]
    us = [s.lift(s.from_sym(y)) for s, y in zip(systems, ys)]
    fs = reaction(*us)
    if len(systems) == 1:
        fs = [fs]
    out = []
    for s, u, f in zip(systems, us, fs):
        f = np.asarray(f, dtype=float) * np.ones_like(u)
        if not np.all(np.isfinite(f)):
            raise OverflowError("reaction is not finite")
        out.append(s.load_sym(s.restrict_load(s.M @ f)))
    return out


def _step_sym(systems, phis, ys, reaction, delta, stages):
    N0 = _sym_loads(systems, ys, reaction)
    y1 = [y + delta * (p.phi1 @ (n - s.G @ y)) for s, p, y, n in zip(systems, phis, ys, N0)]
    if stages == 1:
        return y1
    N1 = _sym_loads(systems, y1, reaction)
    return [a + delta * (p.phi2 @ (n1 - n0)) for p, a, n0, n1 in zip(phis, y1, N0, N1)]


def eirk1_step(sys: ReducedSystem, phis: PhiSet, c_prev: np.ndarray, f: Reaction | None, delta: float) -> np.ndarray:
    """Exponential Euler step on the coarse coefficients."""
    y = _step_sym([sys], [phis], [sys.to_sym(c_prev)], f, delta, 1)[0]
    return sys.from_sym(y)


def eirk22_step(sys: ReducedSystem, phis: PhiSet, c_prev: np.ndarray, f: Reaction | None, delta: float) -> np.ndarray:
    """Two-stage second-order exponential RK step (c_2 = 1)."""
    y = _step_sym([sys], [phis], [sys.to_sym(c_prev)], f, delta, 2)[0]
    return sys.from_sym(y)


def exprk_step(sys: ReducedSystem, phis: PhiSet, cfg: ExpRKConfig, c_prev: np.ndarray, f: Reaction | None,
               delta: float) -> np.ndarray:
    """Generic stage form ``U_i = e^{-c_i dG} y + d sum_j alpha_ij N(U_j)``, ``y' = e^{-dG} y + d sum beta_i N(U_i)``.

    Only the c_i in {0, 1} nodes are available from one PhiSet.
    """
    alpha, beta = cfg.coefficients(phis)
    y = sys.to_sym(c_prev)
    prop = {0.0: np.eye(len(y)), 1.0: phis.phi0}
    U, N = [], []
    for i, ci in enumerate(cfg.nodes):
        u = prop[ci] @ y + delta * sum((alpha[i][j] @ N[j] for j in range(i)), np.zeros_like(y))
        U.append(u)
        N.append(_sym_loads([sys], [u], f)[0])
    y_new = phis.phi0 @ y + delta * sum(b @ n for b, n in zip(beta, N))
    return sys.from_sym(y_new)


def integrate_system(systems: Sequence[ReducedSystem], scheme: str, reaction: Reaction | None,
                     c0: Sequence[np.ndarray], Nt: int, T: float, checkpoints: Sequence[int] = ()):
    """Advance one or more coupled species with a shared exponential scheme.

    Returns ``(final coarse states, {step: states})``.
    """
    stages = ExpRKConfig.from_scheme(scheme).stages
    if Nt < 1 or T <= 0:
        raise ValueError(f"need Nt >= 1 and T > 0, got Nt={Nt}, T={T}")
    delta = T / Nt
    phis = [phi_set(s.G, delta) for s in systems]
    ys = [s.to_sym(np.asarray(c, dtype=float)) for s, c in zip(systems, c0)]
    saved = {}
    want = set(checkpoints)
    for n in range(1, Nt + 1):
        try:
            ys = _step_sym(systems, phis, ys, reaction, delta, stages)
        except OverflowError as exc:
            raise BlowUpError(n, str(exc)) from exc
        if not all(np.all(np.isfinite(y)) for y in ys):
            raise BlowUpError(n)
        if n in want:
            saved[n] = [s.from_sym(y) for s, y in zip(systems, ys)]
    return [s.from_sym(y) for s, y in zip(systems, ys)], saved


def integrate(sys: ReducedSystem, scheme: str, f: Reaction | None, c0: np.ndarray, Nt: int, T: float,
              checkpoints: Sequence[int] = ()):
    """Single-species version of :func:`integrate_system`."""
    final, saved = integrate_system([sys], scheme, f, [c0], Nt, T, checkpoints)
    return final[0], {k: v[0] for k, v in saved.items()}


def exact_linear_propagation(sys: ReducedSystem, c0: np.ndarray, T: float) -> np.ndarray:
    """``exp(-T M0^-1 A0) c0`` through the eigendecomposition of G."""
    lam, Q = np.linalg.eigh(sys.G)
    y = Q @ (np.exp(-T * lam) * (Q.T @ sys.to_sym(c0)))
    return sys.from_sym(y)
