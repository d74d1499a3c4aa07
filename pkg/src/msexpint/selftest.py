"""Quick oracle checks exposed through ``solver selftest``."""

from __future__ import annotations

import math

import numpy as np

from .assembly import assemble_mass, assemble_stiffness
from .cem import build_basis
from .expint import exact_linear_propagation, integrate, phi_set
from .grid import build_grids
from .problems import synth_channel_field
from .reduced import reduce
from .spectral import build_auxiliary


def phi_series(Z: np.ndarray, k: int, terms: int = 30) -> np.ndarray:
    """phi_k(Z) by scaling and squaring of a truncated Taylor series.

    Uses ``phi_k(Z) = sum_j Z^j / (j + k)!`` on ``Z / 2^s`` and the doubling
    relations for phi_0, phi_1, phi_2.
    """
    n = Z.shape[0]
    nrm = np.linalg.norm(Z, 1)
    s = max(0, math.ceil(math.log2(nrm / 0.5))) if nrm > 0 else 0
    X = Z / 2**s
    P = [np.zeros((n, n)) for _ in range(3)]
    term = np.eye(n)
    for j in range(terms):
        for q in range(3):
            P[q] += term / math.factorial(j + q)
        term = term @ X
    e, p1, p2 = P
    for _ in range(s):
        # doubling: phi_2(2X) = (phi_1(X)^2 + 2 phi_2(X)) / 4, phi_1(2X) = (e^X + I) phi_1(X) / 2
        p2 = 0.25 * (p1 @ p1 + 2 * p2)
        p1 = 0.5 * (e @ p1 + p1)
        e = e @ e
    return (e, p1, p2)[k]


def check_phi(trials: int = 10, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        X = rng.standard_normal((10, 10))
        G = X @ X.T
        delta = rng.uniform(0.1, 2.0) / np.linalg.norm(G, 2)
        ph = phi_set(G, delta)
        for k in range(3):
            ref = phi_series(-delta * G, k)
            worst = max(worst, np.abs(ph[k] - ref).max() / np.abs(ref).max())
    return worst <= 1e-12, f"max relative deviation from series {worst:.2e}"


def check_linear_exactness():
    fine, coarse, pou = build_grids(16, 4)
    kappa = synth_channel_field(0, 100.0, "channels", fine)
    aux = build_auxiliary(fine, coarse, pou, kappa, 2)
    b = build_basis(fine, coarse, aux, kappa, 1)
    sys = reduce(b.R0, assemble_mass(fine), assemble_stiffness(fine, kappa))
    c0 = sys.project(fine.interpolate(lambda x, y: x * (1 - x) * y * (1 - y)))
    exact = exact_linear_propagation(sys, c0, 0.1)
    worst = 0.0
    for scheme in ("EIRK1", "EIRK22"):
        for Nt in (1, 10):
            c, _ = integrate(sys, scheme, None, c0, Nt, 0.1)
            e = sys.lift(c - exact)
            ue = sys.lift(exact)
            worst = max(worst, math.sqrt(e @ (sys.M @ e) / (ue @ (sys.M @ ue))))
    return worst <= 1e-10, f"max relative L2 deviation from exact propagation {worst:.2e}"


def check_eigen_residuals():
    fine, coarse, pou = build_grids(16, 4)
    kappa = synth_channel_field(1, 1e4, "mixed", fine)
    aux = build_auxiliary(fine, coarse, pou, kappa, 3)
    res = orth = 0.0
    for i in range(aux.n_elements):
        A, S, V = aux.A_local[i], aux.S_local[i], aux.vectors[i]
        lam = aux.eigenvalues[i, : aux.L]
        scale = abs(A).sum(axis=1).max()
        res = max(res, np.abs(A @ V - (S @ V) * lam).max() / scale)
        orth = max(orth, np.abs(V.T @ (S @ V) - np.eye(aux.L)).max())
    return res <= 1e-8 and orth <= 1e-10, f"eigen residual {res:.2e}, orthonormality {orth:.2e}"


def run_all():
    out = []
    for name, fn in (("phi-series", check_phi), ("linear-exactness", check_linear_exactness),
                     ("eigen-residuals", check_eigen_residuals)):
        ok, detail = fn()
        out.append((name, bool(ok), detail))
    return out
