import math

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from msexpint.expint import (
    BlowUpError, ExpRKConfig, eirk1_step, eirk22_step, exact_linear_propagation, exprk_step, integrate,
    integrate_system, phi_set,
)
from msexpint.reduced import reduce

from oracles import phi_taylor, rk4


def scalar_system(lam: float):
    one = sp.csr_matrix([[1.0]])
    return reduce(np.eye(1), one, sp.csr_matrix([[lam]]))


def random_system(rng, n=6):
    X = rng.standard_normal((n, n))
    M = sp.csr_matrix(X @ X.T + n * np.eye(n))
    Y = rng.standard_normal((n, n))
    A = sp.csr_matrix(Y @ Y.T)
    return reduce(rng.standard_normal((n, 4)), M, A)


def test_phi_at_zero():
    ph = phi_set(np.zeros((3, 3)), 0.7)
    assert np.allclose(ph.phi0, np.eye(3)) and np.allclose(ph.phi1, np.eye(3))
    assert np.allclose(ph.phi2, np.eye(3) / 2)


def test_phi_scalar_closed_forms():
    ph = phi_set(np.array([[1.0]]), 1.0)
    assert ph.phi1[0, 0] == pytest.approx(1 - math.exp(-1), abs=1e-14)
    assert ph.phi1[0, 0] == pytest.approx(0.6321205588, abs=1e-10)
    assert ph.phi2[0, 0] == pytest.approx(math.exp(-1), abs=1e-14)
    assert ph.phi2[0, 0] == pytest.approx(0.3678794412, abs=1e-10)
    # recurrence at N = -1
    assert ph.phi2[0, 0] == pytest.approx(-(ph.phi1[0, 0] - 1), abs=1e-15)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), scale=st.floats(0.01, 1.0))
def test_phi_matches_series_property(seed, scale):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((10, 10))
    G = X + X.T
    G = G @ G
    delta = scale / np.linalg.norm(G, 2)
    ph = phi_set(G, delta)
    ref = phi_taylor(-delta * G)
    for k in range(3):
        assert np.linalg.norm(ph[k] - ref[k]) <= 1e-12 * np.linalg.norm(ref[k])


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_phi_recurrence_property(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((8, 8))
    G = X @ X.T + 0.1 * np.eye(8)
    ph = phi_set(G, 0.5 / np.linalg.norm(G, 2) * rng.uniform(0.1, 4))
    N = -ph.delta * G
    I = np.eye(8)
    assert np.abs(N @ ph.phi1 - ph.phi0 + I).max() <= 1e-10
    assert np.abs(N @ ph.phi2 - ph.phi1 + I).max() <= 1e-10


def test_consistency_conditions():
    rng = np.random.default_rng(0)
    X = rng.standard_normal((5, 5))
    ph = phi_set(X @ X.T, 0.3)
    _, beta = ExpRKConfig(1).coefficients(ph)
    assert np.allclose(beta[0], ph.phi1, atol=1e-12)
    alpha, beta = ExpRKConfig(2).coefficients(ph)
    assert np.allclose(beta[0] + beta[1], ph.phi1, atol=1e-12)
    assert np.allclose(beta[0], ph.phi1 - ph.phi2, atol=1e-12) and np.allclose(beta[1], ph.phi2)
    assert np.allclose(alpha[1][0], 1.0 * ph.phi1, atol=1e-12)


def test_eirk1_linear_step_is_exact(rng):
    s = random_system(rng)
    c = rng.standard_normal(s.dim)
    ph = phi_set(s.G, 0.2)
    assert np.allclose(eirk1_step(s, ph, c, None, 0.2), exact_linear_propagation(s, c, 0.2), rtol=1e-10, atol=1e-12)
    assert np.allclose(eirk22_step(s, ph, c, None, 0.2), eirk1_step(s, ph, c, None, 0.2), atol=1e-13)


def test_eirk1_small_step_is_forward_euler(rng):
    s = random_system(rng)
    c = rng.standard_normal(s.dim)
    f = np.sin
    for delta in (1e-3, 5e-4):
        ph = phi_set(s.G, delta)
        got = eirk1_step(s, ph, c, f, delta)
        fe = c + delta * (s.project(f(s.lift(c))) - np.linalg.solve(s.M0, s.A0 @ c))
        assert np.linalg.norm(got - fe) <= 50 * delta**2 * max(1.0, np.linalg.norm(c))


def test_scalar_closed_form_eirk1():
    s = scalar_system(2.0)
    ph = phi_set(s.G, 0.5)
    c1 = eirk1_step(s, ph, np.zeros(1), lambda u: np.ones_like(u), 0.5)
    assert c1[0] == pytest.approx((1 - math.exp(-1)) / 2, abs=1e-14)
    assert c1[0] == pytest.approx(0.3160602794, abs=1e-10)


def test_eirk22_linear_reaction_is_second_order_taylor():
    s = scalar_system(0.0)
    a, delta, c0 = 0.8, 0.25, 1.3
    ph = phi_set(s.G, delta)
    got = eirk22_step(s, ph, np.array([c0]), lambda u: a * u, delta)[0]
    assert got == pytest.approx(c0 * (1 + a * delta + (a * delta) ** 2 / 2), abs=1e-14)


def test_eirk22_matches_rk4_on_logistic():
    s = scalar_system(1.0)
    delta = 0.01
    got = eirk22_step(s, phi_set(s.G, delta), np.array([0.1]), lambda u: u**2, delta)[0]
    ref = rk4(lambda y: -y + y * y, 0.1, delta, 10**6)
    assert abs(got - ref) <= 1e-7


def test_generic_stage_form_agrees(rng):
    s = random_system(rng)
    c = rng.standard_normal(s.dim)
    ph = phi_set(s.G, 0.1)
    f = np.tanh
    assert np.allclose(exprk_step(s, ph, ExpRKConfig(1), c, f, 0.1), eirk1_step(s, ph, c, f, 0.1), atol=1e-12)
    assert np.allclose(exprk_step(s, ph, ExpRKConfig(2), c, f, 0.1), eirk22_step(s, ph, c, f, 0.1), atol=1e-12)


@pytest.mark.parametrize("scheme", ["EIRK1", "EIRK22"])
def test_linear_exactness_any_nt(rng, scheme):
    s = random_system(rng)
    c = rng.standard_normal(s.dim)
    exact = exact_linear_propagation(s, c, 0.7)
    for Nt in (1, 7, 40):
        cT, _ = integrate(s, scheme, None, c, Nt, 0.7)
        assert np.linalg.norm(cT - exact) <= 1e-10 * np.linalg.norm(exact)


def test_single_step_integrate_equals_step(rng):
    s = random_system(rng)
    c = rng.standard_normal(s.dim)
    f = lambda u: u - u**3
    cT, saved = integrate(s, "EIRK22", f, c, 1, 0.05, checkpoints=[1])
    assert np.allclose(cT, eirk22_step(s, phi_set(s.G, 0.05), c, f, 0.05))
    assert np.allclose(saved[1], cT)


def test_eirk22_self_convergence_is_second_order(rng):
    s = random_system(rng)
    c = 0.5 * rng.standard_normal(s.dim)
    f = lambda u: u - u**3
    ref, _ = integrate(s, "EIRK22", f, c, 2048, 0.5)
    errs = [np.linalg.norm(integrate(s, "EIRK22", f, c, nt, 0.5)[0] - ref) for nt in (16, 32, 64)]
    ratios = [a / b for a, b in zip(errs, errs[1:])]
    assert all(3.2 <= r <= 4.8 for r in ratios)


def test_blow_up_reports_step():
    s = scalar_system(0.0)
    with pytest.raises(BlowUpError) as info:
        integrate(s, "EIRK1", lambda u: u**3, np.array([10.0]), 50, 1.0)
    assert info.value.step >= 1 and "step" in str(info.value)


def test_coupled_species_independent_without_coupling(rng):
    a, b = random_system(rng), random_system(rng)
    ca, cb = rng.standard_normal(a.dim), rng.standard_normal(b.dim)
    (fa, fb), _ = integrate_system([a, b], "EIRK22", lambda u, v: (np.sin(u), -v), [ca, cb], 10, 0.3)
    assert np.allclose(fa, integrate(a, "EIRK22", np.sin, ca, 10, 0.3)[0])
    assert np.allclose(fb, integrate(b, "EIRK22", lambda v: -v, cb, 10, 0.3)[0])


def test_invalid_arguments(rng):
    s = random_system(rng)
    with pytest.raises(ValueError):
        integrate(s, "EIRK3", None, np.zeros(s.dim), 1, 1.0)
    with pytest.raises(ValueError):
        integrate(s, "EIRK1", None, np.zeros(s.dim), 0, 1.0)
