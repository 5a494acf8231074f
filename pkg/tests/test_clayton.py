import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectiva import clayton as cl
from defectiva.errors import DomainError, QuadratureError


def naive_c(phi, u, v):
    return (u**-phi + v**-phi - 1) ** (-1 / phi)


def mixed_difference(f, u, v, h):
    return (f(u + h, v + h) - f(u + h, v - h) - f(u - h, v + h) + f(u - h, v - h)) / (4 * h * h)


def test_phi_must_be_positive():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(DomainError):
            cl.kendall_tau(bad)


def test_joint_survival_examples():
    assert cl.joint_survival(1, 1, 0.3) == pytest.approx(0.3, abs=1e-15)
    assert cl.joint_survival(1, 0.5, 0.5) == pytest.approx(1 / 3, rel=1e-14)
    assert cl.joint_survival(1e-6, 0.4, 0.6) == pytest.approx(0.24, abs=1e-4)


def test_joint_survival_domain():
    for u, v in [(0, 0.5), (0.5, 1.1), (-0.1, 0.5)]:
        with pytest.raises(DomainError):
            cl.joint_survival(1, u, v)


def test_density_factor_examples():
    assert cl.copula_density_factor(1e-8, 0.3, 0.7) == pytest.approx(1.0, abs=1e-6)
    assert cl.copula_density_factor(1, 0.5, 0.5) == pytest.approx(32 / 27, rel=1e-14)
    fd = mixed_difference(lambda a, b: cl.joint_survival(1, a, b), 0.5, 0.5, 1e-4)
    assert cl.copula_density_factor(1, 0.5, 0.5) == pytest.approx(fd, abs=1e-5)
    # mixed difference of the naive closed form, frozen: 0.006091352769410641
    c = cl.copula_density_factor(3, 0.9, 0.1)
    assert c == pytest.approx(0.006091352769410641, abs=1e-4)
    fd = mixed_difference(lambda a, b: cl.joint_survival(3, a, b), 0.9, 0.1, 1e-4)
    assert c == pytest.approx(fd, abs=1e-4)


def test_density_factor_rejects_boundary():
    with pytest.raises(DomainError):
        cl.copula_density_factor(1, 1.0, 0.5)
    with pytest.raises(DomainError):
        cl.copula_density_factor(1, 0.5, 0.0)


def test_conditional_examples():
    assert cl.conditional_given_u(1, 0.5, 1 - 1e-9) == pytest.approx(1.0, abs=1e-6)
    assert cl.conditional_given_u(1, 0.5, 0.5) == pytest.approx(4 / 9, rel=1e-14)
    h = 1e-6
    fd = (naive_c(3, 0.2 + h, 0.8) - naive_c(3, 0.2 - h, 0.8)) / (2 * h)
    assert fd == pytest.approx(0.9899230143523008, abs=1e-7)
    assert cl.conditional_given_u(3, 0.2, 0.8) == pytest.approx(fd, abs=1e-5)


@pytest.mark.parametrize("phi", [0.5, 1.0, 3.0, 10.0])
@pytest.mark.parametrize("u", [0.05, 0.3, 0.9])
def test_conditional_is_a_cdf(phi, u):
    v = np.linspace(1e-6, 1 - 1e-9, 400)
    c = cl.conditional_given_u(phi, u, v)
    assert np.all(np.diff(c) >= 0)
    assert c[0] < 1e-3
    assert c[-1] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("phi", [0.5, 1.0, 3.0, 10.0])
def test_conditional_quantile_inverts(phi):
    u = np.array([0.01, 0.2, 0.5, 0.9, 0.999])
    q = np.array([0.001, 0.3, 0.5, 0.7, 0.99])
    v = cl.conditional_quantile(phi, u, q)
    assert np.allclose(cl.conditional_given_u(phi, u, v), q, rtol=1e-10)


def test_kendall_tau_examples():
    assert round(cl.kendall_tau(1), 4) == 0.3333
    assert round(cl.kendall_tau(3), 4) == 0.6000
    assert round(cl.kendall_tau(10), 4) == 0.8333
    assert cl.phi_from_kendall_tau(cl.kendall_tau(2.5)) == pytest.approx(2.5)


def test_spearman_examples():
    assert cl.spearman_rho(1) == pytest.approx(0.4790, abs=1e-3)
    assert cl.spearman_rho(3) == pytest.approx(0.7864, abs=1e-3)
    assert cl.spearman_rho(10) == pytest.approx(0.9583, abs=1e-3)


def test_spearman_against_frozen_dblquad():
    # scipy.integrate.dblquad of the closed form at epsabs 1e-12
    oracle = {1: 0.4784176043574351, 3: 0.7864391282432912, 10: 0.9582488663781077}
    for phi, value in oracle.items():
        assert cl.spearman_rho(phi) == pytest.approx(value, abs=1e-5)


def test_quadrature_panel_cap():
    with pytest.raises(QuadratureError):
        cl.adaptive_gauss_legendre_2d(lambda x, y: np.abs(x - y) ** 0.1, tol=1e-14, max_panels=500)


def test_quadrature_polynomial_exact():
    val = cl.adaptive_gauss_legendre_2d(lambda x, y: x**3 * y**5, tol=1e-12)
    assert val == pytest.approx(1 / 24, rel=1e-13)


def test_sample_kendall_examples():
    assert cl.sample_kendall_tau([(1, 1), (2, 2), (3, 3)]) == pytest.approx(1.0)
    assert cl.sample_kendall_tau([(1, 3), (2, 2), (3, 1)]) == pytest.approx(-1.0)
    assert cl.sample_kendall_tau([(1, 2), (2, 1), (3, 3)]) == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        cl.sample_kendall_tau([(1, 2)])


def test_sample_kendall_brute_force(rng):
    x = rng.normal(size=40)
    y = x + rng.normal(size=40)
    s = 0
    for i in range(40):
        for j in range(i + 1, 40):
            s += np.sign((x[i] - x[j]) * (y[i] - y[j]))
    assert cl.sample_kendall_tau(np.column_stack([x, y])) == pytest.approx(s / (40 * 39 / 2), rel=1e-12)


@pytest.mark.parametrize("phi", [0.5, 1.0, 3.0, 10.0])
def test_frechet_bounds_and_two_increasing(phi):
    g = np.linspace(0.02, 1.0, 50)
    U, V = np.meshgrid(g, g, indexing="ij")
    C = cl.joint_survival(phi, U, V)
    assert np.all(C <= np.minimum(U, V) + 1e-15)
    assert np.all(C >= np.maximum(U + V - 1, 0) - 1e-15)
    vol = C[1:, 1:] - C[1:, :-1] - C[:-1, 1:] + C[:-1, :-1]
    assert np.all(vol >= -1e-15)


def test_dependence_ordering():
    phis = np.linspace(0.1, 20, 50)
    assert np.all(np.diff([cl.kendall_tau(p) for p in phis]) > 0)
    for phi in (1, 3, 10):
        assert cl.spearman_rho(phi) > cl.kendall_tau(phi)


def test_density_factor_integrates_to_one(rng):
    u, v = rng.random((2, 1_000_000))
    mean = np.mean(cl.copula_density_factor(1.0, u, v))
    assert mean == pytest.approx(1.0, abs=1e-2)


def test_large_phi_small_u_stays_finite():
    # naive powers overflow here
    assert math.isfinite(cl.copula_density_factor(10, 1e-40, 0.5))
    assert cl.joint_survival(10, 1e-300, 1e-300) > 0


@settings(max_examples=200, deadline=None)
@given(st.floats(0.01, 30), st.floats(0.01, 1.0), st.floats(0.01, 1.0))
def test_matches_naive_closed_form(phi, u, v):
    assert cl.joint_survival(phi, u, v) == pytest.approx(naive_c(phi, u, v), rel=1e-9)
    assert cl.joint_survival(phi, u, 1.0) == pytest.approx(u, rel=1e-12)
