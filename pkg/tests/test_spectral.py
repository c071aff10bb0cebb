import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glwire.domain import build_wire_domain
from glwire.errors import DomainError
from glwire.spectral import (SectorProblem, de_gennes_mu, de_gennes_theta0, lambda_dirichlet,
                             lambda_vs_lambdaD, mu_eps, sector_dn_ground, verify_lower_bound)


@pytest.fixture(scope="module")
def theta():
    return de_gennes_theta0()


def test_theta0_range_and_stationarity(theta):
    assert 0.58 <= theta.value <= 0.60
    assert theta.stationarity_defect <= 1e-4
    assert de_gennes_mu(1.4) > theta.value
    assert de_gennes_mu(0.2) > theta.value


def test_theta0_preconditions():
    with pytest.raises(DomainError):
        de_gennes_theta0(T=5)
    with pytest.raises(DomainError):
        de_gennes_theta0(h=0.05)
    with pytest.raises(DomainError):
        de_gennes_theta0(xi_grid=np.linspace(0.5, 1.0, 5))


def test_harmonic_oscillator_limit():
    # xi deep inside the half line: the Neumann wall is invisible, mu = 1
    assert de_gennes_mu(5.0, T=10.0, h=0.01) == pytest.approx(1.0, abs=1e-3)
    # xi = 0: even ground state of the full-line oscillator, mu = 1
    assert de_gennes_mu(0.0, T=10.0, h=0.01) == pytest.approx(1.0, abs=1e-3)


def test_truncation_monotone():
    a = de_gennes_mu(0.77, T=10.0)
    b = de_gennes_mu(0.77, T=15.0)
    assert b <= a + 1e-10


def test_sector_alpha_range():
    with pytest.raises(DomainError):
        SectorProblem(alpha=0.0)
    with pytest.raises(DomainError):
        SectorProblem(alpha=4.0)


def test_sector_gauge_invariant():
    a = sector_dn_ground(SectorProblem(math.pi / 2, R_trunc=5.0, h_mesh=0.1, gauge="symmetric"))
    b = sector_dn_ground(SectorProblem(math.pi / 2, R_trunc=5.0, h_mesh=0.1, gauge="landau"))
    assert a.value == pytest.approx(b.value, rel=1e-8)
    assert a.value >= 0 and a.residual <= 1e-8


def test_sector_truncation_monotone():
    small = sector_dn_ground(SectorProblem(math.pi / 2, R_trunc=4.0, h_mesh=0.1)).value
    big = sector_dn_ground(SectorProblem(math.pi / 2, R_trunc=6.0, h_mesh=0.1)).value
    assert big <= small + 1e-8


def _unit_square(n=33):
    return build_wire_domain(1.0, 1.0, n, n)


def _uniform_links(g, b):
    # symmetric gauge (-b y/2, b x/2) sampled at link midpoints
    X, Y = g.mesh()
    ax = -0.5 * b * Y[:-1, :]
    ay = 0.5 * b * X[:, :-1]
    return ax, ay


def test_mu_landau_floor():
    _, g = _unit_square(41)
    ax, ay = _uniform_links(g, 1.0)
    D = g.interior
    val = mu_eps(g, ax, ay, D, 0.05, dirichlet_part=~g.interior).value
    assert val >= 0.05 * 1.0 * 0.8


def test_mu_matches_dense():
    _, g = _unit_square(11)
    ax, ay = _uniform_links(g, 2.0)
    from glwire.spectral import magnetic_form
    D = g.interior
    val = mu_eps(g, ax, ay, D, 0.2, dirichlet_part=~g.interior).value
    Wx, Wy = g.link_weights()
    K, _ = magnetic_form(D, g.h, ax / 0.2, ay / 0.2, Wx / g.h ** 2, Wy / g.h ** 2, scale=0.04)
    M = np.diag(g.node_weights()[D] / g.h ** 2)
    import scipy.linalg as sla
    dense = sla.eigh(K.toarray(), M, eigvals_only=True)[0]
    assert val == pytest.approx(dense, rel=1e-8)


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=5, deadline=None)
def test_mu_gauge_invariant(seed):
    _, g = _unit_square(17)
    ax, ay = _uniform_links(g, 1.0)
    rng = np.random.default_rng(seed)
    w = rng.normal(size=g.shape)
    gx = (w[1:, :] - w[:-1, :]) / g.h
    gy = (w[:, 1:] - w[:, :-1]) / g.h
    eps = 0.1
    a = mu_eps(g, ax, ay, g.interior, eps, dirichlet_part=~g.interior).value
    b = mu_eps(g, ax + eps * gx, ay + eps * gy, g.interior, eps, dirichlet_part=~g.interior).value
    assert b == pytest.approx(a, rel=1e-10)


def test_mu_pure_gauge_is_dirichlet():
    _, g = _unit_square(33)
    X, Y = g.mesh()
    w = np.sin(3 * X) * np.cos(2 * Y)
    eps = 0.1
    ax = eps * (w[1:, :] - w[:-1, :]) / g.h
    ay = eps * (w[:, 1:] - w[:, :-1]) / g.h
    val = mu_eps(g, ax, ay, g.interior, eps, dirichlet_part=~g.interior).value
    lamD = lambda_dirichlet(1.0, 1.0, g.h).value
    assert val == pytest.approx(eps ** 2 * lamD, rel=1e-9)


def test_mu_empty():
    _, g = _unit_square(9)
    with pytest.raises(DomainError):
        mu_eps(g, np.zeros((8, 9)), np.zeros((9, 8)), np.zeros(g.shape, bool), 0.1)
    with pytest.raises(DomainError):
        mu_eps(g, np.zeros((8, 9)), np.zeros((9, 8)), g.interior, 0.0)


def test_lower_bound_interior(theta):
    _, g = _unit_square(41)
    ax, ay = _uniform_links(g, 1.0)
    zx, zy = np.zeros_like(ax), np.zeros_like(ay)
    rep = verify_lower_bound(g, ax, ay, zx, zy, g.interior, [0.2, 0.1, 0.05], theta.value,
                             dirichlet_part=~g.interior)
    ratios = [v / e for v, e in zip(rep.lhs, rep.eps)]
    assert rep.bounded
    # Landau level approached as eps decreases
    assert abs(ratios[-1] - 1) < abs(ratios[0] - 1)


def test_lower_bound_regime_flag(theta):
    _, g = _unit_square(17)
    ax, ay = _uniform_links(g, 1.0)
    zx, zy = np.zeros_like(ax), np.zeros_like(ay)
    rep = verify_lower_bound(g, ax, ay, zx, zy, g.interior, [10.0], theta.value,
                             dirichlet_part=~g.interior)
    assert rep.out_of_regime == [True] and rep.notes


def test_lambda_rectangle():
    lam = lambda_dirichlet(1.0, 2.0, 1 / 32).value
    assert lam == pytest.approx(math.pi ** 2 * 1.25, rel=5e-3)


def test_lambda_pair_small():
    lam, lamD = lambda_vs_lambdaD(1.0, 1.0, 1 / 16)
    assert lam > 0 and lamD > 0
    assert abs(lam / lamD - 1) < 0.1
