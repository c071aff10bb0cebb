import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glwire.domain import build_wire_domain, constant_current, make_current, sampled_current, zero_current
from glwire.errors import CompatibilityError
from glwire.normal_fields import (compute_hj, compute_normal_fields, conjugacy_residual, curl,
                                  divergence, extract_regions, min_grad_Bn, recover_An, solve_Bn,
                                  solve_phin)
from glwire.solvers import laplacian_dirichlet_interior


@pytest.fixture(scope="module")
def wire():
    dom, g = build_wire_domain(1.0, 2.0, 33, 65)
    J = constant_current(4.0)
    return dom, g, J, compute_normal_fields(dom, g, J, 0.0)


def test_zero_current_constant_field():
    dom, g = build_wire_domain(1, 2, 17, 33)
    Bn = solve_Bn(dom, g, zero_current(), 1.0)
    assert np.array_equal(Bn, np.ones(g.shape))
    assert np.array_equal(solve_phin(dom, g, zero_current()), np.zeros(g.shape))


def test_wire_contact_constants(wire):
    dom, g, J, nf = wire
    assert nf.h1 == pytest.approx(-2.0, abs=1e-10)
    assert nf.h2 == pytest.approx(2.0, abs=1e-10)
    assert nf.h == pytest.approx(2.0)
    assert nf.sign_condition


def test_h_ex_shift(wire):
    dom, g, J, nf = wire
    Bn3 = solve_Bn(dom, g, J, 3.0)
    assert np.max(np.abs(Bn3 - nf.Bn - 3.0)) < 1e-10


@given(st.floats(-5, 5), st.floats(-3, 3))
@settings(max_examples=10, deadline=None)
def test_Bn_linear(a, hex_):
    dom, g = build_wire_domain(1, 2, 17, 33)
    J = make_current("skewbump", 1.0, 1.0)
    B1 = solve_Bn(dom, g, J, hex_)
    Ba = solve_Bn(dom, g, J.scaled(a), a * hex_)
    assert np.max(np.abs(Ba - a * B1)) <= 1e-9 * max(1.0, abs(a)) * max(1.0, np.abs(B1).max())


def test_Bn_harmonic_and_max_principle():
    dom, g = build_wire_domain(1, 2, 33, 65)
    Bn = solve_Bn(dom, g, make_current("bump", 4.0, 1.0), 0.5)
    lap = laplacian_dirichlet_interior(Bn, g.h)
    assert np.abs(lap).max() * g.h ** 2 < 1e-10 * np.abs(Bn).max()
    edge = ~g.interior
    assert Bn.max() <= Bn[edge].max() + 1e-12
    assert Bn.min() >= Bn[edge].min() - 1e-12
    # boundary mean is h_ex
    b = np.concatenate([Bn[:, 0], Bn[:, -1], Bn[0, 1:-1], Bn[-1, 1:-1]])
    assert b.mean() == pytest.approx(0.5, abs=5e-3)


def test_phin_zero_mean_and_antisymmetry(wire):
    dom, g, J, nf = wire
    V = g.node_weights()
    assert abs((V * nf.phin).sum()) < 1e-12
    assert np.max(np.abs(nf.phin + nf.phin[:, ::-1])) < 10 * g.h ** 2


def test_phin_linear():
    dom, g = build_wire_domain(1, 2, 17, 33)
    J = make_current("bump", 1.5, 1.0)
    p1 = solve_phin(dom, g, J)
    p2 = solve_phin(dom, g, J.scaled(2.0))
    assert np.max(np.abs(p2 - 2 * p1)) < 1e-10 * np.abs(p1).max()


def test_phin_incompatible():
    dom, g = build_wire_domain(1, 2, 17, 33)
    with pytest.raises(CompatibilityError):
        solve_phin(dom, g, constant_current(1.0, -0.7))


def test_An_examples():
    dom, g = build_wire_domain(1, 1, 33, 33)
    ax, ay = recover_An(g, np.zeros(g.shape))
    assert not ax.any() and not ay.any()
    ax, ay = recover_An(g, np.ones(g.shape))
    assert np.max(np.abs(curl(g, ax, ay) - 1.0)) < 1e-10
    Bn = solve_Bn(dom, g, make_current("skewbump", 3.0, 1.0), 0.2)
    ax, ay = recover_An(g, Bn)
    # on boundary nodes the divergence measures the normal trace
    d = divergence(g, ax, ay)
    assert np.abs(d).max() < 1e-12 * max(1.0, np.abs(ax).max() / g.h)


def test_hj_zero_current():
    dom, g = build_wire_domain(1, 2, 17, 33)
    rep = compute_hj(dom, zero_current(), 0.7)
    assert rep.formula == (0.7, 0.7)


def test_hj_shifted_sign_flag():
    dom, g = build_wire_domain(1, 2, 17, 33)
    rep = compute_hj(dom, constant_current(4.0), 5.0, grid=g)
    assert rep.formula == pytest.approx((3.0, 7.0), abs=1e-10)
    assert not rep.sign_condition
    rep0 = compute_hj(dom, constant_current(4.0), 0.0, grid=g)
    assert rep0.formula == pytest.approx((-2.0, 2.0), abs=1e-10)
    assert rep0.h == pytest.approx(2.0) and rep0.sign_condition


def test_hj_independent_of_sample_point():
    dom, _ = build_wire_domain(1, 2, 17, 33)
    rep = compute_hj(dom, make_current("skewbump", 4.0, 1.0), 0.0)
    assert max(rep.spread) < 1e-9


def test_conjugacy_examples():
    dom, g = build_wire_domain(1, 2, 17, 33)
    z = np.zeros(g.shape)
    assert conjugacy_residual(z + 2.0, z, g.h) == 0.0
    J = make_current("bump", 4.0, 1.0)
    nf = compute_normal_fields(dom, g, J, 0.0)
    r = conjugacy_residual(nf.Bn, nf.phin, g.h)
    assert conjugacy_residual(nf.Bn + 3.1, nf.phin - 0.4, g.h) == pytest.approx(r, rel=1e-9)


def test_regions_constant_field():
    dom, g = build_wire_domain(1, 2, 17, 33)
    Bn = solve_Bn(dom, g, zero_current(), 2.0)
    m = extract_regions(Bn, 0.5, g)
    assert m.omega[2].all() and m.S_delta.all()
    assert m.empty("C_delta", 1) and m.empty("C_delta", 2)


def test_regions_wire(wire):
    dom, g, J, nf = wire
    m = extract_regions(nf.Bn, 0.5, g)
    assert m.n_components_S == 2
    X, _ = g.mesh()
    assert np.all(X[m.S_delta_j[1]] < 0.5) and np.all(X[m.S_delta_j[2]] > 0.5)
    # level 1 + delta above max |B_n| = 2; delta = 1 itself keeps the tie nodes
    assert not extract_regions(nf.Bn, 1.01, g).S_delta.any()
    assert extract_regions(nf.Bn, 1.0, g).S_delta.any()


@given(st.floats(0.01, 0.9), st.floats(0.01, 0.9))
@settings(max_examples=15, deadline=None)
def test_region_nesting(d1, d2):
    dom, g = build_wire_domain(1, 2, 17, 33)
    Bn = solve_Bn(dom, g, make_current("bump", 4.0, 1.0), 0.0)
    lo, hi = sorted((d1, d2))
    a, b = extract_regions(Bn, lo, g), extract_regions(Bn, hi, g)
    assert np.all(b.S_delta <= a.S_delta)
    for j in (1, 2):
        assert np.all(a.omega_delta[j] <= a.omega[j])
        assert np.all(b.omega_delta[j] <= a.omega_delta[j])


def test_min_grad():
    dom, g = build_wire_domain(1, 2, 17, 33)
    assert min_grad_Bn(np.zeros(g.shape), g.h) == 0.0
    J = constant_current(4.0)
    m1 = min_grad_Bn(solve_Bn(dom, g, J, 0.0), g.h)
    m2 = min_grad_Bn(solve_Bn(dom, g, J.scaled(2.0), 0.0), g.h)
    assert m1 > 0
    assert m2 == pytest.approx(2 * m1, rel=1e-9)
