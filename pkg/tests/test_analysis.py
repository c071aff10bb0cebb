import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from glwire import analysis as an
from glwire.domain import build_wire_domain, constant_current, zero_current
from glwire.errors import DegenerateFit, EmptyRegion, InsufficientHorizon, ZeroOrderParameter
from glwire.normal_fields import compute_normal_fields, extract_regions
from glwire.tdgl import PhysicsParams, TDGLModel


@pytest.fixture(scope="module")
def wire():
    dom, g = build_wire_domain(1.0, 2.0, 33, 65)
    nf = compute_normal_fields(dom, g, constant_current(4.0), 0.0)
    return dom, g, nf


@given(st.floats(0.1, 20.0), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_planted_exponential(rate, shift):
    d = np.linspace(0.05, 0.5, 60)
    rho2 = np.exp(2 * shift - 2 * rate * d)
    f = an.fit_log_decay(rho2, d)
    assert f.slope == pytest.approx(rate, abs=1e-6)
    assert f.r_squared == pytest.approx(1.0, abs=1e-9)


def test_fit_constant_psi():
    d = np.linspace(0.1, 0.4, 30)
    f = an.fit_log_decay(np.full(30, 0.25), d)
    assert f.slope == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(DegenerateFit):
        an.fit_log_decay(np.full(30, 0.25), np.full(30, 0.2))


def test_fit_needs_points():
    with pytest.raises(EmptyRegion):
        an.fit_log_decay(np.ones(10), np.linspace(0, 1, 10))
    # zeros are not log-safe and are dropped
    with pytest.raises(EmptyRegion):
        an.fit_log_decay(np.zeros(50), np.linspace(0, 1, 50))


def test_agmon_fit_planted(wire):
    dom, g, nf = wire
    # small delta so that omega_{delta,2} is not empty on this wire
    masks = extract_regions(nf.Bn, 0.05, g)
    d = masks.dist_to_Gamma[2]
    psi = np.exp(-3.0 * d)
    f = an.agmon_fit(psi, masks, 2, 8.0, 0.05, g)
    assert f.slope == pytest.approx(3.0, abs=1e-6)
    assert f.r_squared == pytest.approx(1.0)
    V = g.node_weights()
    w = np.exp(math.sqrt(0.05) * 8.0 * d) * np.exp(-6.0 * d)
    assert f.agmon_integral == pytest.approx((V * masks.omega_delta[2] * w).sum(), rel=1e-12)
    fc = an.agmon_fit(np.exp(-2.0 * masks.dist_to_C[1]), masks, 1, 8.0, 0.05, g, distance="C")
    assert fc.slope == pytest.approx(2.0, abs=1e-6)


def test_agmon_empty_region(wire):
    dom, g, nf = wire
    masks = extract_regions(nf.Bn, 1.5, g)
    with pytest.raises(EmptyRegion):
        an.agmon_fit(np.ones(g.shape), masks, 2, 8.0, 1.5, g)


def test_mass_and_ratio(wire):
    dom, g, nf = wire
    V = g.node_weights()
    psi = np.ones(g.shape)
    mask = np.zeros(g.shape, bool)
    mask[: g.nx // 2 + 1] = True
    assert an.region_mass(psi, np.ones(g.shape, bool), V) == pytest.approx(2.0)
    assert 0 < an.localization_ratio(psi, mask, V) < 1
    with pytest.raises(ZeroOrderParameter):
        an.localization_ratio(np.zeros(g.shape), mask, V)


def test_loglog_exponent():
    k = np.array([4.0, 8, 16, 32])
    p, (lo, hi) = an.loglog_exponent(k, 3 * k ** -0.5)
    assert p == pytest.approx(-0.5) and lo <= p <= hi
    assert math.isnan(an.loglog_exponent(k[:3], k[:3])[0])


def test_kappa_sweep_bound():
    res = an.kappa_sweep([4, 8, 16, 32], lambda k: {"norm2": 2.0 * k ** -0.5})
    assert res.bound_ok and res.monotone_ok and not res.degenerate
    assert res.exponent == pytest.approx(-0.5)
    assert [r["kappa"] for r in res.rows] == [4, 8, 16, 32]
    bad = an.kappa_sweep([4, 8, 16, 32], lambda k: {"norm2": 0.1 * k ** 0.1})
    assert not bad.bound_ok and not bad.monotone_ok


def test_kappa_sweep_degenerate():
    res = an.kappa_sweep([4, 8, 16, 32], lambda k: {"norm2": 0.0}, normal_threshold=1e-6)
    assert res.degenerate and res.monotone_ok
    with pytest.raises(ValueError):
        an.kappa_sweep([4, 8, 16], lambda k: {"norm2": 1.0})


def test_envelope_c_dependence():
    e = an.envelope([4.0], np.array([0.25, 1.0, 4.0]))
    assert np.all(np.diff(e) < 0)
    assert an.envelope(64.0, 1.0) == pytest.approx(2 ** (1 / 3) / 2)


def test_time_track():
    t = np.linspace(0, 10, 101)
    m = 1 + np.exp(-3 * t)
    tr = an.time_decay_track(t, m)
    assert tr.limsup == pytest.approx(m[80:].max())
    assert tr.drift < 0.01
    with pytest.raises(InsufficientHorizon):
        an.time_decay_track(t, np.exp(-0.1 * t))
    zero = an.time_decay_track(t, np.zeros_like(t))
    assert zero.limsup == 0.0


def test_spread_factor():
    assert an.spread_factor([1, 2, 5]) == 5
    assert an.spread_factor([0, 1]) == math.inf


def test_mass_recorder_normal_start():
    dom, g = build_wire_domain(1.0, 2.0, 17, 33)
    m = TDGLModel(dom, g, PhysicsParams(4.0), constant_current(4.0))
    rec = an.MassRecorder(np.ones(g.shape, bool), m.V, every=5)
    s = m.normal_state()
    dt = m.default_dt(s)
    for _ in range(20):
        s, rep = m.step(s, dt)
        rec(s, rep)
    assert len(rec.m) == 4 and max(rec.m) == 0.0


def test_phi_view(wire):
    dom, g, nf = wire
    V = g.node_weights()
    v = an.Phi_n_view(nf, np.ones(g.shape), V)
    assert v.C == pytest.approx(0.0, abs=1e-12)
    rng = np.random.default_rng(0)
    psi = rng.uniform(0, 1, g.shape)
    v = an.Phi_n_view(nf, psi, V)
    assert v.orthogonality_defect <= 1e-12 and v.bound_ok
    with pytest.raises(ZeroOrderParameter):
        an.Phi_n_view(nf, np.zeros(g.shape), V)


def test_large_domain_params():
    p = an.large_domain_params(0.125, 0.5, 1.0)
    assert p.kappa == 8 and p.coupling == 64
    assert p.J_amplitude == pytest.approx(-math.sqrt(8)) and p.h_ex == pytest.approx(math.sqrt(8))
    with pytest.raises(ValueError):
        an.large_domain_params(1.0, 0.5)
    with pytest.raises(ValueError):
        an.large_domain_params(0.5, 1.0)


def test_d_delta_from_mask():
    _, g = build_wire_domain(1.0, 1.0, 17, 17)
    D = np.zeros(g.shape, bool)
    D[6:9, :] = True
    d, (d1, d2) = an.d_delta_from_mask(D, g)
    assert d1 == pytest.approx(6 / 16) and d2 == pytest.approx(8 / 16) and d == d2


def test_distance_to_mask():
    _, g = build_wire_domain(1.0, 1.0, 17, 17)
    D = np.zeros(g.shape, bool)
    D[8, :] = True
    d = an.distance_to_mask(D, g)
    X, _ = g.mesh()
    assert np.allclose(d, np.abs(X - 0.5))


def _normal_run(eps):
    dom, g = build_wire_domain(1.0, 1.0, 17, 17)
    p = an.large_domain_params(eps, 0.5)
    m = TDGLModel(dom, g, p, constant_current(4.0))
    return an.large_domain_from_state(eps, 0.5, m, m.normal_state(), None, 0.25)


def test_w_comparison_normal_state():
    run = _normal_run(0.125)
    r = an.w_comparison(run)
    # psi = 0 and a harmonic B_eps: w = B_eps - 1 up to the averaging of the field to nodes
    assert r["defect"] <= 1e-6 and r["ok"]


def test_w_comparison_gauge_invariant():
    run = _normal_run(0.125)
    g = run.grid
    run.state.psi = 0.3 * np.ones(g.shape, complex)
    a = an.w_comparison(run)["defect"]
    w = np.random.default_rng(1).normal(size=g.shape)
    run.state = run.model.gauge_transform(run.state, w)
    run.B_eps = an.node_field(run.model, run.state) / run.model.kappa
    assert an.w_comparison(run)["defect"] == pytest.approx(a, rel=1e-10)


def test_agmon_large_domain_planted():
    run = _normal_run(0.125)
    d = an.distance_to_mask(run.D_delta_mask, run.grid)
    run.state.psi = np.exp(-d / run.eps).astype(complex)
    f = an.agmon_large_domain(run, 0.59)
    assert f.slope == pytest.approx(1 / run.eps, rel=1e-6)
    empty = _normal_run(0.125)
    empty.D_delta_mask = np.zeros(empty.grid.shape, bool)
    with pytest.raises(EmptyRegion):
        an.agmon_large_domain(empty, 0.59)


def test_predicted_rate_scaling():
    r1 = an.predicted_large_domain_rate(1 / 8, 0.5, 0.25, 0.59)
    r2 = an.predicted_large_domain_rate(1 / 16, 0.5, 0.25, 0.59)
    assert r2 / r1 == pytest.approx(2 ** 1.25)


def test_inclusion_normal_state():
    dom, g = build_wire_domain(1.0, 2.0, 17, 33)
    m = TDGLModel(dom, g, PhysicsParams(8.0), constant_current(4.0))
    rep = an.inclusion_check(m, m.normal_state(), 0.25)
    assert rep["holds"]


def test_d_delta_checks():
    ok = an.d_delta_checks([1 / 8, 1 / 16, 1 / 32], [0.25, 0.24, 0.26])
    assert ok["d_delta_ge_C"] and ok["d_delta_ge_C_eps"]
    shrink = an.d_delta_checks([1 / 8, 1 / 16, 1 / 32], [0.25, 0.1, 0.04])
    assert not shrink["d_delta_ge_C"] and shrink["d_delta_ge_C_eps"]
    assert not an.d_delta_checks([1 / 8], [np.inf])["d_delta_ge_C"]
