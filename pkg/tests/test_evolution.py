import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from hpz.errors import DomainError, FitWindowError, UnsupportedStateError
from hpz.evolution import (FitLaw, InitialState, ThermalLength, attenuation, commutator_curve,
                           default_fit_window, equilibrium_wigner, evolve_wigner, evolved_transform,
                           exact_reference, fit_decoherence_time, gaussian_wigner_direct,
                           initial_transform, mean_trajectory, spatial_density,
                           transition_probability, variance_report)
from hpz.kernel import green
from hpz.model import PhysicalConfig

OHM_HIGH = PhysicalConfig.build(temperature=1.0)
SRT_HIGH = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1, temperature=10.0)


def states(config):
    return [InitialState.gaussian(1.0, x0=0.5), InitialState.cat(4.0, 1.0),
            InitialState.thermal_gaussian(1.0, config), InitialState.thermal_cat(3.0, 0.8, config)]


def phase_grid(half_q, half_p, n=601):
    q = np.linspace(-half_q, half_q, n)
    p = np.linspace(-half_p, half_p, n)
    return q, p, np.meshgrid(q, p, indexing="ij")


@given(Q=st.floats(-3, 3), P=st.floats(-3, 3), d=st.floats(0.5, 6), sigma=st.floats(0.3, 2))
def test_transform_symmetry(Q, P, d, sigma):
    tr = initial_transform(InitialState.cat(d, sigma))
    assert complex(tr(0.0, 0.0)) == pytest.approx(1.0, abs=1e-14)
    assert complex(tr(-Q, -P)) == pytest.approx(complex(tr(Q, P)).conjugate(), abs=1e-14)


def test_gaussian_wigner_matches_explicit_form():
    st_ = InitialState.gaussian(0.7, x0=0.3)
    q, p, (Q, P) = phase_grid(4, 4, 41)
    assert np.max(np.abs(initial_transform(st_).wigner(Q, P) - gaussian_wigner_direct(st_, Q, P))) < 1e-14


@pytest.mark.parametrize("t", [0.0, 0.5, 3.0])
@pytest.mark.parametrize("idx", range(4))
def test_wigner_normalisation_on_grid(t, idx):
    state = states(SRT_HIGH)[idx]
    M = evolved_transform(state, SRT_HIGH, t).M  # cov(p) = hbar^2 M00, cov(q) = hbar^2 M11
    half_q = 14 * math.sqrt(M[1, 1]) + state.d + abs(state.x0)
    q, p, (Q, P) = phase_grid(half_q, 14 * math.sqrt(M[0, 0]) + 4, 1201)
    W = evolve_wigner(state, SRT_HIGH, t, Q, P)
    mass = integrate.trapezoid(integrate.trapezoid(W, p, axis=1), q)
    assert abs(mass - 1) < 1e-8


@pytest.mark.parametrize("idx", [0, 1])
def test_marginal_matches_spatial_density(idx):
    state = states(SRT_HIGH)[idx]
    t = 0.8
    q, p, (Q, P) = phase_grid(15, 40, 1601)
    marg = integrate.trapezoid(evolve_wigner(state, SRT_HIGH, t, Q, P), p, axis=1)
    assert np.max(np.abs(marg - spatial_density(state, SRT_HIGH, t)(q))) < 1e-6


def test_quadrature_route_agrees_with_closed_form():
    state = InitialState.cat(2.0, 1.0)
    a = evolve_wigner(state, OHM_HIGH, 0.4, 0.3, -0.2)
    b = evolve_wigner(state, OHM_HIGH, 0.4, 0.3, -0.2, method="quadrature")
    assert b == pytest.approx(float(a), abs=1e-8)


@given(x0=st.floats(-5, 5), t=st.floats(0, 10), zeta=st.floats(0.2, 5))
def test_mean_drifts_with_initial_impulse(x0, t, zeta):
    cfg = PhysicalConfig.build(friction=zeta, temperature=1.0)
    d = spatial_density(InitialState.gaussian(1.0, x0), cfg, t)
    assert d.mean == pytest.approx(x0 * math.exp(-zeta * t), abs=1e-12)


def test_transition_kernel_propagates_a_gaussian():
    state = InitialState.gaussian(0.8, x0=0.4)
    t, q, p = 0.6, 0.5, -0.3
    W0 = lambda q0, p0: gaussian_wigner_direct(state, q0, p0)
    val = integrate.dblquad(lambda p0, q0: W0(q0, p0) * transition_probability(OHM_HIGH, t, q, p, q0, p0),
                            -6, 6, -6, 6, epsabs=1e-12)[0]
    assert val == pytest.approx(float(evolve_wigner(state, OHM_HIGH, t, q, p)), rel=1e-7)
    qs, ps, (Q, P) = phase_grid(10, 10, 801)
    K = transition_probability(OHM_HIGH, t, Q, P, 0.3, 0.2)
    assert integrate.trapezoid(integrate.trapezoid(K, ps, axis=1), qs) == pytest.approx(1, abs=1e-9)
    mq, mp = mean_trajectory(OHM_HIGH, t, 0.3, 0.2)
    assert mq == pytest.approx(0.3 * math.exp(-t) + 0.2 * (1 - math.exp(-t)))
    with pytest.raises(DomainError):
        transition_probability(OHM_HIGH, 0.0, 0, 0, 0, 0)


def test_variance_example():
    v = variance_report(InitialState.gaussian(1.0), OHM_HIGH, 1.0)
    assert v == pytest.approx(0.571412, abs=1e-6)
    assert v == pytest.approx(math.exp(-2) + (1 - math.exp(-1)) ** 2 / 4
                              + (-1 + 4 * math.exp(-1) - math.exp(-2)), rel=1e-14)


def test_density_normalisation_and_positivity():
    for state in states(OHM_HIGH):
        for t in (0.0, 0.01, 1.0, 5.0):
            d = spatial_density(state, OHM_HIGH, t)
            assert abs(d.normalization - 1) < 1e-8
            xs = np.linspace(-20, 20, 4001)
            assert d(xs).min() > -1e-12


@given(ratio=st.floats(1, 10), t=st.floats(0, 10))
def test_cat_density_is_nonnegative(ratio, t):
    state = InitialState.cat(ratio * 0.5, 0.5)
    d = spatial_density(state, OHM_HIGH, t)
    xs = np.linspace(-3 * ratio - 10, 3 * ratio + 10, 3001)
    assert d(xs).min() >= -1e-12 * d(xs).max()


def test_attenuation_bounds_and_monotone():
    state = InitialState.cat(3.0, 1.0)
    ts = np.linspace(0, 5, 101)
    a = np.array([attenuation(state, OHM_HIGH, t).a for t in ts])
    assert a[0] == 1.0
    assert np.all((a > 0) & (a <= 1))
    assert np.all(np.diff(a) <= 1e-15)
    with pytest.raises(UnsupportedStateError):
        attenuation(InitialState.gaussian(1.0), OHM_HIGH, 1.0)


def test_attenuation_plateau():
    state = InitialState.cat(2.0, 1.0)
    a = attenuation(state, OHM_HIGH, 2000.0).a
    assert a == pytest.approx(state.overlap, rel=1e-3)


def test_cold_packet_decoherence_time():
    cfg = PhysicalConfig.build(temperature=1e4)
    state = InitialState.cat(1.0, 1e-3)
    tau, law = fit_decoherence_time(state, cfg)
    assert law is FitLaw.EXP_T3
    assert tau == pytest.approx(3 / (1e4 * 1.0), rel=0.02)


def test_thermal_decoherence_time():
    state = InitialState.thermal_cat(1.0, 1.0, OHM_HIGH)
    tau, law = fit_decoherence_time(state, OHM_HIGH)
    assert law is FitLaw.GAUSS_T2
    vbar = math.sqrt(OHM_HIGH.kT / OHM_HIGH.m)
    assert tau == pytest.approx(math.sqrt(8) / (vbar * 1.0), rel=0.02)


def test_fit_window_checks():
    hot = PhysicalConfig.build(temperature=1e4)
    with pytest.raises(FitWindowError):
        fit_decoherence_time(InitialState.cat(1.0, 1.0), hot, FitLaw.EXP_T3)  # slit too wide
    with pytest.raises(FitWindowError):
        fit_decoherence_time(InitialState.cat(1.0, 1.0), hot, FitLaw.GAUSS_T2)
    with pytest.raises(FitWindowError):
        fit_decoherence_time(InitialState.cat(1.0, 1e-3), hot, FitLaw.EXP_T3, window=(0.01, 0.5))
    lo, hi = default_fit_window(InitialState.cat(1.0, 1e-3), hot, FitLaw.EXP_T3)
    assert (lo, hi) == pytest.approx((1e-3, 1e-2))


def test_short_time_thermal_spreading():
    st_ = InitialState.thermal_gaussian(1.0, OHM_HIGH)
    t = 1e-4
    law = 1 + t * t / 4 + OHM_HIGH.kT * t * t
    assert variance_report(st_, OHM_HIGH, t) == pytest.approx(law, rel=1e-3)


@pytest.mark.parametrize("t", [0.1, 1.0, 4.0])
def test_commutator_is_hbar_times_green(t):
    assert commutator_curve(OHM_HIGH, t) == pytest.approx(green(OHM_HIGH, t).g, abs=1e-9)
    srt = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1, temperature=1.0, hbar=2.0)
    assert commutator_curve(srt, t) == pytest.approx(2.0 * green(srt, t).g, abs=1e-8)


def test_exact_reference_short_time():
    cfg = PhysicalConfig.build(temperature=1.0)
    state = InitialState.thermal_cat(1.0, 1.0, cfg)
    for t in (1e-3, 5e-3):
        ref = exact_reference(state, cfg, t)
        assert ref.w_sq >= state.sigma**2
        assert 0 < ref.a_exact <= 1
        kt2 = cfg.kT * t * t / cfg.m
        law_var = 1 + kt2 + t * t / 4
        law_a = math.exp(-kt2 / (8 * (1 + kt2 + t * t / 4)))
        assert ref.w_sq == pytest.approx(law_var, rel=1e-2)
        assert ref.a_exact == pytest.approx(law_a, rel=1e-2)


def test_equilibrium_wigner_and_long_time_limit():
    cfg = PhysicalConfig.build(spring_constant=1.0, friction=0.5, temperature=2.0)
    q, p, (Q, P) = phase_grid(12, 12, 801)
    We = equilibrium_wigner(cfg, Q, P)
    assert integrate.trapezoid(integrate.trapezoid(We, p, axis=1), q) == pytest.approx(1, abs=1e-9)
    Winf = evolve_wigner(InitialState.gaussian(0.5, 1.0), cfg, math.inf, Q, P)
    assert np.max(np.abs(Winf - We)) < 1e-12


def test_state_validation():
    with pytest.raises(DomainError):
        InitialState.cat(0.0, 1.0)
    with pytest.raises(DomainError):
        InitialState.gaussian(-1.0)
    with pytest.raises(DomainError):
        ThermalLength.of(PhysicalConfig.build())
    assert ThermalLength.of(PhysicalConfig.build(temperature=4.0, mass=4.0)).lambda_bar == 0.25
    with pytest.raises(DomainError):
        evolved_transform(InitialState.gaussian(1.0, hbar=2.0), OHM_HIGH, 1.0)
    with pytest.raises(UnsupportedStateError):
        spatial_density(InitialState.gaussian(1.0),
                        PhysicalConfig.build(spring_constant=1.0, temperature=1.0), 1.0)


@pytest.mark.parametrize("t", [1e-4, 0.01, 1.0, 100.0])
def test_narrow_pair_stays_finite(t):
    # the interference weight underflows long before its Gaussian factor stops overflowing
    cfg = PhysicalConfig.build(temperature=1e4)
    state = InitialState.cat(1.0, 1e-3)
    d = spatial_density(state, cfg, t)
    assert np.all(np.isfinite(d(np.linspace(-2, 2, 101))))
    assert abs(d.normalization - 1) < 1e-8
    tr = evolved_transform(state, cfg, t)
    assert np.all(np.isfinite(tr.wigner(np.array([0.0, 0.5]), np.array([0.0, 1.0]))))
