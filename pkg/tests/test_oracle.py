import math

import numpy as np
import pytest

from hpz.errors import (DomainError, RecurrenceError, StabilityError, UnsupportedBranchError,
                        UnsupportedStateError)
from hpz.evolution import InitialState, spatial_density, variance_report
from hpz.fluctuations import exact_diffusion_coefficients, x_moments
from hpz.model import PhysicalConfig, memory_kernel
from hpz.oracle import OracleReport, PhaseSpaceGrid, build_discrete_bath, integrate_master_equation, mc_estimate
from hpz.oracle.pde import density_l1
from hpz.oracle.moments import (diffusion_from_moments, fluctuation_moment_curves,
                                gaussian_moments_closed, integrate_moment_odes, master_coefficients)
from hpz.oracle.suites import moments_suite

SRT = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1, temperature=10.0)
OHM = PhysicalConfig.build(temperature=1.0)


def test_report_records_and_rejects_nan():
    rep = OracleReport("x")
    rep.record("a", 0.5, 1.0)
    rep.record("b", 2.0, 1.0)
    assert rep.passed == {"a": True, "b": False} and not rep.ok
    with pytest.raises(ValueError):
        rep.record("c", math.nan, 1.0)
    assert rep.to_dict()["metrics"]["a"] == 0.5


def test_moment_odes_reproduce_exact_moments():
    ts = np.linspace(0, 2, 9)
    curves = fluctuation_moment_curves(SRT, 2.0, ts)
    for t, xx in zip(ts[1:], curves.x2[1:]):
        assert xx == pytest.approx(x_moments(SRT, t).xx, rel=1e-7)
    init = gaussian_moments_closed(SRT, 0.7, 0.0)
    g = integrate_moment_odes(SRT, init, 1.5, [1.5])
    assert (g.x2[-1], g.xp[-1], g.p2[-1]) == pytest.approx(gaussian_moments_closed(SRT, 0.7, 1.5),
                                                          rel=1e-7)


def test_printed_force_route_misses_memory_correction():
    # with the force-correlation coefficients the ODE drifts away from the exact X moments
    got = fluctuation_moment_curves(SRT, 1.0, [1.0], route="force").x2[-1]
    assert abs(got / x_moments(SRT, 1.0).xx - 1) > 0.05


def test_routes_coincide_for_ohmic_bath():
    for t in (0.2, 1.5):
        assert master_coefficients(OHM, t, "force") == master_coefficients(OHM, t, "exact")
    with pytest.raises(UnsupportedBranchError):
        integrate_moment_odes(OHM, (1, 0, 1), 1.0)
    with pytest.raises(ValueError):
        master_coefficients(SRT, 1.0, "other")


@pytest.mark.parametrize("t", [0.05, 0.5, 2.0])
def test_diffusion_from_moments_matches_exact_route(t):
    xf, vf = diffusion_from_moments(SRT, t)
    dc = exact_diffusion_coefficients(SRT, t)
    assert xf == pytest.approx(2 * dc.d_qp, rel=1e-5)
    assert vf == pytest.approx(2 * dc.d_pp / SRT.m, rel=1e-5)


def test_moments_suite_passes():
    assert moments_suite(SRT, InitialState.gaussian(1.0)).ok


# -- grid oracle

def _grid(n, dt=1e-3):
    return PhaseSpaceGrid(-12.0, 12.0, -20.0, 20.0, n, n, dt)


def test_pde_grid_validation():
    with pytest.raises(DomainError):
        PhaseSpaceGrid(-1, 1, -1, 1, 32, 64)
    with pytest.raises(UnsupportedBranchError):
        integrate_master_equation(OHM, InitialState.gaussian(1.0), _grid(64), 0.1)
    with pytest.raises(UnsupportedBranchError):
        integrate_master_equation(SRT, InitialState.cat(2.0, 1.0), _grid(64), 0.1)
    with pytest.raises(StabilityError):
        integrate_master_equation(SRT, InitialState.gaussian(1.0), _grid(64, dt=0.5), 1.0)


def test_pde_spatial_convergence_and_mass():
    state = InitialState.gaussian(1.0)
    t = 0.3
    exact = spatial_density(state, SRT, t).pdf
    coarse = integrate_master_equation(SRT, state, _grid(64), t)
    fine = integrate_master_equation(SRT, state, _grid(128), t)
    assert density_l1(coarse, exact) / density_l1(fine, exact) >= 3.5
    assert fine.mass_drift < 1e-6
    assert fine.moments()["var_q"] == pytest.approx(variance_report(state, SRT, t), rel=1e-3)


def test_pde_zero_coupling_surrogate():
    cfg = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1, friction=1e-6, temperature=1.0)
    res = integrate_master_equation(cfg, InitialState.gaussian(1.0), _grid(96, 2e-3), 1.0)
    assert res.moments()["var_q"] == pytest.approx(1 + 1 / 4, rel=5e-3)


# -- trajectory oracle

def test_discrete_bath_reconstructs_kernel():
    from scipy import integrate
    cfg = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1)
    wc = 200.0
    # the comb converges to the kernel band-limited at the cutoff
    band = lambda t: 2 / math.pi * integrate.quad(lambda w: 1 / (1 + (0.1 * w) ** 2), 0, wc,
                                                  weight="cos", wvar=t)[0] if t > 0 else \
        2 / math.pi * math.atan(0.1 * wc) / 0.1
    errs = []
    for J in (200, 800, 3200):
        bath = build_discrete_bath(cfg, J, wc)
        ts = np.linspace(0, bath.recurrence_time / 4, 300)
        errs.append(np.max(np.abs(bath.memory(ts) - [band(t) for t in ts])))
    # the window grows with the recurrence time, so the decrease is roughly 1/J
    assert errs[0] > 2 * errs[1] > 4 * errs[2]
    assert np.all(bath.masses > 0)
    # what is left against the full kernel is the spectral tail beyond the cutoff
    tail = float(memory_kernel(cfg, 0.0)) - band(0.0)
    assert tail == pytest.approx(2 / (math.pi * 0.1**2 * wc), rel=0.02)
    with pytest.raises(DomainError):
        build_discrete_bath(cfg, 50, 100.0)


def test_mc_small_run_is_consistent_and_deterministic():
    state = InitialState.gaussian(1.0)
    a = mc_estimate(OHM, state, [1.0], samples=20_000, J=200, cutoff=200.0, threads=1)
    b = mc_estimate(OHM, state, [1.0], samples=20_000, J=200, cutoff=200.0, threads=3)
    assert a.metrics == b.metrics
    assert a.metrics["X2_z[1]"] < 4 and a.metrics["var_z[1]"] < 4


def test_mc_restrictions():
    with pytest.raises(UnsupportedStateError):
        mc_estimate(OHM, InitialState.cat(2.0, 1.0), [1.0], samples=100)
    with pytest.raises(UnsupportedStateError):
        mc_estimate(PhysicalConfig.build(spring_constant=1.0, temperature=1.0),
                    InitialState.gaussian(1.0), [1.0], samples=100)
    with pytest.raises(RecurrenceError):
        mc_estimate(OHM, InitialState.gaussian(1.0), [10.0], samples=100, J=100, cutoff=100.0)
