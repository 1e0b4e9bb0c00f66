import json
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from hpz.errors import ConfigError, DomainError, FreeParticlePoleError, UnsupportedBranchError
from hpz.model import (PhysicalConfig, Regime, TaggedValue, gamma_pm, memory_kernel,
                       memory_transform, re_memory_transform, response, omega_im_response)

positive = st.floats(0.05, 20.0)


def test_regime_defaults_follow_temperature():
    assert PhysicalConfig.build().regime is Regime.ZERO
    assert PhysicalConfig.build(temperature=2.0).regime is Regime.HIGH
    with pytest.raises(ConfigError):
        PhysicalConfig.build(temperature=1.0, regime="zero")


def test_srt_branch_limit_is_rejected():
    with pytest.raises(UnsupportedBranchError):
        PhysicalConfig.build(bath_kind="srt", relaxation_time=0.25)  # 4 zeta tau/m = 1
    with pytest.raises(ConfigError, match="4"):
        PhysicalConfig.from_dict({"mass": 1, "bath_kind": "srt", "friction": 1, "relaxation_time": 0.3})
    PhysicalConfig.build(bath_kind="srt", relaxation_time=0.2499)


@pytest.mark.parametrize("key", ["mass", "bath_kind", "friction"])
def test_missing_required_key_is_named(key):
    doc = {"mass": 1.0, "bath_kind": "ohmic", "friction": 1.0}
    del doc[key]
    with pytest.raises(ConfigError, match=key):
        PhysicalConfig.from_dict(doc)


def test_unknown_and_mistyped_keys():
    with pytest.raises(ConfigError, match="frictoin"):
        PhysicalConfig.from_dict({"mass": 1, "bath_kind": "ohmic", "friction": 1, "frictoin": 2})
    with pytest.raises(ConfigError, match="friction"):
        PhysicalConfig.from_dict({"mass": 1, "bath_kind": "ohmic", "friction": "1"})
    with pytest.raises(ConfigError):
        PhysicalConfig.from_dict({"mass": -1, "bath_kind": "ohmic", "friction": 1})


@given(m=positive, zeta=positive, frac=st.floats(0.0, 0.24), kT=st.floats(0.0, 50.0),
       kind=st.sampled_from(["ohmic", "srt"]))
def test_dict_round_trip(m, zeta, frac, kT, kind):
    tau = frac * m / zeta if kind == "srt" else 0.0
    if kind == "srt" and tau == 0:
        tau = 1e-3 * m / zeta
    cfg = PhysicalConfig.build(mass=m, friction=zeta, bath_kind=kind, relaxation_time=tau, temperature=kT)
    again = PhysicalConfig.from_dict(json.loads(json.dumps(cfg.to_dict())))
    assert again == cfg


@given(w=st.floats(0.0, 1e3), y=st.floats(0.0, 1e3), tau=st.floats(1e-3, 0.2))
def test_memory_transform_is_positive_real(w, y, tau):
    cfg = PhysicalConfig.build(bath_kind="srt", relaxation_time=tau)
    assert memory_transform(cfg, complex(w, y)).real >= 0


def test_memory_transform_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        memory_transform(PhysicalConfig.build(), 1 - 1j)


def test_srt_kernel_and_transform():
    cfg = PhysicalConfig.build(bath_kind="srt", relaxation_time=0.1)
    assert float(memory_kernel(cfg, 0.3)) == pytest.approx(10 * math.exp(-3), rel=1e-14)
    assert memory_transform(cfg, 2.0) == pytest.approx(1 / (1 - 0.2j), rel=1e-14)
    # real part on the axis is zeta/(1 + w^2 tau^2)
    assert re_memory_transform(cfg, 5.0) == pytest.approx(1 / 1.25, rel=1e-14)


def test_ohmic_kernel_is_tagged_delta():
    val = memory_kernel(PhysicalConfig.build(friction=3.0), 0.0)
    assert isinstance(val, TaggedValue) and val.distributional
    assert val.delta_weight == pytest.approx(6.0)
    with pytest.raises(ArithmeticError):
        float(val)


def test_response_pole_and_imaginary_part():
    cfg = PhysicalConfig.build()
    with pytest.raises(FreeParticlePoleError):
        response(cfg, 0.0)
    w = 0.7
    alpha = response(cfg, w)
    assert alpha == pytest.approx(1 / (-w * w - 1j * w), rel=1e-14)
    assert omega_im_response(cfg, w) == pytest.approx(w * alpha.imag, rel=1e-13)
    # regular at the origin: w Im alpha -> 1/zeta
    assert omega_im_response(cfg, 1e-12) == pytest.approx(1.0, rel=1e-9)


@given(tau=st.floats(1e-6, 0.2499), m=positive, zeta=positive)
def test_gamma_pm_are_roots(tau, m, zeta):
    tau = tau * m / zeta
    cfg = PhysicalConfig.build(mass=m, friction=zeta, bath_kind="srt", relaxation_time=tau)
    gp, gm = gamma_pm(cfg)
    mpmath.mp.dps = 40
    # roots of m tau g^2 - m g + zeta = 0
    disc = mpmath.sqrt(mpmath.mpf(m) ** 2 - 4 * mpmath.mpf(m) * tau * zeta)
    ref_p = (m + disc) / (2 * m * tau)
    ref_m = (m - disc) / (2 * m * tau)
    assert gp == pytest.approx(float(ref_p), rel=1e-12)
    assert gm == pytest.approx(float(ref_m), rel=1e-12)
