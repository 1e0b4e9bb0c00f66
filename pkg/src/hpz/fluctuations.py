"""Displacement and fluctuating-position moments.

Routes by regime and bath:

==========  =======================================  ======================================
regime      Ohmic (K = 0)                            SRT (K = 0)
==========  =======================================  ======================================
high        closed forms                             closed forms (exponential sums)
zero        I(x) closed form, Xdot needs a cutoff    I(x) closed form for s, spectral X
exact       quadrature of s, cutoff for sddot(0)     spectral X
==========  =======================================  ======================================

"Spectral X" means the second moments of X(t) = int_0^t G(t-t') F(t') dt'
evaluated directly against the symmetrised force spectrum,

    <X^2> = (hbar/pi) int Re mu~(w) w coth(hbar w/2kT) |A_t(w)|^2 dw,
    A_t(w) = int_0^t G(u) exp(-i w u) du,

which needs no derivatives of s(t) at the origin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConsistencyError, DivergenceError, DomainError, UnsupportedBranchError
from .kernel import (DiffusionCoefficients, GreenModes, diffusion_coefficients, green,
                     green_modes, local_coefficients, phi1)
from .model import PhysicalConfig, Regime, gamma_pm, omega_im_response, re_memory_transform
from .quadrature import SpectralIntegrand, omega_coth, plain_integral, spectral_integral
from .special import special_I, special_I1, special_I2


@dataclass(frozen=True)
class CutoffValue:
    """A quantity that may need a frequency cutoff to be finite.

    ``value`` is None when the quantity diverges and no cutoff was supplied;
    ``cutoff`` records the regularisation actually used (None if none was needed).
    """

    value: float | None
    cutoff: float | None = None
    what: str = ""

    @property
    def divergent(self) -> bool:
        return self.value is None

    def resolve(self) -> float:
        if self.value is None:
            raise DivergenceError(self.what)
        return self.value


@dataclass(frozen=True)
class DisplacementEval:
    t: float
    s: float
    s1: float
    s2: float
    s2_at_0: CutoffValue
    s4_at_0: CutoffValue | None = None


@dataclass(frozen=True)
class XMoments:
    t: float
    xx: float
    vv: float
    xv_sym: float
    cutoff: float | None = None


@dataclass(frozen=True)
class CovarianceMatrix:
    a_pp: float
    a_pq: float
    a_qq: float

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a_pp, self.a_pq], [self.a_pq, self.a_qq]])

    @property
    def det(self) -> float:
        return self.a_pp * self.a_qq - self.a_pq**2


@dataclass(frozen=True)
class EquilibriumMoments:
    x_sq: float
    v_sq: float


# --------------------------------------------------------------------------
# weights

def _bath_weight(config: PhysicalConfig):
    """w -> w coth(hbar w/2kT) appropriate to the regime."""
    kT, hbar = config.kT, config.hbar
    if config.regime is Regime.HIGH:
        c = 2 * kT / hbar
        return lambda w: c
    if config.regime is Regime.ZERO:
        return lambda w: w
    return lambda w: float(omega_coth(w, kT, hbar))


def _upper(config: PhysicalConfig) -> float | None:
    return None if config.regime is Regime.HIGH else config.cutoff


def _scales(config: PhysicalConfig) -> list[float]:
    out = [config.zeta / config.m]
    if not config.is_ohmic:
        out.append(1.0 / config.tau)
        out += list(gamma_pm(config))
    if not config.is_free:
        w0 = math.sqrt(config.K / config.m)
        width = config.zeta / config.m
        out += [w0] + [w0 + k * width for k in (0.3, 1, 3, 10)]
        out += [w0 - k * width for k in (0.3, 1, 3, 10) if w0 > k * width]
    if config.regime is Regime.EXACT and config.kT > 0:
        out.append(config.kT / config.hbar)
    return out


# --------------------------------------------------------------------------
# mean square displacement

def _spectral_msd_part(config: PhysicalConfig, t: float, order: int) -> float:
    """d^order s/dt^order from the spectral integral, order in {0, 1, 2}."""
    pref = 2 * config.hbar / math.pi
    wc = _bath_weight(config)

    def y(w):
        return pref * float(omega_im_response(config, w)) * wc(w)

    if order == 0:
        direct = lambda w: y(w) / (w * w) * 2 * math.sin(0.5 * w * t) ** 2
        n = lambda w: y(w) / (w * w)
        integrand = SpectralIntegrand(direct, n, n, None, t)
    elif order == 1:
        direct = lambda w: y(w) / w * math.sin(w * t)
        integrand = SpectralIntegrand(direct, None, None, lambda w: -y(w) / w, t)
    else:
        direct = lambda w: y(w) * math.cos(w * t)
        integrand = SpectralIntegrand(direct, None, lambda w: -y(w), None, t)
    mag = (config.kT + config.hbar * config.zeta / config.m) / config.zeta * (1 + t) ** 2
    return spectral_integral(integrand, _upper(config), _scales(config),
                             f"mean square displacement (order {order})",
                             atol=1e-14 * mag / max(t, 1e-3) ** order)


def _spectral_moment_at_zero(config: PhysicalConfig, power: int, what: str) -> CutoffValue:
    """(2 hbar/pi) int Im alpha coth w^power dw, for power 2 or 4."""
    upper = _upper(config)
    converges = config.regime is Regime.HIGH or (not config.is_ohmic and power == 2)
    if upper is None and not converges:
        return CutoffValue(None, None, what)
    pref = 2 * config.hbar / math.pi
    wc = _bath_weight(config)
    fn = lambda w: pref * float(omega_im_response(config, w)) * wc(w) * w ** (power - 2)
    val = plain_integral(fn, upper, _scales(config), what, atol=1e-300)
    return CutoffValue(val, upper if not converges else None, what)


def msd(config: PhysicalConfig, t: float) -> DisplacementEval:
    """Mean square displacement s(t) of the stationary process and derivatives."""
    if t < 0:
        raise DomainError("msd is defined for t >= 0")
    t = float(t)
    if config.is_free and config.regime is Regime.HIGH:
        return _msd_high(config, t)
    if config.is_free and config.regime is Regime.ZERO:
        return _msd_zero_ohmic(config, t) if config.is_ohmic else _msd_zero_srt(config, t)
    s2_0 = _spectral_moment_at_zero(config, 2, "sddot(0)")
    s4_0 = _spectral_moment_at_zero(config, 4, "s''''(0)")
    if t == 0:
        s2 = s2_0.value if s2_0.value is not None else math.inf
        return DisplacementEval(0.0, 0.0, 0.0, s2, s2_0, s4_0)
    return DisplacementEval(t, _spectral_msd_part(config, t, 0), _spectral_msd_part(config, t, 1),
                            _spectral_msd_part(config, t, 2), s2_0, s4_0)


def _msd_high(config: PhysicalConfig, t: float) -> DisplacementEval:
    modes = green_modes(config)
    c = 2 * config.kT
    s = c * float(modes.integral(t))
    s1 = c * float(modes.derivative(0, t))
    s2 = c * float(modes.derivative(1, t))
    s4 = c * float(modes.derivative(3, 0.0))
    return DisplacementEval(t, s, s1, s2, CutoffValue(c / config.m), CutoffValue(s4))


def _ohmic_zero_s2_at_0(config: PhysicalConfig) -> tuple[CutoffValue, CutoffValue]:
    m, zeta, hbar, wc = config.m, config.zeta, config.hbar, config.cutoff
    if wc is None:
        return CutoffValue(None, None, "sddot(0)"), CutoffValue(None, None, "s''''(0)")
    L = math.log1p((m * wc / zeta) ** 2)
    s2 = hbar * zeta / (math.pi * m * m) * L
    s4 = hbar * zeta / (math.pi * m * m) * (wc * wc - (zeta / m) ** 2 * L)
    return CutoffValue(s2, wc, "sddot(0)"), CutoffValue(s4, wc, "s''''(0)")


def _msd_zero_ohmic(config: PhysicalConfig, t: float) -> DisplacementEval:
    m, zeta, hbar = config.m, config.zeta, config.hbar
    x = zeta * t / m
    c = 2 * hbar / (math.pi * zeta)
    s2_0, s4_0 = _ohmic_zero_s2_at_0(config)
    if t == 0:
        s2 = s2_0.value if s2_0.value is not None else math.inf
    else:
        s2 = c * (zeta / m) ** 2 * float(special_I2(x))
    return DisplacementEval(t, c * float(special_I(x)), c * zeta / m * float(special_I1(x)), s2,
                            s2_0, s4_0)


def _msd_zero_srt(config: PhysicalConfig, t: float) -> DisplacementEval:
    gp, gm = gamma_pm(config)
    c = 2 * config.hbar / (math.pi * config.zeta) / (gp * gp - gm * gm)
    s = c * (gp**2 * float(special_I(gm * t)) - gm**2 * float(special_I(gp * t)))
    s1 = c * (gp**2 * gm * float(special_I1(gm * t)) - gm**2 * gp * float(special_I1(gp * t)))
    s2_0 = CutoffValue(c * gp**2 * gm**2 * math.log(gp / gm), None, "sddot(0)")
    if t == 0:
        s2 = s2_0.value
    else:
        s2 = c * gp**2 * gm**2 * (float(special_I2(gm * t)) - float(special_I2(gp * t)))
    s4_0 = _spectral_moment_at_zero(config, 4, "s''''(0)")
    return DisplacementEval(t, s, s1, s2, s2_0, s4_0)


# --------------------------------------------------------------------------
# moments of the fluctuating position

# below this t*cutoff the two regularisations differ by more than ~1e-3
CLOSED_FORM_MIN_T_CUTOFF = 100.0


def x_moments(config: PhysicalConfig, t: float, method: str = "auto") -> XMoments:
    """<X^2>, <Xdot^2> and <X Xdot + Xdot X> at time t.

    ``method="spectral"`` forces the direct spectral route for any free-particle
    configuration; it is used to cross-check the closed forms.  For K > 0 only
    t = inf is available, where X(t) becomes the stationary x_s(t).
    """
    if t < 0:
        raise DomainError("x_moments is defined for t >= 0")
    if not config.is_free:
        if math.isinf(t):
            eq = equilibrium_moments(config)
            return XMoments(math.inf, eq.x_sq, eq.v_sq, 0.0, config.cutoff)
        raise UnsupportedBranchError(
            "finite-time X moments are implemented for the free particle only")
    t = float(t)
    if t == 0:
        return XMoments(0.0, 0.0, 0.0, 0.0, None)
    if method == "spectral":
        return _x_moments_spectral(config, t)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    if config.regime is Regime.HIGH:
        return _x_high_ohmic(config, t) if config.is_ohmic else _x_high_srt(config, t)
    if config.is_ohmic:
        # the closed form cuts off only s''(0); that is consistent once t*cutoff >> 1
        if config.cutoff is not None and t * config.cutoff < CLOSED_FORM_MIN_T_CUTOFF:
            return _x_moments_spectral(config, t)
        return _x_ohmic_from_msd(config, t)
    return _x_moments_spectral(config, t)


def _x_high_ohmic(config: PhysicalConfig, t: float) -> XMoments:
    m, zeta, kT = config.m, config.zeta, config.kT
    x = zeta * t / m
    if x < 0.1:
        # 2x - 3 + 4 exp(-x) - exp(-2x), summed from its cubic term
        total, term = 0.0, x**3 / 6
        for n in range(3, 40):
            piece = (-1) ** n * (4 - 2.0**n) * term
            total += piece
            term *= x / (n + 1)
            if abs(piece) < 1e-18 * abs(total):
                break
    else:
        e = math.exp(-x)
        total = 2 * x - 3 + 4 * e - e * e
    E = -math.expm1(-x)
    xx = kT * m / zeta**2 * total
    vv = kT / m * -math.expm1(-2 * x)
    xv = 2 * kT / zeta * E * E
    return XMoments(t, xx, vv, xv, None)


def _pair_integral(fa, fb, tau: float, t: float) -> float:
    """int_0^t int_0^t fa(u) fb(v) exp(-|u-v|/tau) du dv for exponential sums.

    ``fa`` and ``fb`` are (coeffs, rates) pairs.
    """
    ca, ra = fa
    cb, rb = fb
    k = 1.0 / tau
    A, B = np.meshgrid(ra, rb, indexing="ij")
    CA, CB = np.meshgrid(ca, cb, indexing="ij")
    # lower triangle v < u and its mirror
    lower = (phi1(A + B, t) - phi1(A + k, t)) / (k - B)
    upper = (phi1(A + B, t) - phi1(B + k, t)) / (k - A)
    return float(np.sum(CA * CB * (lower + upper)))


def _x_high_srt(config: PhysicalConfig, t: float) -> XMoments:
    modes = green_modes(config)
    g, nu = modes.position_modes()
    gd = (modes.b, modes.lam)
    c = config.kT * config.zeta / config.tau
    xx = c * _pair_integral((g, nu), (g, nu), config.tau, t)
    vv = c * _pair_integral(gd, gd, config.tau, t)
    xv = 2 * c * _pair_integral((g, nu), gd, config.tau, t)
    return XMoments(t, xx, vv, xv, None)


def _x_ohmic_from_msd(config: PhysicalConfig, t: float) -> XMoments:
    d = msd(config, t)
    s20 = d.s2_at_0.resolve()
    ge = green(config, t)
    m, G, Gd = config.m, ge.g, ge.g1
    xx = d.s - m * G * d.s1 + 0.5 * m * m * G * G * s20
    vv = 0.5 * (1 + m * m * Gd * Gd) * s20 - m * Gd * d.s2
    xv = d.s1 - m * (Gd * d.s1 + G * d.s2) + m * m * G * Gd * s20
    return XMoments(t, xx, vv, xv, d.s2_at_0.cutoff)


def _spectral_pair(config: PhysicalConfig, modes: GreenModes, t: float, oa: int, ob: int,
                   what: str, modes_b: GreenModes | None = None) -> float:
    """(hbar/pi) int Re mu~ w coth Re(A_a A_b*) dw, A_a the transform of G^(oa).

    ``modes_b`` replaces ``modes`` on the second factor (used for Gddot, passed
    as the order-1 transform of the modes of Gdot)."""
    pref = config.hbar / math.pi
    wc = _bath_weight(config)
    same = modes_b is None and oa == ob
    mb = modes if modes_b is None else modes_b

    def weight(w):
        return pref * float(re_memory_transform(config, w)) * wc(w)

    def direct(w):
        a = modes.transform(w, t, oa)
        b = a if same else mb.transform(w, t, ob)
        return weight(w) * float((a * np.conj(b)).real)

    def parts(w):
        Pa, Qa = modes.transform_parts(w, t, oa)
        Pb, Qb = (Pa, Qa) if same else mb.transform_parts(w, t, ob)
        u, v = Pa * np.conj(Qb), Qa * np.conj(Pb)
        n = (Pa * np.conj(Pb) + Qa * np.conj(Qb)).real
        return float(n), float(u.real + v.real), float(v.imag - u.imag)

    integrand = SpectralIntegrand(direct,
                                  lambda w: weight(w) * parts(w)[0],
                                  lambda w: weight(w) * parts(w)[1],
                                  lambda w: weight(w) * parts(w)[2], t)
    mag = (config.kT + config.hbar * max(_scales(config))) / config.zeta * t ** (2 - oa - ob) \
        * config.m ** (-(oa + ob) / 2)
    return spectral_integral(integrand, _upper(config), _scales(config), what,
                             atol=1e-13 * mag)


def _x_moments_spectral(config: PhysicalConfig, t: float) -> XMoments:
    if config.is_ohmic and config.regime is not Regime.HIGH and config.cutoff is None:
        raise DivergenceError("<X^2> of the Ohmic bath with zero-point noise")
    modes = green_modes(config)
    xx = _spectral_pair(config, modes, t, 0, 0, "<X^2>")
    vv = _spectral_pair(config, modes, t, 1, 1, "<Xdot^2>")
    xv = 2 * _spectral_pair(config, modes, t, 0, 1, "<X Xdot + Xdot X>")
    return XMoments(t, xx, vv, xv, _upper(config))


def covariance(config: PhysicalConfig, t: float) -> CovarianceMatrix:
    """The matrix A(t) = [[m^2 <Xdot^2>, (m/2)<XXdot+XdotX>], [., <X^2>]]."""
    mo = x_moments(config, t)
    m = config.m
    cov = CovarianceMatrix(m * m * mo.vv, 0.5 * m * mo.xv_sym, mo.xx)
    scale = abs(cov.a_pp * cov.a_qq)
    if cov.a_pp < 0 or cov.a_qq < 0 or cov.det < -1e-9 * scale:
        raise ConsistencyError(f"covariance matrix is indefinite at t = {t}: {cov}")
    return cov


def exact_diffusion_coefficients(config: PhysicalConfig, t: float) -> DiffusionCoefficients:
    """f and h fixed by requiring the master equation to reproduce the exact X moments.

    X(t) solves the local equation only with the effective force
    F_eff/m = Xddot + 2 Gamma Xdot + Omega^2 X.  For a memory kernel that is F/m
    plus the convolution of F with R_t(u) = Gddot(u) + 2 Gamma(t) Gdot(u)
    + Omega^2(t) G(u), so with Y the Gddot-convolution of F

        <X F_eff + F_eff X>       = <XF+FX> + m [<XY+YX> + 2 Gamma <XXdot+XdotX> + 2 Omega^2 <X^2>]
        <Xdot F_eff + F_eff Xdot> = <XdotF+FXdot> + m [<XdotY+YXdot> + 4 Gamma <Xdot^2> + Omega^2 <XXdot+XdotX>]

    For the Ohmic bath R_t vanishes and this coincides with
    ``kernel.diffusion_coefficients``.
    """
    base = diffusion_coefficients(config, t)
    if config.is_ohmic:
        return base
    m, hbar = config.m, config.hbar
    modes = green_modes(config)
    acc = GreenModes(tuple(-modes.b * modes.lam), modes.rates)  # Gddot written as a Gdot-type sum
    if config.regime is Regime.HIGH:
        g, nu = modes.position_modes()
        c = 2 * config.kT * config.zeta / config.tau
        pair_x = c * _pair_integral((g, nu), (acc.b, acc.lam), config.tau, t)
        pair_v = c * _pair_integral((modes.b, modes.lam), (acc.b, acc.lam), config.tau, t)
    else:
        pair_x = 2 * _spectral_pair(config, modes, t, 0, 1, "<XY+YX>", modes_b=acc)
        pair_v = 2 * _spectral_pair(config, modes, t, 1, 1, "<XdotY+YXdot>", modes_b=acc)
    mo = x_moments(config, t)
    lc = local_coefficients(config, t)
    om2 = float(lc.omega_sq)
    xf = 2 * base.d_qp + m * (pair_x + lc.two_gamma * mo.xv_sym + 2 * om2 * mo.xx)
    vf = 2 * base.d_pp / m + m * (pair_v + 2 * lc.two_gamma * mo.vv + om2 * mo.xv_sym)
    return DiffusionCoefficients(float(t), xf / (hbar * lc.two_gamma), vf / (hbar * lc.two_gamma),
                                 0.5 * xf, 0.5 * m * vf)


# --------------------------------------------------------------------------
# equilibrium

def equilibrium_moments(config: PhysicalConfig) -> EquilibriumMoments:
    """Stationary <x_s^2> and <xdot_s^2> of a bound oscillator."""
    if config.is_free:
        raise DomainError("a free particle has no equilibrium position variance (K = 0)")
    pref = config.hbar / math.pi
    wc = _bath_weight(config)
    upper = _upper(config)
    scales = _scales(config)
    y = lambda w: pref * float(omega_im_response(config, w)) * wc(w)
    x_sq = plain_integral(lambda w: y(w) / (w * w) if w > 0 else _x_sq_origin(config, pref),
                          upper, scales, "<x_s^2>", atol=1e-300)
    if upper is None and config.regime is not Regime.HIGH and config.is_ohmic:
        raise DivergenceError("<xdot_s^2> of an Ohmic oscillator with zero-point noise")
    v_sq = plain_integral(y, upper, scales, "<xdot_s^2>", atol=1e-300)
    return EquilibriumMoments(x_sq, v_sq)


def _x_sq_origin(config: PhysicalConfig, pref: float) -> float:
    # Im alpha ~ w Re mu(0)/K^2 at w -> 0; times coth
    if config.regime is Regime.ZERO or config.kT == 0:
        return 0.0
    return pref * config.zeta / config.K**2 * 2 * config.kT / config.hbar


# --------------------------------------------------------------------------
# zero-point divergence

@dataclass(frozen=True)
class DivergenceScan:
    cutoffs: np.ndarray
    xx: np.ndarray
    slope: float
    intercept: float
    residual: float
    mode: str


def divergence_scan(config: PhysicalConfig, t_probe: float, cutoff_list, mode: str = "auto"
                    ) -> DivergenceScan:
    """<X^2(t_probe)> at T = 0 against log(cutoff).

    For the Ohmic bath the cutoff is a hard upper limit on the bath spectrum.
    The SRT bath already has a finite spectrum, whose intrinsic cutoff is 1/tau:
    ``mode="relaxation"`` (the default for SRT) sets tau = 1/cutoff, while
    ``mode="hard"`` keeps tau and truncates the spectrum at the cutoff.
    """
    cut = np.asarray(sorted(cutoff_list), dtype=float)
    if cut.size < 2 or cut[-1] / cut[0] < 99.9:
        raise ValueError("cutoff_list must span at least two decades")
    if mode == "auto":
        mode = "hard" if config.is_ohmic else "relaxation"
    if mode not in ("hard", "relaxation"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "relaxation" and config.is_ohmic:
        raise UnsupportedBranchError("the Ohmic bath has no relaxation time to sweep")
    base = config.replace(temperature=0.0, regime="exact")
    vals = []
    for wc in cut:
        if mode == "hard":
            cfg = base.replace(cutoff=float(wc))
        else:
            cfg = base.replace(relaxation_time=1.0 / float(wc), cutoff=None)
        vals.append(x_moments(cfg, t_probe).xx)
    vals = np.asarray(vals)
    logc = np.log(cut)
    slope, intercept = np.polyfit(logc, vals, 1)
    resid = float(np.max(np.abs(vals - (slope * logc + intercept))))
    return DivergenceScan(cut, vals, float(slope), float(intercept), resid, mode)


def divergence_probe(config: PhysicalConfig, t_probe: float, cutoff_list, mode: str = "auto",
                     max_residual: float | None = None) -> float:
    """Slope d<X^2>/d log(cutoff); the zero-point law predicts hbar/(pi zeta)."""
    if t_probe < 5 * config.m / config.zeta:
        raise ValueError("t_probe must be long compared with m/zeta")
    scan = divergence_scan(config, t_probe, cutoff_list, mode)
    expected = config.hbar / (math.pi * config.zeta)
    limit = 0.05 * expected if max_residual is None else max_residual
    if scan.residual > limit:
        raise ConsistencyError(
            f"<X^2> is not linear in log(cutoff): max residual {scan.residual:.3e} > {limit:.3e}")
    return scan.slope
