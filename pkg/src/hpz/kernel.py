"""Green function, local-in-time coefficients and diffusion coefficients.

For a free particle (K = 0) both bath models give a velocity response that
is a finite sum of decaying exponentials,

    Gdot(t) = sum_k b_k exp(-lam_k t),

so G and all its derivatives, integrals and finite-time Fourier transforms
follow in closed form from ``GreenModes``.  A bound particle (K > 0) goes
through numerical inversion of the response function instead.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import DivergenceError, SingularityError, UnsupportedBranchError, DomainError
from .model import PhysicalConfig, Regime, TaggedValue, gamma_pm, omega_im_response, re_memory_transform
from .quadrature import SpectralIntegrand, omega_coth, spectral_integral

GREEN_RTOL = 1e-8


# --------------------------------------------------------------------------
# exponential-sum helpers

def phi1(lam, t):
    """int_0^t exp(-lam u) du, accurate for small lam*t (lam may be complex)."""
    lam = np.asarray(lam)
    t = np.asarray(t, dtype=float)
    x = lam * t
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = -np.expm1(-x) / np.where(lam == 0, 1.0, lam)
    series = t * (1 - x / 2 + x * x / 6 - x**3 / 24 + x**4 / 120)
    return np.where(np.abs(x) < 1e-3, series, direct)


def phi2(lam, t):
    """int_0^t (t - u) exp(-lam u) du = (t - phi1)/lam, cancellation-free."""
    lam = np.asarray(lam)
    t = np.asarray(t, dtype=float)
    x = lam * t
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = (t - phi1(lam, t)) / np.where(lam == 0, 1.0, lam)
    series = t * t * (0.5 - x / 6 + x * x / 24 - x**3 / 120 + x**4 / 720)
    return np.where(np.abs(x) < 1e-2, series, direct)


@dataclass(frozen=True)
class GreenModes:
    """Gdot(t) = sum_k amps[k] exp(-rates[k] t) for a free particle.

    ``position_modes`` rewrites G itself as a sum over rates including 0.
    """

    amps: tuple[float, ...]
    rates: tuple[float, ...]

    @property
    def b(self) -> np.ndarray:
        return np.asarray(self.amps, dtype=float)

    @property
    def lam(self) -> np.ndarray:
        return np.asarray(self.rates, dtype=float)

    def position_modes(self) -> tuple[np.ndarray, np.ndarray]:
        """(g, nu) with G(u) = sum g_k exp(-nu_k u); nu_0 = 0."""
        b, lam = self.b, self.lam
        g = np.concatenate([[np.sum(b / lam)], -b / lam])
        nu = np.concatenate([[0.0], lam])
        return g, nu

    def derivative(self, order: int, t):
        """d^order G / dt^order; order 0 is G itself."""
        t = np.asarray(t, dtype=float)
        b, lam = self.b, self.lam
        tt = t[..., None]
        if order == 0:
            return np.sum(b * phi1(lam, tt), axis=-1)
        return np.sum(b * (-lam) ** (order - 1) * np.exp(-lam * tt), axis=-1)

    def integral(self, t):
        """int_0^t G(u) du."""
        t = np.asarray(t, dtype=float)
        return np.sum(self.b * phi2(self.lam, t[..., None]), axis=-1)

    def transform(self, w, t, order: int = 0):
        """A_t(w) = int_0^t G^(order)(u) exp(-i w u) du for order 0 or 1."""
        if order == 0:
            g, nu = self.position_modes()
        elif order == 1:
            g, nu = self.b, self.lam
        else:
            raise ValueError("transform is provided for G and Gdot only")
        z = nu + 1j * np.asarray(w, dtype=float)[..., None]
        return np.sum(g * phi1(z, t), axis=-1)

    def transform_parts(self, w, t, order: int = 0):
        """(P, Q) with A_t(w) = P - exp(-i w t) Q; valid for w > 0."""
        if order == 0:
            g, nu = self.position_modes()
        else:
            g, nu = self.b, self.lam
        z = nu + 1j * np.asarray(w, dtype=float)[..., None]
        P = np.sum(g / z, axis=-1)
        Q = np.sum(g * np.exp(-nu * t) / z, axis=-1)
        return P, Q


def green_modes(config: PhysicalConfig) -> GreenModes:
    if not config.is_free:
        raise UnsupportedBranchError("closed-form Green modes exist only for K = 0")
    m = config.m
    if config.is_ohmic:
        return GreenModes((1.0 / m,), (config.zeta / m,))
    gp, gm = gamma_pm(config)
    D = m * gm * gp * (gp - gm)
    return GreenModes((gp * gp * gm / D, -gm * gm * gp / D), (gm, gp))


# --------------------------------------------------------------------------
# Green function

@dataclass(frozen=True)
class GreenEval:
    t: float
    g: float
    g1: float
    g2: float
    g3: float | None = None

    @property
    def determinant(self) -> float:
        """Gdot^2 - G Gddot, positive for the supported models."""
        return self.g1 * self.g1 - self.g * self.g2


def green(config: PhysicalConfig, t: float) -> GreenEval:
    """G(t) and derivatives.  At t = 0 the right-hand limits are returned.

    The Ohmic second derivative jumps at the origin; g2(0) = -zeta/m^2 is the
    value just after the initial impulse.
    """
    if t < 0:
        raise DomainError("green is defined for t >= 0")
    if config.is_free:
        modes = green_modes(config)
        return GreenEval(float(t), *(float(modes.derivative(k, t)) for k in range(4)))
    return _numeric_green(config, float(t))


def _inversion_scales(config: PhysicalConfig) -> list[float]:
    w0 = math.sqrt(config.K / config.m)
    width = config.zeta / config.m
    scales = [w0, width]
    for k in (0.3, 1, 3, 10):
        scales += [w0 + k * width, max(w0 - k * width, 0.0)]
    if not config.is_ohmic:
        scales.append(1.0 / config.tau)
    return sorted({s for s in scales if s > 0})


def _numeric_green(config: PhysicalConfig, t: float) -> GreenEval:
    m = config.m
    if t == 0:
        g2 = -config.zeta / m**2 if config.is_ohmic else 0.0
        return GreenEval(0.0, 0.0, 1.0 / m, g2, None)
    scales = _inversion_scales(config)
    # Im alpha = (w Im alpha)/w, regular for K > 0
    def im_alpha(w):
        return float(omega_im_response(config, w)) / w if w > 0 else 0.0

    c = 2.0 / math.pi
    atol = 1e-12 / math.sqrt(config.K * m)
    g = spectral_integral(
        SpectralIntegrand(lambda w: c * im_alpha(w) * math.sin(w * t), None, None,
                          lambda w: -c * im_alpha(w), t),
        None, scales, "Green function inversion", GREEN_RTOL, atol)
    g1 = spectral_integral(
        SpectralIntegrand(lambda w: c * w * im_alpha(w) * math.cos(w * t), None,
                          lambda w: -c * w * im_alpha(w), None, t),
        None, scales, "Green function derivative", GREEN_RTOL, atol / t)
    g2 = spectral_integral(
        SpectralIntegrand(lambda w: -c * w * w * im_alpha(w) * math.sin(w * t), None, None,
                          lambda w: c * w * w * im_alpha(w), t),
        None, scales, "Green function second derivative", GREEN_RTOL, atol / t**2)
    return GreenEval(t, g, g1, g2, None)


def green_ode_residual(config: PhysicalConfig, t: float) -> float:
    """|m G'' + int_0^t mu(t-t') G'(t') dt' + K G| at t > 0."""
    if t <= 0:
        raise DomainError("green_ode_residual needs t > 0")
    ge = green(config, t)
    if config.is_ohmic:
        # half of the 2 zeta delta lies inside [0, t]
        conv = config.zeta * ge.g1
    else:
        zeta, tau = config.zeta, config.tau
        if config.is_free:
            modes = green_modes(config)
            gdot = lambda u: float(modes.derivative(1, u))
        else:
            gdot = lambda u: green(config, u).g1
        conv = integrate.quad(lambda u: zeta / tau * math.exp(-(t - u) / tau) * gdot(u),
                              0.0, t, epsabs=1e-14, epsrel=1e-12, limit=200)[0]
    return abs(config.m * ge.g2 + conv + config.K * ge.g)


# --------------------------------------------------------------------------
# local coefficients

@dataclass(frozen=True)
class LocalCoefficients:
    t: float
    two_gamma: float
    omega_sq: TaggedValue


def _divdiff_exp(a: float, b: float, t: float) -> float:
    """Second divided difference of x -> exp(-x t) on the nodes (0, a, a+b)."""
    c = a + b
    if c * t < 0.05:
        # sum_n (-t)^n/n! h_{n-2}(0, a, c), h = complete homogeneous polynomials
        total = 0.0
        # h_k(a, c) since the node 0 contributes nothing
        hk_prev = 1.0
        fact = 2.0
        tn = t * t
        for n in range(2, 30):
            k = n - 2
            # h_k(a, c) = sum_{j=0}^k a^j c^(k-j)
            if k == 0:
                hk = 1.0
            else:
                hk = c * hk_prev + a**k
            term = (-1) ** n * tn / fact * hk
            total += term
            hk_prev = hk
            tn *= t
            fact *= n + 1
            if abs(term) < 1e-18 * abs(total):
                break
        return total
    first = -math.expm1(-a * t) / a  # -(h[0,a])
    second = math.exp(-a * t) * (-math.expm1(-b * t)) / b  # -(h[a,c])
    return (first - second) / c


def local_coefficients(config: PhysicalConfig, t: float) -> LocalCoefficients:
    if t < 0:
        raise DomainError("local_coefficients is defined for t >= 0")
    if not config.is_free:
        raise UnsupportedBranchError(
            "2Gamma(t) and Omega^2(t) are offered only for K = 0; the third derivative "
            "of a numerically inverted Green function is not reliable")
    if config.is_ohmic:
        weight = 2 * config.zeta / config.m if t == 0 else 0.0
        return LocalCoefficients(float(t), config.zeta / config.m, TaggedValue(0.0, weight))
    gp, gm = gamma_pm(config)
    S, Dl = gp + gm, gp - gm
    den = S * (-math.expm1(-Dl * t)) + Dl * math.exp(-gp * t)
    if not den > 0:
        raise SingularityError(f"vanishing denominator in the local coefficients at t = {t}")
    # 2Gamma = S * [gm + Dl exp(-gp t) - gp exp(-Dl t)] / den, written via a divided difference
    two_gamma = S * Dl * gm * gp * _divdiff_exp(Dl, gm, t) / den
    omega_sq = gm * gp * Dl * math.exp(-gp * t) / den
    return LocalCoefficients(float(t), two_gamma, TaggedValue(omega_sq))


def coefficients_from_green(ge: GreenEval) -> tuple[float, float]:
    """(2Gamma, Omega^2) from G and three derivatives by the generic formula."""
    if ge.g3 is None:
        raise UnsupportedBranchError("third derivative unavailable")
    den = ge.determinant
    if den <= 0:
        raise SingularityError("Gdot^2 - G Gddot vanished")
    return (ge.g * ge.g3 - ge.g1 * ge.g2) / den, (ge.g2**2 - ge.g1 * ge.g3) / den


# --------------------------------------------------------------------------
# diffusion coefficients

@dataclass(frozen=True)
class DiffusionCoefficients:
    """f and h together with the products that multiply the master-equation
    derivatives: d_qp = hbar Gamma f and d_pp = hbar m Gamma h."""

    t: float
    f: float
    h: float
    d_qp: float
    d_pp: float


def force_correlations(config: PhysicalConfig, t: float) -> tuple[float, float]:
    """(<XF+FX>, <Xdot F + F Xdot>) at time t."""
    if not config.is_free:
        raise UnsupportedBranchError("diffusion coefficients are offered only for K = 0")
    kT, hbar = config.kT, config.hbar
    modes = green_modes(config)
    if config.regime is Regime.HIGH:
        if config.is_ohmic:
            # c_F = 2 zeta kT delta with half weight at the endpoint; G(0) = 0
            return 0.0, 2 * config.zeta * kT / config.m
        zeta, tau = config.zeta, config.tau
        g, nu = modes.position_modes()
        xf = 2 * kT * zeta / tau * float(np.sum(g * phi1(nu + 1 / tau, t)))
        vf = 2 * kT * zeta / tau * float(np.sum(modes.b * phi1(modes.lam + 1 / tau, t)))
        return xf, vf
    if config.is_ohmic and config.cutoff is None:
        raise DivergenceError("force correlations of an Ohmic bath with zero-point noise")
    return (_spectral_force_corr(config, modes, t, 0), _spectral_force_corr(config, modes, t, 1))


def _spectral_force_corr(config: PhysicalConfig, modes: GreenModes, t: float, order: int) -> float:
    """(2 hbar/pi) int Re mu~ w coth Re A_t dw for G (order 0) or Gdot (order 1)."""
    kT, hbar = config.kT, config.hbar
    pref = 2 * hbar / math.pi

    def weight(w):
        return pref * float(re_memory_transform(config, w)) * float(omega_coth(w, kT, hbar))

    def direct(w):
        return weight(w) * float(modes.transform(w, t, order).real)

    def n(w):
        return weight(w) * float(modes.transform_parts(w, t, order)[0].real)

    def c(w):
        return weight(w) * float(modes.transform_parts(w, t, order)[1].real)

    def s(w):
        return weight(w) * float(modes.transform_parts(w, t, order)[1].imag)

    scales = _scales(config)
    scale = (kT + hbar * max(scales)) * (t if order == 0 else 1 / config.m)
    return spectral_integral(SpectralIntegrand(direct, n, c, s, t), config.cutoff, scales,
                             "force correlation", atol=1e-13 * scale)


def _scales(config: PhysicalConfig) -> list[float]:
    out = [config.zeta / config.m]
    if not config.is_ohmic:
        out += list(gamma_pm(config)) + [1.0 / config.tau]
    if config.kT > 0:
        out.append(config.kT / config.hbar)
    return out


def diffusion_coefficients(config: PhysicalConfig, t: float) -> DiffusionCoefficients:
    if t <= 0:
        raise SingularityError("f and h divide by Gamma(t); t > 0 is required")
    if config.regime is Regime.ZERO and config.is_ohmic and config.cutoff is None:
        raise DivergenceError("diffusion coefficients of the Ohmic bath at zero temperature")
    xf, vf = force_correlations(config, t)
    two_gamma = local_coefficients(config, t).two_gamma
    if two_gamma <= 0:
        raise SingularityError(f"Gamma(t) vanished at t = {t}")
    hbar = config.hbar
    return DiffusionCoefficients(float(t), xf / (hbar * two_gamma), vf / (hbar * two_gamma),
                                 0.5 * xf, 0.5 * config.m * vf)
