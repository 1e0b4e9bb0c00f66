"""Wigner-function propagation, densities, attenuation and decoherence times.

All supported initial states have a Fourier-transformed Wigner function

    W~(Q, P) = sum_k w_k exp(-1/2 u^T M u + l_k . u),     u = (Q, P),

with one shared positive-definite M.  The exact propagator maps u = T v with
T = [[m Gdot, G], [m^2 Gddot, m Gdot]] and multiplies by the Gaussian bath
average exp(-v^T A v / 2 hbar^2), so the evolved state is again of this form
with M -> T^T M T + A/hbar^2 and l -> T^T l.  Every density below is an exact
Gaussian integral of such a mixture.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import integrate

from .errors import ConsistencyError, DomainError, FitWindowError, UnsupportedStateError
from .fluctuations import CovarianceMatrix, covariance, equilibrium_moments, msd, x_moments
from .kernel import GreenEval, green
from .model import PhysicalConfig, omega_im_response
from .quadrature import SpectralIntegrand, spectral_integral


class StateKind(str, Enum):
    GAUSSIAN = "gaussian"
    THERMAL_GAUSSIAN = "thermal_gaussian"
    CAT = "cat"
    THERMAL_CAT = "thermal_cat"


@dataclass(frozen=True)
class ThermalLength:
    lambda_bar: float

    @classmethod
    def of(cls, config: PhysicalConfig) -> "ThermalLength":
        if not config.kT > 0:
            raise DomainError("the thermal de Broglie wavelength needs T > 0")
        return cls(config.hbar / math.sqrt(config.m * config.kT))


@dataclass(frozen=True)
class InitialState:
    """Gaussian, thermal Gaussian, cat pair or thermal cat pair.

    Thermal variants carry the thermal wavelength of the bath they were built
    for; use the ``thermal_*`` constructors.
    """

    kind: StateKind
    sigma: float
    x0: float = 0.0
    d: float = 0.0
    hbar: float = 1.0
    lambda_bar: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", StateKind(self.kind))
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if self.is_pair and not self.d > 0:
            raise DomainError("a wave-packet pair needs separation d > 0")
        if self.is_thermal and not (self.lambda_bar and self.lambda_bar > 0):
            raise DomainError("thermal states need a positive thermal wavelength")

    @property
    def is_pair(self) -> bool:
        return self.kind in (StateKind.CAT, StateKind.THERMAL_CAT)

    @property
    def is_thermal(self) -> bool:
        return self.kind in (StateKind.THERMAL_GAUSSIAN, StateKind.THERMAL_CAT)

    @classmethod
    def gaussian(cls, sigma, x0=0.0, hbar=1.0):
        return cls(StateKind.GAUSSIAN, sigma, x0=x0, hbar=hbar)

    @classmethod
    def cat(cls, d, sigma, hbar=1.0):
        return cls(StateKind.CAT, sigma, d=d, hbar=hbar)

    @classmethod
    def thermal_gaussian(cls, sigma, config: PhysicalConfig, x0=0.0):
        return cls(StateKind.THERMAL_GAUSSIAN, sigma, x0=x0, hbar=config.hbar,
                   lambda_bar=ThermalLength.of(config).lambda_bar)

    @classmethod
    def thermal_cat(cls, d, sigma, config: PhysicalConfig):
        return cls(StateKind.THERMAL_CAT, sigma, d=d, hbar=config.hbar,
                   lambda_bar=ThermalLength.of(config).lambda_bar)

    @property
    def overlap(self) -> float:
        """exp(-d^2/8 sigma^2), the overlap of the two packets of a pair."""
        return math.exp(-self.d**2 / (8 * self.sigma**2))

    @property
    def pair_prefactor(self) -> float:
        return 1.0 / (1.0 + self.overlap)


# --------------------------------------------------------------------------
# Gaussian mixtures in the (Q, P) transform variables

@dataclass(frozen=True)
class WignerTransform:
    """W~(Q,P) = sum_k exp(log_weights[k] - (c_qq Q^2 + c_qp Q P + c_pp P^2) + lin[k].(Q, P)).

    ``lin`` holds complex linear coefficients; pairs with conjugate partners keep
    W~(-Q,-P) = conj W~(Q,P).  Weights are kept as logarithms because the
    interference weight of well separated packets underflows while the
    Gaussian it multiplies overflows.
    """

    c_qq: float
    c_pp: float
    c_qp: float
    log_weights: tuple[float, ...]
    lin: tuple[tuple[complex, complex], ...]
    hbar: float = 1.0

    @property
    def M(self) -> np.ndarray:
        return np.array([[2 * self.c_qq, self.c_qp], [self.c_qp, 2 * self.c_pp]])

    @classmethod
    def from_matrix(cls, M, log_weights, lin, hbar) -> "WignerTransform":
        M = np.asarray(M, dtype=float)
        return cls(0.5 * M[0, 0], 0.5 * M[1, 1], 0.5 * (M[0, 1] + M[1, 0]),
                   tuple(float(w) for w in log_weights),
                   tuple((complex(a), complex(b)) for a, b in lin), hbar)

    def _check(self) -> np.ndarray:
        M = self.M
        if not (M[0, 0] > 0 and M[1, 1] > 0 and np.linalg.det(M) > 0):
            raise ConsistencyError(f"quadratic form is not positive definite: {M.tolist()}")
        return M

    def __call__(self, Q, P):
        Q = np.asarray(Q, dtype=float)
        P = np.asarray(P, dtype=float)
        quad = self.c_qq * Q * Q + self.c_qp * Q * P + self.c_pp * P * P
        out = np.zeros(np.broadcast(Q, P).shape, dtype=complex)
        for lw, (lq, lp) in zip(self.log_weights, self.lin):
            out = out + np.exp(lw - quad + lq * Q + lp * P)
        return out

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(math.exp(lw) for lw in self.log_weights)

    @property
    def norm(self) -> float:
        return float(sum(self.weights))

    def wigner(self, q, p):
        """W(q, p) by exact inversion of the transform."""
        M = self._check()
        Minv = np.linalg.inv(M)
        q = np.asarray(q, dtype=float)
        p = np.asarray(p, dtype=float)
        h = self.hbar
        pref = 1.0 / ((2 * math.pi * h) ** 2) * 2 * math.pi / math.sqrt(np.linalg.det(M))
        out = np.zeros(np.broadcast(q, p).shape, dtype=complex)
        for lw, (lq, lp) in zip(self.log_weights, self.lin):
            kq = lq + 1j * p / h  # Q pairs with p
            kp = lp + 1j * q / h
            e = 0.5 * (Minv[0, 0] * kq * kq + 2 * Minv[0, 1] * kq * kp + Minv[1, 1] * kp * kp)
            out = out + np.exp(lw + e)
        return (pref * out).real

    def density(self, x):
        """Position density: the p-marginal of the Wigner function."""
        M = self._check()
        mpp = M[1, 1]
        x = np.asarray(x, dtype=float)
        h = self.hbar
        out = np.zeros(x.shape, dtype=complex)
        for lw, (_, lp) in zip(self.log_weights, self.lin):
            k = lp + 1j * x / h
            out = out + np.exp(lw + k * k / (2 * mpp))
        return (out / math.sqrt(2 * math.pi * h * h * mpp)).real

    def position_moments(self) -> tuple[float, float]:
        """(mean, variance) of the position density."""
        M = self._check()
        h = self.hbar
        first = sum(w * 1j * h * lp for w, (_, lp) in zip(self.weights, self.lin))
        second = sum(-h * h * w * (lp * lp - M[1, 1]) for w, (_, lp) in zip(self.weights, self.lin))
        mean = float(np.real(first))
        return mean, float(np.real(second)) - mean * mean

    def propagate(self, T: np.ndarray, A_over_h2: np.ndarray) -> "WignerTransform":
        M = T.T @ self.M @ T + A_over_h2
        lin = [tuple(T.T @ np.array(l, dtype=complex)) for l in self.lin]
        return WignerTransform.from_matrix(M, self.log_weights, lin, self.hbar)


def initial_transform(state: InitialState) -> WignerTransform:
    s2, h = state.sigma**2, state.hbar
    c_qq = 1.0 / (8 * s2)
    if state.is_thermal:
        c_qq += 1.0 / (2 * state.lambda_bar**2)
    c_pp = s2 / (2 * h * h)
    if not state.is_pair:
        return WignerTransform(c_qq, c_pp, 0.0, (0.0,), ((0.0, -1j * state.x0 / h),), h)
    N = state.pair_prefactor
    half_d = state.d / 2
    shift = state.d / (4 * s2)
    direct = math.log(N / 2)
    cross = direct - state.d**2 / (8 * s2)
    lin = ((0.0, -1j * half_d / h), (0.0, 1j * half_d / h), (shift, 0.0), (-shift, 0.0))
    return WignerTransform(c_qq, c_pp, 0.0, (direct, direct, cross, cross), lin, h)


def initial_wigner(state: InitialState) -> tuple[Callable, WignerTransform]:
    tr = initial_transform(state)
    return tr.wigner, tr


def gaussian_wigner_direct(state: InitialState, q, p):
    """Minimum-uncertainty Wigner function written out, for cross-checks."""
    if state.kind is not StateKind.GAUSSIAN:
        raise UnsupportedStateError("explicit form is written for the pure Gaussian only")
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    h, s2 = state.hbar, state.sigma**2
    return np.exp(-(q - state.x0) ** 2 / (2 * s2) - 2 * s2 * p * p / h**2) / (math.pi * h)


# --------------------------------------------------------------------------
# propagation

def _check_hbar(state: InitialState, config: PhysicalConfig):
    if not math.isclose(state.hbar, config.hbar, rel_tol=1e-12):
        raise DomainError("state and configuration disagree on hbar")


def _flow(config: PhysicalConfig, t: float) -> tuple[np.ndarray, np.ndarray]:
    """(T, A/hbar^2) of the propagator at time t."""
    m, h = config.m, config.hbar
    if t == 0:
        return np.eye(2), np.zeros((2, 2))
    if math.isinf(t):
        if config.is_free:
            raise DomainError("t = inf is only meaningful for a bound oscillator")
        eq = equilibrium_moments(config)
        return np.zeros((2, 2)), np.diag([m * m * eq.v_sq, eq.x_sq]) / h**2
    ge = green(config, t)
    T = np.array([[m * ge.g1, ge.g], [m * m * ge.g2, m * ge.g1]])
    cov = covariance(config, t)
    return T, cov.matrix / h**2


def evolved_transform(state: InitialState, config: PhysicalConfig, t: float) -> WignerTransform:
    if t < 0:
        raise DomainError("evolution is defined for t >= 0")
    _check_hbar(state, config)
    T, A = _flow(config, t)
    return initial_transform(state).propagate(T, A)


def evolve_wigner(state: InitialState, config: PhysicalConfig, t: float, q, p,
                  method: str = "closed"):
    """W(q, p; t).  ``method="quadrature"`` integrates the (r, s) representation
    numerically at scalar (q, p) as an independent check."""
    tr = evolved_transform(state, config, t)
    if method == "closed":
        return tr.wigner(q, p)
    if method != "quadrature":
        raise ValueError(f"unknown method {method!r}")
    if t == 0:
        return initial_transform(state).wigner(q, p)
    T, A = _flow(config, t)
    W0 = initial_transform(state)
    h = config.hbar
    q, p = float(q), float(p)
    Mt = tr.M
    # integrand decays like exp(-v^T Mt v / 2); box at 12 standard deviations
    evals, evecs = np.linalg.eigh(Mt)
    half = 12 / math.sqrt(evals.min())
    lin_max = max(abs(complex(l[0]).real) + abs(complex(l[1]).real) for l in tr.lin)
    half += lin_max / evals.min()

    def integrand(s, r):
        Q, P = T @ np.array([r, s])
        val = W0(Q, P) * np.exp(1j * (r * p + s * q) / h - 0.5 * np.array([r, s]) @ A @ np.array([r, s]))
        return float(np.real(val))

    val = integrate.dblquad(integrand, -half, half, -half, half, epsabs=1e-11, epsrel=1e-9)[0]
    return val / (2 * math.pi * h) ** 2


def transition_probability(config: PhysicalConfig, t: float, q, p, q0, p0):
    """Gaussian kernel P(q, p; q', p'; t) of the exact propagator."""
    if not t > 0:
        raise DomainError("the transition probability is defined for t > 0")
    m = config.m
    cov = covariance(config, t)
    det = cov.det
    if not det > 0:
        raise ConsistencyError(f"det A = {det:.3e} <= 0 at t = {t}")
    ge = green(config, t)
    mean_q = m * ge.g1 * q0 + ge.g * p0
    mean_p = m * m * ge.g2 * q0 + m * ge.g1 * p0
    Rp = np.asarray(p, dtype=float) - mean_p
    Rq = np.asarray(q, dtype=float) - mean_q
    # R = (p, q); A^{-1} = [[a_qq, -a_pq], [-a_pq, a_pp]] / det
    quad = (cov.a_qq * Rp * Rp - 2 * cov.a_pq * Rp * Rq + cov.a_pp * Rq * Rq) / det
    return np.exp(-0.5 * quad) / (2 * math.pi * math.sqrt(det))


def mean_trajectory(config: PhysicalConfig, t: float, q0: float, p0: float) -> tuple[float, float]:
    ge = green(config, t)
    m = config.m
    return m * ge.g1 * q0 + ge.g * p0, m * m * ge.g2 * q0 + m * ge.g1 * p0


# --------------------------------------------------------------------------
# densities

@dataclass(frozen=True)
class SpatialDensity:
    pdf: Callable
    mean: float
    variance: float
    normalization: float
    components: dict = field(default_factory=dict)

    def __call__(self, x):
        return self.pdf(x)


def _packet_variance(state: InitialState, config: PhysicalConfig, ge: GreenEval, xx: float) -> float:
    """m^2 Gdot^2 sigma^2 + hbar^2 G^2/4 sigma^2 + <X^2> (+ m kT G^2 if thermal)."""
    m, h, s2 = config.m, state.hbar, state.sigma**2
    var = m * m * ge.g1**2 * s2 + h * h * ge.g**2 / (4 * s2) + xx
    if state.is_thermal:
        var += h * h * ge.g**2 / state.lambda_bar**2
    return var


def _moments_at(config: PhysicalConfig, t: float) -> tuple[GreenEval, float]:
    if t == 0:
        return GreenEval(0.0, 0.0, 1.0 / config.m, 0.0, None), 0.0
    if not config.is_free:
        raise UnsupportedStateError("wave-packet densities are implemented for the free particle")
    return green(config, t), x_moments(config, t).xx


def _grid_norm(pdf, centre_abs: float, sd: float, k: float) -> float:
    half = centre_abs + 14 * sd
    dx = min(sd / 12, (0.3 / k) if k > 0 else math.inf)
    n = int(2 * half / dx) | 1
    xs = np.linspace(-half, half, max(n, 2001))
    return float(integrate.trapezoid(pdf(xs), xs))


def spatial_density(state: InitialState, config: PhysicalConfig, t: float) -> SpatialDensity:
    if t < 0:
        raise DomainError("spatial_density is defined for t >= 0")
    _check_hbar(state, config)
    ge, xx = _moments_at(config, t)
    V = _packet_variance(state, config, ge, xx)
    m = config.m
    drift = m * ge.g1
    if not state.is_pair:
        mu = drift * state.x0

        def pdf(x):
            x = np.asarray(x, dtype=float)
            return np.exp(-(x - mu) ** 2 / (2 * V)) / math.sqrt(2 * math.pi * V)

        return SpatialDensity(pdf, mu, V, _grid_norm(pdf, abs(mu), math.sqrt(V), 0.0),
                              {"variance": V})
    N, ov = state.pair_prefactor, state.overlap
    h, s2, d = state.hbar, state.sigma**2, state.d
    a = drift * d / 2
    k = h * ge.g * d / (4 * s2 * V)
    # overlap times its growth factor; the exponent never exceeds 0 since V >= hbar^2 G^2/4 sigma^2
    fringe_amp = 2 * math.exp(-d * d / (8 * s2) * (1 - h * h * ge.g**2 / (4 * s2 * V)))

    def pdf(x):
        x = np.asarray(x, dtype=float)
        g = lambda c: np.exp(-(x - c) ** 2 / (2 * V))
        fringe = fringe_amp * np.exp(-x * x / (2 * V)) * np.cos(k * x)
        return N / (2 * math.sqrt(2 * math.pi * V)) * (g(a) + g(-a) + fringe)

    var = N * (V + a * a + ov * (V - k * k * V * V))
    return SpatialDensity(pdf, 0.0, var, _grid_norm(pdf, abs(a), math.sqrt(V), k),
                          {"packet_variance": V, "centre": a, "fringe_wavenumber": k})


def variance_report(state: InitialState, config: PhysicalConfig, t: float) -> float:
    """Position variance of a single packet (for pairs, of each packet)."""
    _check_hbar(state, config)
    ge, xx = _moments_at(config, t)
    return _packet_variance(state, config, ge, xx)


# --------------------------------------------------------------------------
# attenuation and decoherence time

class FitLaw(str, Enum):
    EXP_T3 = "ExpT3"
    GAUSS_T2 = "GaussT2"


@dataclass(frozen=True)
class AttenuationResult:
    t: float
    a: float
    tau_d: float | None = None
    fit_law: FitLaw | None = None


def _log_attenuation(state: InitialState, config: PhysicalConfig, t: float) -> float:
    """-log a(t) = <X^2>_eff d^2 / (8 sigma^2 <Dx^2>)."""
    if not state.is_pair:
        raise UnsupportedStateError("attenuation is defined for wave-packet pairs")
    if t == 0:
        return 0.0
    ge, xx = _moments_at(config, t)
    V = _packet_variance(state, config, ge, xx)
    x_eff = xx + (state.hbar**2 * ge.g**2 / state.lambda_bar**2 if state.is_thermal else 0.0)
    return x_eff * state.d**2 / (8 * state.sigma**2 * V)


def attenuation(state: InitialState, config: PhysicalConfig, t: float,
                fit_law: FitLaw | str | None = None) -> AttenuationResult:
    if t < 0:
        raise DomainError("attenuation is defined for t >= 0")
    _check_hbar(state, config)
    a = math.exp(-_log_attenuation(state, config, t))
    if fit_law is None:
        return AttenuationResult(float(t), a)
    tau, law = fit_decoherence_time(state, config, fit_law)
    return AttenuationResult(float(t), a, tau, law)


def default_fit_window(state: InitialState, config: PhysicalConfig, law: FitLaw) -> tuple[float, float]:
    tm = config.m / config.zeta
    if law is FitLaw.EXP_T3:
        return 1e-3 * tm, 1e-2 * tm
    vbar = math.sqrt(config.kT / config.m)
    t_max = 1e-2 * min(tm, state.sigma / vbar, 2 * config.m * state.sigma**2 / config.hbar)
    return t_max / 10, t_max


def fit_decoherence_time(state: InitialState, config: PhysicalConfig,
                         law: FitLaw | str | None = None,
                         window: tuple[float, float] | None = None, n: int = 25
                         ) -> tuple[float, FitLaw]:
    """Least-squares tau_d from -log a = t/tau_d (ExpT3) or (t/tau_d)^2 (GaussT2)."""
    if not state.is_pair:
        raise UnsupportedStateError("decoherence times are defined for wave-packet pairs")
    if law is None:
        law = FitLaw.GAUSS_T2 if state.is_thermal else FitLaw.EXP_T3
    law = FitLaw(law)
    if law is FitLaw.EXP_T3:
        if state.is_thermal:
            raise FitWindowError("the t/tau_d law applies to a cold packet in a hot bath")
        bound = 1e-2 * math.sqrt(config.hbar / config.zeta)
        if state.sigma > bound:
            raise FitWindowError(f"the t/tau_d law needs sigma <= {bound:.3e} (negligible slit width)")
    elif not state.is_thermal:
        raise FitWindowError("the (t/tau_d)^2 law applies to a packet at the bath temperature")
    lo, hi = default_fit_window(state, config, law) if window is None else window
    if not 0 < lo < hi:
        raise FitWindowError("fit window must satisfy 0 < t_lo < t_hi")
    if hi > 0.1 * config.m / config.zeta:
        raise FitWindowError(
            f"fit window reaches t = {hi:.3g}, not short compared with m/zeta = {config.m / config.zeta:.3g}")
    ts = np.geomspace(lo, hi, n)
    y = np.array([_log_attenuation(state, config, float(t)) for t in ts])
    x = ts if law is FitLaw.EXP_T3 else ts * ts
    slope = float(np.dot(x, y) / np.dot(x, x))
    if not slope > 0:
        raise FitWindowError("attenuation did not decay inside the fit window")
    tau = 1.0 / slope if law is FitLaw.EXP_T3 else 1.0 / math.sqrt(slope)
    return tau, law


# --------------------------------------------------------------------------
# equilibrium and the successive-measurement reference

def equilibrium_wigner(config: PhysicalConfig, q, p):
    eq = equilibrium_moments(config)
    m = config.m
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    norm = 1.0 / (2 * math.pi * m * math.sqrt(eq.x_sq * eq.v_sq))
    return norm * np.exp(-p * p / (2 * m * m * eq.v_sq) - q * q / (2 * eq.x_sq))


def commutator_curve(config: PhysicalConfig, t: float) -> float:
    """C(t) = (2 hbar/pi) int Im alpha sin(wt) dw, with [x(t), x(0)] = -i C(t)."""
    if t == 0:
        return 0.0
    pref = 2 * config.hbar / math.pi
    y = lambda w: pref * float(omega_im_response(config, w))
    scales = [config.zeta / config.m] + ([] if config.is_ohmic else [1 / config.tau])
    if not config.is_free:
        scales.append(math.sqrt(config.K / config.m))
    return spectral_integral(SpectralIntegrand(lambda w: y(w) * math.sin(w * t) / w, None, None,
                                               lambda w: -y(w) / w, t),
                             None, scales, "commutator", rtol=1e-10, atol=1e-15)


@dataclass(frozen=True)
class ExactReference:
    t: float
    s: float
    commutator: float
    w_sq: float
    a_exact: float | None
    mean: float

    def pdf(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x - self.mean) ** 2 / (2 * self.w_sq)) / math.sqrt(2 * math.pi * self.w_sq)


def exact_reference(state: InitialState, config: PhysicalConfig, t: float) -> ExactReference:
    """Successive-measurement spreading width and attenuation."""
    if t < 0:
        raise DomainError("exact_reference is defined for t >= 0")
    _check_hbar(state, config)
    s = msd(config, t).s if t > 0 else 0.0
    C = commutator_curve(config, t)
    s2 = state.sigma**2
    w_sq = s2 + s + C * C / (4 * s2)
    a = math.exp(-s * state.d**2 / (8 * s2 * w_sq)) if state.is_pair else None
    return ExactReference(float(t), s, C, w_sq, a, state.x0)
