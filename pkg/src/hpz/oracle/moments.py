"""Second-moment equations of the master equation, integrated directly."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from ..errors import DomainError, StabilityError, UnsupportedBranchError
from ..fluctuations import exact_diffusion_coefficients, x_moments
from ..kernel import diffusion_coefficients, green, local_coefficients
from ..model import PhysicalConfig


@dataclass(frozen=True)
class MomentCurves:
    """<x^2>, <xp+px> and <p^2> sampled at ``t``."""

    t: np.ndarray
    x2: np.ndarray
    xp: np.ndarray
    p2: np.ndarray


ROUTES = ("exact", "force")


def master_coefficients(config: PhysicalConfig, t: float, route: str = "exact"):
    """(2 Gamma, Omega^2, hbar Gamma f, hbar m Gamma h) for the master equation.

    ``route="exact"`` uses f, h that reproduce the exact moments; ``"force"``
    uses the direct force-correlation identification.  They agree for the
    Ohmic bath only.
    """
    if route not in ROUTES:
        raise ValueError(f"route must be one of {ROUTES}")
    # Gamma ~ t and h ~ 1/t near the origin; the products stay finite, so the
    # right-hand side at t = 0 is taken as its limit from a tiny offset
    te = max(t, 1e-9 * config.tau)
    lc = local_coefficients(config, te)
    dc = exact_diffusion_coefficients(config, te) if route == "exact" else diffusion_coefficients(config, te)
    return lc.two_gamma, float(lc.omega_sq), dc.d_qp, dc.d_pp


def moment_rhs(config: PhysicalConfig, t: float, y, route: str = "exact") -> np.ndarray:
    x2, xp, p2 = y
    m = config.m
    two_gamma, om2, d_qp, d_pp = master_coefficients(config, t, route)
    return np.array([
        xp / m,
        2 * p2 / m - 2 * m * om2 * x2 - two_gamma * xp + 2 * d_qp,
        -m * om2 * xp - 2 * two_gamma * p2 + 2 * d_pp,
    ])


def integrate_moment_odes(config: PhysicalConfig, initial, t_final: float,
                          t_eval=None, rtol: float = 1e-9, route: str = "exact") -> MomentCurves:
    """Integrate the three coupled moment equations from t = 0.

    ``initial`` is (<x^2>, <xp+px>, <p^2>) at t = 0.  Only the single relaxation
    time bath qualifies: the Ohmic Omega^2(t) carries a delta at the origin.
    """
    if config.is_ohmic:
        raise UnsupportedBranchError("moment ODEs need the finite coefficients of the SRT bath")
    if t_final < 0:
        raise DomainError("t_final must be non-negative")
    y0 = np.asarray(initial, dtype=float)
    if t_eval is None:
        t_eval = np.linspace(0.0, t_final, 101)
    t_eval = np.asarray(t_eval, dtype=float)
    if t_final == 0:
        return MomentCurves(np.zeros(1), y0[:1], y0[1:2], y0[2:])
    scale = np.abs(y0).max() or 1.0
    sol = solve_ivp(lambda t, y: moment_rhs(config, t, y, route), (0.0, t_final), y0, method="DOP853",
                    t_eval=t_eval, rtol=rtol, atol=rtol * 1e-3 * scale,
                    max_step=config.tau * 5)
    if sol.status != 0:
        raise StabilityError(
            f"moment ODE integration failed ({sol.message}); very short relaxation times make "
            "the system stiff, so move tau away from zero or shorten the span")
    return MomentCurves(sol.t, sol.y[0], sol.y[1], sol.y[2])


def fluctuation_moment_curves(config: PhysicalConfig, t_final: float, t_eval=None,
                              route: str = "exact") -> MomentCurves:
    """Moment ODEs started from rest: the solution is the X-moment set
    (with xp = m <XXdot+XdotX> and p2 = m^2 <Xdot^2>)."""
    return integrate_moment_odes(config, (0.0, 0.0, 0.0), t_final, t_eval, route=route)


def gaussian_moments_closed(config: PhysicalConfig, sigma: float, t: float) -> tuple[float, float, float]:
    """(<x^2>, <xp+px>, <p^2>) of a centred minimum-uncertainty packet propagated exactly."""
    m, h = config.m, config.hbar
    q2, p2 = sigma**2, h * h / (4 * sigma**2)
    if t == 0:
        return q2, 0.0, p2
    ge = green(config, t)
    xm = x_moments(config, t)
    # x = m Gdot q0 + G p0 + X,  p = m (m Gddot q0 + m Gdot p0 + Xdot)
    a, b = m * ge.g1, ge.g
    c, d = m * m * ge.g2, m * ge.g1
    x2 = a * a * q2 + b * b * p2 + xm.xx
    xp = 2 * (a * c * q2 + b * d * p2) + m * xm.xv_sym
    pp = c * c * q2 + d * d * p2 + m * m * xm.vv
    return x2, xp, pp


def diffusion_from_moments(config: PhysicalConfig, t: float, rel_step: float = 1e-3
                           ) -> tuple[float, float]:
    """(<XF+FX>, <Xdot F + F Xdot>) recovered from the X moments and their derivatives.

    Uses the moment identities of the local Langevin equation with five-point
    central differences in time.
    """
    if t <= 0:
        raise DomainError("t > 0 is required")
    step = rel_step * t
    nodes = [x_moments(config, t + k * step) for k in (-2, -1, 1, 2)]

    def deriv(attr):
        f = [getattr(n, attr) for n in nodes]
        return (f[0] - 8 * f[1] + 8 * f[2] - f[3]) / (12 * step)

    mid = x_moments(config, t)
    lc = local_coefficients(config, t)
    om2 = float(lc.omega_sq)
    m = config.m
    xf = m * (deriv("xv_sym") - 2 * mid.vv + 2 * om2 * mid.xx + lc.two_gamma * mid.xv_sym)
    vf = m * (deriv("vv") + om2 * mid.xv_sym + 2 * lc.two_gamma * mid.vv)
    return xf, vf
