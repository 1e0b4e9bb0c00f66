"""Frequency-domain quadrature helpers.

Every spectral integral in the package has the shape

    int_0^Wc  f(w) dw,   f(w) = n(w) - c(w) cos(w t) - s(w) sin(w t)

with n, c, s smooth and non-oscillatory away from the origin.  Near w = 0
the combination is evaluated directly (callers supply ``direct`` written to
avoid cancellation); beyond a split point the cosine and sine parts go to
QUADPACK's Fourier routines (QAWO on finite panels, QAWF on [a, inf)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import integrate

from .errors import QuadratureError

RTOL = 1e-9
_SLACK = 50.0  # tolerated ratio between QUADPACK's error estimate and the request


def omega_coth(w, kT: float, hbar: float):
    """w coth(hbar w / 2kT), the symmetrised bath weight (w >= 0).

    Zero temperature gives |w|.  Below x = hbar w/2kT = 1e-4 the Laurent form
    (2kT/hbar)(1 + x^2/3) is used.
    """
    w = np.asarray(w, dtype=float)
    if kT == 0:
        return np.abs(w)
    x = hbar * w / (2 * kT)
    small = np.abs(x) < 1e-4
    with np.errstate(divide="ignore", invalid="ignore"):
        big = np.where(small, 1.0, x / np.tanh(np.where(small, 1.0, x)))
    out = np.where(small, 1 + x * x / 3, big)
    return (2 * kT / hbar) * out


def coth_over_w(w, kT: float, hbar: float):
    """coth(hbar w/2kT)/w, kept finite-by-formula away from w = 0."""
    w = np.asarray(w, dtype=float)
    return omega_coth(w, kT, hbar) / (w * w)


@dataclass
class QuadLog:
    """Accumulates QUADPACK error estimates across panels of one integral."""

    what: str
    rtol: float = RTOL
    atol: float = 0.0
    value: float = 0.0
    error: float = 0.0
    calls: int = field(default=0)

    def add(self, val: float, err: float):
        self.value += val
        self.error += abs(err)
        self.calls += 1

    def check(self) -> float:
        requested = max(self.rtol * abs(self.value), self.atol)
        if not math.isfinite(self.value) or self.error > _SLACK * requested:
            raise QuadratureError(self.what, self.error, requested)
        return self.value


def quad(f, a, b, log: QuadLog, sign: float = 1.0, **kw):
    kw.setdefault("limit", 400)
    kw.setdefault("epsrel", log.rtol * 0.1)
    kw.setdefault("epsabs", 0.0 if log.atol == 0 else log.atol * 0.01)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, err = integrate.quad(f, a, b, **kw)[:2]
    log.add(sign * val, err)
    return val


def _panels(a: float, b: float, scales: Sequence[float]) -> list[tuple[float, float]]:
    """Break [a, b] at the given scales plus a geometric ladder."""
    pts = {a, b}
    for s in scales:
        if a < s < b:
            pts.add(s)
    lo = max(a, min([s for s in scales if s > 0] + [b]) * 1e-3)
    if b > 0 and math.isfinite(b) and b / max(lo, 1e-300) > 10:
        for p in np.geomspace(max(lo, 1e-300), b, int(math.log10(b / lo) * 3) + 2)[1:-1]:
            pts.add(float(p))
    pts = sorted(p for p in pts if a <= p <= b)
    return list(zip(pts[:-1], pts[1:]))


@dataclass(frozen=True)
class SpectralIntegrand:
    """f(w) = direct(w) on [0, split]; n - c cos(wt) - s sin(wt) on the tail."""

    direct: Callable[[float], float]
    n: Callable[[float], float] | None
    c: Callable[[float], float] | None
    s: Callable[[float], float] | None
    t: float


def spectral_integral(
    integrand: SpectralIntegrand,
    upper: float | None,
    scales: Sequence[float],
    what: str,
    rtol: float = RTOL,
    atol: float = 0.0,
    split: float | None = None,
) -> float:
    """Integrate ``integrand`` over [0, upper] (upper None means infinity).

    ``scales`` are characteristic frequencies used as panel breaks.  ``split``
    defaults to 40/t, below which the oscillation is resolved directly.
    """
    log = QuadLog(what, rtol, atol)
    t = integrand.t
    top = math.inf if upper is None else float(upper)
    if split is None:
        split = 40.0 / t if t > 0 else math.inf
    near_end = min(split, top)
    for lo, hi in _panels(0.0, near_end, list(scales) + ([2 * math.pi / t] if t > 0 else [])):
        quad(integrand.direct, lo, hi, log)
    if top > split:
        # non-oscillatory part on geometric panels
        if integrand.n is not None:
            finite = [s for s in scales if split < s and math.isfinite(s)]
            edge = min(top, 50 * max(finite)) if finite else min(top, 50 * split)
            for lo, hi in _panels(split, edge, [split] + finite):
                quad(integrand.n, lo, hi, log)
            if math.isinf(top):
                quad(integrand.n, edge, math.inf, log)
            elif top > edge:
                for lo, hi in _panels(edge, top, [edge]):
                    quad(integrand.n, lo, hi, log)
        for fn, kind in ((integrand.c, "cos"), (integrand.s, "sin")):
            if fn is None:
                continue
            if math.isinf(top):
                quad(fn, split, math.inf, log, sign=-1.0, weight=kind, wvar=t)
            else:
                for lo, hi in _panels(split, top, [split]):
                    quad(fn, lo, hi, log, sign=-1.0, weight=kind, wvar=t)
    return log.check()


def plain_integral(fn, upper: float | None, scales: Sequence[float], what: str,
                   rtol: float = RTOL, atol: float = 0.0) -> float:
    """Non-oscillatory integral of fn over [0, upper] with panel breaks at ``scales``."""
    log = QuadLog(what, rtol, atol)
    finite_scales = [s for s in scales if s > 0 and math.isfinite(s)]
    edge = 50 * max(finite_scales) if finite_scales else 1.0
    if upper is not None:
        edge = min(edge, upper)
    for lo, hi in _panels(0.0, edge, finite_scales):
        quad(fn, lo, hi, log)
    if upper is None:
        quad(fn, edge, math.inf, log)
    elif upper > edge:
        for lo, hi in _panels(edge, upper, [edge]):
            quad(fn, lo, hi, log)
    return log.check()
