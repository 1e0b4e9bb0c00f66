"""The function I(x) that governs the zero-temperature Ohmic displacement.

    I(x) = log x + gamma - (1/2) [exp(-x) Ei(x) + exp(x) Ei(-x)]

together with its first four derivatives.  Writing P = exp(-x) Ei(x) and
M = exp(x) Ei(-x), the derivatives close on themselves:

    I'    = (P - M) / 2
    I''   = -(P + M) / 2  = I - log x - gamma
    I'''  = I' - 1/x
    I'''' = I'' + 1/x**2

Below ``CROSSOVER`` the power series for Ei is summed in decimal arithmetic.
In double precision the series loses about x/ln(10) digits to cancellation
between exp(x) Ei(-x) and exp(-x) Ei(x), which is why a plain float series
is useless past x ~ 10.  Above the crossover the asymptotic expansion is
truncated at its smallest term.
"""
from __future__ import annotations

import math
from decimal import Decimal, localcontext

import numpy as np

EULER_GAMMA = 0.5772156649015329
_EULER_DEC = Decimal(
    "0.57721566490153286060651209008240243104215933593992359880576723488486772677766467"
)

#: switch from the decimal series to the asymptotic expansion
CROSSOVER = 30.0
_PREC = 80


def _series_decimal(x: float) -> tuple[Decimal, Decimal, Decimal]:
    """(P + M, P - M, I) from the convergent Ei series, all in decimal.

    I itself is returned because log x + gamma - (P + M)/2 cancels to O(x^2)
    for small x and must not be formed in floats.
    """
    with localcontext() as ctx:
        ctx.prec = _PREC
        X = Decimal(repr(float(x)))
        lead = X.ln() + _EULER_DEC
        # S(+x) and S(-x) with S(y) = sum_{n>=1} y^n / (n n!)
        s_pos = Decimal(0)
        s_neg = Decimal(0)
        term = Decimal(1)  # x^n / n!
        eps = Decimal(10) ** (-_PREC + 5)
        n = 0
        while True:
            n += 1
            term = term * X / n
            contrib = term / n
            s_pos += contrib
            s_neg += contrib if n % 2 == 0 else -contrib
            if n > X and contrib < eps * s_pos:
                break
        ep, em = X.exp(), (-X).exp()
        P = em * (lead + s_pos)
        M = ep * (lead + s_neg)
        return P + M, P - M, lead - (P + M) / 2


def _series_pm(x: float) -> tuple[float, float]:
    plus, minus, _ = _series_decimal(x)
    return float(plus), float(minus)


def _asymptotic_pm(x: float) -> tuple[float, float]:
    """(P + M, P - M) from the asymptotic series, cut at the smallest term."""
    # P ~ (1/x) sum n!/x^n and M ~ -(1/x) sum (-1)^n n!/x^n
    total_plus = 0.0  # odd n only
    total_minus = 0.0  # even n only
    term = 1.0 / x  # n! / x^(n+1) at n = 0
    n = 0
    prev = math.inf
    while abs(term) < prev:
        if n % 2:
            total_plus += 2 * term
        else:
            total_minus += 2 * term
        prev = abs(term)
        n += 1
        term *= n / x
        if term < 1e-18 * (total_minus or 1.0):
            break
    return total_plus, total_minus


def _pm(x: float) -> tuple[float, float]:
    return _series_pm(x) if x < CROSSOVER else _asymptotic_pm(x)


def _vectorised(scalar_fn):
    def wrapper(x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0):
            raise ValueError("I(x) and its derivatives are defined for x >= 0")
        if arr.ndim == 0:
            return scalar_fn(float(arr))
        return np.array([scalar_fn(float(v)) for v in arr.ravel()]).reshape(arr.shape)

    wrapper.__name__ = scalar_fn.__name__
    wrapper.__doc__ = scalar_fn.__doc__
    return wrapper


@_vectorised
def special_I(x: float) -> float:
    """I(x); I(0) = 0."""
    if x == 0:
        return 0.0
    if x < 1e-8:
        # I ~ (x^2/2)(3/2 - gamma - log x)
        return 0.5 * x * x * (1.5 - EULER_GAMMA - math.log(x))
    if x < CROSSOVER:
        return float(_series_decimal(x)[2])
    plus, _ = _asymptotic_pm(x)
    return math.log(x) + EULER_GAMMA - 0.5 * plus


@_vectorised
def special_I1(x: float) -> float:
    """I'(x); vanishes at the origin like x (1 - gamma - log x)."""
    if x == 0:
        return 0.0
    _, minus = _pm(x)
    return 0.5 * minus


@_vectorised
def special_I2(x: float) -> float:
    """I''(x); logarithmically infinite at x = 0."""
    if x == 0:
        return math.inf
    plus, _ = _pm(x)
    return -0.5 * plus


@_vectorised
def special_I3(x: float) -> float:
    if x == 0:
        return -math.inf
    _, minus = _pm(x)
    return 0.5 * minus - 1.0 / x


@_vectorised
def special_I4(x: float) -> float:
    if x == 0:
        return math.inf
    plus, _ = _pm(x)
    return -0.5 * plus + 1.0 / (x * x)


def asymptotic_I(x: float) -> float:
    """Asymptotic branch on its own, for crossover diagnostics."""
    plus, _ = _asymptotic_pm(float(x))
    return math.log(x) + EULER_GAMMA - 0.5 * plus


def series_I(x: float) -> float:
    """Series branch on its own, for crossover diagnostics."""
    plus, _ = _series_pm(float(x))
    return math.log(x) + EULER_GAMMA - 0.5 * plus
