"""Discrete-bath Monte Carlo realisation of the independent-oscillator model.

The bath is a comb of J oscillators with coupling strengths chosen so that
sum_j m_j w_j^2 cos(w_j t) reproduces the memory kernel.  Initial bath
coordinates are drawn from their (Gaussian) Wigner functions, which makes the
force F(t) = sum_j a_j cos(w_j t) + b_j sin(w_j t) a Gaussian process with the
symmetrised correlation of the continuum bath up to the comb resolution.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, RecurrenceError, UnsupportedStateError
from ..evolution import InitialState, variance_report
from ..fluctuations import x_moments
from ..kernel import green_modes
from ..model import PhysicalConfig, Regime, re_memory_transform
from ..quadrature import omega_coth
from .report import OracleReport

CHUNK = 10_000


@dataclass(frozen=True)
class DiscreteBath:
    omegas: np.ndarray
    kappas: np.ndarray  # m_j w_j^2
    cutoff: float

    @property
    def count(self) -> int:
        return len(self.omegas)

    @property
    def masses(self) -> np.ndarray:
        return self.kappas / self.omegas**2

    @property
    def d_omega(self) -> float:
        return self.cutoff / self.count

    @property
    def recurrence_time(self) -> float:
        return 2 * math.pi / self.d_omega

    def memory(self, t):
        t = np.asarray(t, dtype=float)
        return np.cos(np.multiply.outer(t, self.omegas)) @ self.kappas


def build_discrete_bath(config: PhysicalConfig, J: int, cutoff: float) -> DiscreteBath:
    if J < 100:
        raise DomainError("a discrete bath needs J >= 100 modes")
    if not cutoff > 0:
        raise DomainError("the bath cutoff must be positive")
    dw = cutoff / J
    w = (np.arange(1, J + 1) - 0.5) * dw
    kappa = (2 / math.pi) * re_memory_transform(config, w) * dw
    return DiscreteBath(w, np.asarray(kappa, dtype=float), float(cutoff))


def _mode_variance(config: PhysicalConfig, bath: DiscreteBath) -> np.ndarray:
    """Variance of a_j = kappa_j q_j(0) and of b_j = w_j p_j(0)."""
    if config.regime is Regime.HIGH:
        return bath.kappas * config.kT
    return bath.kappas * 0.5 * config.hbar * omega_coth(bath.omegas, config.kT, config.hbar)


def _response_tables(config: PhysicalConfig, bath: DiscreteBath, t: float, dt: float):
    """U_j, V_j (position) and their time derivatives by trapezoidal convolution."""
    modes = green_modes(config)
    n = max(2, int(math.ceil(t / dt)))
    s = np.linspace(0.0, t, n + 1)
    wts = np.full(n + 1, t / n)
    wts[0] = wts[-1] = 0.5 * t / n
    G = modes.derivative(0, t - s) * wts
    Gd = modes.derivative(1, t - s) * wts
    phase = np.multiply.outer(s, bath.omegas)
    c, sn = np.cos(phase), np.sin(phase)
    return G @ c, G @ sn, Gd @ c, Gd @ sn


def _pairwise_sum(parts: list[np.ndarray]) -> np.ndarray:
    while len(parts) > 1:
        nxt = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def _chunk_sums(seed: int, index: int, size: int, var: np.ndarray, tables, state: InitialState,
                config: PhysicalConfig, t_grid) -> np.ndarray:
    """Per-chunk power sums: for each t, [X, X^2, x, x^2, x^3, x^4]."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, index]))
    sd = np.sqrt(var)
    a = rng.standard_normal((size, len(var))) * sd
    b = rng.standard_normal((size, len(var))) * sd
    m, h = config.m, config.hbar
    p_var = h * h / (4 * state.sigma**2)
    if state.is_thermal:
        p_var += m * config.kT
    q0 = state.x0 + state.sigma * rng.standard_normal(size)
    p0 = math.sqrt(p_var) * rng.standard_normal(size)
    modes = green_modes(config)
    out = np.empty((len(t_grid), 6))
    for i, (t, (U, V, _, _)) in enumerate(zip(t_grid, tables)):
        X = a @ U + b @ V
        x = m * float(modes.derivative(1, t)) * q0 + float(modes.derivative(0, t)) * p0 + X
        out[i] = [X.sum(), (X * X).sum(), x.sum(), (x * x).sum(), (x**3).sum(), (x**4).sum()]
    return out


def _estimates(sums: np.ndarray, n: int) -> dict[str, np.ndarray]:
    mX, mX2 = sums[:, 0] / n, sums[:, 1] / n
    # <X^2> is estimated by the raw second moment (mean of X is zero by construction)
    mx, mx2, mx3, mx4 = (sums[:, k] / n for k in (2, 3, 4, 5))
    var = mx2 - mx * mx
    c4 = mx4 - 4 * mx * mx3 + 6 * mx * mx * mx2 - 3 * mx**4
    return {
        "X2": mX2,
        "X2_se": np.sqrt(np.maximum(2 * mX2 * mX2, 0.0) / n),
        "mean": mx,
        "mean_se": np.sqrt(var / n),
        "var": var * n / (n - 1),
        "var_se": np.sqrt(np.maximum(c4 - var * var, 0.0) / n),
        "X_mean": mX,
    }


def mc_estimate(config: PhysicalConfig, state: InitialState, t_grid, samples: int = 100_000,
                seed: int = 0, J: int = 400, cutoff: float = 400.0, threads: int = 1,
                dt: float | None = None) -> OracleReport:
    """Sample trajectories and compare moments with the closed forms."""
    if state.is_pair:
        raise UnsupportedStateError("cat states have negative Wigner regions and cannot be sampled")
    if not config.is_free:
        raise UnsupportedStateError("the trajectory oracle uses the closed-form free-particle Green function")
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    bath = build_discrete_bath(config, J, cutoff)
    if t_grid.max() > 0.5 * bath.recurrence_time:
        raise RecurrenceError(
            f"t = {t_grid.max():.3g} exceeds half the recurrence time {bath.recurrence_time:.3g}")
    if np.any(t_grid <= 0):
        raise DomainError("t_grid must be positive")
    if dt is None:
        slow = config.m / config.zeta if config.is_ohmic else min(config.tau, config.m / config.zeta)
        dt = min(slow / 50, 0.05 / cutoff)
    var = _mode_variance(config, bath)
    tables = [_response_tables(config, bath, float(t), dt) for t in t_grid]
    sizes = [CHUNK] * (samples // CHUNK) + ([samples % CHUNK] if samples % CHUNK else [])

    def job(k):
        return _chunk_sums(seed, k, sizes[k], var, tables, state, config, t_grid)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        parts = list(pool.map(job, range(len(sizes))))
    est = _estimates(_pairwise_sum(parts), samples)

    # standard-error scaling from nested prefixes of the same stream
    prefix_counts, prefix_se = [], []
    n_chunks = len(parts)
    for frac in (16, 4, 1):
        k = max(1, n_chunks // frac)
        n_k = sum(sizes[:k])
        sub = _estimates(_pairwise_sum(parts[:k]), n_k)
        prefix_counts.append(n_k)
        prefix_se.append(sub["X2_se"][-1])
    exponent = float(np.polyfit(np.log(prefix_counts), np.log(prefix_se), 1)[0]) \
        if len(set(prefix_counts)) > 1 else math.nan

    report = OracleReport(f"mc:{config.bath.kind.value}:{config.regime.value}")
    closed_X2, closed_var = [], []
    for i, t in enumerate(t_grid):
        cx = x_moments(config, float(t)).xx
        cv = variance_report(state, config, float(t))
        closed_X2.append(cx)
        closed_var.append(cv)
        report.record(f"X2_z[{t:g}]", abs(est["X2"][i] - cx) / est["X2_se"][i], 3.0)
        report.record(f"var_z[{t:g}]", abs(est["var"][i] - cv) / est["var_se"][i], 3.0)
    if math.isfinite(exponent):
        report.record("se_exponent_dev", abs(exponent + 0.5), 0.05)
    report.data = {
        "t": t_grid.tolist(), "X2": est["X2"].tolist(), "X2_se": est["X2_se"].tolist(),
        "var": est["var"].tolist(), "var_se": est["var_se"].tolist(),
        "mean": est["mean"].tolist(), "mean_se": est["mean_se"].tolist(),
        "closed_X2": closed_X2, "closed_var": closed_var, "se_exponent": exponent,
        "samples": samples, "J": J, "cutoff": cutoff, "dt": dt, "seed": seed,
        "recurrence_time": bath.recurrence_time,
    }
    return report
