"""Named validation suites that compare the closed forms with the oracles."""
from __future__ import annotations

import numpy as np

from ..evolution import InitialState, spatial_density, variance_report
from ..fluctuations import exact_diffusion_coefficients
from ..model import PhysicalConfig
from .moments import diffusion_from_moments, gaussian_moments_closed, integrate_moment_odes
from .montecarlo import mc_estimate
from .pde import PhaseSpaceGrid, canonical_grid, density_l1, integrate_master_equation
from .report import OracleReport

SUITES = ("moments", "pde", "mc")


def moments_suite(config: PhysicalConfig, state: InitialState, t_final: float = 1.0,
                  n: int = 11) -> OracleReport:
    """Moment ODEs against exact propagation, plus the two routes to f and h."""
    report = OracleReport("moments")
    ts = np.linspace(0.0, t_final, n)
    init = gaussian_moments_closed(config, state.sigma, 0.0)
    curves = integrate_moment_odes(config, init, t_final, ts)
    worst = 0.0
    for i, t in enumerate(ts):
        exact = gaussian_moments_closed(config, state.sigma, float(t))
        got = (curves.x2[i], curves.xp[i], curves.p2[i])
        scale = max(abs(exact[0]), abs(exact[2]) / config.m**2, 1e-300)
        worst = max(worst, abs(got[0] - exact[0]) / abs(exact[0]),
                    abs(got[1] - exact[1]) / (config.m * scale))
    report.record("moment_rel_err", worst, 1e-5)
    fh = 0.0
    for t in ts[1:]:
        xf, vf = diffusion_from_moments(config, float(t))
        dc = exact_diffusion_coefficients(config, float(t))
        fh = max(fh, abs(xf - 2 * dc.d_qp) / abs(xf), abs(vf - 2 * dc.d_pp / config.m) / abs(vf))
    report.record("fh_cross_route_rel_err", fh, 1e-4)
    report.data = {"t": ts.tolist(), "x2": curves.x2.tolist(), "xp": curves.xp.tolist(),
                   "p2": curves.p2.tolist()}
    return report


def pde_suite(config: PhysicalConfig, state: InitialState, t_final: float = 1.0,
              grid: PhaseSpaceGrid | None = None) -> OracleReport:
    grid = canonical_grid() if grid is None else grid
    res = integrate_master_equation(config, state, grid, t_final)
    exact = spatial_density(state, config, t_final)
    mo = res.moments()
    report = OracleReport("pde")
    report.record("variance_rel_err", abs(mo["var_q"] / variance_report(state, config, t_final) - 1), 1e-2)
    report.record("density_l1", density_l1(res, exact.pdf), 1e-2)
    report.record("mass_drift", res.mass_drift, 1e-4)
    report.data = {"x": grid.q.tolist(), "pde_density": res.density.tolist(),
                   "exact_density": exact.pdf(grid.q).tolist(), "steps": res.steps}
    return report


def mc_suite(config: PhysicalConfig, state: InitialState, t_grid=(1.0,), samples: int = 100_000,
             seed: int = 0, J: int = 400, cutoff: float = 400.0, threads: int = 1) -> OracleReport:
    rep = mc_estimate(config, state, t_grid, samples, seed, J, cutoff, threads)
    rep.scenario = "mc"
    return rep
