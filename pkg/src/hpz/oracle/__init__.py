"""Independent validators for the closed-form results."""
from .moments import MomentCurves, diffusion_from_moments, integrate_moment_odes
from .montecarlo import DiscreteBath, build_discrete_bath, mc_estimate
from .pde import PDEResult, PhaseSpaceGrid, integrate_master_equation
from .report import OracleReport

__all__ = [
    "DiscreteBath", "MomentCurves", "OracleReport", "PDEResult", "PhaseSpaceGrid",
    "build_discrete_bath", "diffusion_from_moments", "integrate_master_equation",
    "integrate_moment_odes", "mc_estimate",
]
