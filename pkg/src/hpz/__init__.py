"""Exact solution of the quantum Brownian motion master equation for a
particle coupled to a linear passive heat bath.

The modules build on each other:

``model``         physical parameters, memory kernels, response function
``kernel``        Green function, local coefficients, diffusion coefficients
``fluctuations``  mean square displacement and moments of the fluctuating position
``evolution``     Wigner-function propagation, densities, attenuation
``oracle``        independent numerical validators (grid PDE, Monte Carlo, moment ODEs)
``cli``           scenario runner
"""
__version__ = "0.1.0"

from .errors import (ConfigError, ConsistencyError, DivergenceError, DomainError, FitWindowError,
                     HPZError, QuadratureError, UnsupportedBranchError, UnsupportedStateError)
from .model import BathKind, PhysicalConfig, Regime

__all__ = [
    "BathKind", "ConfigError", "ConsistencyError", "DivergenceError", "DomainError",
    "FitWindowError", "HPZError", "PhysicalConfig", "QuadratureError", "Regime",
    "UnsupportedBranchError", "UnsupportedStateError", "__version__",
]
