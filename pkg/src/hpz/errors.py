"""Exception hierarchy shared by every module of the package."""


class HPZError(Exception):
    """Base class for all package errors."""


class ConfigError(HPZError, ValueError):
    """Malformed or inconsistent physical / scenario configuration."""


class DomainError(HPZError, ValueError):
    """Argument outside the mathematical domain of an operation."""


class UnsupportedBranchError(HPZError):
    """Requested model/regime combination is outside the supported set."""


class FreeParticlePoleError(DomainError):
    """alpha(0) requested for K = 0, where the response has a static pole."""


class SingularityError(HPZError, ArithmeticError):
    """A guarded denominator vanished."""


ZERO_POINT_EXPLANATION = (
    "zero-point divergence: with an initially uncoupled bath the vacuum "
    "fluctuations make <X^2(t)> grow like (hbar/(pi*zeta))*log(cutoff); "
    "supply a finite 'cutoff' or use the high-temperature regime"
)


class DivergenceError(HPZError, ArithmeticError):
    """A quantity diverges without a frequency cutoff."""

    def __init__(self, what: str = ""):
        msg = ZERO_POINT_EXPLANATION if not what else f"{what}: {ZERO_POINT_EXPLANATION}"
        super().__init__(msg)


class QuadratureError(HPZError, ArithmeticError):
    """Numerical integration failed to reach its tolerance."""

    def __init__(self, what: str, achieved: float, requested: float):
        super().__init__(
            f"{what}: quadrature did not converge (estimated error {achieved:.3e}, "
            f"requested {requested:.3e})"
        )
        self.achieved = achieved
        self.requested = requested


class ConsistencyError(HPZError, ArithmeticError):
    """Internal consistency check failed (e.g. an indefinite covariance)."""


class FitWindowError(HPZError, ValueError):
    """A decoherence-time fit was requested outside its validity window."""


class UnsupportedStateError(HPZError, ValueError):
    """Initial state cannot be used by the requested method."""


class RecurrenceError(HPZError, ValueError):
    """A discrete bath was queried beyond its recurrence time."""


class StabilityError(HPZError, ArithmeticError):
    """Grid integrator stability or conservation bound violated."""
