"""Physical parameters, memory kernels and the response function.

Two linear passive baths are supported: the Ohmic bath, whose memory kernel is
``2*zeta*delta(t)``, and the single-relaxation-time (SRT) bath with kernel
``(zeta/tau)*exp(-t/tau)``.  Every other module takes a :class:`PhysicalConfig`
and reads its symbols from here.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, DomainError, FreeParticlePoleError, UnsupportedBranchError


class BathKind(str, Enum):
    OHMIC = "ohmic"
    SRT = "srt"


class Regime(str, Enum):
    HIGH = "high"
    ZERO = "zero"
    EXACT = "exact"


@dataclass(frozen=True)
class OscillatorSpec:
    mass: float
    spring_constant: float = 0.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ConfigError(f"mass must be positive, got {self.mass}")
        if not self.spring_constant >= 0:
            raise ConfigError(f"spring_constant must be >= 0, got {self.spring_constant}")


@dataclass(frozen=True)
class BathSpec:
    kind: BathKind
    friction: float
    relaxation_time: float = 0.0
    cutoff: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", BathKind(self.kind))
        if not self.friction > 0:
            raise ConfigError(f"friction must be positive, got {self.friction}")
        if self.kind is BathKind.OHMIC and self.relaxation_time != 0:
            raise ConfigError("an Ohmic bath has relaxation_time = 0")
        if self.kind is BathKind.SRT and not self.relaxation_time > 0:
            raise ConfigError("an SRT bath needs relaxation_time > 0")
        if self.cutoff is not None and not self.cutoff > 0:
            raise ConfigError(f"cutoff must be positive when given, got {self.cutoff}")


@dataclass(frozen=True)
class ThermalSpec:
    temperature: float = 0.0
    regime: Regime = Regime.ZERO

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if not self.temperature >= 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.regime is Regime.ZERO and self.temperature != 0:
            raise ConfigError("regime 'zero' requires temperature = 0")
        if self.regime is Regime.HIGH and self.temperature == 0:
            raise ConfigError("regime 'high' requires temperature > 0")


@dataclass(frozen=True)
class UnitsSpec:
    hbar: float = 1.0
    boltzmann: float = 1.0

    def __post_init__(self):
        if not (self.hbar > 0 and self.boltzmann > 0):
            raise ConfigError("hbar and boltzmann must be strictly positive")


_JSON_KEYS = (
    "mass", "spring_constant", "bath_kind", "friction", "relaxation_time",
    "cutoff", "temperature", "regime", "hbar", "boltzmann",
)
_REQUIRED_KEYS = ("mass", "bath_kind", "friction")


@dataclass(frozen=True)
class PhysicalConfig:
    oscillator: OscillatorSpec
    bath: BathSpec
    thermal: ThermalSpec = ThermalSpec()
    units: UnitsSpec = UnitsSpec()

    def __post_init__(self):
        if self.bath.kind is BathKind.SRT:
            disc = 4 * self.bath.friction * self.bath.relaxation_time / self.oscillator.mass
            if disc >= 1:
                raise UnsupportedBranchError(
                    f"SRT bath with 4*zeta*tau/m = {disc:.6g} >= 1 has degenerate or "
                    "complex relaxation roots; only 4*zeta*tau/m < 1 is supported"
                )

    # flat accessors so formulas can use the usual short symbols
    @property
    def m(self) -> float:
        return self.oscillator.mass

    @property
    def K(self) -> float:
        return self.oscillator.spring_constant

    @property
    def zeta(self) -> float:
        return self.bath.friction

    @property
    def tau(self) -> float:
        return self.bath.relaxation_time

    @property
    def cutoff(self) -> float | None:
        return self.bath.cutoff

    @property
    def hbar(self) -> float:
        return self.units.hbar

    @property
    def kT(self) -> float:
        return self.units.boltzmann * self.thermal.temperature

    @property
    def regime(self) -> Regime:
        return self.thermal.regime

    @property
    def is_ohmic(self) -> bool:
        return self.bath.kind is BathKind.OHMIC

    @property
    def is_free(self) -> bool:
        return self.K == 0

    @property
    def decay_time(self) -> float:
        """m/zeta, the Ohmic velocity relaxation time."""
        return self.m / self.zeta

    @classmethod
    def build(cls, mass=1.0, friction=1.0, bath_kind="ohmic", relaxation_time=0.0,
              spring_constant=0.0, cutoff=None, temperature=0.0, regime=None,
              hbar=1.0, boltzmann=1.0) -> "PhysicalConfig":
        if regime is None:
            regime = "zero" if temperature == 0 else "high"
        return cls(
            OscillatorSpec(float(mass), float(spring_constant)),
            BathSpec(BathKind(bath_kind), float(friction), float(relaxation_time),
                     None if cutoff is None else float(cutoff)),
            ThermalSpec(float(temperature), Regime(regime)),
            UnitsSpec(float(hbar), float(boltzmann)),
        )

    def replace(self, **changes) -> "PhysicalConfig":
        """Copy with flat keys (same names as the JSON document) changed."""
        d = self.to_dict()
        unknown = set(changes) - set(_JSON_KEYS)
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {sorted(unknown)}")
        d.update(changes)
        return PhysicalConfig.from_dict(d)

    def to_dict(self) -> dict[str, Any]:
        return {
            "mass": self.m,
            "spring_constant": self.K,
            "bath_kind": self.bath.kind.value,
            "friction": self.zeta,
            "relaxation_time": self.tau,
            "cutoff": self.cutoff,
            "temperature": self.thermal.temperature,
            "regime": self.regime.value,
            "hbar": self.hbar,
            "boltzmann": self.units.boltzmann,
        }

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> "PhysicalConfig":
        if not isinstance(doc, Mapping):
            raise ConfigError("physical configuration must be a JSON object")
        unknown = sorted(set(doc) - set(_JSON_KEYS))
        if unknown:
            raise ConfigError(f"unknown configuration key(s): {unknown}")
        for key in _REQUIRED_KEYS:
            if key not in doc:
                raise ConfigError(f"missing required configuration key '{key}'")
        kind = doc["bath_kind"]
        if kind not in ("ohmic", "srt"):
            raise ConfigError(f"bath_kind must be 'ohmic' or 'srt', got {kind!r}")
        regime = doc.get("regime")
        if regime is not None and regime not in ("high", "zero", "exact"):
            raise ConfigError(f"regime must be 'high', 'zero' or 'exact', got {regime!r}")
        try:
            return cls.build(
                mass=_num(doc, "mass"),
                friction=_num(doc, "friction"),
                bath_kind=kind,
                relaxation_time=_num(doc, "relaxation_time", 0.0),
                spring_constant=_num(doc, "spring_constant", 0.0),
                cutoff=_num(doc, "cutoff", None),
                temperature=_num(doc, "temperature", 0.0),
                regime=regime,
                hbar=_num(doc, "hbar", 1.0),
                boltzmann=_num(doc, "boltzmann", 1.0),
            )
        except (UnsupportedBranchError, DomainError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, path: str | Path) -> "PhysicalConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _num(doc, key, default=...):
    if key not in doc or doc[key] is None:
        if default is ...:
            raise ConfigError(f"missing required configuration key '{key}'")
        return default
    val = doc[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"configuration key '{key}' must be a number, got {val!r}")
    return float(val)


@dataclass(frozen=True)
class TaggedValue:
    """A pointwise value plus the weight of a delta function sitting at the query point.

    The Ohmic memory kernel and the Ohmic Omega^2(t) are distributions; they are
    reported as ``TaggedValue(0.0, weight)`` at t = 0 and never as a large number.
    """

    value: float
    delta_weight: float = 0.0

    @property
    def distributional(self) -> bool:
        return self.delta_weight != 0.0

    def __float__(self) -> float:
        if self.distributional:
            raise ArithmeticError("a delta-function weight has no pointwise value")
        return float(self.value)


def memory_transform(config: PhysicalConfig, z: complex) -> complex:
    """Fourier-Laplace transform mu~(z) of the memory kernel (Im z >= 0)."""
    z = complex(z)
    if z.imag < 0:
        raise DomainError(f"memory_transform needs Im z >= 0, got z = {z}")
    if config.is_ohmic:
        return complex(config.zeta)
    return config.zeta / (1 - 1j * z * config.tau)


def _mu_tilde_real_axis(config: PhysicalConfig, w):
    w = np.asarray(w, dtype=float)
    if config.is_ohmic:
        return np.full_like(w, config.zeta, dtype=complex)
    return config.zeta / (1 - 1j * w * config.tau)


def re_memory_transform(config: PhysicalConfig, w):
    """Re mu~(w + i0+) on the real axis; vectorised."""
    w = np.asarray(w, dtype=float)
    if config.is_ohmic:
        return np.full_like(w, config.zeta)
    return config.zeta / (1 + (w * config.tau) ** 2)


def memory_kernel(config: PhysicalConfig, t: float) -> TaggedValue:
    if t < 0:
        raise DomainError("memory_kernel is defined for t >= 0")
    if config.is_ohmic:
        return TaggedValue(0.0, 2 * config.zeta if t == 0 else 0.0)
    return TaggedValue(config.zeta / config.tau * math.exp(-t / config.tau))


def response(config: PhysicalConfig, w):
    """alpha(w + i0+) = 1/(-m w^2 - i w mu~(w) + K); scalar or array."""
    w_arr = np.asarray(w, dtype=float)
    if config.is_free and np.any(w_arr == 0):
        raise FreeParticlePoleError("free-particle static pole: alpha(0) is infinite for K = 0")
    mu = _mu_tilde_real_axis(config, w_arr)
    out = 1.0 / (-config.m * w_arr**2 - 1j * w_arr * mu + config.K)
    return complex(out) if np.ndim(w) == 0 else out


def omega_im_response(config: PhysicalConfig, w):
    """w * Im alpha(w + i0+), written so it stays regular at w = 0 for K = 0.

    Uses Im alpha = w Re mu~ |alpha|^2.
    """
    w = np.asarray(w, dtype=float)
    mu = _mu_tilde_real_axis(config, w)
    re_mu = mu.real
    if config.is_free:
        # w^2 Re mu / |w (m w + i mu)|^2
        return re_mu / np.abs(config.m * w + 1j * mu) ** 2
    return w**2 * re_mu / np.abs(config.K - config.m * w**2 - 1j * w * mu) ** 2


def gamma_pm(config: PhysicalConfig) -> tuple[float, float]:
    """Relaxation rates (gamma_plus, gamma_minus) of the SRT free particle."""
    if config.is_ohmic:
        raise UnsupportedBranchError("gamma_pm is defined for the SRT bath only")
    tau, ratio = config.tau, 4 * config.zeta * config.tau / config.m
    if ratio >= 1:
        raise UnsupportedBranchError("complex or degenerate gamma_pm (4*zeta*tau/m >= 1)")
    root = math.sqrt(1 - ratio)
    gp = (1 + root) / (2 * tau)
    # product form avoids cancellation in (1 - root) for small tau
    gm = (config.zeta / (config.m * tau)) / gp
    return gp, gm


def with_regime(config: PhysicalConfig, regime: str | Regime, temperature: float | None = None) -> PhysicalConfig:
    """Convenience copy with a different thermal regime."""
    thermal = ThermalSpec(config.thermal.temperature if temperature is None else float(temperature), Regime(regime))
    return dataclasses.replace(config, thermal=thermal)
