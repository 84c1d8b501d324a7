"""Natural gas property correlations.

Viscosity follows Lee, Gonzalez & Eakin; compressibility follows Beggs &
Brill. Pseudo-critical properties come from a pluggable correlation
(Standing by default). Units are oilfield: psia, degrees Rankine, lb/ft3,
centipoise. Telemetry temperatures are in degrees Fahrenheit and must go
through :func:`fahrenheit_to_rankine` first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

AIR_MOLECULAR_WEIGHT = 28.97
GAS_CONSTANT = 10.732  # psia ft3 / (lbmol R)
RANKINE_OFFSET = 459.67

SG_MIN = 0.55
SG_MAX = 1.0


class GasPropertyDomainError(ValueError):
    """Raised when a correlation is evaluated outside its valid domain."""


def fahrenheit_to_rankine(temp_f: float) -> float:
    return temp_f + RANKINE_OFFSET


def _check_sg(specific_gravity: float) -> None:
    if not (SG_MIN <= specific_gravity <= SG_MAX) or math.isnan(specific_gravity):
        raise GasPropertyDomainError(
            f"specific gravity {specific_gravity!r} outside [{SG_MIN}, {SG_MAX}]"
        )


def standing_pseudo_critical(specific_gravity: float) -> tuple[float, float]:
    t_pc = 168.0 + 325.0 * specific_gravity - 12.5 * specific_gravity**2
    p_pc = 677.0 + 15.0 * specific_gravity - 37.5 * specific_gravity**2
    return t_pc, p_pc


def sutton_pseudo_critical(specific_gravity: float) -> tuple[float, float]:
    t_pc = 169.2 + 349.5 * specific_gravity - 74.0 * specific_gravity**2
    p_pc = 756.8 - 131.0 * specific_gravity - 3.6 * specific_gravity**2
    return t_pc, p_pc


PSEUDO_CRITICAL_CORRELATIONS: dict[str, Callable[[float], tuple[float, float]]] = {
    "standing": standing_pseudo_critical,
    "sutton": sutton_pseudo_critical,
}


def pseudo_critical(specific_gravity: float, correlation: str = "standing") -> tuple[float, float]:
    """Pseudo-critical temperature (R) and pressure (psia) for a gas gravity."""
    _check_sg(specific_gravity)
    try:
        func = PSEUDO_CRITICAL_CORRELATIONS[correlation]
    except KeyError:
        raise ValueError(f"unknown pseudo-critical correlation {correlation!r}") from None
    return func(specific_gravity)


@dataclass(frozen=True)
class PseudoReduced:
    t_pr: float
    p_pr: float


@dataclass(frozen=True)
class GasState:
    """Thermodynamic state of a gas sample.

    ``density`` is derived from the real-gas law when not given explicitly.
    """

    pressure: float
    temperature: float
    specific_gravity: float
    density: float | None = None
    correlation: str = field(default="standing", compare=False)

    def __post_init__(self) -> None:
        if not self.pressure > 0:
            raise GasPropertyDomainError(f"pressure must be positive, got {self.pressure!r}")
        if not self.temperature > 0:
            raise GasPropertyDomainError(f"temperature must be positive, got {self.temperature!r}")
        _check_sg(self.specific_gravity)
        if self.density is None:
            object.__setattr__(self, "density", real_gas_density(
                self.pressure, self.temperature, self.specific_gravity, self.correlation))

    @property
    def molecular_weight(self) -> float:
        return AIR_MOLECULAR_WEIGHT * self.specific_gravity

    def reduced(self) -> PseudoReduced:
        t_pc, p_pc = pseudo_critical(self.specific_gravity, self.correlation)
        return PseudoReduced(self.temperature / t_pc, self.pressure / p_pc)


def z_factor(pr: PseudoReduced) -> float:
    """Beggs-Brill compressibility factor.

    Valid for ``t_pr > 0.92``; below that the square root in the A term is
    undefined (and 0.86 is a pole of the B term).
    """
    t, p = pr.t_pr, pr.p_pr
    if not t > 0.92:
        raise GasPropertyDomainError(f"reduced temperature {t!r} must exceed 0.92")
    if not p >= 0:
        raise GasPropertyDomainError(f"reduced pressure {p!r} must be non-negative")
    a = 1.39 * math.sqrt(t - 0.92) - 0.36 * t - 0.101
    b = (
        (0.62 - 0.23 * t) * p
        + (0.066 / (t - 0.86) - 0.037) * p**2
        + 0.32 * p**6 / 10.0 ** (9.0 * (t - 1.0))
    )
    c = 0.132 - 0.32 * math.log10(t)
    d = 10.0 ** (0.3106 - 0.49 * t + 0.1824 * t**2)
    return a + (1.0 - a) * math.exp(-b) + c * p**d


def real_gas_density(
    pressure: float, temperature: float, specific_gravity: float, correlation: str = "standing"
) -> float:
    """Density in lb/ft3 from rho = P M / (z R T)."""
    t_pc, p_pc = pseudo_critical(specific_gravity, correlation)
    z = z_factor(PseudoReduced(temperature / t_pc, pressure / p_pc))
    mw = AIR_MOLECULAR_WEIGHT * specific_gravity
    return pressure * mw / (z * GAS_CONSTANT * temperature)


def lge_viscosity(temperature: float, molecular_weight: float, density: float) -> float:
    """Lee-Gonzalez-Eakin viscosity in cp from T (R), M (lb/lbmol), rho (lb/ft3)."""
    if not temperature > 0:
        raise GasPropertyDomainError(f"temperature must be positive, got {temperature!r}")
    if not density >= 0:
        raise GasPropertyDomainError(f"density must be non-negative, got {density!r}")
    k = (9.4 + 0.02 * molecular_weight) * temperature**1.5 / (
        209.0 + 19.0 * molecular_weight + temperature
    ) * 1e-4
    x = 3.5 + 0.01 * molecular_weight + 986.0 / temperature
    y = 2.4 - 0.2 * x
    return k * math.exp(x * (density / 62.4) ** y)


def gas_viscosity(state: GasState) -> float:
    if not state.density > 0:
        raise GasPropertyDomainError(f"density must be positive, got {state.density!r}")
    return lge_viscosity(state.temperature, state.molecular_weight, state.density)


def properties_at(pressure_psia: float, temp_f: float, specific_gravity: float) -> dict[str, float]:
    """z-factor, density and viscosity at a field operating point."""
    state = GasState(pressure_psia, fahrenheit_to_rankine(temp_f), specific_gravity)
    return {
        "z": z_factor(state.reduced()),
        "density": state.density,
        "viscosity": gas_viscosity(state),
    }
