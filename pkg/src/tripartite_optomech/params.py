"""System configuration and derived physical rates."""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Annotated, Any, Optional

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field

from tripartite_optomech.constants import C_LIGHT, HBAR, K_B
from tripartite_optomech.exceptions import (
    ConfigError,
    MissingTierFieldError,
    NonPositiveFrequencyError,
    TemperatureUnderflowError,
)
from tripartite_optomech.modes import CavityGeometry, lamb_dicke_parameter, tripartite_coupling

logger = logging.getLogger(__name__)

# |<sigma^z>| of a ground-state atom; G = g_mu * sqrt(|<sigma^z>|)
SIGMA_Z_MAGNITUDE = 1.0

# hbar*omega/(k_B*T) above which n_th underflows to zero
_BOSE_EXPONENT_LIMIT = 700.0


# ============================================================================
# Reusable Validators
# ============================================================================


class InputLevel(str, Enum):
    """Which parameter tier the user supplies."""

    GEOMETRIC = "geometric"
    EFFECTIVE_RATES = "effective_rates"
    DIMENSIONLESS = "dimensionless"


_LEVEL_SPELLINGS = {
    "geometric": InputLevel.GEOMETRIC,
    "effectiverates": InputLevel.EFFECTIVE_RATES,
    "effective_rates": InputLevel.EFFECTIVE_RATES,
    "effective": InputLevel.EFFECTIVE_RATES,
    "dimensionless": InputLevel.DIMENSIONLESS,
}


def _coerce_input_level(v: Any) -> Any:
    """Accept Geometric / EffectiveRates / Dimensionless in any case."""
    if isinstance(v, str):
        key = v.strip().lower().replace("-", "_")
        if key not in _LEVEL_SPELLINGS:
            raise ValueError(
                f"Unknown input_level '{v}'. Use Geometric, EffectiveRates or Dimensionless"
            )
        return _LEVEL_SPELLINGS[key]
    return v


InputLevelCoerced = Annotated[InputLevel, BeforeValidator(_coerce_input_level)]


# ============================================================================
# Configuration blocks
# ============================================================================


class GeometricBlock(BaseModel):
    """Cavity-mode geometry and bare dipole coupling (Geometric tier only)."""

    w0: float = Field(..., gt=0, description="Beam waist radius (m)")
    mu: float = Field(..., ge=0, le=1, description="Transverse atom position as a fraction of w(x0)")
    epsilon: float = Field(..., gt=0, description="Axial atom index, k0 x0 = epsilon pi")
    g0: float = Field(..., ge=0, description="Bare dipole coupling (rad/s)")

    model_config = ConfigDict(frozen=True, extra="forbid")


class EffectiveBlock(BaseModel):
    """Effective couplings supplied directly (EffectiveRates / Dimensionless tiers)."""

    eta: float = Field(..., ge=0, description="Lamb-Dicke parameter")
    xi_0: float = Field(..., ge=0, description="Single-photon optomechanical rate (rad/s)")
    g: Optional[float] = Field(None, ge=0, alias="G", description="Tripartite coupling rate (rad/s)")
    coupling_prefactor: Optional[float] = Field(
        None,
        ge=0,
        description="g0/(e^mu w(x0) sqrt(pi L)) in rad/s; G then follows eta as prefactor*eta*exp(-eta^2/2)",
    )

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)


class DriveBlock(BaseModel):
    """Optional direct specification of the pump."""

    e: Optional[float] = Field(None, ge=0, description="Drive amplitude |E| (rad/s)")
    alpha: Optional[float] = Field(
        None, ge=0, description="Target intracavity amplitude; E follows from required_drive"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")


class SystemConfig(BaseModel):
    """User-facing configuration of the atom-field-mirror system.

    All frequencies are angular frequencies (rad/s). Detunings may be negative;
    every other rate, length, mass and power is non-negative.
    """

    input_level: InputLevelCoerced = Field(
        InputLevel.DIMENSIONLESS, description="Active parameter tier"
    )
    omega_m: float = Field(..., description="Mechanical angular frequency (rad/s)")
    quality_factor: float = Field(..., gt=0, description="Mechanical quality factor Q")
    mass: Optional[float] = Field(None, ge=0, description="Effective mirror mass (kg)")
    cavity_length: Optional[float] = Field(None, gt=0, description="Cavity length L (m)")
    kappa: float = Field(..., ge=0, description="Cavity amplitude decay rate (rad/s)")
    gamma_a: float = Field(..., ge=0, description="Atomic polarization decay rate (rad/s)")
    delta_a: float = Field(..., description="Atomic detuning omega_e - omega_l (rad/s)")
    delta_f: Optional[float] = Field(None, description="Effective cavity detuning (rad/s)")
    delta_0f: Optional[float] = Field(None, description="Bare cavity detuning omega_c - omega_l (rad/s)")
    temperature: float = Field(0.0, description="Mechanical bath temperature (K)")
    thermal_occupation: Optional[float] = Field(
        None, ge=0, description="Mean thermal phonon number; overrides the temperature formula"
    )
    laser_power: Optional[float] = Field(None, ge=0, description="Input laser power P (W)")
    laser_wavenumber: Optional[float] = Field(None, gt=0, description="Laser wavenumber k0 (1/m)")
    geometric: Optional[GeometricBlock] = Field(None, description="Geometric-tier block")
    effective: Optional[EffectiveBlock] = Field(None, description="Effective-tier block")
    drive: DriveBlock = Field(default_factory=DriveBlock, description="Direct pump specification")

    model_config = ConfigDict(
        frozen=True,
        extra="forbid",
        json_schema_extra={
            "example": {
                "input_level": "dimensionless",
                "omega_m": 6.283185307e7,
                "quality_factor": 1.1e6,
                "kappa": 4.398229715e6,
                "gamma_a": 2.513274123e6,
                "delta_a": 6.283185307e7,
                "delta_f": -6.283185307e7,
                "temperature": 0.4,
                "effective": {"eta": 0.04, "xi_0": 1.0e3, "coupling_prefactor": 1.0e8},
                "drive": {"alpha": 1.0e3},
            }
        },
    )


# ============================================================================
# Derived parameters
# ============================================================================


class SystemParams(BaseModel):
    """Physical rates consumed by the solver pipeline.

    In the dimensionless tier every rate is a multiple of omega_m and
    omega_m == 1; frequency_unit then holds the physical omega_m in rad/s.
    """

    input_level: InputLevel
    omega_m: float = Field(..., gt=0, description="Mechanical frequency")
    gamma_m: float = Field(..., ge=0, description="Mechanical decay rate omega_m/Q")
    kappa: float = Field(..., ge=0, description="Cavity decay rate")
    gamma_a: float = Field(..., ge=0, description="Atomic decay rate")
    delta_a: float = Field(..., description="Atomic detuning")
    delta_f: Optional[float] = Field(None, description="Effective cavity detuning, held fixed by the solver")
    delta_0f: Optional[float] = Field(None, description="Bare cavity detuning")
    eta: float = Field(..., ge=0, description="Lamb-Dicke parameter")
    g_mu: float = Field(..., ge=0, description="Effective tripartite coupling")
    g_eff: float = Field(..., ge=0, description="G = g_mu sqrt(|<sigma^z>|)")
    xi_0: float = Field(..., ge=0, description="Radiation-pressure coupling")
    x_zpf: Optional[float] = Field(None, ge=0, description="Zero-point fluctuation length (m)")
    drive_e: Optional[float] = Field(None, ge=0, description="Drive amplitude |E|")
    drive_alpha: Optional[float] = Field(None, ge=0, description="Target intracavity amplitude")
    n_th: float = Field(..., ge=0, description="Mean thermal phonon number")
    frequency_unit: float = Field(1.0, gt=0, description="rad/s per stored frequency unit")

    model_config = ConfigDict(frozen=True)

    @property
    def holds_effective_detuning(self) -> bool:
        """True when the solver must keep delta_f fixed and recover delta_0f."""
        return self.delta_f is not None

    def with_updates(self, **changes: Any) -> "SystemParams":
        """Return a validated copy with some fields replaced."""
        data = self.model_dump()
        data.update(changes)
        return SystemParams.model_validate(data)


def thermal_occupation(omega: float, temperature: float) -> float:
    """
    Bose-Einstein occupation 1/(exp(hbar omega / k_B T) - 1).

    Args:
        omega: Angular frequency (rad/s)
        temperature: Bath temperature (K)

    Returns:
        Mean occupation; 0 when T == 0 or the exponent overflows

    Raises:
        TemperatureUnderflowError: If temperature < 0
    """
    if temperature < 0:
        raise TemperatureUnderflowError(f"Temperature must be >= 0 K, got {temperature}")
    if temperature == 0.0:
        return 0.0
    exponent = HBAR * omega / (K_B * temperature)
    if exponent > _BOSE_EXPONENT_LIMIT:
        return 0.0
    return 1.0 / math.expm1(exponent)


def _require(value: Optional[Any], name: str, tier: InputLevel) -> Any:
    if value is None:
        raise MissingTierFieldError(f"'{name}' is required for the {tier.value} tier")
    return value


def derive_parameters(config: SystemConfig) -> SystemParams:
    """
    Derive every rate the solver pipeline needs from a SystemConfig.

    Args:
        config: Validated configuration

    Returns:
        SystemParams (normalised to omega_m in the dimensionless tier)

    Raises:
        NonPositiveFrequencyError: If omega_m <= 0
        TemperatureUnderflowError: If temperature < 0
        MissingTierFieldError: If the active tier lacks a required field
        ConfigError: If detuning or drive are specified inconsistently
    """
    tier = config.input_level
    omega_m = config.omega_m
    if not omega_m > 0:
        raise NonPositiveFrequencyError(f"omega_m must be > 0 rad/s, got {omega_m}")

    gamma_m = omega_m / config.quality_factor
    n_th = (
        config.thermal_occupation
        if config.thermal_occupation is not None
        else thermal_occupation(omega_m, config.temperature)
    )
    if config.temperature < 0:
        raise TemperatureUnderflowError(f"Temperature must be >= 0 K, got {config.temperature}")

    x_zpf = math.sqrt(HBAR / (config.mass * omega_m)) if config.mass else None
    omega_c = C_LIGHT * config.laser_wavenumber if config.laser_wavenumber else None

    if tier is InputLevel.GEOMETRIC:
        block = _require(config.geometric, "geometric", tier)
        k0 = _require(config.laser_wavenumber, "laser_wavenumber", tier)
        length = _require(config.cavity_length, "cavity_length", tier)
        _require(config.mass, "mass", tier)
        if config.effective is not None:
            logger.debug("Ignoring 'effective' block in the geometric tier")

        geom = CavityGeometry(w0=block.w0, k0=k0, length=length)
        x0 = block.epsilon * math.pi / k0
        eta = lamb_dicke_parameter(geom, block.mu, block.epsilon, x_zpf)
        g_mu = tripartite_coupling(block.g0, eta, block.mu, geom, x0)
        xi_0 = omega_c / length * x_zpf
    else:
        block = _require(config.effective, "effective", tier)
        if config.geometric is not None:
            logger.debug(f"Ignoring 'geometric' block in the {tier.value} tier")
        eta = block.eta
        xi_0 = block.xi_0
        if block.g is not None and block.coupling_prefactor is not None:
            raise ConfigError("Give either effective.G or effective.coupling_prefactor, not both")
        if block.g is not None:
            g_mu = block.g
        elif block.coupling_prefactor is not None:
            g_mu = block.coupling_prefactor * eta * math.exp(-(eta**2) / 2.0)
        else:
            raise MissingTierFieldError(
                f"'effective.G' or 'effective.coupling_prefactor' is required for the {tier.value} tier"
            )

    if (config.delta_f is None) == (config.delta_0f is None):
        raise ConfigError("Exactly one of delta_f (effective) or delta_0f (bare) must be given")

    drive_e: Optional[float] = None
    if config.drive.e is not None and config.drive.alpha is not None:
        raise ConfigError("Give either drive.e or drive.alpha, not both")
    if config.drive.e is not None:
        drive_e = config.drive.e
    elif config.drive.alpha is None:
        if config.laser_power is not None and omega_c is not None:
            drive_e = math.sqrt(2.0 * config.kappa * config.laser_power / (HBAR * omega_c))
        else:
            logger.info("No drive specified (drive.e, drive.alpha or laser_power); using E = 0")
            drive_e = 0.0

    g_eff = g_mu * math.sqrt(SIGMA_Z_MAGNITUDE)

    unit = omega_m if tier is InputLevel.DIMENSIONLESS else 1.0

    def scaled(value: Optional[float]) -> Optional[float]:
        return None if value is None else value / unit

    params = SystemParams(
        input_level=tier,
        omega_m=omega_m / unit,
        gamma_m=gamma_m / unit,
        kappa=config.kappa / unit,
        gamma_a=config.gamma_a / unit,
        delta_a=config.delta_a / unit,
        delta_f=scaled(config.delta_f),
        delta_0f=scaled(config.delta_0f),
        eta=eta,
        g_mu=g_mu / unit,
        g_eff=g_eff / unit,
        xi_0=xi_0 / unit,
        x_zpf=x_zpf,
        drive_e=scaled(drive_e),
        drive_alpha=config.drive.alpha,
        n_th=n_th,
        frequency_unit=unit,
    )
    logger.debug(
        f"Derived parameters ({tier.value}): eta={eta:.6g}, G={params.g_eff:.6g}, "
        f"xi_0={params.xi_0:.6g}, n_th={n_th:.6g}"
    )
    return params
