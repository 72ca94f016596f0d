"""Tests for configuration models and parameter derivation."""

import math

import pytest
from pydantic import ValidationError

from tests.conftest import make_config
from tripartite_optomech.constants import C_LIGHT, HBAR, K_B
from tripartite_optomech.exceptions import (
    ConfigError,
    MissingTierFieldError,
    NonPositiveFrequencyError,
    TemperatureUnderflowError,
)
from tripartite_optomech.modes import CavityGeometry, lamb_dicke_parameter
from tripartite_optomech.params import (
    InputLevel,
    SystemConfig,
    derive_parameters,
    thermal_occupation,
)

OMEGA_M = 2 * math.pi * 10e6


def geometric_config(**overrides):
    data = {
        "input_level": "Geometric",
        "omega_m": OMEGA_M,
        "quality_factor": 1.1e6,
        "mass": 1e-14,
        "cavity_length": 1e-6,
        "laser_wavenumber": 1e6,
        "laser_power": 800e-6,
        "kappa": 0.07 * OMEGA_M,
        "gamma_a": 0.04 * OMEGA_M,
        "delta_a": OMEGA_M,
        "delta_f": -OMEGA_M,
        "temperature": 0.4,
        "geometric": {"w0": 1e-9, "mu": 0.5, "epsilon": 0.5, "g0": 2 * math.pi * 1e3},
    }
    data.update(overrides)
    return SystemConfig.model_validate(data)


class TestThermalOccupation:
    def test_zero_temperature(self):
        """Test that the bath is empty at T = 0."""
        assert thermal_occupation(OMEGA_M, 0.0) == 0.0

    def test_unit_exponent(self):
        """Test n_th = 1/(e - 1) when hbar omega = k_B T."""
        temperature = HBAR * OMEGA_M / K_B
        assert thermal_occupation(OMEGA_M, temperature) == pytest.approx(1.0 / (math.e - 1.0), rel=1e-12)

    def test_cryogenic_mirror(self):
        """Test the 10 MHz mirror at 0.4 K."""
        assert thermal_occupation(OMEGA_M, 0.4) == pytest.approx(832.9, rel=1e-3)

    def test_negative_temperature_rejected(self):
        """Test that T < 0 raises."""
        with pytest.raises(TemperatureUnderflowError, match="-1"):
            thermal_occupation(OMEGA_M, -1.0)

    def test_overflowing_exponent(self):
        """Test that a huge hbar omega / k_B T gives zero instead of overflowing."""
        assert thermal_occupation(OMEGA_M, 1e-9) == 0.0

    def test_increasing_in_temperature(self):
        """Test that n_th starts at 0 and grows strictly with T up to room temperature."""
        temperatures = [1e-4 * 10 ** (k / 20) for k in range(131)]
        occupations = [thermal_occupation(OMEGA_M, t) for t in temperatures]
        assert thermal_occupation(OMEGA_M, 0.0) == 0.0 < occupations[0]
        assert all(lo < hi for lo, hi in zip(occupations, occupations[1:]))
        assert occupations[-1] == pytest.approx(K_B * temperatures[-1] / (HBAR * OMEGA_M) - 0.5, rel=1e-6)


class TestInputLevel:
    @pytest.mark.parametrize(
        "spelling, expected",
        [
            ("Geometric", InputLevel.GEOMETRIC),
            ("EffectiveRates", InputLevel.EFFECTIVE_RATES),
            ("effective_rates", InputLevel.EFFECTIVE_RATES),
            ("DIMENSIONLESS", InputLevel.DIMENSIONLESS),
        ],
    )
    def test_accepted_spellings(self, spelling, expected):
        """Test case-insensitive tier names."""
        assert make_config(input_level=spelling).input_level is expected

    def test_unknown_tier(self):
        """Test that an unknown tier name is a validation error."""
        with pytest.raises(ValidationError, match="Unknown input_level"):
            make_config(input_level="Quantum")


class TestConfigValidation:
    def test_unknown_key_forbidden(self):
        """Test that extra keys are rejected."""
        with pytest.raises(ValidationError):
            make_config(omega=1.0)

    def test_negative_rate_rejected(self):
        """Test field bounds on rates."""
        with pytest.raises(ValidationError):
            make_config(kappa=-0.1)

    def test_mu_outside_unit_interval(self):
        """Test that the transverse position fraction must lie in [0, 1]."""
        with pytest.raises(ValidationError):
            geometric_config(geometric={"w0": 1e-9, "mu": 1.5, "epsilon": 0.5, "g0": 1.0})

    def test_config_is_frozen(self):
        """Test that configurations are immutable."""
        config = make_config()
        with pytest.raises(ValidationError):
            config.kappa = 0.2

    def test_g_alias_and_field_name(self):
        """Test that effective.G and effective.g are both accepted."""
        by_alias = make_config(effective={"eta": 0.04, "xi_0": 1e-3, "G": 0.02})
        by_name = make_config(effective={"eta": 0.04, "xi_0": 1e-3, "g": 0.02})
        assert by_alias.effective.g == by_name.effective.g == 0.02


class TestDeriveParameters:
    def test_dimensionless_scaling(self):
        """Test that every rate is divided by omega_m and the unit is kept."""
        config = make_config(
            omega_m=OMEGA_M,
            kappa=0.07 * OMEGA_M,
            gamma_a=0.04 * OMEGA_M,
            delta_a=OMEGA_M,
            delta_f=-OMEGA_M,
            quality_factor=1.1e6,
            effective={"eta": 0.04, "xi_0": 1e-3 * OMEGA_M, "G": 0.01 * OMEGA_M},
        )
        params = derive_parameters(config)
        assert params.omega_m == 1.0
        assert params.frequency_unit == pytest.approx(OMEGA_M)
        assert params.kappa == pytest.approx(0.07)
        assert params.gamma_a == pytest.approx(0.04)
        assert params.delta_f == pytest.approx(-1.0)
        assert params.delta_0f is None
        assert params.xi_0 == pytest.approx(1e-3)
        assert params.g_eff == pytest.approx(0.01)
        assert params.gamma_m == pytest.approx(1.0 / 1.1e6)
        assert params.drive_alpha == 10.0

    def test_effective_tier_keeps_units(self):
        """Test that the effective tier leaves rad/s untouched."""
        config = make_config(input_level="EffectiveRates", omega_m=OMEGA_M, quality_factor=1.1e6)
        params = derive_parameters(config)
        assert params.omega_m == pytest.approx(OMEGA_M)
        assert params.gamma_m == pytest.approx(57.12, rel=1e-3)
        assert params.frequency_unit == 1.0

    def test_coupling_prefactor_follows_eta(self):
        """Test G = prefactor * eta * exp(-eta^2/2)."""
        eta = 0.08
        config = make_config(effective={"eta": eta, "xi_0": 1e-3, "coupling_prefactor": 0.5})
        params = derive_parameters(config)
        assert params.g_eff == pytest.approx(0.5 * eta * math.exp(-(eta**2) / 2.0), rel=1e-14)

    def test_g_and_prefactor_conflict(self):
        """Test that G and coupling_prefactor are mutually exclusive."""
        config = make_config(effective={"eta": 0.04, "xi_0": 1e-3, "G": 0.01, "coupling_prefactor": 0.5})
        with pytest.raises(ConfigError, match="coupling_prefactor"):
            derive_parameters(config)

    def test_missing_coupling(self):
        """Test that the tripartite coupling is required."""
        config = make_config(effective={"eta": 0.04, "xi_0": 1e-3})
        with pytest.raises(MissingTierFieldError):
            derive_parameters(config)

    def test_missing_effective_block(self):
        """Test that the effective tier requires its block."""
        config = make_config(effective=None)
        with pytest.raises(MissingTierFieldError, match="effective"):
            derive_parameters(config)

    def test_non_positive_frequency(self):
        """Test omega_m <= 0."""
        with pytest.raises(NonPositiveFrequencyError):
            derive_parameters(make_config(omega_m=0.0))
        with pytest.raises(NonPositiveFrequencyError):
            derive_parameters(make_config(omega_m=-1.0))

    def test_negative_temperature(self):
        """Test that a negative temperature is rejected during derivation."""
        with pytest.raises(TemperatureUnderflowError):
            derive_parameters(make_config(temperature=-0.1, thermal_occupation=None))

    def test_thermal_occupation_override(self):
        """Test that an explicit n_th bypasses the Bose-Einstein formula."""
        params = derive_parameters(make_config(temperature=300.0, thermal_occupation=3.5))
        assert params.n_th == 3.5

    @pytest.mark.parametrize(
        "detuning",
        [{"delta_f": 1.0, "delta_0f": 1.0}, {"delta_f": None, "delta_0f": None}],
    )
    def test_exactly_one_detuning(self, detuning):
        """Test that exactly one of delta_f and delta_0f is required."""
        with pytest.raises(ConfigError, match="Exactly one"):
            derive_parameters(make_config(**detuning))

    def test_bare_detuning_kept(self):
        """Test that a bare detuning is passed through."""
        params = derive_parameters(make_config(delta_f=None, delta_0f=0.5))
        assert params.delta_0f == 0.5
        assert params.delta_f is None
        assert not params.holds_effective_detuning

    def test_drive_conflict(self):
        """Test that drive.e and drive.alpha are mutually exclusive."""
        with pytest.raises(ConfigError, match="drive"):
            derive_parameters(make_config(drive={"e": 1.0, "alpha": 2.0}))

    def test_no_drive_defaults_to_zero(self):
        """Test that an unpumped cavity has E = 0."""
        params = derive_parameters(make_config(drive={}))
        assert params.drive_e == 0.0
        assert params.drive_alpha is None

    def test_drive_from_laser_power(self):
        """Test |E| = sqrt(2 kappa P / (hbar omega_l)) with omega_l = c k0."""
        config = make_config(
            input_level="EffectiveRates",
            omega_m=OMEGA_M,
            kappa=0.07 * OMEGA_M,
            laser_power=800e-6,
            laser_wavenumber=1e6,
            drive={},
        )
        params = derive_parameters(config)
        expected = math.sqrt(2 * 0.07 * OMEGA_M * 800e-6 / (HBAR * C_LIGHT * 1e6))
        assert params.drive_e == pytest.approx(expected, rel=1e-12)

    def test_with_updates(self, red_params):
        """Test validated copies of derived parameters."""
        updated = red_params.with_updates(kappa=0.3)
        assert updated.kappa == 0.3
        assert red_params.kappa == 0.1
        with pytest.raises(ValidationError):
            red_params.with_updates(kappa=-1.0)


class TestGeometricTier:
    def test_mirror_scales(self):
        """Test x_zpf and gamma_m for a 10 pg, 10 MHz mirror."""
        params = derive_parameters(geometric_config())
        assert params.x_zpf == pytest.approx(1.2955e-14, rel=1e-4)
        assert params.gamma_m == pytest.approx(57.12, rel=1e-3)
        assert params.n_th == pytest.approx(832.9, rel=1e-3)

    def test_couplings_from_geometry(self):
        """Test eta and xi_0 derived from cavity and mirror."""
        config = geometric_config()
        params = derive_parameters(config)
        geom = CavityGeometry(w0=1e-9, k0=1e6, length=1e-6)
        assert params.eta == pytest.approx(lamb_dicke_parameter(geom, 0.5, 0.5, params.x_zpf), rel=1e-14)
        assert params.xi_0 == pytest.approx(C_LIGHT * 1e6 / 1e-6 * params.x_zpf, rel=1e-14)
        assert params.g_eff > 0

    @pytest.mark.parametrize("w0", [1e-9, 1e-8, 1e-7, 1e-6])
    @pytest.mark.parametrize("k0", [0.5e6, 1e6, 2e6])
    def test_lamb_dicke_below_one(self, w0, k0):
        """Test eta < 1 for waists of at least 1 nm and mu = epsilon = 1."""
        config = geometric_config(
            laser_wavenumber=k0, geometric={"w0": w0, "mu": 1.0, "epsilon": 1.0, "g0": 2 * math.pi * 1e3}
        )
        params = derive_parameters(config)
        assert 0.0 < params.eta < 1.0
        geom = CavityGeometry(w0=w0, k0=k0, length=1e-6)
        for mu in (0.1, 0.5, 1.0):
            for epsilon in (0.1, 0.5, 1.0):
                assert lamb_dicke_parameter(geom, mu, epsilon, params.x_zpf) <= params.eta

    def test_missing_mass(self):
        """Test that the geometric tier needs the mirror mass."""
        with pytest.raises(MissingTierFieldError, match="mass"):
            derive_parameters(geometric_config(mass=None))

    def test_missing_geometry(self):
        """Test that the geometric tier needs its block."""
        with pytest.raises(MissingTierFieldError, match="geometric"):
            derive_parameters(geometric_config(geometric=None))
