"""Shared dimensionless reference configurations."""

from typing import Any, Dict

import numpy as np
import pytest

from tripartite_optomech.params import SystemConfig, SystemParams, derive_parameters


def make_config(**overrides: Any) -> SystemConfig:
    """Dimensionless red-detuned configuration with optional top-level overrides."""
    data: Dict[str, Any] = {
        "input_level": "dimensionless",
        "omega_m": 1.0,
        "quality_factor": 1e4,
        "kappa": 0.1,
        "gamma_a": 0.1,
        "delta_a": 1.0,
        "delta_f": 1.0,
        "thermal_occupation": 10.0,
        "effective": {"eta": 0.04, "xi_0": 1e-3, "G": 0.01},
        "drive": {"alpha": 10.0},
    }
    data.update(overrides)
    return SystemConfig.model_validate(data)


def random_params(rng: np.random.Generator) -> SystemParams:
    """Random dimensionless parameters inside the range used by the Jacobian properties."""
    config = SystemConfig.model_validate(
        {
            "input_level": "dimensionless",
            "omega_m": 1.0,
            "quality_factor": float(rng.uniform(100.0, 1e4)),
            "kappa": float(rng.uniform(0.05, 0.5)),
            "gamma_a": float(rng.uniform(0.02, 0.5)),
            "delta_a": float(rng.uniform(-1.5, 1.5)),
            "delta_f": float(rng.uniform(-1.5, 1.5)),
            "thermal_occupation": 1.0,
            "effective": {
                "eta": float(rng.uniform(0.0, 0.1)),
                "xi_0": float(rng.uniform(1e-4, 1e-3)),
                "G": float(rng.uniform(0.0, 0.005)),
            },
            "drive": {"alpha": float(rng.uniform(1.0, 20.0))},
        }
    )
    return derive_parameters(config)


@pytest.fixture
def red_config() -> SystemConfig:
    """Red-detuned cavity (delta_f = +omega_m), thermal mirror."""
    return make_config()


@pytest.fixture
def red_params(red_config: SystemConfig) -> SystemParams:
    return derive_parameters(red_config)


@pytest.fixture
def blue_config() -> SystemConfig:
    """Blue-detuned cavity (delta_f = -omega_m) below the parametric threshold, zero temperature."""
    return make_config(
        quality_factor=100.0,
        kappa=0.07,
        delta_f=-1.0,
        thermal_occupation=0.0,
        effective={"eta": 0.04, "xi_0": 1e-3, "G": 0.005},
    )


@pytest.fixture
def blue_params(blue_config: SystemConfig) -> SystemParams:
    return derive_parameters(blue_config)


@pytest.fixture
def nms_config() -> SystemConfig:
    """Red-detuned cavity and atom on the same sideband; coupling grows with eta."""
    return SystemConfig.model_validate(
        {
            "input_level": "dimensionless",
            "omega_m": 2 * np.pi * 10e6,
            "quality_factor": 1e5,
            "kappa": 0.07 * 2 * np.pi * 10e6,
            "gamma_a": 0.04 * 2 * np.pi * 10e6,
            "delta_a": 2 * np.pi * 10e6,
            "delta_f": 2 * np.pi * 10e6,
            "temperature": 0.4,
            "effective": {
                "eta": 0.04,
                "xi_0": 0.2 / 15 * 2 * np.pi * 10e6,
                "coupling_prefactor": 0.8 * 2 * np.pi * 10e6,
            },
            "drive": {"alpha": 15.0},
        }
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)
