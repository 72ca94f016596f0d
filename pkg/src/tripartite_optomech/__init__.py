"""Tripartite optomechanics: steady state, Gaussian entanglement and displacement spectra."""

__version__ = "0.1.0"

from tripartite_optomech.config import load_config, parse_flat_config
from tripartite_optomech.dynamics import (
    DriftMatrix,
    StabilityVerdict,
    build_drift_matrix,
    drift_coefficients,
    finite_difference_jacobian,
    layout_discrepancy,
    stability,
)
from tripartite_optomech.exceptions import ConfigError, OptomechError, SolverError
from tripartite_optomech.gaussian import (
    CovarianceMatrix,
    DiffusionMatrix,
    NegativityResult,
    all_negativities,
    diffusion_matrix,
    log_negativity,
    reduce_bipartite,
    solve_lyapunov,
)
from tripartite_optomech.modes import NonlinearityQuery, nonlinearity_f, nonlinearity_table
from tripartite_optomech.params import InputLevel, SystemConfig, SystemParams, derive_parameters
from tripartite_optomech.spectrum import SpectrumSeries, displacement_spectrum, integrate_spectrum
from tripartite_optomech.steady_state import (
    SteadyState,
    classical_drift,
    required_drive,
    solve_for_params,
    solve_steady_state,
)
from tripartite_optomech.sweep import SweepRecord, SweepSpec, run_sweep, write_records

__all__ = [
    "__version__",
    "ConfigError",
    "CovarianceMatrix",
    "DiffusionMatrix",
    "DriftMatrix",
    "InputLevel",
    "NegativityResult",
    "NonlinearityQuery",
    "OptomechError",
    "SolverError",
    "SpectrumSeries",
    "StabilityVerdict",
    "SteadyState",
    "SweepRecord",
    "SweepSpec",
    "SystemConfig",
    "SystemParams",
    "all_negativities",
    "build_drift_matrix",
    "classical_drift",
    "derive_parameters",
    "diffusion_matrix",
    "displacement_spectrum",
    "drift_coefficients",
    "finite_difference_jacobian",
    "integrate_spectrum",
    "layout_discrepancy",
    "load_config",
    "log_negativity",
    "nonlinearity_f",
    "nonlinearity_table",
    "parse_flat_config",
    "reduce_bipartite",
    "required_drive",
    "run_sweep",
    "solve_for_params",
    "solve_lyapunov",
    "solve_steady_state",
    "stability",
    "write_records",
]
