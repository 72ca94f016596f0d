"""Parameter sweeps over one or two configuration variables.

Every grid point runs the full pipeline (parameters, steady state, drift
matrix, stability, Lyapunov covariance, negativities and optionally the
displacement spectrum). Failures are recorded per point and never stop a
sweep.
"""

import json
import logging
from functools import partial
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from tripartite_optomech.dynamics import build_drift_matrix, stability
from tripartite_optomech.exceptions import ConfigError, OptomechError
from tripartite_optomech.gaussian import all_negativities, diffusion_matrix, solve_lyapunov
from tripartite_optomech.params import InputLevel, SystemConfig, derive_parameters
from tripartite_optomech.spectrum import displacement_spectrum
from tripartite_optomech.steady_state import Amplitudes, SteadyState, solve_for_params

logger = logging.getLogger(__name__)

SweepVariable = Literal["delta_a", "delta_f", "eta", "temperature", "drive", "gamma_a"]
SweepOutput = Literal["negativities", "spectrum", "stability", "steady_state"]

# Variables given in units of omega_m
FREQUENCY_VARIABLES = ("delta_a", "delta_f", "gamma_a", "drive")
RECORD_COLUMNS = (
    "en_am",
    "en_fa",
    "en_mf",
    "stable",
    "max_real_eigenvalue",
    "residual_norm",
    "mode_count",
    "error",
)
STEADY_STATE_COLUMNS = (
    "alpha_re",
    "alpha_im",
    "b_re",
    "b_im",
    "c_re",
    "c_im",
    "delta_f_eff",
)
CSV_FLOAT_FORMAT = "%.17g"


# ============================================================================
# Models
# ============================================================================


class GridAxis(BaseModel):
    """One swept variable and its evenly spaced grid."""

    variable: SweepVariable = Field(..., description="Configuration field to override")
    start: float = Field(..., description="First grid value")
    stop: float = Field(..., description="Last grid value")
    count: int = Field(..., ge=2, description="Number of grid points")

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_order(self) -> "GridAxis":
        if not self.start < self.stop:
            raise ValueError(f"{self.variable}: start ({self.start}) must be below stop ({self.stop})")
        return self

    def values(self) -> np.ndarray:
        """Grid values in sweep units."""
        return np.linspace(self.start, self.stop, self.count)


class SweepSpec(BaseModel):
    """A one-dimensional sweep, or a two-dimensional map when `second` is set."""

    variable: SweepVariable = Field(..., description="Configuration field to override")
    start: float = Field(..., description="First grid value")
    stop: float = Field(..., description="Last grid value")
    count: int = Field(..., ge=2, description="Number of grid points")
    config: SystemConfig = Field(..., description="Fixed base configuration")
    outputs: Tuple[SweepOutput, ...] = Field(
        ("negativities", "stability"), description="Quantities evaluated at each point"
    )
    second: Optional[GridAxis] = Field(None, description="Inner axis of a two-dimensional map")
    warm_start: bool = Field(
        True, description="Seed each serial steady state with the previous point's solution"
    )

    model_config = ConfigDict(frozen=True, extra="forbid")

    @model_validator(mode="after")
    def _check_axes(self) -> "SweepSpec":
        if not self.start < self.stop:
            raise ValueError(f"{self.variable}: start ({self.start}) must be below stop ({self.stop})")
        if self.second is not None and self.second.variable == self.variable:
            raise ValueError(f"Both map axes override '{self.variable}'")
        return self

    @property
    def axis(self) -> GridAxis:
        return GridAxis(variable=self.variable, start=self.start, stop=self.stop, count=self.count)

    def grid(self) -> List[Tuple[float, Optional[float]]]:
        """Grid points in row-major order (outer axis first)."""
        outer = [float(v) for v in self.axis.values()]
        if self.second is None:
            return [(v, None) for v in outer]
        inner = [float(v) for v in self.second.values()]
        return [(v, w) for v in outer for w in inner]


class SweepRecord(BaseModel):
    """Result at one grid point."""

    value: float = Field(..., description="Value of the swept variable")
    value2: Optional[float] = Field(None, description="Value of the second map variable")
    en_am: Optional[float] = Field(None, ge=0, description="Atom-mirror log negativity")
    en_fa: Optional[float] = Field(None, ge=0, description="Field-atom log negativity")
    en_mf: Optional[float] = Field(None, ge=0, description="Mirror-field log negativity")
    stable: bool = Field(False, description="Drift matrix stability verdict")
    max_real_eigenvalue: Optional[float] = Field(None, description="max Re(lambda) of A, units of omega_m")
    residual_norm: Optional[float] = Field(None, ge=0, description="Steady-state residual")
    mode_count: Optional[int] = Field(None, ge=0, description="Spectral peaks at omega >= 0")
    alpha_re: Optional[float] = Field(None, description="Re alpha_s")
    alpha_im: Optional[float] = Field(None, description="Im alpha_s")
    b_re: Optional[float] = Field(None, description="Re b_s")
    b_im: Optional[float] = Field(None, description="Im b_s")
    c_re: Optional[float] = Field(None, description="Re c_s")
    c_im: Optional[float] = Field(None, description="Im c_s")
    delta_f_eff: Optional[float] = Field(None, description="Effective cavity detuning, units of omega_m")
    error: Optional[str] = Field(None, description="Failure captured at this point")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def _negativities_need_stability(self) -> "SweepRecord":
        if not self.stable and any(v is not None for v in (self.en_am, self.en_fa, self.en_mf)):
            raise ValueError("Negativities are only reported at stable points")
        return self


# ============================================================================
# Overrides
# ============================================================================


def apply_override(config: SystemConfig, variable: str, value: float) -> SystemConfig:
    """
    Return a copy of config with one sweep variable replaced.

    Frequency-like variables are multiples of omega_m; eta replaces the
    effective-tier Lamb-Dicke parameter; temperature (K) clears any
    thermal_occupation override.

    Raises:
        ConfigError: If the variable cannot be applied to this config
    """
    data: Dict[str, Any] = config.model_dump(mode="json", by_alias=True)
    scaled = value * config.omega_m if variable in FREQUENCY_VARIABLES else value

    if variable == "delta_a":
        data["delta_a"] = scaled
    elif variable == "delta_f":
        data["delta_f"] = scaled
        data["delta_0f"] = None
    elif variable == "gamma_a":
        data["gamma_a"] = scaled
    elif variable == "drive":
        data["drive"] = {"e": scaled, "alpha": None}
    elif variable == "temperature":
        data["temperature"] = value
        data["thermal_occupation"] = None
    elif variable == "eta":
        if config.input_level == InputLevel.GEOMETRIC or data.get("effective") is None:
            raise ConfigError("Sweeping eta requires the effective or dimensionless tier")
        data["effective"]["eta"] = value
    else:
        raise ConfigError(f"Unknown sweep variable '{variable}'")

    try:
        return SystemConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"{variable} = {value:g}: {e.errors()[0]['msg']}") from e


# ============================================================================
# Evaluation
# ============================================================================


def _steady_state_fields(ss: SteadyState, omega_m: float) -> Dict[str, float]:
    return {
        "alpha_re": ss.alpha_s.real,
        "alpha_im": ss.alpha_s.imag,
        "b_re": ss.b_s.real,
        "b_im": ss.b_s.imag,
        "c_re": ss.c_s.real,
        "c_im": ss.c_s.imag,
        "delta_f_eff": ss.delta_f / omega_m,
    }


def _evaluate(
    config: SystemConfig,
    outputs: Tuple[str, ...],
    variables: Tuple[str, Optional[str]],
    point: Tuple[float, Optional[float]],
    initial: Optional[Amplitudes] = None,
) -> Tuple[SweepRecord, Optional[Amplitudes]]:
    value, value2 = point
    first, second = variables
    fields: Dict[str, Any] = {"value": value, "value2": value2}
    amplitudes: Optional[Amplitudes] = None
    try:
        cfg = apply_override(config, first, value)
        if second is not None and value2 is not None:
            cfg = apply_override(cfg, second, value2)
        params = derive_parameters(cfg)
        ss = solve_for_params(params, initial=initial)
        amplitudes = ss.amplitudes
        fields["residual_norm"] = ss.residual_norm
        if "steady_state" in outputs:
            fields.update(_steady_state_fields(ss, params.omega_m))

        # Negativities and spectra need the verdict even when it is not reported
        drift = build_drift_matrix(ss, params)
        verdict = stability(drift)
        fields["stable"] = verdict.stable
        if "stability" in outputs:
            fields["max_real_eigenvalue"] = verdict.max_real_over_omega_m
        if not verdict.stable:
            return SweepRecord(**fields), amplitudes

        diffusion = diffusion_matrix(params)
        if "negativities" in outputs:
            negativities = all_negativities(solve_lyapunov(drift, diffusion, verdict))
            fields["en_am"] = negativities["mirror-atom"].e_n
            fields["en_fa"] = negativities["field-atom"].e_n
            fields["en_mf"] = negativities["mirror-field"].e_n
        if "spectrum" in outputs:
            fields["mode_count"] = displacement_spectrum(drift, diffusion, verdict=verdict).mode_count
    except (OptomechError, ValidationError) as e:
        logger.debug(f"Point {point} failed: {e}")
        # Drop partial negativities so the record stays consistent
        for key in ("en_am", "en_fa", "en_mf", "mode_count"):
            fields.pop(key, None)
        fields["error"] = f"{type(e).__name__}: {e}".splitlines()[0]
    return SweepRecord(**fields), amplitudes


def evaluate_point(
    config: SystemConfig,
    outputs: Tuple[str, ...],
    variables: Tuple[str, Optional[str]],
    point: Tuple[float, Optional[float]],
    initial: Optional[Amplitudes] = None,
) -> SweepRecord:
    """Run the pipeline at one grid point, capturing any failure in the record."""
    return _evaluate(config, outputs, variables, point, initial)[0]


def run_sweep(spec: SweepSpec, jobs: int = 1) -> List[SweepRecord]:
    """
    Evaluate every grid point of a sweep or map.

    Points are dispatched to a process pool when jobs > 1; the result list
    is always in grid order. A serial sweep with `spec.warm_start` seeds
    each steady state with the previous point's solution (per row of a
    map), so the sweep follows one branch through bistable windows.

    Args:
        spec: Sweep specification
        jobs: Worker processes

    Returns:
        One SweepRecord per grid point

    Raises:
        ConfigError: If the base configuration cannot take the sweep variables
    """
    variables = (spec.variable, spec.second.variable if spec.second else None)
    # Reject sweeps the base config cannot express before spawning workers
    apply_override(spec.config, spec.variable, spec.start)
    if spec.second is not None:
        apply_override(spec.config, spec.second.variable, spec.second.start)

    grid = spec.grid()
    outputs = tuple(spec.outputs)
    logger.info(f"Sweep over {' x '.join(v for v in variables if v)}: {len(grid)} points, {jobs} job(s)")

    if jobs > 1:
        worker = partial(evaluate_point, spec.config, outputs, variables)
        with Pool(processes=jobs) as pool:
            records = pool.map(worker, grid)
    else:
        records = []
        previous: Optional[Amplitudes] = None
        row: Optional[float] = None
        for point in grid:
            if spec.second is not None and point[0] != row:
                previous, row = None, point[0]
            record, state = _evaluate(
                spec.config, outputs, variables, point, previous if spec.warm_start else None
            )
            records.append(record)
            previous = state

    failed = sum(1 for r in records if r.error is not None)
    unstable = sum(1 for r in records if not r.stable and r.error is None)
    logger.info(f"Sweep finished: {len(records)} points, {unstable} unstable, {failed} failed")
    return records


# ============================================================================
# Output
# ============================================================================


def _columns(spec: SweepSpec) -> Tuple[str, ...]:
    if "steady_state" in spec.outputs:
        return RECORD_COLUMNS + STEADY_STATE_COLUMNS
    return RECORD_COLUMNS


def records_to_frame(records: List[SweepRecord], spec: SweepSpec) -> pd.DataFrame:
    """Records as a table whose first column(s) are named after the swept variables."""
    rows = [r.model_dump() for r in records]
    df = pd.DataFrame(rows, columns=["value", "value2", *_columns(spec)])
    df = df.rename(columns={"value": spec.variable})
    if spec.second is not None:
        df = df.rename(columns={"value2": spec.second.variable})
    else:
        df = df.drop(columns=["value2"])
    df["mode_count"] = df["mode_count"].astype("Int64")
    return df


def write_records(
    records: List[SweepRecord],
    spec: SweepSpec,
    path: Union[str, Path],
    fmt: Literal["csv", "json"] = "csv",
) -> Path:
    """
    Write sweep records as CSV or as one JSON document.

    CSV floats use 17 significant digits and empty cells for missing values.
    Steady-state columns are only written when the sweep requested them.

    Args:
        records: Output of run_sweep
        spec: The sweep that produced them
        path: Output file
        fmt: 'csv' or 'json'

    Returns:
        The written path
    """
    path = Path(path)
    if fmt == "csv":
        records_to_frame(records, spec).to_csv(
            path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n", encoding="utf-8"
        )
    elif fmt == "json":
        excluded = set() if "steady_state" in spec.outputs else set(STEADY_STATE_COLUMNS)
        if spec.second is None:
            excluded.add("value2")
        document = {
            "variable": spec.variable,
            "variable2": spec.second.variable if spec.second else None,
            "records": [r.model_dump(exclude=excluded) for r in records],
        }
        path.write_text(json.dumps(document, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"Unsupported output format '{fmt}'. Use csv or json")
    logger.info(f"Wrote {len(records)} records to {path}")
    return path
