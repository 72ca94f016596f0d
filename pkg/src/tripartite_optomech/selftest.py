"""Built-in invariant suite run by `optomech selftest`.

Each property is checked on a few reference configurations and reported as
pass/fail; failures never raise. Two fault-injection hooks exist as
negative controls for the suite itself.
"""

import logging
import math
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tripartite_optomech.dynamics import (
    DriftMatrix,
    build_drift_matrix,
    finite_difference_jacobian,
    stability,
)
from tripartite_optomech.gaussian import (
    BipartiteCM,
    DiffusionMatrix,
    diffusion_matrix,
    log_negativity,
    partial_transpose_spectrum,
    solve_lyapunov,
)
from tripartite_optomech.modes import NonlinearityQuery, laguerre_form, nonlinearity_f
from tripartite_optomech.params import SystemConfig, SystemParams, derive_parameters
from tripartite_optomech.spectrum import integrate_spectrum
from tripartite_optomech.steady_state import SteadyState, solve_for_params

logger = logging.getLogger(__name__)

FAULTS = ("drift-perturbation", "diffusion-sign-flip")

JACOBIAN_RTOL = 1e-6
PARSEVAL_RTOL = 1e-2
NEGATIVITY_ATOL = 1e-9
LAGUERRE_RTOL = 1e-10
LAGUERRE_ATOL = 1e-12
PERTURBATION = 1e-3
RANDOM_MATRICES = 200
MARGINAL_BAND = 1e-6
SEED = 20240917


class PropertyResult(BaseModel):
    """Outcome of one checked property."""

    name: str
    passed: bool
    detail: str = ""

    model_config = ConfigDict(frozen=True)


class SelfTestReport(BaseModel):
    """All property outcomes of one selftest run."""

    results: List[PropertyResult] = Field(default_factory=list)
    fault: Optional[str] = Field(None, description="Injected fault, if any")

    model_config = ConfigDict(frozen=True)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


# ============================================================================
# Reference configurations
# ============================================================================


def reference_configs() -> Dict[str, SystemConfig]:
    """Dimensionless configurations on both sides of the cavity resonance."""
    common = {
        "input_level": "dimensionless",
        "omega_m": 1.0,
        "delta_a": 1.0,
        "gamma_a": 0.1,
    }
    return {
        "red-detuned": SystemConfig.model_validate(
            {
                **common,
                "quality_factor": 1e4,
                "kappa": 0.1,
                "delta_f": 1.0,
                "thermal_occupation": 10.0,
                "effective": {"eta": 0.04, "xi_0": 1e-3, "G": 0.01},
                "drive": {"alpha": 10.0},
            }
        ),
        "blue-detuned": SystemConfig.model_validate(
            {
                **common,
                "quality_factor": 100.0,
                "kappa": 0.07,
                "delta_f": -1.0,
                "thermal_occupation": 0.0,
                "effective": {"eta": 0.04, "xi_0": 1e-3, "G": 0.005},
                "drive": {"alpha": 10.0},
            }
        ),
        "bare-detuning": SystemConfig.model_validate(
            {
                **common,
                "quality_factor": 1e3,
                "kappa": 0.2,
                "delta_0f": 0.5,
                "thermal_occupation": 2.0,
                "effective": {"eta": 0.08, "xi_0": 5e-4, "G": 0.02},
                "drive": {"e": 1.0},
            }
        ),
    }


def _solved(config: SystemConfig) -> Tuple[SystemParams, SteadyState]:
    params = derive_parameters(config)
    return params, solve_for_params(params)


# ============================================================================
# Properties
# ============================================================================


def check_nonlinearity() -> PropertyResult:
    """f_j(n_b, 0) = 1/j!, the eta^4 truncation bound and the Laguerre cross-check."""
    for j in range(6):
        for n_b in range(101):
            if nonlinearity_f(NonlinearityQuery(j=j, n_b=n_b, eta=0.0)) != 1.0 / math.factorial(j):
                return PropertyResult(name="nonlinearity", passed=False, detail=f"f_{j}({n_b}, 0) != 1/{j}!")
    for eta in np.linspace(0.0, 0.2, 21):
        for n_b in range(51):
            f1 = nonlinearity_f(NonlinearityQuery(j=1, n_b=n_b, eta=float(eta)))
            bound = eta**4 * n_b * (n_b - 1) / 6.0
            if abs(f1 - (1.0 - eta**2 * n_b / 2.0)) > bound + 1e-15:
                return PropertyResult(
                    name="nonlinearity", passed=False, detail=f"truncation bound at n_b={n_b}, eta={eta:.2f}"
                )
    for j in range(6):
        for n_b in range(0, 101, 5):
            for eta in (0.01, 0.04, 0.1, 0.2, 0.5):
                q = NonlinearityQuery(j=j, n_b=n_b, eta=eta)
                series, laguerre = nonlinearity_f(q), laguerre_form(q)
                if abs(series - laguerre) > LAGUERRE_RTOL * abs(laguerre) + LAGUERRE_ATOL:
                    return PropertyResult(
                        name="nonlinearity",
                        passed=False,
                        detail=f"Laguerre mismatch at j={j}, n_b={n_b}, eta={eta}",
                    )
    return PropertyResult(name="nonlinearity", passed=True, detail="series, bound and Laguerre agree")


def check_jacobian(fault: Optional[str] = None) -> PropertyResult:
    """Analytic drift matrix against the finite-difference Jacobian."""
    worst = 0.0
    for label, config in reference_configs().items():
        params, ss = _solved(config)
        a = build_drift_matrix(ss, params).a
        if fault == "drift-perturbation":
            a = a * (1.0 + PERTURBATION)
        fd = finite_difference_jacobian(ss, params)
        rel = float(np.linalg.norm(a - fd, np.inf) / np.linalg.norm(a, np.inf))
        worst = max(worst, rel)
        if rel > JACOBIAN_RTOL:
            return PropertyResult(name="jacobian", passed=False, detail=f"{label}: relative error {rel:.3e}")
    return PropertyResult(name="jacobian", passed=True, detail=f"max relative error {worst:.3e}")


def check_lyapunov(fault: Optional[str] = None) -> PropertyResult:
    """Lyapunov residual certificate and covariance physicality at stable reference points."""
    checked = 0
    for config in reference_configs().values():
        params, ss = _solved(config)
        drift = build_drift_matrix(ss, params)
        verdict = stability(drift)
        if not verdict.stable:
            continue
        diffusion = diffusion_matrix(params)
        if fault == "diffusion-sign-flip":
            diffusion = DiffusionMatrix(d=-diffusion.d)
        solve_lyapunov(drift, diffusion, verdict)
        checked += 1
    if checked == 0:
        return PropertyResult(name="lyapunov", passed=False, detail="no stable reference point")
    return PropertyResult(name="lyapunov", passed=True, detail=f"{checked} stable points certified")


def check_parseval() -> PropertyResult:
    """Integrated mirror spectrum equals the covariance element V_11."""
    for label, config in reference_configs().items():
        params, ss = _solved(config)
        drift = build_drift_matrix(ss, params)
        verdict = stability(drift)
        if not verdict.stable:
            continue
        diffusion = diffusion_matrix(params)
        v11 = solve_lyapunov(drift, diffusion, verdict).v[0, 0]
        integral = integrate_spectrum(drift, diffusion, verdict=verdict)
        if abs(integral - v11) > PARSEVAL_RTOL * abs(v11):
            return PropertyResult(
                name="parseval", passed=False, detail=f"{label}: integral {integral:.6g} vs V_11 {v11:.6g}"
            )
    return PropertyResult(name="parseval", passed=True, detail="spectrum integrals match V_11")


def two_mode_squeezed(r: float) -> np.ndarray:
    """Covariance matrix of a two-mode squeezed vacuum (vacuum variance 1/2)."""
    c, s = math.cosh(2.0 * r) / 2.0, math.sinh(2.0 * r) / 2.0
    z = np.diag([1.0, -1.0])
    return np.block([[c * np.eye(2), s * z], [s * z, c * np.eye(2)]])


def check_negativity() -> PropertyResult:
    """Vacuum and two-mode squeezed states against their closed forms."""
    vacuum = log_negativity(BipartiteCM(pair="vacuum", v=0.5 * np.eye(4)))
    if vacuum.e_n != 0.0:
        return PropertyResult(name="negativity", passed=False, detail=f"vacuum E_N = {vacuum.e_n:.3e}")
    for r in (0.5, 1.0, 2.0):
        bp = BipartiteCM(pair="tmsv", v=two_mode_squeezed(r))
        result = log_negativity(bp)
        if abs(result.e_n - 2.0 * r) > NEGATIVITY_ATOL:
            return PropertyResult(name="negativity", passed=False, detail=f"r={r}: E_N = {result.e_n!r}")
        brute = float(partial_transpose_spectrum(bp)[0])
        if abs(brute - result.eta_minus) > NEGATIVITY_ATOL:
            return PropertyResult(
                name="negativity", passed=False, detail=f"r={r}: eta_minus {result.eta_minus!r} vs {brute!r}"
            )
    return PropertyResult(name="negativity", passed=True, detail="vacuum and squeezed states exact")


def check_stability_methods() -> PropertyResult:
    """Routh-Hurwitz and eigenvalue verdicts agree on random non-marginal matrices."""
    rng = np.random.default_rng(SEED)
    compared = 0
    for _ in range(RANDOM_MATRICES):
        a = rng.normal(size=(6, 6)) - rng.uniform(0.0, 4.0) * np.eye(6)
        verdict = stability(DriftMatrix(a=a))
        if abs(verdict.max_real_eigenvalue) < MARGINAL_BAND:
            continue
        compared += 1
        if not verdict.method_agreement:
            return PropertyResult(
                name="stability",
                passed=False,
                detail=f"verdicts disagree at max Re(lambda) = {verdict.max_real_eigenvalue:.3e}",
            )
    return PropertyResult(name="stability", passed=True, detail=f"{compared} matrices agree")


# ============================================================================
# Runner
# ============================================================================


def selftest(inject_fault: Optional[str] = None) -> SelfTestReport:
    """
    Run the invariant suite.

    Args:
        inject_fault: 'drift-perturbation' or 'diffusion-sign-flip' to
            corrupt the pipeline on purpose

    Returns:
        SelfTestReport with one result per property

    Raises:
        ValueError: If the fault name is unknown
    """
    if inject_fault is not None and inject_fault not in FAULTS:
        raise ValueError(f"Unknown fault '{inject_fault}'. Use one of {', '.join(FAULTS)}")

    checks: Dict[str, Callable[[], PropertyResult]] = {
        "nonlinearity": check_nonlinearity,
        "jacobian": lambda: check_jacobian(inject_fault),
        "lyapunov": lambda: check_lyapunov(inject_fault),
        "parseval": check_parseval,
        "negativity": check_negativity,
        "stability": check_stability_methods,
    }
    results = []
    for name, check in checks.items():
        try:
            result = check()
        except Exception as e:  # noqa: BLE001
            result = PropertyResult(name=name, passed=False, detail=f"{type(e).__name__}: {e}")
        logger.debug(f"selftest {name}: {'pass' if result.passed else 'FAIL'} ({result.detail})")
        results.append(result)

    report = SelfTestReport(results=results, fault=inject_fault)
    logger.info(f"Selftest: {sum(r.passed for r in results)}/{len(results)} properties passed")
    return report
