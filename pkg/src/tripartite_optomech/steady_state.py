"""Semiclassical steady state of the truncated atom-field-mirror drift.

Amplitudes are ordered (alpha, b, c): cavity field, mirror, atomic
polarization. The drift is the noise-free Langevin system with operators
replaced by amplitudes and n_b replaced by |b|^2:

    c' = -(gamma_a + i delta_a) c - i G s a b*
    a' = -(kappa + i delta_0f) a + i xi_0 a (b + b*) - i G s b c + E
    b' = -(gamma_m + i omega_m) b + i xi_0 |a|^2 - i G (s2 a c* - eta^2/2 a* c b^2)

with s = 1 - eta^2 |b|^2 / 2 and s2 = 1 - eta^2 |b|^2.
"""

from __future__ import annotations

import cmath
import logging
import math
from typing import Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from tripartite_optomech.exceptions import (
    DivergedAmplitudeError,
    NoConvergenceError,
    SingularSystemError,
)
from tripartite_optomech.params import SystemParams

logger = logging.getLogger(__name__)

HOMOTOPY_STEPS = 20
MAX_ITERATIONS = 10_000
DIVERGENCE_LIMIT = 1e12
RESIDUAL_RTOL = 1e-12
FIXED_POINT_DAMPING = 0.5
FIXED_POINT_STEP_BUDGET = 500
NEWTON_STEP_BUDGET = 100
INNER_MAX_ITERATIONS = 200
CENSUS_POINTS = 4001

# |c_s|^2 at which the low-excitation bosonized atom is no longer trustworthy
BOSONIZATION_LIMIT = 0.1

Amplitudes = Tuple[complex, complex, complex]


class SteadyState(BaseModel):
    """Certified fixed point of the classical drift."""

    alpha_s: complex = Field(..., description="Cavity amplitude")
    b_s: complex = Field(..., description="Mirror amplitude")
    c_s: complex = Field(..., description="Atomic polarization amplitude")
    delta_f: float = Field(..., description="Effective detuning delta_0f - 2 xi_0 Re(b_s)")
    delta_0f: float = Field(..., description="Bare cavity detuning")
    xi: complex = Field(..., description="Enhanced optomechanical rate 2 xi_0 alpha_s")
    drive_e: complex = Field(..., description="Drive amplitude E")
    residual_norm: float = Field(..., ge=0, description="Norm of the drift at the returned state")
    tolerance: float = Field(..., gt=0, description="Certificate bound on residual_norm")
    iterations: int = Field(0, ge=0, description="Total solver iterations")
    method: str = Field("fixed-point", description="fixed-point, or newton after a fallback or warm start")
    roots_found: Optional[int] = Field(None, description="Number of fixed points found by the census")
    multiple_roots: Optional[bool] = Field(
        None, description="True when the drift has more than one fixed point, None if not counted"
    )

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def amplitudes(self) -> Amplitudes:
        return (self.alpha_s, self.b_s, self.c_s)

    @property
    def norm(self) -> float:
        return _norm(self.amplitudes)

    def rotated(self, phi: float) -> "SteadyState":
        """Apply the U(1) map E -> e^{i phi} E to the fixed point."""
        phase = cmath.exp(1j * phi)
        return self.model_copy(
            update={
                "alpha_s": self.alpha_s * phase,
                "c_s": self.c_s * phase,
                "xi": self.xi * phase,
                "drive_e": self.drive_e * phase,
            }
        )

    def real_frame(self) -> "SteadyState":
        """Equivalent fixed point with real non-negative alpha_s."""
        if self.alpha_s == 0:
            return self
        return self.rotated(-cmath.phase(self.alpha_s))


# ============================================================================
# Drift and its derivatives
# ============================================================================


def _norm(values: Amplitudes) -> float:
    return math.sqrt(sum(abs(v) ** 2 for v in values))


def certificate_tolerance(amplitudes: Amplitudes, params: SystemParams) -> float:
    """Residual bound 1e-12 * max(1, |state| * omega_m)."""
    return RESIDUAL_RTOL * max(1.0, _norm(amplitudes) * params.omega_m)


def _field_rotation(
    a: complex, b: complex, params: SystemParams, delta_0f: Optional[float]
) -> complex:
    """Linear field term, explicit radiation-pressure shift when a bare detuning is known."""
    bare = delta_0f if delta_0f is not None else params.delta_0f
    if bare is None:
        return -(params.kappa + 1j * params.delta_f) * a
    return -(params.kappa + 1j * bare) * a + 1j * params.xi_0 * a * (b + b.conjugate())


def classical_drift(
    state: Amplitudes,
    params: SystemParams,
    drive_e: complex,
    delta_0f: Optional[float] = None,
) -> Amplitudes:
    """
    Time derivatives of (alpha, b, c) under the truncated drift.

    The bare detuning is taken from `delta_0f`, else from params.delta_0f.
    When params only hold delta_f (and no override is given) the field
    equation is evaluated at that fixed effective detuning.

    Args:
        state: (alpha, b, c)
        params: Derived system parameters
        drive_e: Complex drive amplitude E
        delta_0f: Optional bare detuning override

    Returns:
        (alpha', b', c') in the order of `state`
    """
    a, b, c = (complex(z) for z in state)
    g = params.g_eff
    eta2 = params.eta**2
    n_b = abs(b) ** 2
    s = 1.0 - 0.5 * eta2 * n_b
    s2 = 1.0 - eta2 * n_b

    field = _field_rotation(a, b, params, delta_0f)
    a_dot = field - 1j * g * s * b * c + drive_e
    b_dot = (
        -(params.gamma_m + 1j * params.omega_m) * b
        + 1j * params.xi_0 * abs(a) ** 2
        - 1j * g * (s2 * a * c.conjugate() - 0.5 * eta2 * a.conjugate() * c * b**2)
    )
    c_dot = -(params.gamma_a + 1j * params.delta_a) * c - 1j * g * s * a * b.conjugate()
    return a_dot, b_dot, c_dot


def drift_derivatives(
    state: Amplitudes, params: SystemParams, delta_0f: Optional[float] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Wirtinger derivatives P = dF/dz and Q = dF/dz* of classical_drift.

    Rows and columns follow (alpha, b, c); detuning handling is identical to
    classical_drift.

    Returns:
        (P, Q), each a 3x3 complex array
    """
    a, b, c = (complex(z) for z in state)
    g = params.g_eff
    eta2 = params.eta**2
    n_b = abs(b) ** 2
    s = 1.0 - 0.5 * eta2 * n_b
    s2 = 1.0 - eta2 * n_b
    ac, bc, cc = a.conjugate(), b.conjugate(), c.conjugate()
    xi0 = params.xi_0

    P = np.zeros((3, 3), dtype=complex)
    Q = np.zeros((3, 3), dtype=complex)

    bare = delta_0f if delta_0f is not None else params.delta_0f
    if bare is None:
        P[0, 0] = -(params.kappa + 1j * params.delta_f)
    else:
        P[0, 0] = -(params.kappa + 1j * bare) + 1j * xi0 * (b + bc)
        P[0, 1] = 1j * xi0 * a
        Q[0, 1] = 1j * xi0 * a
    P[0, 1] += -1j * g * c * s2
    Q[0, 1] += 0.5j * g * eta2 * b**2 * c
    P[0, 2] = -1j * g * s * b

    P[1, 0] = 1j * xi0 * ac - 1j * g * s2 * cc
    Q[1, 0] = 1j * xi0 * a + 0.5j * g * eta2 * c * b**2
    P[1, 1] = -(params.gamma_m + 1j * params.omega_m) + 1j * g * eta2 * (a * cc * bc + ac * c * b)
    Q[1, 1] = 1j * g * eta2 * a * b * cc
    P[1, 2] = 0.5j * g * eta2 * ac * b**2
    Q[1, 2] = -1j * g * s2 * a

    P[2, 0] = -1j * g * s * bc
    P[2, 1] = 0.5j * g * eta2 * a * bc**2
    Q[2, 1] = -1j * g * s2 * a
    P[2, 2] = -(params.gamma_a + 1j * params.delta_a)
    return P, Q


def real_jacobian(
    P: np.ndarray, Q: np.ndarray, order: Tuple[int, int, int] = (0, 1, 2)
) -> np.ndarray:
    """
    Real Jacobian in (Re, Im) pairs from Wirtinger derivatives.

    Block (i, k) is [[Re(P+Q), -Im(P-Q)], [Im(P+Q), Re(P-Q)]]. The same
    matrix results for quadratures X = sqrt(2) Re, Y = sqrt(2) Im.

    Args:
        P: dF/dz
        Q: dF/dz*
        order: Mode order of the output blocks

    Returns:
        6x6 real array
    """
    J = np.empty((6, 6))
    for row, i in enumerate(order):
        for col, k in enumerate(order):
            plus = P[i, k] + Q[i, k]
            minus = P[i, k] - Q[i, k]
            J[2 * row : 2 * row + 2, 2 * col : 2 * col + 2] = [
                [plus.real, -minus.imag],
                [plus.imag, minus.real],
            ]
    return J


# ============================================================================
# Reduced fixed-point maps
# ============================================================================


def _atom_denominator(params: SystemParams) -> complex:
    denom = complex(params.gamma_a, params.delta_a)
    if denom == 0 and params.g_eff != 0:
        raise SingularSystemError("Atomic polarization has no steady state with gamma_a = delta_a = 0")
    return denom


def mirror_response(
    intensity: float, params: SystemParams, n_guess: float = 0.0
) -> Tuple[complex, int]:
    """
    Mirror amplitude b_s at intracavity intensity |alpha|^2.

    With c eliminated, b solves a scalar equation whose only nonlinearity is
    through |b|^2; that scalar is iterated to a fixed point.

    Returns:
        (b_s, iterations)
    """
    if params.xi_0 == 0.0 or intensity == 0.0:
        return 0j, 0
    eta2 = params.eta**2
    g2 = params.g_eff**2
    atom_plus = _atom_denominator(params) if params.g_eff else 1.0
    atom_minus = atom_plus.conjugate()
    mech = complex(params.gamma_m, params.omega_m)

    n = n_guess
    b = 0j
    for it in range(1, INNER_MAX_ITERATIONS + 1):
        s = 1.0 - 0.5 * eta2 * n
        s2 = 1.0 - eta2 * n
        self_energy = g2 * s * intensity * (s2 / atom_minus + 0.5 * eta2 * n / atom_plus) if g2 else 0.0
        b = 1j * params.xi_0 * intensity / (mech - self_energy)
        n_new = abs(b) ** 2
        if abs(n_new - n) <= 1e-15 * max(1.0, n_new) or eta2 == 0.0:
            return b, it
        n = n_new
    logger.debug(f"Mirror response did not settle in {INNER_MAX_ITERATIONS} iterations")
    return b, INNER_MAX_ITERATIONS


def atom_response(alpha: complex, b: complex, params: SystemParams) -> complex:
    """Atomic amplitude c_s = -i G s alpha b* / (gamma_a + i delta_a)."""
    if params.g_eff == 0.0:
        return 0j
    s = 1.0 - 0.5 * params.eta**2 * abs(b) ** 2
    return -1j * params.g_eff * s * alpha * b.conjugate() / _atom_denominator(params)


def _field_denominator(b: complex, params: SystemParams) -> complex:
    """kappa + i delta_f + |G s b|^2 / (gamma_a + i delta_a) at mirror amplitude b."""
    if params.delta_f is not None:
        detuning = params.delta_f
    else:
        detuning = params.delta_0f - 2.0 * params.xi_0 * b.real
    denom = complex(params.kappa, detuning)
    if params.g_eff:
        s = 1.0 - 0.5 * params.eta**2 * abs(b) ** 2
        denom += (params.g_eff * s) ** 2 * abs(b) ** 2 / _atom_denominator(params)
    return denom


def _complete(alpha: complex, params: SystemParams, n_guess: float = 0.0) -> Tuple[Amplitudes, int]:
    b, inner = mirror_response(abs(alpha) ** 2, params, n_guess)
    return (alpha, b, atom_response(alpha, b, params)), inner


# ============================================================================
# Solvers
# ============================================================================


def _check_finite(amplitudes: Amplitudes) -> None:
    size = _norm(amplitudes)
    if not math.isfinite(size) or size > DIVERGENCE_LIMIT:
        raise DivergedAmplitudeError(f"Steady-state amplitude diverged (|state| = {size:.3e})")


def _damped_fixed_point(
    alpha: complex, drive_e: complex, params: SystemParams, budget: int
) -> Tuple[Optional[complex], int]:
    """Damped iteration alpha <- E / denominator(|alpha|^2); None if it stalls."""
    n_b = 0.0
    for it in range(1, budget + 1):
        b, _ = mirror_response(abs(alpha) ** 2, params, n_b)
        n_b = abs(b) ** 2
        try:
            target = drive_e / _field_denominator(b, params)
        except ZeroDivisionError:
            return None, it
        step = target - alpha
        alpha = alpha + FIXED_POINT_DAMPING * step
        if not abs(alpha) <= DIVERGENCE_LIMIT:
            _check_finite((alpha, b, 0j))
        if abs(step) <= 1e-14 * max(1.0, abs(alpha)):
            return alpha, it
    return None, budget


def _to_real(amplitudes: Amplitudes) -> np.ndarray:
    return np.array([v for z in amplitudes for v in (z.real, z.imag)])


def _to_complex(z: np.ndarray) -> Amplitudes:
    return (complex(z[0], z[1]), complex(z[2], z[3]), complex(z[4], z[5]))


def _newton(
    amplitudes: Amplitudes, drive_e: complex, params: SystemParams, budget: int
) -> Tuple[Optional[Amplitudes], int]:
    """Newton iteration on the six real unknowns with backtracking."""
    z = _to_real(amplitudes)
    residual = _to_real(classical_drift(amplitudes, params, drive_e))
    size = float(np.linalg.norm(residual))

    for it in range(1, budget + 1):
        current = _to_complex(z)
        if size <= 1e-3 * certificate_tolerance(current, params):
            return current, it - 1
        J = real_jacobian(*drift_derivatives(current, params))
        try:
            dz = np.linalg.solve(J, -residual)
        except np.linalg.LinAlgError:
            return None, it

        t = 1.0
        for _ in range(40):
            trial = z + t * dz
            trial_residual = _to_real(classical_drift(_to_complex(trial), params, drive_e))
            trial_size = float(np.linalg.norm(trial_residual))
            if np.isfinite(trial_size) and trial_size < size:
                break
            t *= 0.5
        else:
            # no decrease: at the rounding floor or stuck
            ok = size <= certificate_tolerance(current, params)
            return (current if ok else None), it

        z, residual, size = trial, trial_residual, trial_size
        _check_finite(_to_complex(z))

    current = _to_complex(z)
    return (current if size <= certificate_tolerance(current, params) else None), budget


def _fixed_point_count(drive_e: complex, params: SystemParams) -> Optional[int]:
    """
    Count fixed points through the intensity equation I |den(I)|^2 = |E|^2.

    Every root has kappa^2 I <= |E|^2 because Re den >= kappa.
    """
    if params.kappa <= 0.0:
        return None
    target = abs(drive_e) ** 2
    if target == 0.0:
        return 1
    upper = 1.01 * target / params.kappa**2
    grid = np.linspace(0.0, upper, CENSUS_POINTS)
    n_b = 0.0
    values = np.empty_like(grid)
    for k, intensity in enumerate(grid):
        b, _ = mirror_response(float(intensity), params, n_b)
        n_b = abs(b) ** 2
        values[k] = intensity * abs(_field_denominator(b, params)) ** 2 - target
    signs = np.sign(values)
    signs[signs == 0] = 1
    return int(np.count_nonzero(np.diff(signs)))


def solve_steady_state(
    params: SystemParams,
    drive_e: complex,
    *,
    homotopy_steps: int = HOMOTOPY_STEPS,
    max_iterations: int = MAX_ITERATIONS,
    detect_multiplicity: bool = False,
    initial: Optional[Amplitudes] = None,
) -> SteadyState:
    """
    Find the fixed point of classical_drift connected to alpha = 0.

    The drive is ramped from 0 to E in `homotopy_steps` steps; each step runs a
    damped fixed-point iteration on alpha (with b and c slaved to alpha) and
    falls back to Newton on the six real unknowns. A final Newton polish
    brings the residual under the certificate tolerance.

    With `initial`, typically the solution at a neighbouring parameter point,
    Newton is first tried directly at E and the ramp only runs when that
    fails. Inside a bistable window this continues the branch of `initial`.

    Args:
        params: Derived system parameters
        drive_e: Complex drive amplitude
        homotopy_steps: Number of drive ramp steps
        max_iterations: Total iteration cap
        detect_multiplicity: Also count coexisting fixed points
        initial: Warm-start amplitudes (alpha, b, c)

    Returns:
        Certified SteadyState

    Raises:
        NoConvergenceError: If the iteration cap is exceeded or Newton fails
        DivergedAmplitudeError: If |state| exceeds 1e12
    """
    drive_e = complex(drive_e)
    iterations = 0
    method = "fixed-point"

    amplitudes: Amplitudes = (0j, 0j, 0j)
    warm: Optional[Amplitudes] = None
    if initial is not None:
        guess: Amplitudes = (complex(initial[0]), complex(initial[1]), complex(initial[2]))
        try:
            warm, used = _newton(guess, drive_e, params, min(max_iterations, NEWTON_STEP_BUDGET))
            iterations += used
        except DivergedAmplitudeError:
            warm = None
        if warm is None:
            logger.debug("Warm start did not converge; ramping the drive from zero")

    if warm is not None:
        amplitudes = warm
        method = "newton"
    else:
        for step in range(1, homotopy_steps + 1):
            e_step = drive_e * step / homotopy_steps
            remaining = max_iterations - iterations
            if remaining <= 0:
                raise NoConvergenceError(f"Steady state exceeded {max_iterations} iterations")

            alpha, used = _damped_fixed_point(
                amplitudes[0], e_step, params, min(remaining, FIXED_POINT_STEP_BUDGET)
            )
            iterations += used
            if alpha is not None:
                amplitudes, _ = _complete(alpha, params, abs(amplitudes[1]) ** 2)
                continue

            logger.debug(f"Fixed point stalled at homotopy step {step}; switching to Newton")
            method = "newton"
            solved, used = _newton(
                amplitudes, e_step, params, min(max_iterations - iterations, NEWTON_STEP_BUDGET)
            )
            iterations += used
            if solved is None:
                raise NoConvergenceError(
                    f"Steady state did not converge at homotopy step {step}/{homotopy_steps} "
                    f"(|E| = {abs(e_step):.6g})"
                )
            amplitudes = solved
        _check_finite(amplitudes)

    polished, used = _newton(amplitudes, drive_e, params, NEWTON_STEP_BUDGET)
    iterations += used
    if polished is not None:
        amplitudes = polished
    if iterations > max_iterations:
        raise NoConvergenceError(f"Steady state exceeded {max_iterations} iterations")

    alpha, b, c = amplitudes
    if params.delta_f is not None:
        delta_f = params.delta_f
        delta_0f = delta_f + 2.0 * params.xi_0 * b.real
    else:
        delta_0f = params.delta_0f
        delta_f = delta_0f - 2.0 * params.xi_0 * b.real

    residual = _norm(classical_drift(amplitudes, params, drive_e, delta_0f=delta_0f))
    tolerance = certificate_tolerance(amplitudes, params)
    if residual > tolerance:
        raise NoConvergenceError(
            f"Steady-state residual {residual:.3e} exceeds tolerance {tolerance:.3e}"
        )

    roots_found = _fixed_point_count(drive_e, params) if detect_multiplicity else None
    if roots_found is not None and roots_found > 1:
        logger.info(f"Drift has {roots_found} fixed points; returning the zero-connected branch")

    logger.debug(
        f"Steady state |alpha|={abs(alpha):.6g} |b|={abs(b):.6g} |c|={abs(c):.6g} "
        f"residual={residual:.3e} iterations={iterations} ({method})"
    )
    return SteadyState(
        alpha_s=alpha,
        b_s=b,
        c_s=c,
        delta_f=delta_f,
        delta_0f=delta_0f,
        xi=2.0 * params.xi_0 * alpha,
        drive_e=drive_e,
        residual_norm=residual,
        tolerance=tolerance,
        iterations=iterations,
        method=method,
        roots_found=roots_found,
        multiple_roots=None if roots_found is None else roots_found > 1,
    )


def required_drive(alpha_s: complex, params: SystemParams) -> complex:
    """
    Drive E that holds the cavity at amplitude alpha_s.

    E = alpha_s [kappa + i delta_f + |G_2|^2 / (gamma_a + i delta_a)] with
    G_2 = G s b_s* and b_s, delta_f evaluated self-consistently at |alpha_s|^2.
    """
    alpha = complex(alpha_s)
    if alpha == 0:
        return 0j
    b, _ = mirror_response(abs(alpha) ** 2, params)
    return alpha * _field_denominator(b, params)


def resolve_drive(params: SystemParams) -> complex:
    """Drive amplitude implied by params (drive_e, else drive_alpha, else 0)."""
    if params.drive_e is not None:
        return complex(params.drive_e)
    if params.drive_alpha is not None:
        return required_drive(params.drive_alpha, params)
    return 0j


def solve_for_params(params: SystemParams, **kwargs: object) -> SteadyState:
    """solve_steady_state at the drive implied by params."""
    return solve_steady_state(params, resolve_drive(params), **kwargs)  # type: ignore[arg-type]


# ============================================================================
# Diagnostics
# ============================================================================


def excitation_probability(ss: SteadyState) -> float:
    """Atomic excitation |c_s|^2; warns when the bosonized atom leaves its ground state."""
    p = abs(ss.c_s) ** 2
    if p >= BOSONIZATION_LIMIT:
        logger.warning(f"Atomic excitation |c_s|^2 = {p:.3g} exceeds the low-excitation limit")
    return p


def closed_form_amplitudes(ss: SteadyState, params: SystemParams) -> Tuple[complex, complex]:
    """
    Closed-form b_s and c_s in terms of alpha_s, G_2 and G_3.

    b_s = alpha (xi/2 - G_3) / (omega_m - i gamma_m) and
    c_s = G_2 alpha / (i gamma_a - delta_a) hold for real alpha; they are
    evaluated in the real-alpha frame and rotated back.

    Returns:
        (b_s, c_s) predicted from alpha_s
    """
    frame = ss.real_frame()
    alpha = frame.alpha_s.real
    b, c = frame.b_s, frame.c_s
    eta2 = params.eta**2
    g = params.g_eff
    n_b = abs(b) ** 2
    g2 = g * b.conjugate() * (1.0 - 0.5 * eta2 * n_b)
    g3 = g * (c.conjugate() * (1.0 - eta2 * n_b) - 0.5 * eta2 * c * b**2)
    xi = 2.0 * params.xi_0 * alpha

    b_pred = alpha * (0.5 * xi - g3) / complex(params.omega_m, -params.gamma_m)
    c_pred = g2 * alpha / complex(-params.delta_a, params.gamma_a)
    phase = cmath.exp(1j * cmath.phase(ss.alpha_s)) if ss.alpha_s != 0 else 1.0
    return b_pred, c_pred * phase
