"""Drift matrix of the linearized quadrature fluctuations and its stability."""

from __future__ import annotations

import logging
import math
from typing import List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from tripartite_optomech.exceptions import IllConditionedError
from tripartite_optomech.params import SystemParams
from tripartite_optomech.steady_state import (
    SteadyState,
    classical_drift,
    drift_derivatives,
    real_jacobian,
)

logger = logging.getLogger(__name__)

QUADRATURES = ("q", "p", "X_a", "Y_a", "X_c", "Y_c")

# (alpha, b, c) indices of the mirror, field and atom blocks of u
MODE_ORDER = (1, 0, 2)

STABILITY_MARGIN = 1e-9  # times omega_m
PIVOT_FLOOR = 1e-300
FD_RELATIVE_STEP = 1e-6
LAYOUT_MATCH_RTOL = 1e-9


# ============================================================================
# Domain types
# ============================================================================


class DriftMatrix(BaseModel):
    """6x6 drift matrix over u = [q, p, X_a, Y_a, X_c, Y_c] (mirror, field, atom)."""

    a: np.ndarray = Field(..., description="Real 6x6 drift matrix")
    omega_m: float = Field(1.0, gt=0, description="Mechanical frequency, sets the stability margin")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("a", mode="before")
    @classmethod
    def _check_matrix(cls, v: object) -> np.ndarray:
        a = np.asarray(v, dtype=float)
        if a.shape != (6, 6):
            raise ValueError(f"Drift matrix must be 6x6, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("Drift matrix has non-finite entries")
        return a


class DriftCoefficients(BaseModel):
    """Coefficients of the drift matrix in its hand-derived closed-form layout.

    m3 is the mirror-row atom coupling; m3_alt is the second hand-derived
    variant of the same symbol. n1..n3 include the factor G.
    """

    gamma_1m: float
    gamma_2m: float
    omega_1m: float
    omega_2m: float
    g1: complex
    g2: complex
    g3: complex
    m1: complex
    m2: complex
    m3: complex
    m3_alt: complex
    m4: complex
    m5: complex
    n1: complex
    n2: complex
    n3: complex
    xi: complex
    delta_f: float

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class StabilityVerdict(BaseModel):
    """Outcome of the Routh-Hurwitz and eigenvalue stability tests."""

    stable: bool = Field(..., description="Every eigenvalue has real part below -margin")
    max_real_eigenvalue: float = Field(..., description="Largest real part of the spectrum")
    method_agreement: bool = Field(..., description="Routh-Hurwitz and eigenvalue verdicts agree")
    routh_stable: Optional[bool] = Field(None, description="Routh-Hurwitz verdict, None if ill-conditioned")
    margin: float = Field(..., ge=0, description="Stability margin")
    eigenvalues: Tuple[complex, ...] = Field(..., description="Spectrum of A")
    omega_m: float = Field(1.0, gt=0, description="Frequency unit of the drift matrix")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def max_real_over_omega_m(self) -> float:
        """Largest real part in units of omega_m."""
        return self.max_real_eigenvalue / self.omega_m


class LayoutDiscrepancy(BaseModel):
    """Mismatch between the closed-form layout and the linearized drift matrix."""

    max_abs: float
    relative: float
    mismatched: List[Tuple[int, int]] = Field(
        default_factory=list, description="1-based (row, column) entries beyond tolerance"
    )

    model_config = ConfigDict(frozen=True)


# ============================================================================
# Drift matrix
# ============================================================================


def build_drift_matrix(ss: SteadyState, params: SystemParams) -> DriftMatrix:
    """
    Linearize the classical drift around a fixed point.

    The quadratures are X = sqrt(2) Re(delta o) and Y = sqrt(2) Im(delta o)
    for each mode, so A is the real Jacobian of the drift.

    Args:
        ss: Certified steady state
        params: Derived system parameters

    Returns:
        DriftMatrix
    """
    P, Q = drift_derivatives(ss.amplitudes, params, delta_0f=ss.delta_0f)
    return DriftMatrix(a=real_jacobian(P, Q, order=MODE_ORDER), omega_m=params.omega_m)


def _to_quadratures(amplitudes: Tuple[complex, complex, complex]) -> np.ndarray:
    out = np.empty(6)
    for slot, mode in enumerate(MODE_ORDER):
        z = amplitudes[mode]
        out[2 * slot] = math.sqrt(2.0) * z.real
        out[2 * slot + 1] = math.sqrt(2.0) * z.imag
    return out


def _from_quadratures(u: np.ndarray) -> Tuple[complex, complex, complex]:
    amps = [0j, 0j, 0j]
    for slot, mode in enumerate(MODE_ORDER):
        amps[mode] = complex(u[2 * slot], u[2 * slot + 1]) / math.sqrt(2.0)
    return amps[0], amps[1], amps[2]


def finite_difference_jacobian(
    ss: SteadyState, params: SystemParams, rel_step: float = FD_RELATIVE_STEP
) -> np.ndarray:
    """
    Central-difference Jacobian of classical_drift in quadratures.

    Step h_i = rel_step * (1 + |u_i|) with one level of Richardson
    extrapolation.
    """
    u0 = _to_quadratures(ss.amplitudes)

    def flow(u: np.ndarray) -> np.ndarray:
        derivs = classical_drift(_from_quadratures(u), params, ss.drive_e, delta_0f=ss.delta_0f)
        return _to_quadratures(derivs)

    def central(h: np.ndarray) -> np.ndarray:
        J = np.empty((6, 6))
        for j in range(6):
            e = np.zeros(6)
            e[j] = h[j]
            J[:, j] = (flow(u0 + e) - flow(u0 - e)) / (2.0 * h[j])
        return J

    h = rel_step * (1.0 + np.abs(u0))
    coarse = central(h)
    fine = central(h / 2.0)
    return (4.0 * fine - coarse) / 3.0


# ============================================================================
# Closed-form coefficients
# ============================================================================


def drift_coefficients(ss: SteadyState, params: SystemParams) -> DriftCoefficients:
    """
    Evaluate the closed-form drift coefficients at a steady state.

    Mirror damping and frequency shifts use m4 for the q row and m5 for the p
    row; the atom coupling of the p row uses m3_alt.

    Args:
        ss: Certified steady state
        params: Derived system parameters

    Returns:
        DriftCoefficients
    """
    a, b, c = ss.amplitudes
    g = params.g_eff
    eta2 = params.eta**2
    n_b = abs(b) ** 2
    s = 1.0 - 0.5 * eta2 * n_b
    s2 = 1.0 - eta2 * n_b
    ac, bc, cc = a.conjugate(), b.conjugate(), c.conjugate()

    m4 = -g * eta2 * a * (bc * cc + c * b - cc * b)
    m5 = -g * eta2 * a * (bc * cc + c * b + cc * b)

    return DriftCoefficients(
        gamma_1m=params.gamma_m + m4.imag,
        gamma_2m=params.gamma_m + m5.imag,
        omega_1m=params.omega_m + m4.real,
        omega_2m=params.omega_m + m5.real,
        g1=g * (cc * s2 + 0.5 * eta2 * c * b**2),
        g2=g * bc * s,
        g3=g * (cc * s2 - 0.5 * eta2 * c * b**2),
        m1=-g * a * (s2 + 0.5 * eta2 * bc**2),
        m2=g * a * (s2 - 0.5 * eta2 * bc**2),
        m3=g * c * (s2 + 0.5 * eta2 * b**2),
        m3_alt=g * c * (s2 - 0.5 * eta2 * b**2),
        m4=m4,
        m5=m5,
        n1=g * b * s,
        n2=-g * a * (s2 + 0.5 * eta2 * b**2),
        n3=g * a * (s2 - 0.5 * eta2 * b**2),
        xi=ss.xi,
        delta_f=ss.delta_f,
    )


def render_closed_form_layout(coeffs: DriftCoefficients, params: SystemParams) -> np.ndarray:
    """Place closed-form coefficients into the hand-derived 6x6 layout (real xi assumed)."""
    k = coeffs
    kappa, gamma_a, delta_a, delta_f = params.kappa, params.gamma_a, params.delta_a, k.delta_f
    return np.array(
        [
            [-k.gamma_1m, k.omega_1m, -k.m2.imag, k.m2.real, -k.m1.imag, k.m1.real],
            [-k.omega_2m, -k.gamma_2m, -k.m2.real, -k.m2.imag, -k.m3_alt.real, -k.m3_alt.imag],
            [-k.g1.imag, k.g1.real, -kappa, delta_f, -k.g2.imag, k.g2.real],
            [k.xi.real - k.g3.real, -k.g3.imag, -delta_f, -kappa, -k.g2.real, -k.g2.imag],
            [-k.n2.imag, k.n2.real, -k.n1.imag, k.n1.real, -gamma_a, delta_a],
            [-k.n3.real, -k.n3.imag, -k.n1.real, -k.n1.imag, -delta_a, -gamma_a],
        ]
    )


def layout_discrepancy(ss: SteadyState, params: SystemParams) -> LayoutDiscrepancy:
    """
    Compare the closed-form layout with the linearized drift matrix.

    Both are evaluated in the frame where alpha_s is real.
    """
    frame = ss.real_frame()
    exact = build_drift_matrix(frame, params).a
    rendered = render_closed_form_layout(drift_coefficients(frame, params), params)
    diff = np.abs(rendered - exact)
    scale = float(np.linalg.norm(exact, np.inf)) or 1.0
    rows, cols = np.nonzero(diff > LAYOUT_MATCH_RTOL * scale)
    mismatched = [(int(r) + 1, int(c) + 1) for r, c in zip(rows, cols)]
    if mismatched:
        logger.warning(
            f"Closed-form drift layout differs from the linearization in {len(mismatched)} "
            f"entries (max |diff| = {diff.max():.3e})"
        )
    return LayoutDiscrepancy(
        max_abs=float(diff.max()), relative=float(diff.max()) / scale, mismatched=mismatched
    )


# ============================================================================
# Stability
# ============================================================================


def faddeev_leverrier(a: np.ndarray) -> np.ndarray:
    """
    Characteristic polynomial det(lambda I - A) by the Faddeev-LeVerrier recurrence.

    Returns:
        Coefficients, highest degree first, leading coefficient 1
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    identity = np.eye(n)
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * identity
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def routh_table(coeffs: np.ndarray) -> np.ndarray:
    """
    Routh array of a polynomial given highest degree first.

    Raises:
        IllConditionedError: If a pivot underflows below 1e-300
    """
    coeffs = np.asarray(coeffs, dtype=float)
    n = len(coeffs) - 1
    width = n // 2 + 1
    table = np.zeros((n + 1, width + 1))
    table[0, : len(coeffs[0::2])] = coeffs[0::2]
    table[1, : len(coeffs[1::2])] = coeffs[1::2]
    for j in range(2, n + 1):
        pivot = table[j - 1, 0]
        if abs(pivot) < PIVOT_FLOOR:
            raise IllConditionedError(f"Routh pivot in row {j - 1} underflowed ({pivot:.3e})")
        for i in range(width):
            table[j, i] = (pivot * table[j - 2, i + 1] - table[j - 2, 0] * table[j - 1, i + 1]) / pivot
    return table[:, :width]


def routh_hurwitz(coeffs: np.ndarray) -> bool:
    """True when every root lies in the open left half-plane (leading coefficient > 0)."""
    first_column = routh_table(coeffs)[:, 0]
    return bool(np.all(first_column > 0.0))


def stability(
    drift: Union[DriftMatrix, np.ndarray], margin: Optional[float] = None
) -> StabilityVerdict:
    """
    Decide whether every eigenvalue of A has real part below -margin.

    Two independent tests run on A: Routh-Hurwitz on the Faddeev-LeVerrier
    characteristic polynomial of A + margin*I, and a direct eigenvalue
    computation. Marginal matrices count as unstable.

    Args:
        drift: Drift matrix (a bare array is taken with omega_m = 1)
        margin: Override for the default 1e-9 * omega_m

    Returns:
        StabilityVerdict
    """
    if not isinstance(drift, DriftMatrix):
        drift = DriftMatrix(a=drift)
    a = drift.a
    if margin is None:
        margin = STABILITY_MARGIN * drift.omega_m

    eigenvalues = np.linalg.eigvals(a)
    max_real = float(np.max(eigenvalues.real))
    eigen_stable = max_real < -margin

    shifted = a + margin * np.eye(6)
    scale = float(np.linalg.norm(shifted, np.inf)) or 1.0
    try:
        routh_stable: Optional[bool] = routh_hurwitz(faddeev_leverrier(shifted / scale))
    except IllConditionedError as e:
        logger.warning(f"{e}; using the eigenvalue verdict alone")
        routh_stable = None

    agreement = routh_stable is not None and routh_stable == eigen_stable
    if routh_stable is not None and not agreement:
        logger.warning(
            f"Routh-Hurwitz ({routh_stable}) and eigenvalue ({eigen_stable}) verdicts disagree "
            f"at max Re(lambda) = {max_real:.3e}"
        )
    stable = eigen_stable and routh_stable is not False

    return StabilityVerdict(
        stable=stable,
        max_real_eigenvalue=max_real,
        method_agreement=agreement,
        routh_stable=routh_stable,
        margin=margin,
        eigenvalues=tuple(complex(z) for z in eigenvalues),
        omega_m=drift.omega_m,
    )
