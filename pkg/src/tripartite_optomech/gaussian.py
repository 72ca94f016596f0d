"""Stationary covariance matrix and bipartite logarithmic negativity.

Quadratures follow X = (o + o^dag)/sqrt(2), so the vacuum variance is 1/2
and a two-mode state is entangled when eta_minus < 1/2.
"""

from __future__ import annotations

import logging
import math
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from tripartite_optomech.dynamics import DriftMatrix, StabilityVerdict, stability
from tripartite_optomech.exceptions import (
    CertificateError,
    SingularSystemError,
    UnphysicalCovarianceError,
    UnstableDriftError,
)
from tripartite_optomech.params import SystemParams

logger = logging.getLogger(__name__)

MODES = ("mirror", "field", "atom")
PAIRS: Dict[str, Tuple[int, int]] = {
    "mirror-field": (0, 1),
    "mirror-atom": (0, 2),
    "field-atom": (1, 2),
}

LYAPUNOV_RTOL = 1e-10
PHYSICALITY_TOL = 1e-9
DISCRIMINANT_TOL = 1e-12
SINGULAR_RCOND = 1e-15


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal symplectic form with [[0, 1], [-1, 0]] blocks."""
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def physicality_margin(v: np.ndarray) -> float:
    """Smallest eigenvalue of V + (i/2) Omega; negative values violate uncertainty."""
    v = np.asarray(v, dtype=float)
    omega = symplectic_form(v.shape[0] // 2)
    return float(np.linalg.eigvalsh(v + 0.5j * omega)[0])


# ============================================================================
# Domain types
# ============================================================================


class DiffusionMatrix(BaseModel):
    """Diagonal noise diffusion matrix in the drift-matrix ordering."""

    d: np.ndarray = Field(..., description="Real 6x6 diagonal matrix")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @field_validator("d", mode="before")
    @classmethod
    def _check_matrix(cls, v: object) -> np.ndarray:
        d = np.asarray(v, dtype=float)
        if d.shape != (6, 6):
            raise ValueError(f"Diffusion matrix must be 6x6, got shape {d.shape}")
        if not np.all(np.isfinite(d)):
            raise ValueError("Diffusion matrix has non-finite entries")
        return d


class CovarianceMatrix(BaseModel):
    """Stationary 6x6 covariance matrix with its certificates."""

    v: np.ndarray = Field(..., description="Symmetric 6x6 covariance matrix")
    residual: float = Field(..., ge=0, description="|A V + V A^T + D|_inf")
    physicality: float = Field(..., description="min eig(V + i Omega / 2)")

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)


class BipartiteCM(BaseModel):
    """4x4 covariance matrix of two modes, blocks [[B, C], [C^T, B']]."""

    pair: str
    v: np.ndarray

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    @property
    def b(self) -> np.ndarray:
        return self.v[:2, :2]

    @property
    def b_prime(self) -> np.ndarray:
        return self.v[2:, 2:]

    @property
    def c(self) -> np.ndarray:
        return self.v[:2, 2:]


class NegativityResult(BaseModel):
    """Logarithmic negativity of a two-mode Gaussian state."""

    e_n: float = Field(..., ge=0, description="Logarithmic negativity (nats)")
    eta_minus: float = Field(..., gt=0, description="Smallest symplectic eigenvalue of the partial transpose")
    sigma: float = Field(..., description="det B + det B' - 2 det C")

    model_config = ConfigDict(frozen=True)


# ============================================================================
# Lyapunov equation
# ============================================================================


def diffusion_matrix(params: SystemParams) -> DiffusionMatrix:
    """D = diag[gamma_m(2 n_th + 1) x2, kappa x2, gamma_a x2]."""
    thermal = params.gamma_m * (2.0 * params.n_th + 1.0)
    return DiffusionMatrix(
        d=np.diag([thermal, thermal, params.kappa, params.kappa, params.gamma_a, params.gamma_a])
    )


def _lyapunov_residual(a: np.ndarray, v: np.ndarray, d: np.ndarray) -> float:
    a_ext = a.astype(np.longdouble)
    v_ext = v.astype(np.longdouble)
    r = a_ext @ v_ext + v_ext @ a_ext.T + d.astype(np.longdouble)
    return float(np.max(np.sum(np.abs(r), axis=1)))


def solve_lyapunov(
    drift: DriftMatrix,
    diffusion: DiffusionMatrix,
    verdict: Optional[StabilityVerdict] = None,
) -> CovarianceMatrix:
    """
    Solve A V + V A^T = -D through the 36x36 Kronecker system.

    One refinement step with an extended-precision residual follows the LU
    solve; the result is symmetrized and certified.

    Args:
        drift: Drift matrix A
        diffusion: Diffusion matrix D
        verdict: Stability verdict of A, computed when omitted

    Returns:
        CovarianceMatrix

    Raises:
        UnstableDriftError: If A is not stable
        SingularSystemError: If the Kronecker system is singular
        CertificateError: If the residual exceeds 1e-10 |D|_inf
        UnphysicalCovarianceError: If V + i Omega/2 has an eigenvalue below -1e-9
    """
    verdict = verdict or stability(drift)
    if not verdict.stable:
        raise UnstableDriftError(
            f"Lyapunov equation requires a stable drift matrix "
            f"(max Re(lambda) = {verdict.max_real_eigenvalue:.3e})"
        )
    a = drift.a
    d = diffusion.d
    n = a.shape[0]
    identity = np.eye(n)
    kron = np.kron(identity, a) + np.kron(a, identity)
    rhs = -d.reshape(-1)

    try:
        x = np.linalg.solve(kron, rhs)
        correction = (
            rhs.astype(np.longdouble) - kron.astype(np.longdouble) @ x.astype(np.longdouble)
        ).astype(float)
        x = x + np.linalg.solve(kron, correction)
    except np.linalg.LinAlgError as e:
        raise SingularSystemError(f"Kronecker Lyapunov system is singular: {e}") from e
    if not np.all(np.isfinite(x)) or np.linalg.cond(kron) > 1.0 / SINGULAR_RCOND:
        raise SingularSystemError("Kronecker Lyapunov system is numerically singular")

    v = x.reshape(n, n)
    v = 0.5 * (v + v.T)

    residual = _lyapunov_residual(a, v, d)
    bound = LYAPUNOV_RTOL * float(np.linalg.norm(d, np.inf))
    logger.debug(f"Lyapunov residual {residual:.3e} (bound {bound:.3e})")
    if residual > bound:
        raise CertificateError(f"Lyapunov residual {residual:.3e} exceeds {bound:.3e}")

    margin = physicality_margin(v)
    if margin < -PHYSICALITY_TOL:
        raise UnphysicalCovarianceError(
            f"Covariance matrix violates the uncertainty principle (min eig = {margin:.3e})"
        )
    return CovarianceMatrix(v=v, residual=residual, physicality=margin)


# ============================================================================
# Entanglement
# ============================================================================


def reduce_bipartite(cm: CovarianceMatrix, pair: str) -> BipartiteCM:
    """
    Keep the rows and columns of two modes.

    Args:
        cm: Covariance matrix
        pair: 'mirror-field', 'mirror-atom' or 'field-atom'

    Returns:
        BipartiteCM
    """
    if pair not in PAIRS:
        raise ValueError(f"Unknown mode pair '{pair}'. Use one of {', '.join(PAIRS)}")
    first, second = PAIRS[pair]
    idx = [2 * first, 2 * first + 1, 2 * second, 2 * second + 1]
    return BipartiteCM(pair=pair, v=cm.v[np.ix_(idx, idx)].copy())


def clamp_discriminant(disc: float, sigma: float, pair: str = "pair") -> float:
    """
    Clamp Sigma^2 - 4 det V at zero when it is negative by rounding only.

    The tolerance DISCRIMINANT_TOL * max(1, Sigma^2) is relative to the
    size of the two cancelling terms.

    Raises:
        UnphysicalCovarianceError: If disc is below the tolerance
    """
    if disc >= 0.0:
        return disc
    if disc < -DISCRIMINANT_TOL * max(1.0, sigma**2):
        raise UnphysicalCovarianceError(f"{pair}: symplectic discriminant is negative ({disc:.3e})")
    logger.debug(f"{pair}: clamped discriminant {disc:.3e} to 0")
    return 0.0


def log_negativity(bp: BipartiteCM) -> NegativityResult:
    """
    Logarithmic negativity E_N = max(0, -ln 2 eta_minus).

    eta_minus^2 = (Sigma - sqrt(Sigma^2 - 4 det V)) / 2, evaluated as
    2 det V / (Sigma + sqrt(...)) to avoid cancellation.

    Raises:
        UnphysicalCovarianceError: If eta_minus would not be real and positive
    """
    v = bp.v
    sigma = float(np.linalg.det(bp.b) + np.linalg.det(bp.b_prime) - 2.0 * np.linalg.det(bp.c))
    det_v = float(np.linalg.det(v))
    disc = clamp_discriminant(sigma**2 - 4.0 * det_v, sigma, bp.pair)
    if sigma <= 0.0 or det_v <= 0.0:
        raise UnphysicalCovarianceError(
            f"{bp.pair}: not a physical covariance matrix (Sigma = {sigma:.3e}, det = {det_v:.3e})"
        )
    eta_minus = math.sqrt(2.0 * det_v / (sigma + math.sqrt(disc)))
    e_n = max(0.0, -math.log(2.0 * eta_minus))
    return NegativityResult(e_n=e_n, eta_minus=eta_minus, sigma=sigma)


def partial_transpose_spectrum(bp: BipartiteCM) -> np.ndarray:
    """Symplectic eigenvalues |eig(i Omega P V P)| of the partially transposed CM, sorted."""
    flip = np.diag([1.0, 1.0, 1.0, -1.0])
    transposed = flip @ bp.v @ flip
    return np.sort(np.abs(np.linalg.eigvals(1j * symplectic_form(2) @ transposed)))


def all_negativities(cm: CovarianceMatrix) -> Dict[str, NegativityResult]:
    """Negativity of every mode pair, keyed by pair label."""
    return {pair: log_negativity(reduce_bipartite(cm, pair)) for pair in PAIRS}
