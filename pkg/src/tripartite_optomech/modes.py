"""Hermite-Gauss cavity-mode geometry and the Lamb-Dicke nonlinearity function."""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]

# Largest n_b for which n_b! is representable as a float; beyond it the
# series coefficients are built from log-gamma magnitudes.
EXACT_COEFFICIENT_LIMIT = 170


# ============================================================================
# Domain types
# ============================================================================


class CavityGeometry(BaseModel):
    """Gaussian-beam geometry of the driven cavity mode."""

    w0: float = Field(..., gt=0, description="Beam waist radius (m)")
    k0: float = Field(..., gt=0, description="Optical wavenumber (1/m)")
    length: float = Field(..., gt=0, description="Cavity length L (m)")

    model_config = ConfigDict(frozen=True)

    @property
    def rayleigh_range(self) -> float:
        """Rayleigh range x_R = w0^2 k0 / 2 (m)."""
        return self.w0**2 * self.k0 / 2.0

    def beam_radius(self, x: ArrayLike) -> ArrayLike:
        """Beam radius w(x) = w0 sqrt(1 + (x/x_R)^2)."""
        return self.w0 * np.sqrt(1.0 + (np.asarray(x) / self.rayleigh_range) ** 2)

    def gouy_phase(self, x: ArrayLike) -> ArrayLike:
        """Gouy phase phi(x) = arctan(x/x_R)."""
        return np.arctan(np.asarray(x) / self.rayleigh_range)

    def curvature_radius(self, x: float) -> float:
        """Wavefront radius of curvature R(x) = x + x_R^2/x (infinite at the waist)."""
        if x == 0.0:
            return math.inf
        return x + self.rayleigh_range**2 / x


class ModeIndex(BaseModel):
    """Transverse (m, n) and longitudinal (l) indices of a Hermite-Gauss mode."""

    m: int = Field(0, ge=0, description="Transverse index along z")
    n: int = Field(0, ge=0, description="Transverse index along y")
    l: int = Field(1, ge=1, description="Longitudinal index")  # noqa: E741

    model_config = ConfigDict(frozen=True)


class NonlinearityQuery(BaseModel):
    """Arguments of the nonlinearity function f_j(n_b) at Lamb-Dicke parameter eta.

    The phase theta of the coupling is fixed to pi and does not enter.
    """

    j: int = Field(..., ge=0, description="Vibrational sideband order")
    n_b: int = Field(..., ge=0, description="Phonon number")
    eta: float = Field(..., ge=0, description="Lamb-Dicke parameter")

    model_config = ConfigDict(frozen=True)


# ============================================================================
# Hermite-Gauss modes
# ============================================================================


def hermite(n: int, x: ArrayLike) -> ArrayLike:
    """
    Physicists' Hermite polynomial H_n(x) by the three-term recurrence.

    H_{k+1} = 2x H_k - 2k H_{k-1}. Overflow is propagated as inf.

    Args:
        n: Polynomial degree (n >= 0)
        x: Evaluation point(s)

    Returns:
        H_n(x), with the shape of x
    """
    if n < 0:
        raise ValueError(f"Hermite degree must be >= 0, got {n}")
    x = np.asarray(x, dtype=float)
    h_prev = np.ones_like(x)
    if n == 0:
        return h_prev if h_prev.ndim else float(h_prev)
    h = 2.0 * x
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(1, n):
            h_prev, h = h, 2.0 * x * h - 2.0 * k * h_prev
    return h if h.ndim else float(h)


def mode_profile(
    idx: ModeIndex, point: Tuple[float, float, float], geom: CavityGeometry
) -> Tuple[float, float]:
    """
    Amplitude K_mnl and phase psi_mnl of a Hermite-Gauss mode at a point.

    Args:
        idx: Mode indices
        point: (x, y, z) in metres, x along the cavity axis measured from the waist
        geom: Cavity geometry

    Returns:
        (K in 1/m^{3/2}, psi in rad)
    """
    x, y, z = point
    w = float(geom.beam_radius(x))
    k = geom.k0

    norm = w * math.sqrt(
        math.pi * 2.0 ** (idx.n + idx.m - 2) * math.factorial(idx.m) * math.factorial(idx.n)
        * geom.length
    )
    transverse = (
        hermite(idx.n, math.sqrt(2.0) * y / w)
        * hermite(idx.m, math.sqrt(2.0) * z / w)
        * math.exp(-(z**2 + y**2) / w**2)
    )
    amplitude = float(transverse) / norm

    curvature = geom.curvature_radius(x)
    wavefront = 0.0 if math.isinf(curvature) else k * (z**2 + y**2) / (2.0 * curvature)
    psi = k * x - float(geom.gouy_phase(x)) * (idx.m + idx.n + 1) + wavefront
    return amplitude, psi


def coupling_rate(
    idx: ModeIndex, point: Tuple[float, float, float], geom: CavityGeometry, g0: float
) -> float:
    """Position-dependent atom-field coupling chi_mnl = g0 K sin(psi - l pi/2) (rad/s)."""
    amplitude, psi = mode_profile(idx, point, geom)
    return g0 * amplitude * math.sin(psi - idx.l * math.pi / 2.0)


def reduced_coupling_rate(x0: float, mu: float, geom: CavityGeometry, g0: float) -> float:
    """
    Lowest-order (0,0,1) coupling at an atom sitting at rho_0 = mu w(x0).

    The Gaussian envelope at that radius is exp(-mu^2) and the wavefront
    curvature contributes 2 mu^2 x0 / (k w0^2) to the phase.
    """
    w = float(geom.beam_radius(x0))
    k = geom.k0
    phase = k * x0 - float(geom.gouy_phase(x0)) - math.pi / 2.0 + 2.0 * mu**2 * x0 / (k * geom.w0**2)
    prefactor = 2.0 * g0 * math.exp(-(mu**2)) / (w * math.sqrt(math.pi * geom.length))
    return prefactor * math.sin(phase)


def lamb_dicke_parameter(
    geom: CavityGeometry, mu: float, epsilon: float, x_zpf: float
) -> float:
    """Lamb-Dicke parameter eta = 2 pi mu epsilon x_zpf / (w0^2 k0^2 L)."""
    return 2.0 * math.pi * mu * epsilon * x_zpf / (geom.w0**2 * geom.k0**2 * geom.length)


def tripartite_coupling(
    g0: float, eta: float, mu: float, geom: CavityGeometry, x0: float
) -> float:
    """Effective atom-field-mirror rate g_mu = g0 e^{-eta^2/2} eta / (e^mu w(x0) sqrt(pi L))."""
    w = float(geom.beam_radius(x0))
    return g0 * math.exp(-(eta**2) / 2.0) * eta / (math.exp(mu) * w * math.sqrt(math.pi * geom.length))


# ============================================================================
# Nonlinearity function
# ============================================================================


@lru_cache(maxsize=4096)
def _series_coefficients(n_b: int, j: int) -> Tuple[float, ...]:
    """Exact n_b! / (m! (m+j)! (n_b-m)!) for m = 0..n_b, rounded once to float."""
    return tuple(
        float(Fraction(math.comb(n_b, m), math.factorial(m + j))) for m in range(n_b + 1)
    )


def _log_series_terms(n_b: int, j: int, eta: float) -> Iterable[float]:
    log_eta2 = 2.0 * math.log(eta)
    head = math.lgamma(n_b + 1)
    for m in range(n_b + 1):
        log_mag = (
            head
            - math.lgamma(m + 1)
            - math.lgamma(m + j + 1)
            - math.lgamma(n_b - m + 1)
            + m * log_eta2
        )
        sign = -1.0 if m % 2 else 1.0
        yield sign * math.exp(log_mag)


def nonlinearity_f(q: NonlinearityQuery) -> float:
    """
    Nonlinearity function f_j(n_b) of the j-phonon atom-field-mirror coupling.

    f_j(n_b) = sum_m (-eta^2)^m n_b! / (m! (m+j)! (n_b-m)!)
             = n_b!/(n_b+j)! L^j_{n_b}(eta^2)

    Coefficients are exact rationals for n_b <= 170 and log-gamma magnitudes
    with tracked signs beyond; the alternating sum is accumulated with fsum.

    Args:
        q: Sideband order, phonon number and Lamb-Dicke parameter

    Returns:
        f_j(n_b)
    """
    j, n_b, eta = q.j, q.n_b, q.eta
    if eta == 0.0 or n_b == 0:
        return float(Fraction(1, math.factorial(j)))

    if n_b <= EXACT_COEFFICIENT_LIMIT:
        x = -(eta**2)
        coefficients = _series_coefficients(n_b, j)
        return math.fsum(c * x**m for m, c in enumerate(coefficients))

    return math.fsum(_log_series_terms(n_b, j, eta))


def associated_laguerre(n: int, alpha: int, x: float) -> float:
    """Associated Laguerre polynomial L^alpha_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"Laguerre degree must be >= 0, got {n}")
    l_prev = 1.0
    if n == 0:
        return l_prev
    l_curr = 1.0 + alpha - x
    for k in range(1, n):
        l_prev, l_curr = l_curr, ((2 * k + 1 + alpha - x) * l_curr - (k + alpha) * l_prev) / (k + 1)
    return l_curr


def laguerre_form(q: NonlinearityQuery) -> float:
    """f_j(n_b) evaluated through n_b!/(n_b+j)! L^j_{n_b}(eta^2) (cross-check path)."""
    ratio = math.exp(math.lgamma(q.n_b + 1) - math.lgamma(q.n_b + q.j + 1))
    return ratio * associated_laguerre(q.n_b, q.j, q.eta**2)


def nonlinearity_table(
    j_values: Iterable[int], n_b_values: Iterable[int], eta_values: Iterable[float]
) -> pd.DataFrame:
    """
    Tabulate f_j(n_b) on a grid, one row per (j, n_b, eta).

    Returns:
        DataFrame with columns j, n_b, eta, f
    """
    rows = [
        {"j": j, "n_b": n_b, "eta": eta, "f": nonlinearity_f(NonlinearityQuery(j=j, n_b=n_b, eta=eta))}
        for j in j_values
        for n_b in n_b_values
        for eta in eta_values
    ]
    logger.debug(f"Tabulated {len(rows)} nonlinearity values")
    return pd.DataFrame(rows, columns=["j", "n_b", "eta", "f"])
