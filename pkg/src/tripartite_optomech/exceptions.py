"""Error types raised by tripartite_optomech."""


class OptomechError(Exception):
    """Base class for every error raised by this package."""


# ============================================================================
# Configuration errors
# ============================================================================


class ConfigError(OptomechError, ValueError):
    """A configuration file or SystemConfig is malformed or inconsistent."""


class NonPositiveFrequencyError(ConfigError):
    """A frequency that must be strictly positive (e.g. omega_m) is not."""


class MissingTierFieldError(ConfigError):
    """A field required by the active parameter tier is absent."""


class TemperatureUnderflowError(ConfigError):
    """The bath temperature is negative."""


# ============================================================================
# Solver errors
# ============================================================================


class SolverError(OptomechError, RuntimeError):
    """A numerical solver failed."""


class NoConvergenceError(SolverError):
    """The steady-state iteration exceeded its iteration cap."""


class DivergedAmplitudeError(SolverError):
    """The steady-state amplitudes grew beyond any physical scale."""


class IllConditionedError(SolverError):
    """A Routh table pivot underflowed, so the table verdict is meaningless."""


class UnstableDriftError(SolverError):
    """A stationary quantity was requested for an unstable drift matrix."""


class SingularSystemError(SolverError):
    """The vectorised Lyapunov system is singular (marginal drift matrix)."""


class UnphysicalCovarianceError(SolverError):
    """A covariance matrix violates the uncertainty principle beyond tolerance."""


class CertificateError(SolverError):
    """A residual certificate of a computed result failed."""


class QuadratureNotConvergedError(SolverError):
    """Adaptive quadrature of a spectrum did not reach its tolerance."""
