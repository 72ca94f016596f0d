"""Physical constants (SI, CODATA values as shipped with scipy)."""

from scipy import constants as _sc

HBAR: float = float(_sc.hbar)  # J s
K_B: float = float(_sc.k)  # J / K
C_LIGHT: float = float(_sc.c)  # m / s

TWO_PI: float = float(2.0 * _sc.pi)
