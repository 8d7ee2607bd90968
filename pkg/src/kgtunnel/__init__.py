"""Two identical oscillators on a Klein-Gordon string.

Below the string's cut-off the oscillators exchange energy only through
evanescent waves. The symmetric and antisymmetric normal modes split by an
amount that is exponentially small in their separation, and that splitting
sets the beat period of the exchange.
"""

from .exceptions import (DomainError, GeometryError, InsufficientCycles, InvalidParameters, KGTunnelError,
                         MaxIterations, NoRoot, NotAMode, PeaksNotResolved, PoleError, StabilityError)
from .model import ModelParams, Regime, RegimeKind, classify_regime, evanescent_rate, omega_kappa, wavenumber
from .spectral import (ModeShape, ModeSolution, Parity, TransferMatrix, asymptotic_splitting,
                       bound_mode_frequency, mode_residual, mode_shape, solve_modes)

__version__ = "0.1.0"
