"""Physical parameters and dispersion of the oscillator/Klein-Gordon string system.

Natural units throughout: wave speed, string density and oscillator mass are 1,
so lengths and times share a unit and every frequency is angular.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, InvalidParameters

__all__ = [
    "ModelParams",
    "Regime",
    "RegimeKind",
    "omega_kappa",
    "evanescent_rate",
    "wavenumber",
    "classify_regime",
]


@dataclass(frozen=True)
class ModelParams:
    """Parameters of two identical oscillators on a Klein-Gordon string.

    Parameters
    ----------
    omega0 : float
        Cut-off frequency of the string.
    Omega0 : float
        Frequency of a free oscillator. Must lie below ``omega0``.
    kappa : float
        Point-coupling strength between each oscillator and the string.
    a : float
        Distance between the oscillators, placed at ``x = -a/2`` and ``x = +a/2``.
    """

    omega0: float
    Omega0: float
    kappa: float
    a: float

    def __post_init__(self):
        for name in ("omega0", "Omega0", "kappa", "a"):
            value = getattr(self, name)
            if not isinstance(value, (int, float, np.floating, np.integer)):
                raise InvalidParameters(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value) or value <= 0:
                raise InvalidParameters(f"{name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.Omega0 >= self.omega0:
            raise InvalidParameters(
                f"Omega0={self.Omega0!r} must be below the string cut-off omega0={self.omega0!r}"
            )

    @property
    def omega_kappa(self) -> float:
        return omega_kappa(self)

    @property
    def gap(self) -> float:
        """``omega0**2 - Omega0**2``, the width of the evanescent band in squared frequency."""
        return self.omega0**2 - self.Omega0**2

    def replace(self, **changes) -> "ModelParams":
        fields = {"omega0": self.omega0, "Omega0": self.Omega0, "kappa": self.kappa, "a": self.a}
        fields.update(changes)
        return ModelParams(**fields)


class RegimeKind(enum.Enum):
    TWO_BOUND_MODES = "TwoBoundModes"
    PARTIALLY_BOUND = "PartiallyBound"
    NO_BOUND_MODE = "NoBoundMode"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Regime:
    classification: RegimeKind
    omega_kappa: float


def omega_kappa(p: ModelParams) -> float:
    """Oscillator frequency dressed by the coupling, ``sqrt(Omega0**2 + kappa)``."""
    return math.sqrt(p.Omega0**2 + p.kappa)


def evanescent_rate(p: ModelParams, omega):
    """Spatial decay rate ``sqrt(omega0**2 - omega**2)`` of a sub-cut-off wave.

    Accepts scalars or arrays. Raises :class:`DomainError` for frequencies at or
    above the cut-off, where the wave propagates instead of decaying.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0) or np.any(w >= p.omega0):
        raise DomainError(f"evanescent rate needs 0 <= omega < omega0={p.omega0}, got {omega!r}")
    s = np.sqrt((p.omega0 - w) * (p.omega0 + w))
    return float(s) if s.ndim == 0 else s


def wavenumber(p: ModelParams, omega):
    """Complex wavenumber ``k`` with ``k**2 = omega**2 - omega0**2``.

    Real and non-negative above the cut-off, ``i * evanescent_rate`` below it.
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w < 0):
        raise DomainError(f"frequency must be non-negative, got {omega!r}")
    k2 = (w - p.omega0) * (w + p.omega0)
    k = np.where(k2 >= 0, np.sqrt(np.abs(k2)) + 0j, 1j * np.sqrt(np.abs(k2)))
    return complex(k) if k.ndim == 0 else k


def classify_regime(p: ModelParams) -> Regime:
    """Classify how many bound normal modes exist below the cut-off.

    Uses the same brackets as :func:`kgtunnel.spectral.solve_modes`: a parity
    counts as bound when its mode residual changes sign across the bracket.
    ``TWO_BOUND_MODES`` additionally requires ``omega_kappa < omega0``.
    """
    from .spectral import Parity, has_bracket

    wk = omega_kappa(p)
    n_bound = sum(has_bracket(p, parity) for parity in Parity)
    if n_bound == 2 and wk < p.omega0:
        kind = RegimeKind.TWO_BOUND_MODES
    elif n_bound == 0:
        kind = RegimeKind.NO_BOUND_MODE
    else:
        kind = RegimeKind.PARTIALLY_BOUND
    return Regime(kind, wk)
