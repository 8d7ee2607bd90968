"""Frequency-domain treatment of the two-oscillator string.

A stationary solution oscillating at ``omega`` below the cut-off is a sum of
exponentials ``exp(+-S x)`` with ``S = sqrt(omega0**2 - omega**2)``. Each
oscillator acts on the string as a point scatterer: the field is continuous
there and its slope jumps by ``g(omega) * u``. Normal modes are the solutions
that decay on both sides of the pair, split by parity.

Most root searches work in ``delta = omega**2 - Omega0**2`` because the mode
residual has its pole at ``delta = 0``.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .exceptions import DomainError, MaxIterations, NoRoot, NotAMode, PoleError
from .model import ModelParams, RegimeKind, classify_regime, evanescent_rate, omega_kappa, wavenumber

__all__ = [
    "Parity",
    "TransferMatrix",
    "ModeSolution",
    "ModeShape",
    "g_factor",
    "mode_denominator",
    "scatterer_matrix",
    "propagation_matrix",
    "two_scatterer_matrix",
    "reflection_coefficient",
    "mode_residual",
    "relative_mode_error",
    "has_bracket",
    "solve_modes",
    "bound_mode_frequency",
    "asymptotic_splitting",
    "mode_shape",
    "shape_jump_residual",
]

# Bracket guards, relative to omega0**2 - Omega0**2.
EPS_POLE = 1e-12
EPS_CUT = 1e-9

_EPS = np.finfo(float).eps


class Parity(enum.Enum):
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"

    @property
    def sign(self) -> int:
        """+1 for symmetric, -1 for antisymmetric."""
        return 1 if self is Parity.SYMMETRIC else -1

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class TransferMatrix:
    """2x2 map of amplitudes ``(C, D)`` of ``C exp(ik(x - x_s)) + D exp(-ik(x - x_s))``
    from the left of a scatterer or segment to its right."""

    m11: complex
    m12: complex
    m21: complex
    m22: complex

    @classmethod
    def from_array(cls, m) -> "TransferMatrix":
        m = np.asarray(m, dtype=complex)
        return cls(complex(m[0, 0]), complex(m[0, 1]), complex(m[1, 0]), complex(m[1, 1]))

    def to_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]], dtype=complex)

    @property
    def det(self) -> complex:
        return self.m11 * self.m22 - self.m12 * self.m21

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        return TransferMatrix(
            self.m11 * other.m11 + self.m12 * other.m21,
            self.m11 * other.m12 + self.m12 * other.m22,
            self.m21 * other.m11 + self.m22 * other.m21,
            self.m21 * other.m12 + self.m22 * other.m22,
        )

    def apply(self, c, d):
        return self.m11 * c + self.m12 * d, self.m21 * c + self.m22 * d


@dataclass(frozen=True)
class ModeSolution:
    """Symmetric and antisymmetric mode frequencies of the oscillator pair.

    ``residual_plus`` and ``residual_minus`` are relative errors in
    ``omega**2 - Omega0**2`` (see :func:`relative_mode_error`), not raw values of
    :func:`mode_residual`, whose scale blows up as the coupling goes to zero.
    """

    omega_plus: float
    omega_minus: float
    delta_omega: float
    residual_plus: float
    residual_minus: float
    iterations: int
    delta_plus: float
    delta_minus: float
    tol: float

    @property
    def cancellation_floor(self) -> float:
        """Smallest splitting distinguishable from round-off and solver tolerance."""
        return 2.0 * max(self.tol, _EPS) * max(self.delta_plus, self.delta_minus) / (
            self.omega_plus + self.omega_minus
        )


def _check_evanescent(p, omega):
    if not (0.0 <= omega < p.omega0):
        raise DomainError(f"need 0 <= omega < omega0={p.omega0}, got {omega!r}")


def _delta(p, omega):
    return (omega - p.Omega0) * (omega + p.Omega0)


def g_factor(p: ModelParams, omega: float) -> float:
    """Slope-jump strength of one oscillator seen by a wave at ``omega``.

    ``u'(x_s+) - u'(x_s-) = g * u(x_s)`` with
    ``g = kappa (omega**2 - Omega0**2) / (omega**2 - omega_kappa**2)``.
    """
    wk = omega_kappa(p)
    den = (omega - wk) * (omega + wk)
    if abs(den) <= 4 * _EPS * wk * wk:
        raise PoleError(f"g_factor has a pole at omega = omega_kappa = {wk!r}")
    return p.kappa * _delta(p, omega) / den


def _denominator_delta(p, delta, rate):
    return 1.0 + (2.0 * rate / p.kappa) * (delta - p.kappa) / delta


def mode_denominator(p: ModelParams, omega: float) -> float:
    """Single-oscillator function ``1 + (2S/kappa)(omega**2 - omega_kappa**2)/(omega**2 - Omega0**2)``.

    Its zero is the bound-mode frequency of one isolated oscillator. Evaluated
    without going through :func:`g_factor`, so it is regular at ``omega_kappa``.
    """
    _check_evanescent(p, omega)
    delta = _delta(p, omega)
    if delta == 0.0:
        raise PoleError(f"mode denominator has a pole at omega = Omega0 = {p.Omega0!r}")
    return _denominator_delta(p, delta, evanescent_rate(p, omega))


def scatterer_matrix(p: ModelParams, omega: float) -> TransferMatrix:
    """Transfer matrix across one oscillator, referred to the oscillator position."""
    k = wavenumber(p, omega)
    if k == 0:
        raise PoleError("scatterer matrix is singular at the cut-off (k = 0)")
    beta = g_factor(p, omega) / (2j * k)
    return TransferMatrix(1 + beta, beta, -beta, 1 - beta)


def propagation_matrix(p: ModelParams, omega: float, length: float) -> TransferMatrix:
    """Shift the amplitude reference point by ``length`` along free string."""
    k = wavenumber(p, omega)
    return TransferMatrix(cmath.exp(1j * k * length), 0j, 0j, cmath.exp(-1j * k * length))


def two_scatterer_matrix(p: ModelParams, omega: float) -> TransferMatrix:
    """Transfer matrix from just left of ``-a/2`` to just right of ``+a/2``.

    In the evanescent band a solution decaying on both sides exists exactly
    where ``m22`` vanishes.
    """
    m = scatterer_matrix(p, omega)
    return m @ propagation_matrix(p, omega, p.a) @ m


def reflection_coefficient(p: ModelParams, omega: float, method: str = "equation") -> complex:
    """Ratio ``C/D`` to the right of one oscillator when the left side holds a pure
    ``D exp(-ik(x - x_s))`` wave.

    ``method="equation"`` evaluates ``-1/D(omega)`` from the closed form;
    ``method="matrix"`` reads the ratio off :func:`scatterer_matrix`.
    Away from the evanescent band both routes use ``S = -ik``.
    """
    if method == "matrix":
        m = scatterer_matrix(p, omega)
        c, d = m.apply(0.0, 1.0)
        if d == 0:
            raise PoleError(f"reflection coefficient diverges at omega={omega!r}")
        return complex(c / d)
    if method != "equation":
        raise ValueError(f"unknown method {method!r}")
    if 0.0 <= omega < p.omega0:
        den = mode_denominator(p, omega)
    else:
        delta = _delta(p, omega)
        if delta == 0.0:
            raise PoleError(f"pole at omega = Omega0 = {p.Omega0!r}")
        rate = -1j * wavenumber(p, omega)
        den = _denominator_delta(p, delta, rate)
    if den == 0:
        raise PoleError(f"reflection coefficient diverges at the bound mode omega={omega!r}")
    return complex(-1.0 / den)


def _residual_delta(p, delta, sign):
    rate = math.sqrt(max(p.gap - delta, 0.0))
    return _denominator_delta(p, delta, rate) + sign * math.exp(-p.a * rate)


def mode_residual(p: ModelParams, omega: float, parity: Parity) -> float:
    """``D(omega) + sign * exp(-a S)``; zero at a normal mode of the given parity."""
    return mode_denominator(p, omega) + parity.sign * math.exp(-p.a * evanescent_rate(p, omega))


def _fixed_point(p, delta, sign):
    rate = math.sqrt(p.gap - delta)
    return p.kappa / (1.0 + p.kappa * (1.0 + sign * math.exp(-p.a * rate)) / (2.0 * rate))


def relative_mode_error(p: ModelParams, omega: float, parity: Parity) -> float:
    """Dimensionless distance from a mode, as a relative error in ``omega**2 - Omega0**2``.

    The mode equation rearranges to ``delta = kappa / (1 + kappa (1 + sign E) / (2S))``;
    this returns ``(delta - rhs) / delta``.
    """
    _check_evanescent(p, omega)
    delta = _delta(p, omega)
    if delta <= 0.0:
        raise DomainError(f"modes lie above Omega0={p.Omega0!r}, got omega={omega!r}")
    return (delta - _fixed_point(p, delta, parity.sign)) / delta


def _bracket(p):
    return EPS_POLE * p.gap, (1.0 - EPS_CUT) * p.gap


def has_bracket(p: ModelParams, parity: Parity) -> bool:
    """True when the mode residual changes sign across the solver bracket."""
    lo, hi = _bracket(p)
    f_lo = _residual_delta(p, lo, parity.sign)
    f_hi = _residual_delta(p, hi, parity.sign)
    return f_lo * f_hi < 0


def _find_delta(f, lo, hi, tol, maxiter):
    rtol = max(tol, 4 * _EPS)
    try:
        root, info = brentq(f, lo, hi, xtol=1e-300, rtol=rtol, maxiter=maxiter,
                            full_output=True, disp=False)
    except ValueError as exc:
        raise NoRoot(str(exc)) from exc
    if not info.converged:
        raise MaxIterations(f"root search stopped after {info.iterations} iterations")
    return root, info.iterations


def solve_modes(p: ModelParams, tol: float = 1e-15, maxiter: int = 500) -> ModeSolution:
    """Frequencies of the symmetric (lower) and antisymmetric (upper) normal modes.

    Brent's method on :func:`mode_residual` in the variable ``omega**2 - Omega0**2``
    over a bracket that stays clear of the pole at ``Omega0`` and of the
    spurious antisymmetric zero at the cut-off. ``tol`` is relative in that
    variable.
    """
    if tol < 1e-15 or tol >= 1:
        raise ValueError(f"tol must be in [1e-15, 1), got {tol!r}")
    regime = classify_regime(p)
    if regime.classification is not RegimeKind.TWO_BOUND_MODES:
        raise NoRoot(f"parameters are in regime {regime.classification}, not TwoBoundModes")
    lo, hi = _bracket(p)
    deltas, iterations = {}, 0
    for parity in Parity:
        root, n = _find_delta(lambda d: _residual_delta(p, d, parity.sign), lo, hi, tol, maxiter)
        deltas[parity] = root
        iterations += n
    d_plus, d_minus = deltas[Parity.SYMMETRIC], deltas[Parity.ANTISYMMETRIC]
    w_plus = math.sqrt(p.Omega0**2 + d_plus)
    w_minus = math.sqrt(p.Omega0**2 + d_minus)
    return ModeSolution(
        omega_plus=w_plus,
        omega_minus=w_minus,
        delta_omega=(d_minus - d_plus) / (w_plus + w_minus),
        residual_plus=(d_plus - _fixed_point(p, d_plus, 1)) / d_plus,
        residual_minus=(d_minus - _fixed_point(p, d_minus, -1)) / d_minus,
        iterations=iterations,
        delta_plus=d_plus,
        delta_minus=d_minus,
        tol=max(tol, 4 * _EPS),
    )


def bound_mode_frequency(p: ModelParams, tol: float = 1e-15, maxiter: int = 500) -> float:
    """Mode frequency of a single isolated oscillator (the pair at infinite separation)."""
    if omega_kappa(p) >= p.omega0:
        raise NoRoot(f"omega_kappa={omega_kappa(p)!r} is not below omega0={p.omega0!r}")
    lo, hi = _bracket(p)

    def f(d):
        return _denominator_delta(p, d, math.sqrt(p.gap - d))

    root, _ = _find_delta(f, lo, hi, tol, maxiter)
    return math.sqrt(p.Omega0**2 + root)


def asymptotic_splitting(p: ModelParams) -> float:
    """Leading-order splitting for weak coupling and well separated oscillators."""
    rate = math.sqrt(p.gap)
    return p.kappa**2 / (2.0 * p.Omega0 * rate) * math.exp(-p.a * rate)


@dataclass(frozen=True)
class ModeShape:
    """Real, peak-normalized field profile of a stationary mode.

    Between the oscillators the field is ``inner_coefficient * cosh(S x)``
    (symmetric) or ``inner_coefficient * sinh(S x)`` (antisymmetric); outside it
    is ``outer_amplitude * exp(-S (|x| - a/2))``, sign-flipped on the left for
    the antisymmetric case. ``oscillator_amplitude`` is the displacement of the
    oscillator at ``+a/2``; the one at ``-a/2`` carries ``parity.sign`` times it.
    """

    parity: Parity
    omega: float
    decay_rate: float
    inner_coefficient: float
    outer_amplitude: float
    oscillator_amplitude: float
    a: float

    @property
    def oscillator_amplitudes(self):
        """Displacements ``(y_left, y_right)``."""
        return self.parity.sign * self.oscillator_amplitude, self.oscillator_amplitude

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        ax = np.abs(x)
        half = 0.5 * self.a
        s = self.decay_rate
        outer = self.outer_amplitude * np.exp(-s * (ax - half))
        if self.parity is Parity.SYMMETRIC:
            inner = self.inner_coefficient * np.cosh(s * ax)
            u = np.where(ax < half, inner, outer)
        else:
            inner = self.inner_coefficient * np.sinh(s * ax)
            u = np.sign(x) * np.where(ax < half, inner, outer)
        return float(u) if u.ndim == 0 else u

    def derivative(self, x, side: int = 1):
        """Spatial derivative. At the oscillators ``side=+1`` picks the right limit."""
        x = np.asarray(x, dtype=float)
        half = 0.5 * self.a
        s = self.decay_rate
        ax = np.abs(x)
        # |x| < a/2 is inner; at |x| == a/2 the side argument decides
        on_kink = ax == half
        inner_side = np.where(on_kink, side * np.sign(x) < 0, ax < half)
        sgn = np.sign(x)
        if self.parity is Parity.SYMMETRIC:
            du_inner = self.inner_coefficient * s * np.sinh(s * x)
            du_outer = -sgn * s * self.outer_amplitude * np.exp(-s * (ax - half))
        else:
            du_inner = self.inner_coefficient * s * np.cosh(s * x)
            du_outer = -s * self.outer_amplitude * np.exp(-s * (ax - half))
        du = np.where(inner_side, du_inner, du_outer)
        return float(du) if du.ndim == 0 else du


def mode_shape(p: ModelParams, omega: float, parity: Parity, tol: float = 1e-8,
               check: bool = True) -> ModeShape:
    """Build the stationary profile at ``omega`` for the given parity.

    With ``check=True`` the frequency must solve the mode equation to within
    ``tol`` (see :func:`relative_mode_error`), otherwise :class:`NotAMode`.
    ``check=False`` builds the profile anyway; only the matching condition at
    the oscillators is then violated (see :func:`shape_jump_residual`).
    """
    parity = Parity(parity)
    s = evanescent_rate(p, omega)
    if check:
        err = relative_mode_error(p, omega, parity)
        if not abs(err) <= tol:
            raise NotAMode(f"omega={omega!r} is not a {parity} mode (relative error {err:.3e})")
    half_arg = 0.5 * s * p.a
    inner_at_osc = math.cosh(half_arg) if parity is Parity.SYMMETRIC else math.sinh(half_arg)
    if inner_at_osc == 0.0:
        raise DomainError("antisymmetric profile vanishes identically at zero decay rate")
    wk = omega_kappa(p)
    den = (wk - omega) * (wk + omega)
    if den == 0.0:
        raise PoleError(f"oscillator amplitude diverges at omega = omega_kappa = {wk!r}")
    # the field is monotone on each side of an oscillator, so its peak is u(a/2) = 1
    return ModeShape(
        parity=parity,
        omega=float(omega),
        decay_rate=s,
        inner_coefficient=1.0 / inner_at_osc,
        outer_amplitude=1.0,
        oscillator_amplitude=p.kappa / den,
        a=p.a,
    )


def shape_jump_residual(p: ModelParams, shape: ModeShape) -> float:
    """Mismatch of the slope jump at ``x = a/2``, normalized by ``S * max|u|``."""
    half = 0.5 * p.a
    jump = shape.derivative(half, side=1) - shape.derivative(half, side=-1)
    u_half = shape(half)
    peak = max(abs(u_half), abs(shape.outer_amplitude))
    return (jump - g_factor(p, shape.omega) * u_half) / (shape.decay_rate * peak)
