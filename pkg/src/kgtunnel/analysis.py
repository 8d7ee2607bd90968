"""Measurements on solver and simulator output: decay fits, beat periods, spectral lines.

The beat period here is the period of the energy exchange between the two
oscillators, ``2*pi/delta_omega``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal, stats

from .exceptions import InsufficientCycles, NoRoot, PeaksNotResolved
from .model import ModelParams
from .spectral import bound_mode_frequency, solve_modes
from .timedomain import TimeSeries

__all__ = [
    "FitResult",
    "BeatMeasurement",
    "log_linear_fit",
    "splitting_decay_fit",
    "expected_decay_slope",
    "beat_period",
    "spectral_peaks",
    "energy_drift",
]


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    n_points: int
    residual_max: float


@dataclass(frozen=True)
class BeatMeasurement:
    period: float
    n_cycles_used: float
    method: str
    uncertainty: float

    @property
    def delta_omega(self) -> float:
        return 2.0 * math.pi / self.period


def log_linear_fit(x, y) -> FitResult:
    """Least-squares line through ``(x, ln y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.size < 2:
        raise ValueError("need at least two (x, y) pairs of equal length")
    if np.any(y <= 0):
        raise ValueError("log-linear fit needs strictly positive y")
    ly = np.log(y)
    if x.size == 2:
        slope = (ly[1] - ly[0]) / (x[1] - x[0])
        intercept = ly[0] - slope * x[0]
        return FitResult(float(slope), float(intercept), 1.0, 2, 0.0)
    res = stats.linregress(x, ly)
    resid = ly - (res.intercept + res.slope * x)
    r2 = min(max(res.rvalue**2, 0.0), 1.0)
    return FitResult(float(res.slope), float(res.intercept), float(r2), int(x.size), float(np.abs(resid).max()))


def expected_decay_slope(p: ModelParams) -> float:
    """``-sqrt(omega0**2 - omega_b**2)``, the decay rate at the bound-mode frequency."""
    wb = bound_mode_frequency(p)
    return -math.sqrt((p.omega0 - wb) * (p.omega0 + wb))


def splitting_decay_fit(p: ModelParams, a_values, tol: float = 1e-15) -> FitResult:
    """Fit ``ln(delta_omega)`` against separation ``a`` at fixed frequencies and coupling.

    ``p.a`` is ignored; each entry of ``a_values`` replaces it.
    """
    a_values = np.asarray(a_values, dtype=float)
    splittings = []
    for a in a_values:
        sol = solve_modes(p.replace(a=float(a)), tol=tol)
        if not sol.delta_omega > sol.cancellation_floor:
            raise NoRoot(f"splitting at a={a!r} is below the cancellation floor")
        splittings.append(sol.delta_omega)
    return log_linear_fit(a_values, splittings)


def _carrier_period(t, y):
    y = y - np.mean(y)
    crossings = np.nonzero(np.signbit(y[:-1]) != np.signbit(y[1:]))[0]
    if len(crossings) < 3:
        return None
    return 2.0 * float(np.median(np.diff(t[crossings])))


def _parabolic(values, i):
    """Sub-sample offset of the extremum of a parabola through ``values[i-1:i+2]``."""
    if i <= 0 or i >= len(values) - 1:
        return 0.0
    a, b, c = values[i - 1], values[i], values[i + 1]
    den = a - 2.0 * b + c
    return 0.0 if den == 0 else 0.5 * (a - c) / den


def beat_period(series: TimeSeries, smoothing_period: float | None = None,
                min_prominence: float = 0.25) -> BeatMeasurement:
    """Period of the energy exchange, from extrema of the smoothed ``E_osc1(t)``.

    ``E_osc1`` is low-pass filtered at half the carrier frequency (the carrier
    period is estimated from the zero crossings of ``y1`` unless
    ``smoothing_period`` is given), then its maxima and minima are located
    with parabolic refinement. Extrema within four carrier periods of either
    end are dropped. Consecutive extrema are half a period apart.
    """
    t = np.asarray(series.t, dtype=float)
    e = np.asarray(series.E_osc1, dtype=float)
    if len(t) < 5:
        raise InsufficientCycles("series too short")
    dt = float(np.mean(np.diff(t)))
    if smoothing_period is None:
        smoothing_period = _carrier_period(t, np.asarray(series.y1, dtype=float))
    if smoothing_period is not None and smoothing_period > 4.0 * dt:
        # zero-phase low-pass well below the carrier; a plain boxcar leaves a
        # ripple that shifts the flat envelope extrema noticeably
        cutoff = 0.5 / smoothing_period
        sos = signal.butter(4, cutoff, fs=1.0 / dt, output="sos")
        env = signal.sosfiltfilt(sos, e)
        # filter edge transients and the initial radiation burst
        margin = 4.0 * smoothing_period
    else:
        env = e
        margin = 0.0
    t_env = t
    span = float(np.ptp(env)) if env.size else 0.0
    if not span > 0:
        raise InsufficientCycles("energy envelope is flat")
    prom = min_prominence * span
    maxima, _ = signal.find_peaks(env, prominence=prom)
    minima, _ = signal.find_peaks(-env, prominence=prom)
    times = sorted(
        [t_env[i] + _parabolic(env, i) * dt for i in maxima]
        + [t_env[i] + _parabolic(-env, i) * dt for i in minima]
    )
    times = [x for x in times if t[0] + margin <= x <= t[-1] - margin]
    if len(times) < 3:
        raise InsufficientCycles(f"found {len(times)} envelope extrema, need at least 3")
    half = np.diff(times)
    period = 2.0 * (times[-1] - times[0]) / (len(times) - 1)
    if len(half) > 1:
        uncertainty = 2.0 * float(np.std(half, ddof=1)) / math.sqrt(len(half))
    else:
        uncertainty = 0.0
    uncertainty = max(uncertainty, 2.0 * dt)
    if not uncertainty < period:
        raise InsufficientCycles("extrema spacing too irregular to define a period")
    return BeatMeasurement(float(period), 0.5 * (len(times) - 1), "envelope_peaks", float(uncertainty))


def _projection(t, x, freqs, chunk=256):
    out = np.empty(len(freqs))
    for s in range(0, len(freqs), chunk):
        w = freqs[s:s + chunk, None]
        out[s:s + chunk] = np.abs(np.exp(-1j * w * t[None, :]) @ x)
    return out


def spectral_peaks(series: TimeSeries, band, oversample: int = 16, min_fraction: float = 0.25,
                   column: str = "y1"):
    """Two strongest spectral lines of ``y1(t)`` inside ``band = (lo, hi)``.

    Single-frequency DFT projections are evaluated on a grid ``oversample``
    times finer than the resolution ``2*pi/T``. A local maximum counts as a
    line only if it carries at least ``2 * min_fraction**2`` of the signal power,
    so sidelobe leakage from lines outside the band is rejected.

    Returns
    -------
    (w_low, w_high, resolution)
    """
    lo, hi = map(float, band)
    if not hi > lo:
        raise ValueError(f"empty band {band!r}")
    t = np.asarray(series.t, dtype=float)
    x = np.asarray(getattr(series, column), dtype=float)
    x = x - x.mean()
    dt = float(np.mean(np.diff(t)))
    duration = t[-1] - t[0] + dt
    resolution = 2.0 * math.pi / duration
    freqs = np.arange(lo, hi, resolution / oversample)
    if len(freqs) < 3:
        raise PeaksNotResolved("band narrower than the frequency resolution")
    mag = _projection(t, x, freqs) * dt
    rms = math.sqrt(float(np.mean(x**2)))
    idx, _ = signal.find_peaks(mag, height=min_fraction * rms * duration)
    if len(idx) < 2:
        raise PeaksNotResolved(f"found {len(idx)} spectral line(s) in band {band!r}")
    top = idx[np.argsort(mag[idx])[-2:]]
    step = freqs[1] - freqs[0]
    w = sorted(float(freqs[i] + _parabolic(mag, i) * step) for i in top)
    if w[1] - w[0] < 2.0 * resolution:
        raise PeaksNotResolved("lines closer than two resolution bins")
    return w[0], w[1], resolution


def energy_drift(series: TimeSeries):
    """``(max |E - E0| / E0, |fitted slope| * duration / E0)`` of the total energy."""
    e = np.asarray(series.E_total, dtype=float)
    t = np.asarray(series.t, dtype=float)
    e0 = e[0]
    if e0 == 0:
        return 0.0, 0.0
    dev = float(np.max(np.abs(e - e0)) / abs(e0))
    if len(t) < 2:
        return dev, 0.0
    slope = stats.linregress(t, e).slope
    return dev, float(abs(slope) * (t[-1] - t[0]) / abs(e0))
