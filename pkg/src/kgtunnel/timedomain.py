"""Leapfrog integration of the string and the two oscillators.

Equations of motion on ``[-L, L]`` with Dirichlet ends::

    u_tt = u_xx - omega0**2 u + sum_i kappa (y_i - u(x_i)) delta(x - x_i)
    y_i'' = -Omega0**2 y_i + kappa (u(x_i) - y_i)

The delta is a single-node spike of weight ``1/dx``. With that choice the
discrete system is Hamiltonian with energy ``E_string + E_osc + E_couple`` and
the leapfrog scheme keeps it bounded with no secular drift.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import eigsh

from .exceptions import GeometryError, InvalidParameters, StabilityError
from .model import ModelParams, evanescent_rate, omega_kappa
from .spectral import ModeShape

__all__ = [
    "SimConfig",
    "SimState",
    "TimeSeries",
    "EnergyComponents",
    "Grid",
    "build_grid",
    "step",
    "total_energy",
    "energy_flux",
    "init_localized",
    "init_mode",
    "run",
    "reverse",
    "mirror",
    "discrete_mode_frequencies",
]

BLOWUP = 1e6
_BLOWUP_CHECK_EVERY = 50
_GRID_TOL = 1e-9


@dataclass(frozen=True)
class SimConfig:
    """Grid, time stepping, absorbing layer and recording settings.

    ``sponge_width = 0`` disables the absorbing layer. Probe positions are
    snapped to the nearest grid node.
    """

    half_length: float
    dx: float
    dt: float
    n_steps: int
    sponge_width: float = 0.0
    sponge_strength: float = 0.0
    record_stride: int = 1
    probe_positions: tuple = ()

    def validate(self, p: ModelParams) -> None:
        L, dx, dt = self.half_length, self.dx, self.dt
        if not (dx > 0 and dt > 0 and L > 0):
            raise InvalidParameters("half_length, dx and dt must be positive")
        if int(self.n_steps) != self.n_steps or self.n_steps < 0:
            raise InvalidParameters(f"n_steps must be a non-negative integer, got {self.n_steps!r}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise InvalidParameters(f"record_stride must be a positive integer, got {self.record_stride!r}")
        if self.sponge_width < 0 or self.sponge_strength < 0:
            raise InvalidParameters("sponge width and strength must be non-negative")
        if self.sponge_width >= L - 0.5 * p.a:
            raise InvalidParameters("sponge layer reaches the oscillators")
        min_length = 0.5 * p.a + 10.0 / evanescent_rate(p, p.Omega0)
        if L <= min_length:
            raise InvalidParameters(f"half_length={L!r} must exceed {min_length:.6g} to hold the evanescent tails")
        if dt > 0.9 * dx:
            raise InvalidParameters(f"dt={dt!r} exceeds 0.9*dx={0.9 * dx!r}")
        if dt * max(p.omega0, omega_kappa(p)) > 0.2:
            raise InvalidParameters("dt*max(omega0, omega_kappa) must not exceed 0.2")
        _node_count(L, dx, "half_length")
        _node_count(0.5 * p.a, dx, "a/2")


def _node_count(length, dx, what):
    n = round(length / dx)
    if n < 1 or abs(n * dx - length) > _GRID_TOL * max(length, dx):
        raise GeometryError(f"{what}={length!r} is not an integer number of grid steps dx={dx!r}")
    return int(n)


@dataclass
class SimState:
    """Field and oscillator displacements at two consecutive time levels."""

    u_now: np.ndarray
    u_prev: np.ndarray
    y_now: np.ndarray
    y_prev: np.ndarray
    step: int = 0

    def copy(self) -> "SimState":
        return SimState(self.u_now.copy(), self.u_prev.copy(), self.y_now.copy(), self.y_prev.copy(), self.step)


@dataclass(frozen=True)
class EnergyComponents:
    E_string: float
    E_osc1: float
    E_osc2: float
    E_couple1: float
    E_couple2: float

    @property
    def E_couple(self) -> float:
        return self.E_couple1 + self.E_couple2

    @property
    def E_total(self) -> float:
        return ((self.E_string + self.E_osc1) + self.E_osc2) + self.E_couple


@dataclass
class TimeSeries:
    """Diagnostics recorded every ``record_stride`` steps.

    ``flux`` has one column per entry of ``probe_positions``.
    """

    t: np.ndarray
    y1: np.ndarray
    y2: np.ndarray
    E_osc1: np.ndarray
    E_osc2: np.ndarray
    E_string: np.ndarray
    E_couple1: np.ndarray
    E_couple2: np.ndarray
    flux: np.ndarray
    probe_positions: tuple = ()
    final_state: SimState | None = field(default=None, repr=False)

    @property
    def E_couple(self) -> np.ndarray:
        return self.E_couple1 + self.E_couple2

    @property
    def E_total(self) -> np.ndarray:
        return ((self.E_string + self.E_osc1) + self.E_osc2) + self.E_couple

    def __len__(self):
        return len(self.t)


@dataclass(frozen=True)
class Grid:
    """Node positions and resolved indices for one (params, config) pair."""

    x: np.ndarray
    dx: float
    left: int
    right: int
    mid: int
    probes: tuple
    damping: np.ndarray | None

    @property
    def couplings(self):
        return self.left, self.right


def build_grid(p: ModelParams, cfg: SimConfig) -> Grid:
    cfg.validate(p)
    n_half = _node_count(cfg.half_length, cfg.dx, "half_length")
    n_osc = _node_count(0.5 * p.a, cfg.dx, "a/2")
    x = np.arange(-n_half, n_half + 1) * cfg.dx
    probes = []
    for xp in cfg.probe_positions:
        j = int(round(xp / cfg.dx)) + n_half
        if not (0 < j < 2 * n_half) or j in (n_half - n_osc, n_half + n_osc):
            raise GeometryError(f"probe at x={xp!r} must lie strictly inside the domain and off the oscillators")
        probes.append(j)
    damping = None
    if cfg.sponge_width > 0 and cfg.sponge_strength > 0:
        depth = np.clip(np.abs(x) - (cfg.half_length - cfg.sponge_width), 0.0, None) / cfg.sponge_width
        sigma = cfg.sponge_strength * 0.5 * (1.0 - np.cos(np.pi * depth))
        damping = np.exp(-sigma * cfg.dt)
    return Grid(x, cfg.dx, n_half - n_osc, n_half + n_osc, n_half, tuple(probes), damping)


def zero_state(grid: Grid) -> SimState:
    n = len(grid.x)
    return SimState(np.zeros(n), np.zeros(n), np.zeros(2), np.zeros(2), 0)


class _Stepper:
    def __init__(self, p, cfg, grid=None):
        self.p = p
        self.cfg = cfg
        self.grid = grid if grid is not None else build_grid(p, cfg)
        self.idx = np.array(self.grid.couplings)
        n = len(self.grid.x)
        self._acc = np.zeros(n)
        self._c_lap = cfg.dt**2 / cfg.dx**2
        self._c_mass = 2.0 - cfg.dt**2 * p.omega0**2

    def advance(self, u, u_prev, y, y_prev):
        """Return ``(u_next, y_next)`` without touching the inputs."""
        p, dt, dx = self.p, self.cfg.dt, self.cfg.dx
        acc = self._acc
        # dt**2 * acceleration of the interior, written as the leapfrog update
        acc[1:-1] = u[2:] + u[:-2]
        acc[1:-1] *= self._c_lap
        acc[1:-1] += (self._c_mass - 2.0 * self._c_lap) * u[1:-1]
        force = p.kappa * (y - u[self.idx])
        acc[self.idx] += dt**2 * force / dx
        if self.grid.damping is None:
            u_next = acc - u_prev
            u_next[0] = u_next[-1] = 0.0
        else:
            # u_next = u + damp*(u - u_prev) + dt**2*a, and acc already holds 2u + dt**2*a
            u_next = acc - u + self.grid.damping * (u - u_prev)
            u_next[0] = u_next[-1] = 0.0
        y_next = 2.0 * y - y_prev + dt**2 * (-p.Omega0**2 * y - force)
        return u_next, y_next

    def energies(self, u, u_prev, u_next, y, y_prev, y_next):
        p, dt, dx = self.p, self.cfg.dt, self.cfg.dx
        v = (u_next - u_prev) / (2.0 * dt)
        grad = np.diff(u) / dx
        e_string = 0.5 * dx * (np.dot(v, v) + np.dot(grad, grad) + p.omega0**2 * np.dot(u, u))
        ydot = (y_next - y_prev) / (2.0 * dt)
        e_osc = 0.5 * ydot**2 + 0.5 * p.Omega0**2 * y**2
        e_couple = 0.5 * p.kappa * (y - u[self.idx]) ** 2
        return EnergyComponents(float(e_string), float(e_osc[0]), float(e_osc[1]),
                                float(e_couple[0]), float(e_couple[1]))

    def flux(self, u, u_prev, u_next, j):
        v = (u_next[j] - u_prev[j]) / (2.0 * self.cfg.dt)
        return -v * (u[j + 1] - u[j - 1]) / (2.0 * self.cfg.dx)


def _check_shape(grid, state):
    n = len(grid.x)
    if state.u_now.shape != (n,) or state.u_prev.shape != (n,):
        raise GeometryError(f"state field has {state.u_now.shape} samples, grid has {n}")


def step(p: ModelParams, cfg: SimConfig, state: SimState) -> SimState:
    """One leapfrog step; returns a new state."""
    stepper = _Stepper(p, cfg)
    _check_shape(stepper.grid, state)
    u_next, y_next = stepper.advance(state.u_now, state.u_prev, state.y_now, state.y_prev)
    if not (np.all(np.abs(u_next) <= BLOWUP) and np.all(np.abs(y_next) <= BLOWUP)):
        raise StabilityError(f"field exceeded {BLOWUP:g} at step {state.step + 1}", state.step + 1)
    return SimState(u_next, state.u_now.copy(), y_next, state.y_now.copy(), state.step + 1)


def total_energy(p: ModelParams, cfg: SimConfig, state: SimState) -> EnergyComponents:
    """Energy split into string, oscillator and coupling parts.

    Velocities are centered differences, so the next time level is computed
    internally.
    """
    stepper = _Stepper(p, cfg)
    _check_shape(stepper.grid, state)
    u_next, y_next = stepper.advance(state.u_now, state.u_prev, state.y_now, state.y_prev)
    return stepper.energies(state.u_now, state.u_prev, u_next, state.y_now, state.y_prev, y_next)


def energy_flux(p: ModelParams, cfg: SimConfig, state: SimState, probe_index: int) -> float:
    """Instantaneous power ``-u_t u_x`` flowing rightwards through grid node ``probe_index``."""
    stepper = _Stepper(p, cfg)
    _check_shape(stepper.grid, state)
    if not 0 < probe_index < len(stepper.grid.x) - 1:
        raise GeometryError(f"probe index {probe_index} is not an interior node")
    u_next, _ = stepper.advance(state.u_now, state.u_prev, state.y_now, state.y_prev)
    return float(stepper.flux(state.u_now, state.u_prev, u_next, probe_index))


def _at_rest(stepper, u, y):
    # zero centered velocity at t=0: u_prev = u_next = u + dt**2 * acc / 2
    zeros_u, zeros_y = np.zeros_like(u), np.zeros_like(y)
    u_next, y_next = stepper.advance(u, zeros_u, y, zeros_y)
    # advance(u, 0, ...) = 2u + dt**2 a, so u + dt**2 a / 2 is its mean with 0
    return 0.5 * u_next, 0.5 * y_next


def init_localized(p: ModelParams, cfg: SimConfig, which: int = 1, amplitude: float = 1.0) -> SimState:
    """Displace oscillator ``which`` (1 at ``-a/2``, 2 at ``+a/2``) and release it from rest."""
    if which not in (1, 2):
        raise ValueError(f"which must be 1 or 2, got {which!r}")
    stepper = _Stepper(p, cfg)
    state = zero_state(stepper.grid)
    state.y_now[which - 1] = amplitude
    state.u_prev, state.y_prev = _at_rest(stepper, state.u_now, state.y_now)
    return state


def init_mode(p: ModelParams, cfg: SimConfig, shape: ModeShape, amplitude: float = 1.0) -> SimState:
    """Sample a stationary mode onto the grid as a standing oscillation ``cos(omega t)``."""
    grid = build_grid(p, cfg)
    if abs(shape.a - p.a) > 1e-12 * p.a:
        raise GeometryError("mode shape was built for a different separation")
    edge = abs(shape(grid.x[-1]))
    if edge > 1e-4:
        raise GeometryError(f"mode tail {edge:.2e} at x=L is not negligible; enlarge half_length")
    u = amplitude * shape(grid.x)
    u[0] = u[-1] = 0.0
    y = amplitude * np.array(shape.oscillator_amplitudes, dtype=float)
    c = math.cos(shape.omega * cfg.dt)
    return SimState(u, c * u, y, c * y, 0)


def reverse(state: SimState) -> SimState:
    """Time-reversed state (swap the two time levels)."""
    return SimState(state.u_prev.copy(), state.u_now.copy(), state.y_prev.copy(), state.y_now.copy(), state.step)


def mirror(state: SimState) -> SimState:
    """Image of a state under ``x -> -x``."""
    return SimState(state.u_now[::-1].copy(), state.u_prev[::-1].copy(),
                    state.y_now[::-1].copy(), state.y_prev[::-1].copy(), state.step)


def run(p: ModelParams, cfg: SimConfig, initial: SimState) -> TimeSeries:
    """Integrate ``cfg.n_steps`` steps, recording every ``cfg.record_stride`` steps.

    The record at step ``n`` uses levels ``n - 1, n, n + 1`` for centered
    velocities. The returned series carries the final state.
    """
    stepper = _Stepper(p, cfg)
    grid = stepper.grid
    _check_shape(grid, initial)
    n_steps, stride = int(cfg.n_steps), int(cfg.record_stride)
    n_rec = n_steps // stride + 1
    rec = {k: np.empty(n_rec) for k in ("t", "y1", "y2", "E_osc1", "E_osc2", "E_string", "E_couple1", "E_couple2")}
    flux = np.empty((n_rec, len(grid.probes)))

    u, u_prev = initial.u_now.copy(), initial.u_prev.copy()
    y, y_prev = initial.y_now.copy(), initial.y_prev.copy()
    step0 = initial.step
    r = 0
    for n in range(n_steps + 1):
        u_next, y_next = stepper.advance(u, u_prev, y, y_prev)
        if n % stride == 0:
            e = stepper.energies(u, u_prev, u_next, y, y_prev, y_next)
            rec["t"][r] = (step0 + n) * cfg.dt
            rec["y1"][r], rec["y2"][r] = y
            rec["E_osc1"][r], rec["E_osc2"][r] = e.E_osc1, e.E_osc2
            rec["E_string"][r] = e.E_string
            rec["E_couple1"][r], rec["E_couple2"][r] = e.E_couple1, e.E_couple2
            for c, j in enumerate(grid.probes):
                flux[r, c] = stepper.flux(u, u_prev, u_next, j)
            r += 1
        if n == n_steps:
            break
        if n % _BLOWUP_CHECK_EVERY == 0 and not (np.all(np.abs(u_next) <= BLOWUP)
                                                 and np.all(np.abs(y_next) <= BLOWUP)):
            raise StabilityError(f"field exceeded {BLOWUP:g} at step {step0 + n + 1}", step0 + n + 1)
        u_prev, u = u, u_next
        y_prev, y = y, y_next

    probes = tuple(float(grid.x[j]) for j in grid.probes)
    final = SimState(u, u_prev, y, y_prev, step0 + n_steps)
    return TimeSeries(flux=flux, probe_positions=probes, final_state=final, **rec)


def discrete_mode_frequencies(p: ModelParams, cfg: SimConfig, n_modes: int = 2):
    """Bound-mode frequencies of the discretized system, as seen by the leapfrog scheme.

    Solves the generalized eigenproblem of the semi-discrete equations near the
    bound-mode band and maps each frequency through the leapfrog dispersion
    ``sin(w_num dt / 2) = w dt / 2``. Useful as a dt/dx-dependent reference for
    simulated beat periods.
    """
    grid = build_grid(p, cfg)
    dx = cfg.dx
    n_int = len(grid.x) - 2
    # unknowns: interior field nodes (mass dx), then y1, y2 (mass 1); symmetrically scaled
    main = np.full(n_int, 2.0 / dx**2 + p.omega0**2)
    off = np.full(n_int - 1, -1.0 / dx**2)
    k_string = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    n = n_int + 2
    k = sp.lil_matrix((n, n))
    k[:n_int, :n_int] = k_string
    for i, node in enumerate(grid.couplings):
        j = node - 1
        k[j, j] += p.kappa / dx
        k[n_int + i, n_int + i] = p.Omega0**2 + p.kappa
        k[j, n_int + i] = k[n_int + i, j] = -p.kappa / math.sqrt(dx)
    shift = p.Omega0**2 + 0.5 * p.kappa
    vals = eigsh(k.tocsc(), k=n_modes, sigma=shift, which="LM", return_eigenvectors=False)
    w = np.sort(np.sqrt(vals))
    return 2.0 / cfg.dt * np.arcsin(0.5 * w * cfg.dt)
