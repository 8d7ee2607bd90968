import math

import numpy as np
import pytest

from kgtunnel.analysis import beat_period, energy_drift
from kgtunnel.exceptions import GeometryError, InvalidParameters, StabilityError
from kgtunnel.model import ModelParams
from kgtunnel.spectral import Parity, mode_shape, solve_modes
from kgtunnel.timedomain import (SimConfig, build_grid, discrete_mode_frequencies, energy_flux, init_localized,
                                 init_mode, mirror, reverse, run, step, total_energy, zero_state)


@pytest.fixture
def p():
    return ModelParams(1.0, 0.6, 0.3, 3.0)


def small_config(**kw):
    base = dict(half_length=20.0, dx=0.05, dt=0.025, n_steps=100, record_stride=1,
                probe_positions=(-5.0, 0.5, 5.0))
    base.update(kw)
    return SimConfig(**base)


def energy_norm(state):
    return math.sqrt(np.dot(state.u_now, state.u_now) + np.dot(state.y_now, state.y_now))


class TestGrid:
    def test_node_count(self, p):
        grid = build_grid(p, SimConfig(40.0, 0.02, 0.01, 1))
        assert len(grid.x) == 4001
        assert grid.x[0] == -40.0
        assert grid.x[grid.mid] == 0.0

    def test_coupling_nodes(self, p):
        grid = build_grid(p, SimConfig(40.0, 0.02, 0.01, 1))
        assert grid.x[grid.left] == pytest.approx(-1.5, abs=1e-12)
        assert grid.x[grid.right] == pytest.approx(1.5, abs=1e-12)

    def test_unrepresentable_separation(self, p):
        with pytest.raises(GeometryError):
            build_grid(p, SimConfig(14.7, 0.07, 0.03, 1))

    @pytest.mark.parametrize(
        "kw",
        [
            dict(dt=0.05),  # dt = dx
            dict(dt=0.3, dx=0.5),  # dt*omega0 > 0.2
            dict(half_length=10.0),  # tails do not fit
            dict(n_steps=-1),
            dict(record_stride=0),
            dict(sponge_width=19.0, sponge_strength=1.0),
        ],
    )
    def test_invalid_config(self, p, kw):
        with pytest.raises(InvalidParameters):
            build_grid(p, small_config(**kw))

    def test_probe_on_oscillator_rejected(self, p):
        with pytest.raises(GeometryError):
            build_grid(p, small_config(probe_positions=(1.5,)))

    def test_sponge_mask(self, p):
        grid = build_grid(p, small_config(sponge_width=5.0, sponge_strength=1.0))
        inner = np.abs(grid.x) <= 15.0
        assert np.all(grid.damping[inner] == 1.0)
        assert np.all(np.diff(grid.damping[grid.x >= 15.0]) <= 0)
        assert grid.damping[-1] == pytest.approx(math.exp(-0.025))


class TestStep:
    def test_zero_is_fixed_point(self, p):
        cfg = small_config()
        state = zero_state(build_grid(p, cfg))
        new = step(p, cfg, state)
        assert not new.u_now.any() and not new.y_now.any()
        assert new.step == 1

    def test_decoupled_oscillator(self):
        errs = []
        for dt in (0.04, 0.02):
            q = ModelParams(1.0, 0.6, 1e-12, 3.0)
            cfg = SimConfig(20.0, 0.05, dt, int(round(50 / dt)))
            series = run(q, cfg, init_localized(q, cfg, 1, 1.0))
            err = np.max(np.abs(series.y1 - np.cos(0.6 * series.t)))
            assert np.max(np.abs(series.y2)) < 1e-20
            assert np.max(np.abs(series.final_state.u_now)) < 1e-9
            errs.append(err)
        assert errs[0] < 1e-3
        # second order in dt
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)

    def test_mode_returns_after_one_period(self, p):
        sol = solve_modes(p)
        shape = mode_shape(p, sol.omega_plus, Parity.SYMMETRIC)
        errs = []
        for dx, dt in ((0.05, 0.025), (0.025, 0.0125)):
            period = 2 * math.pi / sol.omega_plus
            cfg = SimConfig(20.0, dx, dt, int(round(period / dt)))
            state = init_mode(p, cfg, shape)
            end = run(p, cfg, state).final_state
            # compare with the initial profile at the exact phase reached
            phase = math.cos(sol.omega_plus * cfg.n_steps * dt)
            diff = math.sqrt(np.sum((end.u_now - phase * state.u_now) ** 2) * dx
                             + np.sum((end.y_now - phase * state.y_now) ** 2))
            ref = math.sqrt(np.sum(state.u_now**2) * dx + np.sum(state.y_now**2))
            errs.append(diff / ref)
        assert errs[0] < 2e-3
        assert errs[1] < errs[0] / 3

    def test_blowup_detected(self, p):
        cfg = small_config(n_steps=10)
        with pytest.raises(StabilityError) as info:
            run(p, cfg, init_localized(p, cfg, 1, 1e7))
        assert info.value.step == 1


class TestEnergy:
    def test_zero_state(self, p):
        cfg = small_config()
        e = total_energy(p, cfg, zero_state(build_grid(p, cfg)))
        assert e.E_total == 0.0 and e.E_string == 0.0 and e.E_couple == 0.0

    def test_localized_initial_energy(self, p):
        cfg = small_config()
        e = total_energy(p, cfg, init_localized(p, cfg, 1, 1.0))
        assert e.E_total == pytest.approx(0.5 * 0.36 + 0.5 * 0.3, rel=1e-14)
        assert e.E_osc2 == 0.0 and e.E_string == 0.0

    def test_decoupled_energy_constant(self):
        q = ModelParams(1.0, 0.6, 1e-12, 3.0)
        cfg = SimConfig(20.0, 0.05, 0.025, 4000, record_stride=10)
        series = run(q, cfg, init_localized(q, cfg, 1, 2.0))
        assert series.E_total[0] == pytest.approx(0.5 * 0.36 * 4, rel=1e-10)
        assert np.max(np.abs(series.E_total / series.E_total[0] - 1)) < (0.6 * 0.025) ** 2

    def test_bookkeeping_identity(self, p):
        cfg = small_config(n_steps=400)
        s = run(p, cfg, init_localized(p, cfg, 1, 1.0))
        total = s.E_string + s.E_osc1 + s.E_osc2 + s.E_couple1 + s.E_couple2
        np.testing.assert_allclose(s.E_total, total, rtol=1e-12)

    def test_conservation_long_run(self, p):
        cfg = small_config(n_steps=100_000, record_stride=50, probe_positions=())
        s = run(p, cfg, init_localized(p, cfg, 1, 1.0))
        dev, drift = energy_drift(s)
        assert dev <= 1e-3
        assert drift <= 1e-4


class TestFlux:
    def test_zero_state(self, p):
        cfg = small_config()
        grid = build_grid(p, cfg)
        assert energy_flux(p, cfg, zero_state(grid), grid.probes[0]) == 0.0

    def test_matches_series_column(self, p):
        cfg = small_config(n_steps=0)
        state = init_mode(p, cfg, mode_shape(p, solve_modes(p).omega_plus, Parity.SYMMETRIC))
        state.u_prev = state.u_prev * 0.99
        grid = build_grid(p, cfg)
        series = run(p, cfg, state)
        for c, j in enumerate(grid.probes):
            assert series.flux[0, c] == energy_flux(p, cfg, state, j)

    def test_single_mode_has_no_mean_flux(self, p):
        sol = solve_modes(p)
        shape = mode_shape(p, sol.omega_minus, Parity.ANTISYMMETRIC)
        n = int(round(20 * 2 * math.pi / sol.omega_minus / 0.025))
        cfg = small_config(n_steps=n)
        s = run(p, cfg, init_mode(p, cfg, shape))
        for c in range(s.flux.shape[1]):
            j = s.flux[:, c]
            assert abs(np.mean(j)) <= 1e-3 * np.max(np.abs(j))

    def test_beat_flux_alternates(self, p2_run, p2_modes):
        cfg, series = p2_run
        mid = series.probe_positions.index(0.0)
        flux = series.flux[:, mid]
        period = 2 * math.pi / p2_modes.delta_omega
        signs = []
        for k in range(4):
            window = (series.t >= k * period / 2) & (series.t < (k + 1) * period / 2)
            signs.append(np.sign(np.mean(flux[window])))
        assert signs == [1, -1, 1, -1]


class TestInitialStates:
    def test_localized(self, p):
        cfg = small_config()
        s = init_localized(p, cfg, 1, 1.0)
        assert s.y_now.tolist() == [1.0, 0.0]
        assert not s.u_now.any()
        with pytest.raises(ValueError):
            init_localized(p, cfg, 3, 1.0)

    def test_mode_symmetry(self, p):
        cfg = small_config()
        sol = solve_modes(p)
        sym = init_mode(p, cfg, mode_shape(p, sol.omega_plus, Parity.SYMMETRIC))
        anti = init_mode(p, cfg, mode_shape(p, sol.omega_minus, Parity.ANTISYMMETRIC))
        np.testing.assert_array_equal(sym.u_now, sym.u_now[::-1])
        mid = len(anti.u_now) // 2
        assert anti.u_now[mid] == 0.0
        assert anti.y_now[0] == -anti.y_now[1]

    def test_mode_tail_must_fit(self):
        q = ModelParams(1.0, 0.6, 0.3, 3.0)
        sol = solve_modes(q)
        cfg = SimConfig(14.5, 0.05, 0.025, 10)
        with pytest.raises(GeometryError):
            init_mode(q, cfg, mode_shape(q, sol.omega_plus, Parity.SYMMETRIC))

    def test_mode_persists(self, p):
        sol = solve_modes(p)
        for w, par in ((sol.omega_plus, Parity.SYMMETRIC), (sol.omega_minus, Parity.ANTISYMMETRIC)):
            shape = mode_shape(p, w, par)
            n = int(round(10 * 2 * math.pi / w / 0.025))
            cfg = small_config(n_steps=n)
            start = init_mode(p, cfg, shape)
            end = run(p, cfg, start).final_state
            overlap = abs(np.dot(start.u_now, end.u_now)) / (np.linalg.norm(start.u_now) * np.linalg.norm(end.u_now))
            assert overlap >= 0.999

    @pytest.mark.parametrize(
        "kappa",
        [0.01, 0.03, 0.1, pytest.param(0.3, marks=pytest.mark.xfail(
            strict=True, reason="at kappa=0.3 about 13.5% of the initial energy is radiated"))],
    )
    def test_localized_start_mostly_bound(self, kappa):
        q = ModelParams(1.0, 0.6, kappa, 3.0)
        sol = solve_modes(q)
        x = np.linspace(-60, 60, 120001)
        bound = []
        for w, par in ((sol.omega_plus, Parity.SYMMETRIC), (sol.omega_minus, Parity.ANTISYMMETRIC)):
            shape = mode_shape(q, w, par)
            y_left, y_right = shape.oscillator_amplitudes
            norm = np.trapezoid(shape(x) ** 2, x) + y_left**2 + y_right**2
            # initial displacement (y1 = 1) projected with the mass inner product
            coeff = y_left / norm
            bound.append(0.5 * w**2 * coeff**2 * norm)
        e0 = 0.5 * q.Omega0**2 + 0.5 * kappa
        assert bound[0] == pytest.approx(bound[1], rel=0.1)
        assert 1 - sum(bound) / e0 < 0.1


class TestSymmetries:
    def test_time_reversal(self, p):
        cfg = small_config(n_steps=4000, record_stride=4000, probe_positions=())
        start = init_localized(p, cfg, 1, 1.0)
        forward = run(p, cfg, start).final_state
        back = reverse(run(p, cfg, reverse(forward)).final_state)
        diff = math.sqrt(np.sum((back.u_now - start.u_now) ** 2) + np.sum((back.y_now - start.y_now) ** 2))
        assert diff <= 1e-6 * energy_norm(start)

    def test_mirror_equivariance(self, p):
        cfg = small_config(n_steps=3000, record_stride=10, probe_positions=())
        s1 = run(p, cfg, init_localized(p, cfg, 1, 1.0))
        s2 = run(p, cfg, init_localized(p, cfg, 2, 1.0))
        np.testing.assert_allclose(s1.y1, s2.y2, rtol=0, atol=1e-12)
        np.testing.assert_allclose(s1.y2, s2.y1, rtol=0, atol=1e-12)
        np.testing.assert_allclose(s1.E_osc1, s2.E_osc2, rtol=0, atol=1e-12)
        np.testing.assert_allclose(mirror(s1.final_state).u_now, s2.final_state.u_now, rtol=0, atol=1e-12)

    def test_conservative_run(self, p2_run_conservative):
        _, series = p2_run_conservative
        dev, drift = energy_drift(series)
        assert dev <= 1e-3 and drift <= 1e-4


class TestMeshConvergence:
    def test_discrete_splitting_second_order(self, p):
        sol = solve_modes(p)
        errs = []
        for dx in (0.1, 0.05, 0.025):
            w = discrete_mode_frequencies(p, SimConfig(40.0, dx, dx / 2, 1))
            errs.append(abs((w[1] - w[0]) - sol.delta_omega))
        for coarse, fine in zip(errs, errs[1:]):
            assert coarse / fine == pytest.approx(4.0, abs=1.0)

    def test_discrete_modes_approach_continuum(self, p):
        sol = solve_modes(p)
        w = discrete_mode_frequencies(p, SimConfig(40.0, 0.02, 0.01, 1))
        np.testing.assert_allclose(w, [sol.omega_plus, sol.omega_minus], rtol=1e-5)

    @pytest.mark.slow
    def test_simulated_beat_period_consistent_under_refinement(self, p):
        sol = solve_modes(p)
        measured = []
        for dx in (0.1, 0.05):
            cfg = SimConfig(40.0, dx, dx / 2, int(round(2000 / (dx / 2))), sponge_width=10.0,
                            sponge_strength=0.5, record_stride=int(round(0.1 / (dx / 2))))
            beat = beat_period(run(p, cfg, init_localized(p, cfg, 1, 1.0)))
            w = discrete_mode_frequencies(p, cfg)
            measured.append(beat)
            assert beat.period == pytest.approx(2 * math.pi / (w[1] - w[0]), rel=0.01)
        a, b = measured
        assert abs(a.period - b.period) <= 2 * (a.uncertainty + b.uncertainty)
        assert b.period == pytest.approx(2 * math.pi / sol.delta_omega, rel=0.01)
