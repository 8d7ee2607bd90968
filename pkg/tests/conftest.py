import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from kgtunnel.model import ModelParams  # noqa: E402
from kgtunnel.spectral import solve_modes  # noqa: E402
from kgtunnel.timedomain import SimConfig, init_localized, run  # noqa: E402

P2_PARAMS = dict(omega0=1.0, Omega0=0.6, kappa=0.3, a=3.0)


def p2_config(t_end=2000.0, sponge=True, stride=10):
    return SimConfig(
        half_length=40.0,
        dx=0.02,
        dt=0.01,
        n_steps=int(round(t_end / 0.01)),
        sponge_width=10.0 if sponge else 0.0,
        sponge_strength=0.5 if sponge else 0.0,
        record_stride=stride,
        probe_positions=(-5.0, 0.0, 5.0),
    )


@pytest.fixture(scope="session")
def p2_params():
    return ModelParams(**P2_PARAMS)


@pytest.fixture(scope="session")
def p2_modes(p2_params):
    return solve_modes(p2_params)


@pytest.fixture(scope="session")
def p2_run(p2_params):
    """Beat run: oscillator 1 displaced, sponge on, T = 2000."""
    cfg = p2_config()
    return cfg, run(p2_params, cfg, init_localized(p2_params, cfg, which=1, amplitude=1.0))


@pytest.fixture(scope="session")
def p2_run_conservative(p2_params):
    """Same start, sponge off, T = 500."""
    cfg = p2_config(t_end=500.0, sponge=False, stride=5)
    return cfg, run(p2_params, cfg, init_localized(p2_params, cfg, which=1, amplitude=1.0))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
