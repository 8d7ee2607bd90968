"""Command-line front end: ``kgtunnel {modes,sweep,simulate,shape}``.

Exit codes: 0 success, 2 no root / wrong regime, 3 invalid input, 4 numerical
instability. CSV output carries ``#`` comment lines for metadata; all numbers
are printed with 17 significant digits.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import sys

import numpy as np

from . import analysis, spectral, timedomain
from .exceptions import (GeometryError, InsufficientCycles, InvalidParameters, KGTunnelError,
                         NoRoot, PeaksNotResolved, StabilityError)
from .model import ModelParams, classify_regime, evanescent_rate

EXIT_OK = 0
EXIT_NO_ROOT = 2
EXIT_INVALID = 3
EXIT_UNSTABLE = 4

# splittings closer than this multiple of the cancellation floor are not reported
FLOOR_MARGIN = 100.0


def fmt(value) -> str:
    if isinstance(value, str):
        return value
    return format(float(value), ".17g")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- config files

PARAM_KEYS = ("omega0", "Omega0", "kappa", "a")
SIM_KEYS = {
    "half_length": float,
    "dx": float,
    "dt": float,
    "n_steps": int,
    "t_end": float,
    "sponge_width": float,
    "sponge_strength": float,
    "record_stride": int,
    "probe_positions": lambda s: tuple(float(v) for v in s.split(",") if v.strip()),
}
EXPERIMENT_KEYS = {
    "init": str,
    "which": int,
    "amplitude": float,
    "parity": str,
}


def parse_config(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment. Unknown keys are rejected."""
    known = {k: float for k in PARAM_KEYS} | SIM_KEYS | EXPERIMENT_KEYS
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameters(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in known:
            raise InvalidParameters(f"line {lineno}: unknown key {key!r}")
        if key in out:
            raise InvalidParameters(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = known[key](value)
        except ValueError as exc:
            raise InvalidParameters(f"line {lineno}: bad value for {key!r}: {value!r}") from exc
    return out


def load_run_config(text: str):
    """Turn a config file into ``(ModelParams, SimConfig, experiment dict)``, fully validated."""
    cfg = parse_config(text)
    missing = [k for k in PARAM_KEYS + ("dx", "dt") if k not in cfg]
    if missing:
        raise InvalidParameters(f"missing keys: {', '.join(missing)}")
    p = ModelParams(*(cfg[k] for k in PARAM_KEYS))
    if ("n_steps" in cfg) == ("t_end" in cfg):
        raise InvalidParameters("give exactly one of n_steps and t_end")
    n_steps = cfg["n_steps"] if "n_steps" in cfg else int(round(cfg["t_end"] / cfg["dt"]))
    half_length = cfg.get("half_length", 40.0)
    probes = tuple(cfg.get("probe_positions", ()))
    if 0.0 not in probes:
        probes = (0.0,) + probes
    sim = timedomain.SimConfig(
        half_length=half_length,
        dx=cfg["dx"],
        dt=cfg["dt"],
        n_steps=n_steps,
        sponge_width=cfg.get("sponge_width", 0.0),
        sponge_strength=cfg.get("sponge_strength", 0.0),
        record_stride=cfg.get("record_stride", 1),
        probe_positions=probes,
    )
    sim.validate(p)
    experiment = {
        "init": cfg.get("init", "localized"),
        "which": cfg.get("which", 1),
        "amplitude": cfg.get("amplitude", 1.0),
        "parity": cfg.get("parity", "symmetric"),
    }
    if experiment["init"] not in ("localized", "mode"):
        raise InvalidParameters(f"init must be 'localized' or 'mode', got {experiment['init']!r}")
    if experiment["which"] not in (1, 2):
        raise InvalidParameters("which must be 1 or 2")
    try:
        spectral.Parity(experiment["parity"])
    except ValueError as exc:
        raise InvalidParameters(f"unknown parity {experiment['parity']!r}") from exc
    return p, sim, experiment


# ---------------------------------------------------------------- commands

def _params(args) -> ModelParams:
    return ModelParams(args.omega0, args.Omega0, args.kappa, args.a)


def _param_header(p: ModelParams) -> str:
    return "# " + " ".join(f"{k}={fmt(getattr(p, k))}" for k in PARAM_KEYS)


def _reportable(sol) -> bool:
    return sol.delta_omega > FLOOR_MARGIN * sol.cancellation_floor


def cmd_modes(args, out, err) -> int:
    p = _params(args)
    regime = classify_regime(p)
    sol = spectral.solve_modes(p, tol=args.tol)
    wb = spectral.bound_mode_frequency(p, tol=args.tol)
    asym = spectral.asymptotic_splitting(p)
    if _reportable(sol):
        dw = sol.delta_omega
        rel = abs(dw - asym) / dw
    else:
        print(f"warning: splitting {sol.delta_omega:.3e} is within {FLOOR_MARGIN:g}x of the "
              f"cancellation floor {sol.cancellation_floor:.3e}; not reported", file=err)
        dw = rel = math.nan
    row = {
        "omega0": p.omega0, "Omega0": p.Omega0, "kappa": p.kappa, "a": p.a,
        "regime": str(regime.classification),
        "omega_plus": sol.omega_plus, "omega_minus": sol.omega_minus,
        "delta_omega": dw, "delta_omega_asym": asym, "omega_b": wb,
        "relative_deviation": rel,
    }
    if args.csv:
        print(_param_header(p), file=out)
        print(",".join(row), file=out)
        print(",".join(fmt(v) for v in row.values()), file=out)
    else:
        width = max(map(len, row))
        for k, v in row.items():
            print(f"{k:<{width}} = {fmt(v)}", file=out)
    return EXIT_OK


SWEEP_COLUMNS = ("a", "kappa", "omega_plus", "omega_minus", "delta_omega", "delta_omega_asym")


def cmd_sweep(args, out, err) -> int:
    base = _params(args)
    if args.steps < 1:
        raise InvalidParameters("steps must be >= 1")
    values = np.linspace(args.start, args.stop, args.steps) if args.steps > 1 else np.array([args.start])
    print(_param_header(base) + f" axis={args.axis}", file=out)
    print(",".join(SWEEP_COLUMNS), file=out)
    good_a, good_dw, n_fail = [], [], 0
    for i, v in enumerate(values):
        a = float(v) if args.axis == "a" else base.a
        kappa = float(v) if args.axis == "kappa" else base.kappa
        try:
            p = base.replace(a=a, kappa=kappa)
            sol = spectral.solve_modes(p, tol=args.tol)
            asym = spectral.asymptotic_splitting(p)
            if not _reportable(sol):
                raise NoRoot(f"splitting {sol.delta_omega:.3e} below {FLOOR_MARGIN:g}x cancellation floor")
        except KGTunnelError as exc:
            n_fail += 1
            print(",".join(fmt(x) for x in (a, kappa, math.nan, math.nan, math.nan, math.nan)), file=out)
            print(f"# error row={i}: {type(exc).__name__}: {exc}", file=out)
            continue
        print(",".join(fmt(x) for x in (a, kappa, sol.omega_plus, sol.omega_minus, sol.delta_omega, asym)),
              file=out)
        good_a.append(a)
        good_dw.append(sol.delta_omega)
    if n_fail == len(values):
        print("error: every sweep point failed", file=err)
        return EXIT_NO_ROOT
    if args.axis == "a" and len(good_a) >= 2:
        fit = analysis.log_linear_fit(good_a, good_dw)
        expected = analysis.expected_decay_slope(base)
        print(f"# fit slope={fmt(fit.slope)} intercept={fmt(fit.intercept)} r_squared={fmt(fit.r_squared)} "
              f"expected_slope={fmt(expected)}", file=out)
    else:
        print("# fit unavailable (needs an a-sweep with at least two valid rows)", file=out)
    return EXIT_OK


SIM_COLUMNS = ("t", "y1", "y2", "E_osc1", "E_osc2", "E_string", "E_couple", "E_total", "flux_mid")


def cmd_simulate(args, out, err) -> int:
    if args.config is None:
        raise InvalidParameters("simulate needs --config")
    with open(args.config) as fh:
        p, cfg, exp = load_run_config(fh.read())
    if exp["init"] == "localized":
        state = timedomain.init_localized(p, cfg, exp["which"], exp["amplitude"])
    else:
        sol = spectral.solve_modes(p)
        parity = spectral.Parity(exp["parity"])
        omega = sol.omega_plus if parity is spectral.Parity.SYMMETRIC else sol.omega_minus
        state = timedomain.init_mode(p, cfg, spectral.mode_shape(p, omega, parity), exp["amplitude"])
    series = timedomain.run(p, cfg, state)

    extra = [f"flux_at_{fmt(x)}" for x in series.probe_positions[1:]]
    print(_param_header(p), file=out)
    print("# " + " ".join(f"{k}={fmt(getattr(cfg, k))}" for k in
                          ("half_length", "dx", "dt", "n_steps", "sponge_width", "sponge_strength",
                           "record_stride")), file=out)
    print(",".join(SIM_COLUMNS + tuple(extra)), file=out)
    cols = [series.t, series.y1, series.y2, series.E_osc1, series.E_osc2, series.E_string,
            series.E_couple, series.E_total] + [series.flux[:, c] for c in range(series.flux.shape[1])]
    for row in zip(*cols):
        print(",".join(fmt(v) for v in row), file=out)

    try:
        predicted = 2.0 * math.pi / spectral.solve_modes(p).delta_omega
        print(f"# beat_period_predicted={fmt(predicted)}", file=out)
    except NoRoot as exc:
        predicted = None
        print(f"# beat_period_predicted=unavailable ({exc})", file=out)
    try:
        beat = analysis.beat_period(series)
        print(f"# beat_period_measured={fmt(beat.period)} uncertainty={fmt(beat.uncertainty)}", file=out)
        if predicted is not None:
            print(f"# beat_relative_error={fmt(beat.period / predicted - 1.0)}", file=out)
    except InsufficientCycles as exc:
        print(f"# beat_period_measured=unavailable (InsufficientCycles: {exc})", file=out)
    try:
        lo, hi, res = analysis.spectral_peaks(series, (p.Omega0, p.omega0))
        print(f"# spectral_peaks={fmt(lo)},{fmt(hi)} resolution={fmt(res)}", file=out)
    except (PeaksNotResolved, ValueError) as exc:
        print(f"# spectral_peaks=unavailable ({type(exc).__name__}: {exc})", file=out)
    dev, drift = analysis.energy_drift(series)
    print(f"# energy_max_relative_deviation={fmt(dev)} energy_drift={fmt(drift)}", file=out)
    return EXIT_OK


def cmd_shape(args, out, err) -> int:
    p = _params(args)
    parity = spectral.Parity(args.parity)
    sol = spectral.solve_modes(p, tol=args.tol)
    omega = sol.omega_plus if parity is spectral.Parity.SYMMETRIC else sol.omega_minus
    shape = spectral.mode_shape(p, omega, parity)
    dx = args.dx
    if not dx > 0:
        raise InvalidParameters("dx must be positive")
    half_length = args.half_length
    if half_length is None:
        half_length = 0.5 * p.a + 20.0 / evanescent_rate(p, omega)
    n = int(math.ceil(half_length / dx))
    x = np.arange(-n, n + 1) * dx
    u = shape(x)
    y_left, y_right = shape.oscillator_amplitudes
    print(_param_header(p) + f" parity={parity}", file=out)
    print(f"# omega={fmt(omega)} decay_rate={fmt(shape.decay_rate)}", file=out)
    print(f"# oscillator x={fmt(-0.5 * p.a)} y={fmt(y_left)}", file=out)
    print(f"# oscillator x={fmt(0.5 * p.a)} y={fmt(y_right)}", file=out)
    print("x,u", file=out)
    for xi, ui in zip(x, u):
        print(f"{fmt(xi)},{fmt(ui)}", file=out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    params = _Parser(add_help=False, allow_abbrev=False)
    params.add_argument("--omega0", type=float, default=1.0, help="string cut-off frequency")
    params.add_argument("--Omega0", type=float, default=0.6, help="free oscillator frequency")
    params.add_argument("--kappa", type=float, default=0.1, help="coupling strength")
    params.add_argument("--a", type=float, default=8.0, help="oscillator separation")
    params.add_argument("--tol", type=float, default=1e-15, help="relative root tolerance")
    common = _Parser(add_help=False, allow_abbrev=False)
    common.add_argument("--csv", action="store_true", help="machine-readable output")
    common.add_argument("--out", help="write output to this path instead of stdout")

    parser = _Parser(prog="kgtunnel", description=__doc__.splitlines()[0], allow_abbrev=False)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("modes", parents=[params, common], allow_abbrev=False,
                       help="normal-mode frequencies and splitting")
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("sweep", parents=[params, common], allow_abbrev=False,
                       help="splitting along a parameter sweep (CSV)")
    p.add_argument("--axis", choices=("a", "kappa"), default="a")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--steps", type=int, default=9)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("simulate", parents=[common], allow_abbrev=False,
                       help="time-domain run from a config file (CSV)")
    p.add_argument("--config", help="key = value run configuration")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("shape", parents=[params, common], allow_abbrev=False,
                       help="mode profile u(x) (CSV)")
    p.add_argument("--parity", choices=[str(q) for q in spectral.Parity], default="symmetric")
    p.add_argument("--dx", type=float, default=0.05)
    p.add_argument("--half-length", type=float, default=None)
    p.set_defaults(func=cmd_shape)
    return parser


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_INVALID
    try:
        with contextlib.ExitStack() as stack:
            out = stack.enter_context(open(args.out, "w")) if args.out else stdout
            return args.func(args, out, stderr)
    except NoRoot as exc:
        print(f"no root: {exc}", file=stderr)
        return EXIT_NO_ROOT
    except StabilityError as exc:
        print(f"unstable at step {exc.step}: {exc}", file=stderr)
        return EXIT_UNSTABLE
    except (InvalidParameters, GeometryError, OSError, ValueError) as exc:
        print(f"invalid input: {exc}", file=stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
