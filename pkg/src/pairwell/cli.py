"""Command-line interface.

Subcommands
-----------
spectrum   diagonalize a static well and write its spectrum table
tune       find the well depth matching a spectral target
run        execute one configured scenario (single run)
sweep      run the decay-rate-versus-width family sweep
analyze    re-run decay/slope analysis on a stored timeseries.csv

Configuration merges preset < config file < environment variables
(PAIRWELL_<KEY>) < flags.  Exit codes: 0 ok, 2 configuration error,
3 invariant-check failure, 4 numerical non-convergence.
"""

import argparse
import json
import os
import sys

import numpy as np

from .analysis import TimeSeries, decay_probability, fit_decay_rate, late_slope
from .config import PRESETS, SCHEMA, RunConfig, build_config
from .errors import ConfigError, ConvergenceError, InvariantError
from .fields import FieldConfig
from .runner import run_scenario, write_csv
from .spectrum import bound_states, compute_spectrum, tune_well_depth
from .units import make_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_NUMERIC = 4


def _common_flags(p: argparse.ArgumentParser):
    p.add_argument("--config", help="path to a key = value configuration file")
    p.add_argument("--preset", help=f"one of: {', '.join(sorted(PRESETS))}")
    p.add_argument("--workers", type=int, help="worker processes")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cutoff", type=float, dest="p_max",
                   help="momentum cutoff of the evolved sets")
    p.add_argument("--dt", type=float, help="time step")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override any configuration key (repeatable)")


def _build(args) -> RunConfig:
    text = None
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
    overrides = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, _, value = item.partition("=")
        key = key.strip()
        if key not in SCHEMA:
            raise ConfigError(f"unknown key {key!r} in --set")
        overrides[key] = SCHEMA[key][0](value.strip())
    for flag in ("workers", "out", "p_max", "dt"):
        if getattr(args, flag, None) is not None:
            overrides[flag] = getattr(args, flag)
    return build_config(preset=args.preset, config_text=text,
                        env=dict(os.environ), overrides=overrides)


def _cmd_run(args) -> int:
    cfg = _build(args)
    result = run_scenario(cfg)
    summary = {
        "run_id": cfg.content_hash(),
        "out": cfg.out,
        "checks": {k: v["ok"] for k, v in result.invariant_checks.items()},
        "analysis": {k: v for k, v in result.analysis.items()
                     if isinstance(v, (int, float, str))},
    }
    json.dump(summary, sys.stdout, indent=2, default=float)
    print()
    if not result.all_checks_passed:
        print("invariant check failed", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = _build(args)
    if cfg.scenario != "sweep":
        raise ConfigError("sweep command needs scenario = sweep")
    return _cmd_run_result(run_scenario(cfg))


def _cmd_run_result(result) -> int:
    print(json.dumps({k: v for k, v in result.analysis.items() if k != "rows"},
                     indent=2, default=float))
    return EXIT_OK if result.all_checks_passed else EXIT_INVARIANT


def _cmd_spectrum(args) -> int:
    grid = make_grid(args.L, args.N)
    cfg = FieldConfig(V0=args.V0, D=args.D, W=args.W)
    spec = compute_spectrum(grid, cfg)
    gap = bound_states(spec)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        write_csv(os.path.join(args.out, "static_spectrum.csv"),
                  {"V0": args.V0, "D": args.D, "W": args.W,
                   "grid": f"L={args.L} N={args.N}"},
                  {"E": spec.energies, "classification": spec.classes,
                   "W_b": spec.widths, "P_in": spec.p_in})
    print(json.dumps({
        "gap_energies": [b.energy for b in gap],
        "gap_widths": [b.width for b in gap],
    }, indent=2))
    return EXIT_OK


def _cmd_tune(args) -> int:
    grid = make_grid(args.L, args.N)
    v0 = tune_well_depth(args.D, args.W, args.target, grid, mode=args.mode)
    spec = compute_spectrum(grid, FieldConfig(V0=v0, D=args.D, W=args.W))
    gap = bound_states(spec)
    print(json.dumps({
        "V0": v0, "D": args.D, "W": args.W,
        "gap_energies": [b.energy for b in gap],
        "ground_width": gap[0].width if gap else None,
    }, indent=2))
    return EXIT_OK


def _cmd_analyze(args) -> int:
    import io

    with open(args.timeseries) as fh:
        body = "".join(line for line in fh if not line.startswith("#"))
    data = np.genfromtxt(io.StringIO(body), delimiter=",", names=True)
    t = data["t"]
    out = {}
    if args.column not in data.dtype.names:
        raise ConfigError(
            f"column {args.column!r} not in {list(data.dtype.names)}"
        )
    series = TimeSeries(t, data[args.column])
    d = decay_probability(series, saturation=args.saturation)
    window = (args.d_lo, args.d_hi)
    try:
        fit = fit_decay_rate(d, d_window=window, t_min=args.t_min)
        out["gamma"] = fit.gamma
        out["r_squared"] = fit.r_squared
        out["residual"] = fit.residual
        out["window"] = fit.window
        out["n_points"] = fit.n_points
    except ConvergenceError as exc:
        out["fit_error"] = str(exc)
    try:
        out["late_slope"] = late_slope(series)
    except ConvergenceError as exc:
        out["slope_error"] = str(exc)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="pairwell",
        description="Vacuum pair creation in a binding well, with and without a laser",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute one configured scenario")
    _common_flags(p)
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("sweep", help="run the decay-rate-versus-width sweep")
    _common_flags(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("spectrum", help="static spectrum of one well")
    p.add_argument("--V0", type=float, required=True)
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--W", type=float, default=0.3)
    p.add_argument("--L", type=float, default=80.0)
    p.add_argument("--N", type=int, default=512)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("tune", help="find the depth matching a spectral target")
    p.add_argument("--D", type=float, required=True)
    p.add_argument("--W", type=float, default=0.3)
    p.add_argument("--target", type=float, required=True)
    p.add_argument("--mode", choices=("ground", "splitting"), default="ground")
    p.add_argument("--L", type=float, default=80.0)
    p.add_argument("--N", type=int, default=512)
    p.set_defaults(func=_cmd_tune)

    p = sub.add_parser("analyze", help="re-run analysis on a stored time series")
    p.add_argument("timeseries", help="path to timeseries.csv")
    p.add_argument("--column", default="n_b")
    p.add_argument("--saturation", type=int, default=1)
    p.add_argument("--d-lo", type=float, default=0.05)
    p.add_argument("--d-hi", type=float, default=0.8)
    p.add_argument("--t-min", type=float, default=0.0)
    p.set_defaults(func=_cmd_analyze)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantError as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ConvergenceError as exc:
        print(f"numerical non-convergence: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
