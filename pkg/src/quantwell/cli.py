"""Command-line entry point: ``quantwell {ingest,potential,forecast,analyze,synth}``.

Options can also come from a flat ``key = value`` file given with
``--config``; keys are long option names (``grid-k`` or ``grid_k``).
Flags on the command line win over the file.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as qio
from .analysis import (
    breakout_direction,
    detect_barriers,
    run_migration,
    tunneling_sweep,
)
from .decay import decay_constant, free_float_rotation_period, turnover_probability
from .exceptions import QuantWellError, ValidationError
from .market_data import format_eod_csv, mean_daily_volume, read_eod_csv, validate_series
from .pipeline import DEFAULT_K, build_potential, resolve_decay_law
from .potential import build_price_grid
from .solver import ModelParams, forecast_density, solve_well
from .synthetic import (
    BimodalAccumulation,
    SidewaysChannel,
    SyntheticSpec,
    TrendingWalk,
    VolumeSpec,
    generate_series,
)


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _region(text: str) -> tuple[int, int]:
    try:
        a, b = text.split(":")
        return int(a), int(b)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START:STOP bin range, got {text!r}") from None


def _common_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat key = value option file")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return p


def _market_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--input", help="EOD CSV file")
    p.add_argument("--free-float", type=float)
    p.add_argument("--grid-k", type=int, default=DEFAULT_K)
    p.add_argument("--grid-min", type=float)
    p.add_argument("--grid-max", type=float)
    p.add_argument("--decay", choices=("const", "vol", "gauss"), default="const")
    p.add_argument("--lambda", dest="lambda_", type=float, help="constant decay rate per day")
    p.add_argument("--g-a", type=float)
    p.add_argument("--g-b", type=float)
    p.add_argument("--sigma-hold", type=float)
    p.add_argument("--vol-window", type=int, default=20)
    p.add_argument("--volume-window", type=int, help="bars used for the mean daily volume")
    p.add_argument("--intraday", choices=("close", "uniform", "gauss"), default="uniform")
    p.add_argument("--horizon", type=int, help="look-back in bars (default: rotation period)")
    p.add_argument("--smoothing", choices=("count", "written"), default="count")
    p.add_argument("--window-radius", type=float, default=1.0)
    p.add_argument("--potential", help="read the potential from this CSV/JSON instead of --input")
    return p


def _solver_options() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--hbar", type=float, default=1.0)
    p.add_argument("--mass", type=float, default=1.0)
    p.add_argument("--potential-scale", type=float, default=1.0)
    p.add_argument("--states", type=int, default=1)
    p.add_argument("--forecast", choices=("ground", "boltzmann"), default="ground")
    p.add_argument("--temperature", type=float)
    p.add_argument("--boundary", choices=("face", "node"), default="face")
    return p


def build_parser() -> tuple[argparse.ArgumentParser, list[argparse.ArgumentParser]]:
    common, market, solver = _common_options(), _market_options(), _solver_options()
    parser = argparse.ArgumentParser(prog="quantwell", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    leaves = []

    p = sub.add_parser("ingest", parents=[common, market], help="validate input and report T, P, lambda")
    p.set_defaults(handler=cmd_ingest)
    leaves.append(p)

    p = sub.add_parser("potential", parents=[common, market], help="write held shares and potential")
    p.set_defaults(handler=cmd_potential)
    leaves.append(p)

    p = sub.add_parser("forecast", parents=[common, market, solver], help="solve the well")
    p.set_defaults(handler=cmd_forecast)
    leaves.append(p)

    analyze = sub.add_parser("analyze", help="barriers, breakout, tunneling, migration")
    asub = analyze.add_subparsers(dest="analysis", required=True)
    for name, helptext in (("barriers", "support/resistance levels"),
                           ("breakout", "channel breakout probabilities"),
                           ("tunnel", "transmission/reflection sweep"),
                           ("migrate", "potential migration trajectory")):
        a = asub.add_parser(name, parents=[common, market, solver], help=helptext)
        a.add_argument("--min-prominence", type=float, default=0.25)
        a.set_defaults(handler=cmd_analyze)
        if name == "tunnel":
            a.add_argument("--region", type=_region, help="bin range START:STOP (default whole grid)")
            a.add_argument("--energies", type=_floats, help="comma-separated energies")
            a.add_argument("--e-min", type=float)
            a.add_argument("--e-max", type=float)
            a.add_argument("--e-steps", type=int, default=50)
        if name == "migrate":
            a.add_argument("--steps", type=int, default=20)
            a.add_argument("--build-rate", type=float, default=0.1)
            a.add_argument("--decay-rate", type=float, default=0.1)
        leaves.append(a)

    p = sub.add_parser("synth", parents=[common], help="write a seeded synthetic EOD series")
    p.add_argument("--process", choices=("sideways", "trend", "bimodal"), default="bimodal")
    p.add_argument("--days", type=int, default=120)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--peaks", type=_floats, default=(10.0, 14.0))
    p.add_argument("--weights", type=_floats)
    p.add_argument("--channel", type=_floats, default=(10.0, 12.0), help="LOW,HIGH")
    p.add_argument("--range-fraction", type=float, default=0.3)
    p.add_argument("--drift", type=float, default=0.0)
    p.add_argument("--vol", type=float, default=0.02)
    p.add_argument("--start-price", type=float, default=10.0)
    p.add_argument("--volume-mean", type=float, default=1_000_000.0)
    p.add_argument("--volume-dispersion", type=float, default=0.3)
    p.add_argument("--free-float", type=float)
    p.set_defaults(handler=cmd_synth)
    leaves.append(p)
    return parser, leaves


def _read_config(path: str) -> dict[str, str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"{path}: expected key = value at line {lineno}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.lstrip("-").replace("-", "_")] = value
    return values


def _apply_config(leaves, config: dict[str, str]):
    """Install config values as parser defaults, converted like the flags."""
    for leaf in leaves:
        actions = {a.dest: a for a in leaf._actions}
        actions.setdefault("lambda", actions.get("lambda_"))
        defaults = {}
        for key, raw in config.items():
            action = actions.get(key)
            if action is None or key in ("config", "help"):
                continue
            try:
                value = action.type(raw) if action.type else raw
            except (ValueError, argparse.ArgumentTypeError):
                raise ValidationError(f"config {key}: cannot parse {raw!r}") from None
            if action.choices is not None and value not in action.choices:
                raise ValidationError(f"config {key}: {raw!r} not in {sorted(action.choices)}")
            defaults[action.dest] = value
        leaf.set_defaults(**defaults)
    known = {a.dest for leaf in leaves for a in leaf._actions} | {"lambda"}
    unknown = sorted(set(config) - known)
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(unknown)}")


# -- shared steps -------------------------------------------------------------

def _load_series(args):
    if not args.input:
        raise ValidationError("--input is required")
    if args.free_float is None:
        raise ValidationError("--free-float is required")
    bars = read_eod_csv(args.input)
    if not bars:
        raise ValidationError(f"{args.input}: no data rows")
    return validate_series(bars, args.free_float)


def _build(args):
    series = _load_series(args)
    if (args.grid_min is None) != (args.grid_max is None):
        raise ValidationError("--grid-min and --grid-max go together")
    grid = None
    if args.grid_min is not None:
        grid = build_price_grid(args.grid_min, args.grid_max, args.grid_k)
    law = resolve_decay_law(series, args.decay, args.lambda_, args.g_a, args.g_b,
                            args.sigma_hold, args.vol_window, args.volume_window)
    return build_potential(series, law, grid, args.grid_k, args.intraday, args.horizon,
                           args.smoothing, args.window_radius)


def _potential(args):
    if getattr(args, "potential", None):
        return qio.read_potential(args.potential)
    return _build(args).potential


def _params(args) -> ModelParams:
    return ModelParams(args.hbar, args.mass, args.potential_scale)


def _solve(args, potential, states=None):
    solution = solve_well(potential, _params(args), states or args.states, args.boundary)
    return solution, forecast_density(solution, args.forecast, args.temperature)


def _write(out: Path, name: str, text: str, written: list):
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text, encoding="utf-8", newline="\n")
    written.append(str(path))


def _law_dict(law) -> dict:
    return {"law": type(law).__name__, **{k: v for k, v in vars(law).items()}}


# -- commands -----------------------------------------------------------------

def cmd_ingest(args) -> dict:
    series = _load_series(args)
    v_m = mean_daily_volume(series, args.volume_window)
    p = turnover_probability(v_m, series.free_float)
    report = {
        "bars": len(series),
        "first_date": series.bars[0].date.isoformat(),
        "last_date": series.bars[-1].date.isoformat(),
        "free_float": series.free_float,
        "mean_daily_volume": v_m,
        "rotation_period": free_float_rotation_period(series),
        "turnover_probability": p,
        "decay_constant": decay_constant(p),
    }
    written: list[str] = []
    if args.format == "json":
        _write(Path(args.out), "ingest.json", qio.dumps_json(report), written)
    else:
        lines = [f"{k},{v!r}" if isinstance(v, float) else f"{k},{v}" for k, v in report.items()]
        _write(Path(args.out), "ingest.csv", "key,value\n" + "\n".join(lines) + "\n", written)
    return {"report": report, "written": written}


def cmd_potential(args) -> dict:
    built = _build(args)
    out, written = Path(args.out), []
    if args.format == "json":
        held = qio.held_shares_json(built.held)
        held["decay"] = _law_dict(built.law)
        _write(out, "held_shares.json", qio.dumps_json(held), written)
        _write(out, "potential.json", qio.dumps_json(qio.potential_json(built.potential)), written)
    else:
        _write(out, "held_shares.csv", qio.price_value_csv(built.held.grid, built.held.n), written)
        _write(out, "potential.csv", qio.price_value_csv(built.potential.grid, built.potential.v), written)
    return {"horizon": built.horizon, "decay": _law_dict(built.law),
            "dropped_fraction": built.held.dropped_fraction, "written": written}


def cmd_forecast(args) -> dict:
    potential = _potential(args)
    solution, density = _solve(args, potential)
    out, written = Path(args.out), []
    if args.format == "json":
        _write(out, "eigensolution.json", qio.dumps_json(qio.eigensolution_json(solution)), written)
        _write(out, "forecast.json", qio.dumps_json(qio.density_json(density)), written)
    else:
        _write(out, "energies.csv", qio.energies_csv(solution), written)
        for n, state in enumerate(solution.states, start=1):
            _write(out, f"state_{n}.csv", qio.price_value_csv(solution.grid, state), written)
        _write(out, "forecast.csv", qio.price_value_csv(density.grid, density.mass), written)
    mode_price = float(density.grid.centers[int(np.argmax(density.mass))])
    return {"energies": [float(e) for e in solution.energies], "most_likely_price": mode_price,
            "written": written}


def cmd_analyze(args) -> dict:
    potential = _potential(args)
    out, written = Path(args.out), []
    json_mode = args.format == "json"
    kind = args.analysis
    if kind == "barriers":
        barriers = detect_barriers(potential, args.min_prominence)
        if json_mode:
            _write(out, "barriers.json", qio.dumps_json(qio.barriers_json(barriers)), written)
        else:
            _write(out, "barriers.csv", qio.barriers_csv(barriers), written)
        return {"levels": barriers.prices, "written": written}
    if kind == "breakout":
        barriers = detect_barriers(potential, args.min_prominence)
        _, density = _solve(args, potential)
        p_up, p_down, p_inside = breakout_direction(density, barriers)
        result = {"lower": barriers.levels[0].price, "upper": barriers.levels[-1].price,
                  "p_up": p_up, "p_down": p_down, "p_inside": p_inside}
        if json_mode:
            _write(out, "breakout.json", qio.dumps_json(result), written)
        else:
            lines = [f"{k},{v!r}" for k, v in result.items()]
            _write(out, "breakout.csv", "key,value\n" + "\n".join(lines) + "\n", written)
        return {**result, "written": written}
    if kind == "tunnel":
        region = args.region or (0, potential.grid.k)
        if args.energies:
            energies = list(args.energies)
        else:
            if args.e_min is None or args.e_max is None:
                raise ValidationError("tunnel needs --energies or --e-min/--e-max")
            if args.e_steps < 1:
                raise ValidationError("--e-steps must be >= 1")
            energies = [float(e) for e in np.linspace(args.e_min, args.e_max, args.e_steps)]
        results = tunneling_sweep(potential, _params(args), energies, region)
        if json_mode:
            _write(out, "tunnel.json", qio.dumps_json(qio.tunneling_json(results)), written)
        else:
            _write(out, "tunnel.csv", qio.tunneling_csv(results), written)
        return {"points": len(results), "written": written}
    frames = run_migration(potential, args.steps, _params(args), args.build_rate,
                           args.decay_rate, args.boundary)
    if json_mode:
        _write(out, "migration.json", qio.dumps_json(qio.migration_json(frames)), written)
    else:
        _write(out, "migration.csv", qio.migration_csv(frames), written)
    return {"frames": len(frames), "written": written}


def cmd_synth(args) -> dict:
    if args.process == "sideways":
        if len(args.channel) != 2:
            raise ValidationError("--channel needs LOW,HIGH")
        process = SidewaysChannel(args.channel[0], args.channel[1], args.range_fraction)
    elif args.process == "trend":
        process = TrendingWalk(args.drift, args.vol, args.start_price)
    else:
        weights = args.weights or tuple(1.0 for _ in args.peaks)
        process = BimodalAccumulation(tuple(args.peaks), tuple(weights))
    spec = SyntheticSpec(args.days, process, VolumeSpec(args.volume_mean, args.volume_dispersion),
                         args.seed, args.free_float)
    series = generate_series(spec)
    written: list[str] = []
    _write(Path(args.out), "synthetic.csv", format_eod_csv(series.bars), written)
    return {"bars": len(series), "free_float": series.free_float, "written": written}


def _report(result: dict, json_mode: bool):
    if json_mode:
        sys.stdout.write(json.dumps(result, sort_keys=True) + "\n")
        return
    for key, value in result.items():
        if key == "report":
            for k, v in value.items():
                print(f"{k}: {v}")
        elif key == "written":
            for path in value:
                print(f"wrote {path}")
        else:
            print(f"{key}: {value}")


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    # decided before parsing so that parse errors are reported in the right format
    json_mode = "--format=json" in argv or any(
        a == "--format" and argv[i + 1:i + 2] == ["json"] for i, a in enumerate(argv)
    )
    parser, leaves = build_parser()
    try:
        pre = argparse.ArgumentParser(add_help=False)
        pre.add_argument("--config")
        known, _ = pre.parse_known_args(argv)
        if known.config:
            config = _read_config(known.config)
            _apply_config(leaves, config)
            json_mode = json_mode or config.get("format") == "json"
        args = parser.parse_args(argv)
        json_mode = args.format == "json"
        result = args.handler(args)
    except (QuantWellError, FileNotFoundError, OSError) as exc:
        code = getattr(exc, "code", None) or (
            "file_not_found" if isinstance(exc, FileNotFoundError) else "io_error")
        if json_mode:
            sys.stderr.write(json.dumps({"error_code": code, "message": str(exc)}) + "\n")
        else:
            sys.stderr.write(f"error ({code}): {exc}\n")
        return 1
    _report(result, json_mode)
    return 0


if __name__ == "__main__":
    sys.exit(main())
