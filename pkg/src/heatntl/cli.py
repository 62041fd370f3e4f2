"""Command-line front end.

``heatntl pipeline --config run.yaml`` runs everything; the other
subcommands run a single stage with explicit input and output paths.
Exit codes: 0 success, 1 validation error (bad config or input), 2 runtime
error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .climate_features import assemble_design, read_feature_csv, write_feature_csv
from .config import RunConfig, load_run_config
from .core_types import (CityConfig, HeatNtlError, RowError, SchemaError, ValidationError,
                         join_on_date, load_ntl_csv, load_weather_csv, write_ntl_csv)
from .diagnostics import (diagnose, event_study, sweep, write_diagnostics_json,
                          write_event_study_csv, write_sweep_csv, write_sweep_json)
from .dml import run_dml, write_estimates_csv, write_estimates_json
from .heatwave import detect_from_weather, write_heatwave_csv
from .ntl_aggregate import aggregate_series, load_pixel_csv
from .nuisance import NuisanceConfig
from .synth import SynthCityConfig, SynthConfig, generate, synth_city, write_synth_city

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
STAGES = ("aggregate-ntl", "detect-heatwaves", "features", "fit", "sweep", "event-study",
          "diagnose", "synth")

log = logging.getLogger("heatntl")


class UsageError(Exception):
    pass


def _common() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="run config (YAML)")
    common.add_argument("--out", type=Path, help="output file or directory")
    common.add_argument("--jobs", type=int, default=None, help="concurrency bound")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    return common


def _city_inputs(p: argparse.ArgumentParser, heatwave: bool = True) -> None:
    p.add_argument("--weather", type=Path, required=True)
    p.add_argument("--ntl", type=Path, required=True)
    p.add_argument("--city", default="city")
    if heatwave:
        p.add_argument("--p", type=float, default=None, help="percentile threshold (default 0.80)")
        p.add_argument("--d", type=int, default=None, help="minimum duration in days (default 3)")
    p.add_argument("--temp-column", choices=("temp_avg", "temp_max"), default="temp_avg")


def _learner_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k-folds", type=int, default=None)
    p.add_argument("--trees", type=int, default=None, help="forest size (default 500)")


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="heatntl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="{pipeline," + ",".join(STAGES) + "}")

    sub.add_parser("pipeline", parents=[common], help="run every stage for every configured city")

    p = sub.add_parser("aggregate-ntl", parents=[common], help="pixel table -> daily city radiance")
    p.add_argument("--pixels", type=Path, required=True)
    p.add_argument("--scale-factor", type=float, default=1.0)
    p.add_argument("--fill-value", type=float, default=None)

    p = sub.add_parser("detect-heatwaves", parents=[common], help="per-day hot-day/heatwave flags")
    p.add_argument("--weather", type=Path, required=True)
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--d", type=int, default=None)
    p.add_argument("--temp-column", choices=("temp_avg", "temp_max"), default="temp_avg")

    p = sub.add_parser("features", parents=[common], help="export the X, D, Y design")
    _city_inputs(p)
    p.add_argument("--no-treatment-interactions", action="store_true")

    p = sub.add_parser("fit", parents=[common], help="DML estimate from a feature CSV")
    p.add_argument("--features", type=Path, required=True)
    p.add_argument("--city", default="")
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--d", type=int, default=None)
    _learner_flags(p)

    p = sub.add_parser("sweep", parents=[common], help="DML over the (p, d) grid")
    _city_inputs(p, heatwave=False)
    p.add_argument("--p-grid", type=float, nargs="+", default=None)
    p.add_argument("--d-grid", type=int, nargs="+", default=None)
    p.add_argument("--min-treated", type=int, default=10)
    p.add_argument("--override", type=str, default=None, help="chosen cell as P,D")
    _learner_flags(p)

    p = sub.add_parser("event-study", parents=[common], help="log-NTL path around onsets")
    _city_inputs(p)
    p.add_argument("--window", type=int, nargs=2, default=(-2, 5), metavar=("START", "END"))

    p = sub.add_parser("diagnose", parents=[common], help="ADF and Granger tests")
    _city_inputs(p, heatwave=False)
    p.add_argument("--max-lag", type=int, default=7)

    p = sub.add_parser("synth", parents=[common], help="write synthetic inputs with a known effect")
    p.add_argument("--kind", choices=("city", "matrix"), default="city")
    p.add_argument("--name", default="synthville")
    p.add_argument("--n-days", type=int, default=None)
    p.add_argument("--theta", type=float, default=None, help="true effect in log points")
    p.add_argument("--confounding", type=float, default=1.0)
    p.add_argument("--nonlinearity", choices=("linear", "quadratic", "interaction"), default="linear")
    return parser


def _need_out(args) -> Path:
    if args.out is None:
        raise UsageError(f"{args.command}: --out is required")
    return args.out


def _city_config(args, base: CityConfig | None = None) -> CityConfig:
    """Flags on top of the config file's first city (if any) on top of the defaults."""
    cfg = base or CityConfig()
    kw = {}
    for flag, key in (("p", "percentile_p"), ("d", "duration_d"), ("seed", "seed"),
                      ("k_folds", "k_folds"), ("temp_column", "temp_column")):
        v = getattr(args, flag, None)
        if v is not None:
            kw[key] = v
    if getattr(args, "city", None):
        kw["city_name"] = args.city
    if getattr(args, "no_treatment_interactions", False):
        kw["feature_spec"] = replace(cfg.feature_spec, include_treatment_interactions=False)
    try:
        return replace(cfg, **kw)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _file_config(args) -> RunConfig | None:
    return load_run_config(args.config) if args.config else None


def _base_city(run: RunConfig | None) -> CityConfig | None:
    return run.cities[0].config if run else None


def _nuisance(args, run: RunConfig | None) -> NuisanceConfig:
    nc = run.nuisance if run else NuisanceConfig()
    if getattr(args, "trees", None) is not None:
        nc = replace(nc, forest=replace(nc.forest, n_trees=args.trees))
    return nc


def _load_city(args):
    weather = load_weather_csv(args.weather)
    return weather, join_on_date(weather, load_ntl_csv(args.ntl))


def _emit(args, payload: dict) -> None:
    print(json.dumps(payload, indent=2))


def cmd_pipeline(args) -> int:
    from .pipeline import run_pipeline

    if args.config is None:
        raise UsageError("pipeline: --config is required")
    run = load_run_config(args.config).with_overrides(
        out_dir=args.out, jobs=args.jobs, seed=args.seed,
        formats=None if args.format is None else (args.format,))
    outcomes = run_pipeline(run)
    for o in outcomes:
        status = "ok" if o.ok else "FAILED (" + "; ".join(o.failures) + ")"
        print(f"{o.name}: {status}")
    return EXIT_OK if all(o.ok for o in outcomes) else EXIT_RUNTIME


def cmd_aggregate(args) -> int:
    out = _need_out(args)
    records, report = aggregate_series(load_pixel_csv(args.pixels, args.fill_value), args.scale_factor)
    write_ntl_csv(records, out)
    _emit(args, {"days": len(records), "skipped_dates": [d.isoformat() for d in report.skipped_dates],
                 "inconsistent_pixel_dates": len(report.inconsistent_pixel_dates)})
    return EXIT_OK


def cmd_detect(args) -> int:
    out = _need_out(args)
    cfg = _city_config(args, _base_city(_file_config(args)))
    hw = detect_from_weather(load_weather_csv(args.weather), cfg.percentile_p, cfg.duration_d,
                             cfg.temp_column)
    write_heatwave_csv(hw, out)
    _emit(args, {"threshold": hw.threshold.tau, "hot_days": int(hw.hot_day.sum()),
                 "heatwave_days": int(hw.heatwave.sum()), "episodes": len(hw.onsets)})
    return EXIT_OK


def cmd_features(args) -> int:
    out = _need_out(args)
    cfg = _city_config(args, _base_city(_file_config(args)))
    weather, ds = _load_city(args)
    hw = detect_from_weather(weather, cfg.percentile_p, cfg.duration_d, cfg.temp_column).align(ds.dates)
    fm = assemble_design(ds, hw, cfg)
    write_feature_csv(fm, out)
    _emit(args, {"rows": fm.n, "columns": list(fm.column_names)})
    return EXIT_OK


def cmd_fit(args) -> int:
    run = _file_config(args)
    cfg = _city_config(args, _base_city(run))
    fm = read_feature_csv(args.features)
    est = run_dml(fm, cfg, _nuisance(args, run))
    if args.out is not None:
        (write_estimates_json if args.format == "json" else write_estimates_csv)([est], args.out)
    _emit(args, est.row())
    return EXIT_OK


def cmd_sweep(args) -> int:
    out = _need_out(args)
    run = _file_config(args)
    cfg = _city_config(args, _base_city(run))
    override = None
    if args.override:
        try:
            p, d = args.override.split(",")
            override = (float(p), int(d))
        except ValueError:
            raise UsageError("--override must look like 0.85,3") from None
    weather, ds = _load_city(args)
    res = sweep(ds, args.p_grid or (run.p_grid if run else (0.80, 0.85, 0.90)),
                args.d_grid or (run.d_grid if run else (2, 3, 4)), cfg, _nuisance(args, run),
                min_treated=args.min_treated, jobs=args.jobs or 1, override=override, weather=weather)
    (write_sweep_json if args.format == "json" else write_sweep_csv)(res, out)
    _emit(args, {"chosen": res.chosen, "rule": res.rule,
                 "cells": [{"p": c.p, "d": c.d, "status": c.status} for c in res.cells]})
    return EXIT_OK


def cmd_event_study(args) -> int:
    out = _need_out(args)
    cfg = _city_config(args, _base_city(_file_config(args)))
    weather, ds = _load_city(args)
    hw = detect_from_weather(weather, cfg.percentile_p, cfg.duration_d, cfg.temp_column)
    res = event_study(ds, hw, tuple(args.window))
    write_event_study_csv(res, out)
    _emit(args, {"n_events": res.n_events, "incomplete": res.n_incomplete,
                 "overlapping": res.n_overlapping})
    return EXIT_OK


def cmd_diagnose(args) -> int:
    out = _need_out(args)
    _, ds = _load_city(args)
    res = diagnose(ds, args.temp_column, args.max_lag, args.city)
    write_diagnostics_json(res, out)
    _emit(args, res.to_dict())
    return EXIT_OK


def cmd_synth(args) -> int:
    out = _need_out(args)
    seed = args.seed or 0
    if args.kind == "matrix":
        cfg = SynthConfig(n_days=args.n_days or 2000, seed=seed,
                          true_theta=0.5 if args.theta is None else args.theta,
                          confounding_strength=args.confounding, nonlinearity=args.nonlinearity)
        fm, theta = generate(cfg)
        out.parent.mkdir(parents=True, exist_ok=True)
        write_feature_csv(fm, out)
        _emit(args, {"features": str(out), "true_theta": theta, "rows": fm.n})
        return EXIT_OK
    cfg = SynthCityConfig(name=args.name, n_days=args.n_days or 1500, seed=seed,
                          true_theta=0.3 if args.theta is None else args.theta)
    wpath, npath = write_synth_city(synth_city(cfg), out)
    _emit(args, {"weather": str(wpath), "ntl": str(npath), "true_theta": cfg.true_theta})
    return EXIT_OK


COMMANDS = {
    "pipeline": cmd_pipeline, "aggregate-ntl": cmd_aggregate, "detect-heatwaves": cmd_detect,
    "features": cmd_features, "fit": cmd_fit, "sweep": cmd_sweep, "event-study": cmd_event_study,
    "diagnose": cmd_diagnose, "synth": cmd_synth,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse usage errors exit 2; map to validation
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"heatntl: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, SchemaError, RowError, FileNotFoundError) as exc:
        print(f"heatntl: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (HeatNtlError, ValueError, ArithmeticError, OSError) as exc:
        print(f"heatntl: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
