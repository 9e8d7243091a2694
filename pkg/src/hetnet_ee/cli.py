"""Command-line entry point ``hetnet-ee``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import analytic
from .experiments.compare import compare_analytic_mc
from .experiments.config import ConfigError, SweepSpec, parse_config
from .experiments.presets import EE_TAU_GRID, PRESET_NAMES, get_preset
from .experiments.sweep import SweepTable, run_sweep
from .model import REFERENCE_SCENARIO, UserSet, build_params
from .montecarlo import SimulationSettings, association_frequencies, simulate

ENGINE_CHOICES = {"analytic": ("analytic",), "mc": ("mc",), "both": ("analytic", "mc")}


def _scenario(args) -> dict:
    """Scenario overrides from --config then --set."""
    scenario = {}
    if getattr(args, "config", None):
        _, _, scenario = parse_config(Path(args.config).read_text(encoding="utf-8"))
    for item in getattr(args, "set", None) or []:
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in REFERENCE_SCENARIO:
            raise ConfigError(f"--set expects key=value with a scenario key, got {item!r}", key or None)
        try:
            scenario[key] = float(value)
        except ValueError:
            raise ConfigError(f"expected a number, got {value!r}", key) from None
    build_params(**scenario)  # validate early
    return scenario


def _mc_settings(args) -> SimulationSettings:
    kwargs = {}
    if args.seed is not None:
        kwargs["seed"] = args.seed
    if getattr(args, "trials", None) is not None:
        kwargs["trials"] = args.trials
    return SimulationSettings(**kwargs)


def _write(table: SweepTable, args, stem: str, metric: str | None = None, log_x: bool = False) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{stem}.csv"
    table.to_csv(path)
    if args.format == "svg" and metric is not None:
        from .experiments.plot import plot_tables
        plot_tables({stem: table}, metric, out / f"{stem}.svg", title=stem, log_x=log_x)
    return path


def _print_rows(table: SweepTable) -> None:
    for r in table:
        if r.ok:
            ci = "" if r.ci_half_width != r.ci_half_width else f" +/- {r.ci_half_width:.4f}"
            print(f"{r.metric:5s} {r.engine:8s} {r.cls:7s} {r.axis}={r.axis_value:g}: {r.value:.6f}{ci}")
        else:
            print(f"{r.metric:5s} {r.engine:8s} {r.cls:7s} {r.axis}={r.axis_value:g}: error: {r.error}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_assoc(args) -> int:
    params = build_params(**_scenario(args))
    engines = ENGINE_CHOICES[args.engine]
    if "analytic" in engines:
        probs = analytic.association_probabilities(params)
        for s in UserSet:
            print(f"analytic {s.value:6s} {probs[s]:.6f}")
    if "mc" in engines:
        result = simulate(params, _mc_settings(args), mode="assoc", workers=args.workers)
        for s, est in association_frequencies(result).items():
            print(f"mc       {s.value:6s} {est.value:.6f} +/- {est.ci_half_width:.6f}")
    return 0


def cmd_coverage(args) -> int:
    scenario = _scenario(args)
    defaults = {"sinr": [-10.0, -5.0, 0.0, 5.0, 10.0], "rate": [0.25, 0.5, 1.0, 2.0, 4.0],
                "ee": list(EE_TAU_GRID)}
    grid = tuple(sorted(args.thresholds or defaults[args.metric]))
    engines = ENGINE_CHOICES[args.engine]
    spec = SweepSpec(axis="threshold", grid=grid, fixed=scenario, metrics=(args.metric,),
                     engines=engines, mc_settings=_mc_settings(args) if "mc" in engines else None,
                     rate_method=args.method, per_class=args.per_class)
    table = run_sweep(spec, workers=args.workers)
    _print_rows(table)
    path = _write(table, args, f"coverage_{args.metric}", args.metric, log_x=args.metric == "ee")
    print(f"wrote {path}")
    return 0


def _spec_from_config(args) -> SweepSpec:
    params, spec, _ = parse_config(Path(args.config).read_text(encoding="utf-8"))
    if spec is None:
        raise ConfigError("config has no 'axis' key; nothing to sweep", "axis")
    if args.seed is not None and spec.mc_settings is not None:
        spec = replace(spec, mc_settings=replace(spec.mc_settings, seed=args.seed))
    return spec


def cmd_sweep(args) -> int:
    spec = _spec_from_config(args)
    table = run_sweep(spec, workers=args.workers)
    _print_rows(table)
    stem = Path(args.config).stem
    print(f"wrote {_write(table, args, stem, spec.metrics[0], log_x=spec.axis == 'threshold')}")
    return 0


def cmd_figure(args) -> int:
    engines = ENGINE_CHOICES[args.engine]
    preset = get_preset(args.preset, engines, _mc_settings(args) if "mc" in engines else None)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tables = {}
    for name, spec in preset.series.items():
        print(f"{preset.name}/{name} ...", file=sys.stderr)
        table = run_sweep(spec, workers=args.workers)
        tables[name] = table
        path = out / f"{preset.name}_{name}.csv"
        table.to_csv(path)
        print(f"wrote {path}")
    if args.format == "svg":
        from .experiments.plot import plot_tables
        spec0 = next(iter(preset.series.values()))
        path = plot_tables(tables, spec0.metrics[0], out / f"{preset.name}.svg", preset.description,
                           log_x=spec0.axis == "threshold")
        print(f"wrote {path}")
    return 0


def cmd_validate(args) -> int:
    spec = _spec_from_config(args)
    mc = spec.mc_settings or _mc_settings(args)
    if args.trials is not None:
        mc = replace(mc, trials=args.trials)
    spec = replace(spec, engines=("analytic", "mc"), mc_settings=mc)
    table = run_sweep(spec, workers=args.workers)
    path = _write(table, args, f"{Path(args.config).stem}_validate", spec.metrics[0],
                  log_x=spec.axis == "threshold")
    report = compare_analytic_mc(table)
    for e in report.entries:
        print(f"{e.metric:5s} {e.cls:7s} {spec.axis}={e.axis_value:g}: analytic {e.analytic:.4f} "
              f"mc {e.mc:.4f} +/- {e.ci_half_width:.4f}  {e.status}")
    print(report.summary())
    print(f"wrote {path}")
    return 0 if report.passed else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hetnet-ee", description=__doc__)
    parser.add_argument("--out", default=".", help="output directory (default: current)")
    parser.add_argument("--seed", type=int, default=None, help="Monte Carlo master seed")
    parser.add_argument("--format", choices=("csv", "svg"), default="csv",
                        help="csv writes tables; svg also draws plots")
    parser.add_argument("--workers", type=int, default=1, help="simulation processes")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def scenario_opts(p):
        p.add_argument("--config", help="key = value scenario file")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one scenario key (repeatable)")

    p = sub.add_parser("assoc", help="association probabilities")
    scenario_opts(p)
    p.add_argument("--engine", choices=ENGINE_CHOICES, default="analytic")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_assoc)

    p = sub.add_parser("coverage", help="coverage curve over thresholds")
    scenario_opts(p)
    p.add_argument("--metric", choices=("sinr", "rate", "ee"), required=True)
    p.add_argument("--engine", choices=ENGINE_CHOICES, default="analytic")
    p.add_argument("--thresholds", type=float, nargs="+",
                   help="SINR in dB, rate as a multiple of the class targets, EE in bit/s/W")
    p.add_argument("--method", choices=analytic.METHODS, default="exact")
    p.add_argument("--per-class", action="store_true")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("sweep", help="run the sweep described by a config file")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure", help="regenerate a figure preset")
    p.add_argument("--preset", choices=PRESET_NAMES, required=True)
    p.add_argument("--engine", choices=ENGINE_CHOICES, default="analytic")
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_figure)

    p = sub.add_parser("validate", help="run a config sweep with both engines and compare them")
    p.add_argument("--config", required=True)
    p.add_argument("--trials", type=int)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
