"""Command-line entry point: ``d2dcov <subcommand> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__, analytic
from .exceptions import CalibrationError, CapacityError, PreconditionError, UnitError
from .harness import (
    KINDS,
    SWEEP_VARIABLE,
    ExperimentSpec,
    build_config,
    convert_units,
    default_settings,
    figure_spec,
    load_manifest,
    load_settings,
    run,
    write_csv,
)
from .montecarlo import coverage_gain, coverage_gain_ratio

log = logging.getLogger("d2dcov")

DEFAULT_GAMMA_DB = tuple(-10 + 2.5 * i for i in range(13))
DEFAULT_MU_RETENTION = tuple(5.0 * i for i in range(1, 21))
DEFAULT_MU_CALIBRATION = (10.0, 20.0, 30.0, 40.0, 50.0)
ANALYTIC_COLUMNS = (
    "gamma_db", "lambda_per_m2", "retention", "sinc_constant", "coverage_general",
    "coverage_alpha4", "coverage_lower_bound", "gain_points", "gain_ratio_pct",
)


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from exc


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML/JSON file of flat dotted keys (or a run manifest)")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--replications", type=int)
    p.add_argument("--gamma-db", type=_floats, help="SIR thresholds in dB, comma separated")
    p.add_argument("--lambda", dest="lam", type=_floats, help="D2D densities in 1/m^2")
    p.add_argument("--mu", type=_floats, help="target distances in m")
    p.add_argument("--k", type=float, help="retention tuning factor")
    p.add_argument("--edge-mode", choices=("none", "guard_ring"))
    p.add_argument("--sim-radius", type=float, help="interferer sampling radius in m")
    p.add_argument("--interferers", choices=("paired", "tdd"))
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="d2dcov", description=__doc__)
    parser.add_argument("--version", action="version", version=f"d2dcov {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="evaluate the closed forms")
    _common(p)
    p = sub.add_parser("simulate", help="Monte Carlo coverage versus SIR threshold")
    _common(p)
    p = sub.add_parser("retention", help="empirical retention curves")
    _common(p)
    p = sub.add_parser("calibrate", help="fit the retention tuning factor")
    _common(p)
    p = sub.add_parser("figure", help="reproduce one of the reference figures")
    p.add_argument("number", choices=("2", "3", "4", "5"))
    _common(p)
    p = sub.add_parser("sweep", help="generic grid experiment")
    p.add_argument("--kind", choices=KINDS, required=True)
    _common(p)
    p = sub.add_parser("rerun", help="re-run an experiment from its params.json")
    p.add_argument("manifest", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-plot", action="store_true")
    return parser


def resolve_config(args):
    settings = default_settings()
    if args.config is not None:
        settings.update(load_settings(args.config))
    config = build_config(settings)
    model_kw = {}
    if args.k is not None:
        model_kw["k"] = args.k
    if args.lam and len(args.lam) == 1:
        model_kw["lam"] = args.lam[0]
    if args.gamma_db and len(args.gamma_db) == 1 and args.command != "simulate":
        model_kw["gamma"] = convert_units(args.gamma_db[0], "dB", "linear")
    if args.mu and len(args.mu) == 1 and args.command in ("analytic", "simulate"):
        model_kw["mu"] = args.mu[0]
    sim_kw = {}
    for flag, key in (("seed", "master_seed"), ("replications", "replications"),
                      ("edge_mode", "edge_mode"), ("sim_radius", "sim_radius"),
                      ("interferers", "interferers")):
        if getattr(args, flag) is not None:
            sim_kw[key] = getattr(args, flag)
    return replace(config, model=replace(config.model, **model_kw), **sim_kw)


def _out_dir(args, default: str) -> Path:
    return args.out if args.out is not None else Path("runs") / default


def _analytic(args, config) -> int:
    gammas = args.gamma_db or [convert_units(config.model.gamma, "linear", "dB")]
    lambdas = args.lam or [config.model.lam]
    rows = []
    for lam in lambdas:
        for g in gammas:
            m = replace(config.model, lam=lam, gamma=convert_units(g, "dB", "linear"))
            a4 = lb = ""
            gain = ratio = ""
            if m.alpha == 4:
                a4, lb = analytic.coverage_alpha4(m), analytic.coverage_lower_bound(m)
                gain, ratio = coverage_gain(a4, lb), coverage_gain_ratio(a4, lb)
            rows.append({
                "gamma_db": g, "lambda_per_m2": lam, "retention": m.retention,
                "sinc_constant": analytic.sinc_constant(m.alpha),
                "coverage_general": analytic.coverage_general(m),
                "coverage_alpha4": a4, "coverage_lower_bound": lb,
                "gain_points": gain, "gain_ratio_pct": ratio,
            })
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_csv(args.out / "results.csv", ANALYTIC_COLUMNS, rows)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(ANALYTIC_COLUMNS)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in (row[c] for c in ANALYTIC_COLUMNS)])
    return 0


def _grid_for(kind: str, args) -> tuple[float, ...]:
    var = SWEEP_VARIABLE[kind]
    if var == "gamma_db":
        return tuple(args.gamma_db or DEFAULT_GAMMA_DB)
    if var == "lambda":
        if not args.lam:
            raise PreconditionError("coverage_vs_lambda needs --lambda with the density grid")
        return tuple(args.lam)
    default = DEFAULT_MU_CALIBRATION if kind == "calibration" else DEFAULT_MU_RETENTION
    return tuple(args.mu or default)


def _experiment(kind: str, args, config, figure: str | None = None) -> ExperimentSpec:
    lambdas = tuple(args.lam) if args.lam and kind != "coverage_vs_lambda" else ()
    if kind == "coverage_vs_lambda" and args.lam:
        config = replace(config, model=replace(config.model, lam=args.lam[0]))
    return ExperimentSpec(kind=kind, config=config, grid=_grid_for(kind, args),
                          output_dir=_out_dir(args, kind), lambdas=lambdas, figure=figure)


def _report(result) -> None:
    for path in result.files:
        print(f"wrote {path}")
    for lam, fit in result.summary.items():
        print(f"lambda={lam}: k={fit['k_fit']:.6f} sse={fit['sse_fit']:.3e} "
              f"(sse at configured k: {fit['sse_config_k']:.3e})")
    if result.spec.figure == "4":
        targets = {(5e-5, -5.0), (5e-5, 20.0), (7.5e-5, 20.0)}
        for row in result.rows:
            if (row["lambda_per_m2"], row["gamma_db"]) in targets:
                print(f"gain lambda={row['lambda_per_m2']:g} gamma={row['gamma_db']:g} dB: "
                      f"{row['gain_points']:.2f} points, {row['gain_ratio_pct']:.2f} % relative")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "rerun":
            spec = load_manifest(args.manifest, args.out)
        else:
            config = resolve_config(args)
            if args.command == "analytic":
                return _analytic(args, config)
            if args.command == "figure":
                spec = figure_spec(args.number, config, _out_dir(args, f"figure{args.number}"))
                if args.lam:
                    spec = replace(spec, lambdas=tuple(args.lam)) if spec.kind != "coverage_vs_lambda" \
                        else replace(spec, grid=tuple(args.lam))
                if args.gamma_db and spec.kind == "coverage_vs_gamma":
                    spec = replace(spec, grid=tuple(args.gamma_db))
                if args.mu and spec.kind == "retention_curve":
                    spec = replace(spec, grid=tuple(args.mu))
            else:
                kind = {"simulate": "coverage_vs_gamma", "retention": "retention_curve",
                        "calibrate": "calibration"}.get(args.command) or args.kind
                spec = _experiment(kind, args, config)
        result = run(spec, workers=args.workers, plot=not args.no_plot)
    except (PreconditionError, UnitError, CapacityError, CalibrationError) as exc:
        print(f"d2dcov: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"d2dcov: error: {exc}", file=sys.stderr)
        return 3
    _report(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
