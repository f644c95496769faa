"""Experiment runner: configs, sweeps, CSV tables, run manifests, figures."""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Mapping

import numpy as np
import yaml

from . import __version__, analytic
from .analytic import ModelParams
from .config import SimConfig
from .exceptions import PreconditionError, UnitError
from .montecarlo import (
    coverage_gain,
    coverage_gain_ratio,
    fit_k,
    retention_sse,
    run_replications,
    simulate_coverage,
)
from .pairing import CSV_COLUMNS as RETENTION_COLUMNS
from .pairing import estimate_retention

log = logging.getLogger(__name__)

KINDS = ("retention_curve", "coverage_vs_gamma", "coverage_vs_lambda", "calibration")
SWEEP_VARIABLE = {
    "retention_curve": "mu",
    "calibration": "mu",
    "coverage_vs_gamma": "gamma_db",
    "coverage_vs_lambda": "lambda",
}
COVERAGE_COLUMNS = (
    "gamma_db", "coverage_mc", "coverage_analytic", "coverage_lb_mc", "coverage_lb_analytic",
    "gain_points", "gain_ratio_pct", "ci95", "replications",
)
LAMBDA_COLUMN = "lambda_per_m2"


# ---------------------------------------------------------------- units

_LINEAR_POWER = {"W": 1.0, "mW": 1e-3}


def convert_units(value: float, from_unit: str, to_unit: str) -> float:
    """Convert between ``dB``/``linear`` ratios and ``W``/``mW``/``dBm`` powers."""
    if from_unit == to_unit:
        return float(value)
    if {from_unit, to_unit} == {"dB", "linear"}:
        if from_unit == "dB":
            return 10.0 ** (value / 10.0)
        if value <= 0:
            raise UnitError("linear ratio must be > 0 to express in dB")
        return 10.0 * math.log10(value)
    powers = set(_LINEAR_POWER) | {"dBm"}
    if from_unit in powers and to_unit in powers:
        watts = 1e-3 * 10.0 ** (value / 10.0) if from_unit == "dBm" else value * _LINEAR_POWER[from_unit]
        if to_unit == "dBm":
            if watts <= 0:
                raise UnitError("power must be > 0 to express in dBm")
            return 10.0 * math.log10(watts / 1e-3)
        return watts / _LINEAR_POWER[to_unit]
    raise UnitError(f"cannot convert {from_unit!r} to {to_unit!r}")


# ---------------------------------------------------------------- config

_MODEL_KEYS = {
    "model.lambda": "lam", "model.k": "k", "model.mu": "mu", "model.p_c": "p_c",
    "model.p_i": "p_i", "model.alpha": "alpha", "model.R": "R", "model.R0": "R0",
    "model.gamma": "gamma",
}
_SIM_KEYS = ("replications", "sim_radius", "edge_mode", "interferers", "master_seed")
_DERIVED_KEYS = {"model.gamma_db", "model.p_c_mw", "model.p_i_mw"}


def default_settings() -> dict[str, Any]:
    text = resources.files("d2dcov").joinpath("default.yaml").read_text()
    return dict(yaml.safe_load(text))


def load_settings(path: str | Path) -> dict[str, Any]:
    """Read a flat dotted-key mapping from YAML or JSON."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise PreconditionError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, Mapping):
        raise PreconditionError(f"config {path} must be a mapping of dotted keys")
    if "config" in data and "experiment" in data:  # a run manifest
        data = data["config"]
    return dict(data)


def build_config(settings: Mapping[str, Any]) -> SimConfig:
    unknown = set(settings) - set(_MODEL_KEYS) - set(_SIM_KEYS) - _DERIVED_KEYS
    if unknown:
        raise PreconditionError(f"unknown config keys: {sorted(unknown)}")
    s = dict(settings)
    if "model.gamma_db" in s:
        s["model.gamma"] = convert_units(float(s.pop("model.gamma_db")), "dB", "linear")
    for key in ("p_c", "p_i"):
        if f"model.{key}_mw" in s:
            s[f"model.{key}"] = convert_units(float(s.pop(f"model.{key}_mw")), "mW", "W")
    model = ModelParams(**{_MODEL_KEYS[k]: float(v) for k, v in s.items() if k in _MODEL_KEYS})
    kw: dict[str, Any] = {k: s[k] for k in _SIM_KEYS if k in s and s[k] is not None}
    for key in ("replications", "master_seed"):
        if key in kw:
            kw[key] = int(kw[key])
    if "sim_radius" in kw:
        kw["sim_radius"] = float(kw["sim_radius"])
    return SimConfig(model=model, **kw)


def flatten_config(config: SimConfig) -> dict[str, Any]:
    out = {key: getattr(config.model, attr) for key, attr in _MODEL_KEYS.items()}
    out.update({key: getattr(config, key) for key in _SIM_KEYS})
    return out


# ---------------------------------------------------------------- experiments

@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment: ``grid`` holds the sweep variable (gamma in dB, lambda
    in 1/m^2, or mu in m); ``lambdas`` adds one series per density for the
    gamma and mu sweeps (empty means the config density)."""

    kind: str
    config: SimConfig
    grid: tuple[float, ...]
    output_dir: Path
    lambdas: tuple[float, ...] = ()
    figure: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise PreconditionError(f"kind must be one of {KINDS}")
        grid = tuple(float(g) for g in self.grid)
        if not grid:
            raise PreconditionError("grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise PreconditionError("grid must be strictly increasing")
        if self.kind == "coverage_vs_lambda" and self.lambdas:
            raise PreconditionError("coverage_vs_lambda sweeps lambda through the grid")
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "lambdas", tuple(sorted(float(x) for x in self.lambdas)))
        object.__setattr__(self, "output_dir", Path(self.output_dir))

    @property
    def series_lambdas(self) -> tuple[float, ...]:
        return self.lambdas or (self.config.model.lam,)


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    columns: tuple[str, ...]
    rows: list[dict[str, Any]]
    files: list[Path] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)


def _with_lambda(config: SimConfig, lam: float) -> SimConfig:
    return replace(config, model=replace(config.model, lam=lam))


def _analytic_pair(model: ModelParams) -> tuple[float, float]:
    if model.alpha == 4:
        return analytic.coverage_alpha4(model), analytic.coverage_lower_bound(model)
    return analytic.coverage_general(model), analytic.coverage_general(model, retention=1.0)


def _coverage_rows(config: SimConfig, gammas_db: Iterable[float], workers: int) -> list[dict]:
    gammas_db = list(gammas_db)
    samples = run_replications(config, workers)
    thinned = simulate_coverage(config, gammas_db, "thinned", samples=samples)
    lower = simulate_coverage(config, gammas_db, "lower_bound", samples=samples)
    rows = []
    for g, th, lb in zip(gammas_db, thinned, lower):
        an, an_lb = _analytic_pair(replace(config.model, gamma=convert_units(g, "dB", "linear")))
        rows.append({
            "gamma_db": g,
            "coverage_mc": th.mean,
            "coverage_analytic": an,
            "coverage_lb_mc": lb.mean,
            "coverage_lb_analytic": an_lb,
            "gain_points": coverage_gain(an, an_lb),
            "gain_ratio_pct": coverage_gain_ratio(an, an_lb),
            "ci95": th.half_width_95,
            "replications": th.replications,
            LAMBDA_COLUMN: config.model.lam,
        })
    return rows


def _retention_rows(curve, lam: float) -> list[dict]:
    return [dict(row, **{LAMBDA_COLUMN: lam}) for row in curve.rows()]


def _execute(spec: ExperimentSpec, workers: int) -> ExperimentResult:
    cfg = spec.config
    summary: dict[str, Any] = {}
    if spec.kind == "coverage_vs_gamma":
        rows = []
        for lam in spec.series_lambdas:
            rows += _coverage_rows(_with_lambda(cfg, lam), spec.grid, workers)
        rows.sort(key=lambda r: (r["gamma_db"], r[LAMBDA_COLUMN]))
        columns = COVERAGE_COLUMNS + (LAMBDA_COLUMN,)
    elif spec.kind == "coverage_vs_lambda":
        gamma_db = convert_units(cfg.model.gamma, "linear", "dB")
        rows = []
        for lam in spec.grid:
            rows += _coverage_rows(_with_lambda(cfg, lam), [gamma_db], workers)
        columns = COVERAGE_COLUMNS + (LAMBDA_COLUMN,)
    else:
        rows = []
        for lam in spec.series_lambdas:
            sub = _with_lambda(cfg, lam)
            curve = estimate_retention(sub, spec.grid, sub.replications, workers=workers)
            if spec.kind == "calibration":
                k_fit = fit_k(lam, spec.grid, curve.empirical)
                summary[repr(lam)] = {
                    "k_fit": k_fit,
                    "sse_fit": retention_sse(k_fit, lam, spec.grid, curve.empirical),
                    "sse_config_k": retention_sse(cfg.model.k, lam, spec.grid, curve.empirical),
                }
                curve = replace(curve, k=k_fit, points=tuple(
                    replace(p, analytic_probability=analytic.retention_probability(k_fit, lam, p.mu))
                    for p in curve.points
                ))
            rows += _retention_rows(curve, lam)
        rows.sort(key=lambda r: (r["mu_m"], r[LAMBDA_COLUMN]))
        columns = RETENTION_COLUMNS + (LAMBDA_COLUMN,)
    return ExperimentResult(spec, columns, rows, summary=summary)


def _fmt(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path: Path, columns: Iterable[str], rows: Iterable[Mapping[str, Any]]) -> None:
    columns = list(columns)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(row[c]) for c in columns])


def manifest(spec: ExperimentSpec) -> dict[str, Any]:
    return {
        "tool": "d2dcov",
        "version": __version__,
        "experiment": {
            "kind": spec.kind,
            "grid": list(spec.grid),
            "lambdas": list(spec.lambdas),
            "figure": spec.figure,
        },
        "config": flatten_config(spec.config),
    }


def spec_from_manifest(data: Mapping[str, Any], output_dir: str | Path) -> ExperimentSpec:
    try:
        exp = data["experiment"]
        config = build_config(data["config"])
        return ExperimentSpec(
            kind=exp["kind"], config=config, grid=tuple(exp["grid"]), output_dir=Path(output_dir),
            lambdas=tuple(exp.get("lambdas", ())), figure=exp.get("figure"),
        )
    except (KeyError, TypeError) as exc:
        raise PreconditionError(f"malformed manifest: {exc}") from exc


def load_manifest(path: str | Path, output_dir: str | Path) -> ExperimentSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"cannot read manifest {path}: {exc}") from exc
    return spec_from_manifest(data, output_dir)


def run(spec: ExperimentSpec, workers: int = 1, plot: bool = True) -> ExperimentResult:
    """Execute ``spec`` and write ``results.csv``, ``params.json`` and a figure.

    Row order is fixed by the sweep variable, so the CSV is byte-identical
    for any ``workers``.
    """
    out = spec.output_dir
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise PreconditionError(f"cannot create output directory {out}: {exc}") from exc
    log.info("running %s over %d grid points", spec.kind, len(spec.grid))
    result = _execute(spec, workers)

    csv_path = out / "results.csv"
    write_csv(csv_path, result.columns, result.rows)
    man_path = out / "params.json"
    man_path.write_text(json.dumps(manifest(spec), indent=2, sort_keys=True) + "\n")
    result.files += [csv_path, man_path]
    if result.summary:
        cal_path = out / "calibration.json"
        cal_path.write_text(json.dumps(result.summary, indent=2, sort_keys=True) + "\n")
        result.files.append(cal_path)
    if plot:
        from . import plotting

        result.files.append(plotting.render(result, out / "figure.svg"))
    return result


# ---------------------------------------------------------------- presets

def _arange(start: float, stop: float, step: float) -> tuple[float, ...]:
    n = int(round((stop - start) / step))
    return tuple(round(start + i * step, 12) for i in range(n + 1))


FIGURES: dict[str, dict[str, Any]] = {
    "2": {"kind": "retention_curve", "grid": _arange(5, 100, 5), "lambdas": (2.5e-5,)},
    "3": {
        "kind": "retention_curve", "grid": _arange(5, 100, 5),
        "lambdas": (1.2e-5, 2.5e-5, 5e-5, 7.5e-5, 1e-4),
    },
    "4": {"kind": "coverage_vs_gamma", "grid": _arange(-10, 20, 2.5), "lambdas": (2.5e-5, 5e-5, 7.5e-5)},
    "5": {"kind": "coverage_vs_lambda", "grid": tuple(round(i * 1e-5, 12) for i in range(1, 11)), "gamma_db": 0.0},
}


def figure_spec(number: str | int, config: SimConfig, output_dir: str | Path) -> ExperimentSpec:
    preset = FIGURES.get(str(number))
    if preset is None:
        raise PreconditionError(f"unknown figure {number!r}; choose from {sorted(FIGURES)}")
    if "gamma_db" in preset:
        config = replace(
            config, model=replace(config.model, gamma=convert_units(preset["gamma_db"], "dB", "linear"))
        )
    return ExperimentSpec(
        kind=preset["kind"], config=config, grid=preset["grid"], output_dir=Path(output_dir),
        lambdas=preset.get("lambdas", ()), figure=str(number),
    )
