"""Declarative experiment configuration (TOML) with strict validation."""

from __future__ import annotations

import copy
import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .params import FluidParams, GridDescriptor, ParameterError, make_params

BACKENDS = ("radial", "grid", "nonlinear", "symbol", "quadrature", "table")

_SCHEMA = {
    "experiment": {"preset": str, "backend": str, "output_dir": str},
    "params": {"nu": float, "nu_prime": float, "beta": float, "gamma": float,
               "pressure_quadratic": float},
    "recipe": {"family": str, "amplitude": float, "width": float,
               "velocity_amplitude": float, "epsilon": float, "smoothing": float,
               "seed": int},
    "time": {"t_start": float, "t_end": float, "n_samples": int, "spacing": str,
             "dt": float, "fit_window": list},
    "grid": {"N": int, "R": float},
    "tolerances": None,  # free-form numeric table, checked per preset
}


class ConfigError(ValueError):
    """Invalid configuration; ``violations`` lists every problem found."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


@dataclass(frozen=True)
class TimeSchedule:
    t_start: float = 0.0
    t_end: float = 1.0
    n_samples: int = 11
    spacing: str = "linear"
    dt: float = 0.1
    fit_window: tuple | None = None

    def times(self):
        import numpy as np
        if self.spacing == "log":
            return np.geomspace(self.t_start, self.t_end, self.n_samples)
        return np.linspace(self.t_start, self.t_end, self.n_samples)


@dataclass(frozen=True)
class ExperimentConfig:
    preset: str
    params: FluidParams
    backend: str
    recipe: dict
    time: TimeSchedule
    grid: GridDescriptor | None
    tolerances: dict
    seed: int = 0
    output_dir: str | None = None
    raw: dict = field(default_factory=dict, repr=False)

    def echo(self) -> dict:
        """Plain-data view of the validated configuration for the manifest."""
        out = copy.deepcopy(self.raw)
        out["params"] = self.params.as_dict()
        return out


def _type_ok(value, expected) -> bool:
    if expected is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for sec, table in override.items():
        if isinstance(table, dict) and isinstance(out.get(sec), dict):
            out[sec].update(table)
        else:
            out[sec] = copy.deepcopy(table)
    return out


def check_structure(doc: dict, tolerance_keys=None) -> tuple[list, dict]:
    """Unknown sections and keys, and type mismatches, as key-path messages.

    Returns the messages and a copy of ``doc`` with the offending entries
    removed, so later validation can still report independent problems.
    """
    problems = []
    clean = {}
    for sec, table in doc.items():
        if sec not in _SCHEMA:
            problems.append(f"{sec}: unknown section")
            continue
        if not isinstance(table, dict):
            problems.append(f"{sec}: must be a table")
            continue
        schema = _SCHEMA[sec]
        clean[sec] = {}
        for key, value in table.items():
            if schema is None:
                if tolerance_keys is not None and key not in tolerance_keys:
                    problems.append(f"{sec}.{key}: unknown key")
                elif not _type_ok(value, float):
                    problems.append(f"{sec}.{key}: must be a number")
                else:
                    clean[sec][key] = value
            elif key not in schema:
                problems.append(f"{sec}.{key}: unknown key")
            elif not _type_ok(value, schema[key]):
                problems.append(f"{sec}.{key}: expected {schema[key].__name__}, "
                                f"got {type(value).__name__}")
            else:
                clean[sec][key] = value
    return problems, clean


def _param_violations(par: dict) -> list:
    out = []
    for key in ("nu", "beta", "gamma"):
        if not par[key] > 0:
            out.append(f"params.{key}: {key} must be positive")
    if not 2 * par["nu"] + 3 * par["nu_prime"] >= 0:
        out.append("params.nu_prime: 2nu+3nu' >= 0 violated")
    return out


def build_config(doc: dict, defaults: dict) -> ExperimentConfig:
    """Validate ``doc`` merged over ``defaults``; raise ConfigError with all violations."""
    problems, doc = check_structure(doc, set(defaults.get("tolerances", {})) or None)
    merged = merge(defaults, doc)
    exp = merged.get("experiment", {})
    par = merged.get("params", {})
    tim = merged.get("time", {})
    grd = merged.get("grid", {})
    params = None
    missing = [k for k in ("nu", "nu_prime", "beta", "gamma") if k not in par]
    if missing:
        problems += [f"params.{k}: required" for k in missing]
    else:
        problems += _param_violations(par)
    if not problems:
        try:
            params = make_params(par["nu"], par["nu_prime"], par["beta"], par["gamma"],
                                 par.get("pressure_quadratic", 0.0))
        except ParameterError as exc:
            problems.append(f"params: {exc}")
    backend = exp.get("backend", "radial")
    if backend not in BACKENDS:
        problems.append(f"experiment.backend: must be one of {BACKENDS}")
    sched = None
    try:
        fw = tim.get("fit_window")
        if fw is not None:
            if len(fw) != 2 or not all(_type_ok(x, float) for x in fw) or not fw[0] < fw[1]:
                raise ValueError("time.fit_window: must be [lo, hi] with lo < hi")
            fw = (float(fw[0]), float(fw[1]))
        sched = TimeSchedule(float(tim.get("t_start", 0.0)), float(tim.get("t_end", 1.0)),
                             int(tim.get("n_samples", 11)), tim.get("spacing", "linear"),
                             float(tim.get("dt", 0.1)), fw)
        if sched.spacing not in ("linear", "log"):
            problems.append("time.spacing: must be 'linear' or 'log'")
        if not sched.t_end >= sched.t_start >= 0:
            problems.append("time: need 0 <= t_start <= t_end")
        if sched.spacing == "log" and not sched.t_start > 0:
            problems.append("time.t_start: must be positive for log spacing")
        if sched.n_samples < 1:
            problems.append("time.n_samples: must be positive")
        if not (sched.dt > 0 and math.isfinite(sched.dt)):
            problems.append("time.dt: must be positive")
    except ValueError as exc:
        problems.append(str(exc))
    grid = None
    if grd:
        try:
            grid = GridDescriptor(int(grd.get("N", 64)), float(grd.get("R", 8.0)))
        except ParameterError as exc:
            problems.append(f"grid: {exc}")
    rec = merged.get("recipe", {})
    for key in ("width", "epsilon", "smoothing"):
        if key in rec and not rec[key] > 0:
            problems.append(f"recipe.{key}: must be positive")
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        preset=exp.get("preset", ""), params=params, backend=backend, recipe=dict(rec),
        time=sched, grid=grid, tolerances=dict(merged.get("tolerances", {})),
        seed=int(rec.get("seed", 0)), output_dir=exp.get("output_dir"), raw=merged)


def load_document(path) -> dict:
    """Read a TOML file; syntax errors are reported with line and column."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: parse error {exc}"]) from exc


def parse_config(path, defaults: dict | None = None) -> ExperimentConfig:
    """Parse and validate a configuration file.

    Without explicit ``defaults`` the preset named in ``[experiment]`` supplies
    them.
    """
    doc = load_document(path)
    if defaults is None:
        from .presets import PRESETS, resolve
        name = doc.get("experiment", {}).get("preset") if isinstance(
            doc.get("experiment"), dict) else None
        if name is None:
            raise ConfigError(["experiment.preset: required"])
        try:
            defaults = PRESETS[resolve(name)].defaults
        except KeyError:
            raise ConfigError([f"experiment.preset: unknown preset {name!r}"]) from None
    return build_config(doc, defaults)


__all__ = ["ConfigError", "TimeSchedule", "ExperimentConfig", "build_config",
           "check_structure", "load_document", "parse_config", "merge"]
