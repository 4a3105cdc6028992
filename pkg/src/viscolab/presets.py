"""Named experiments, their acceptance checks and run persistence."""

from __future__ import annotations

import datetime as _dt
import json
import math
import os
import time as _time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import fields
from .bands import CutoffFamily, cutoff_values
from .config import ConfigError, ExperimentConfig, build_config
from .dispersion import coalescence_radii, dispersion_table, vieta_residual
from .evolution import (NonlinearRecipe, RadialRecipe, evolve_linear_radial,
                        evolve_nonlinear, highfreq_experiment, l1_growth_experiment,
                        radial_lowfreq_report)
from .fields import atomic_write_text, write_csv
from .kinematics import RegimeError
from .rates import duhamel_bound_check, fit_power_law
from .symbol import oracle_sweep

OUT_ENV = "VISCOLAB_OUT"
DEFAULT_OUT = "viscolab-runs"

_PARAMS = {"nu": 1.0, "nu_prime": 0.0, "beta": 1.0, "gamma": 1.0,
           "pressure_quadratic": 0.0}


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: str
    passed: bool

    def as_dict(self) -> dict:
        return {"name": self.name, "value": _plain(self.value),
                "threshold": self.threshold, "passed": bool(self.passed)}


@dataclass
class RunManifest:
    preset: str
    config: dict
    started: str
    finished: str = ""
    code_version: str = ""
    files: list = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    status: str = "running"
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.status == "ok" and all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {"preset": self.preset, "config": _plain(self.config),
                "started": self.started, "finished": self.finished,
                "code_version": self.code_version, "files": list(self.files),
                "metrics": _plain(self.metrics),
                "checks": [c.as_dict() for c in self.checks],
                "status": self.status, "error": self.error, "passed": self.passed}

    def write(self, path) -> None:
        atomic_write_text(path, json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n")


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    defaults: dict
    runner: Callable


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def code_version() -> str:
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        from . import __version__
        return __version__


def _within(name, value, target, tol) -> Check:
    return Check(name, value, f"{target} +/- {tol}", abs(value - target) <= tol)


def _at_most(name, value, limit) -> Check:
    return Check(name, value, f"<= {limit!r}", value <= limit)


# ---------------------------------------------------------------- radial presets

def _radial_defaults(tolerances):
    return {
        "experiment": {"backend": "radial"},
        "params": dict(_PARAMS),
        "recipe": {"family": "gaussian-density", "amplitude": 0.05, "width": 1.0,
                   "velocity_amplitude": 0.0},
        "time": {"t_start": 100.0, "t_end": 1000.0, "n_samples": 10, "spacing": "log",
                 "fit_window": [100.0, 1000.0]},
        "tolerances": tolerances,
    }


def _radial_recipe(cfg: ExperimentConfig) -> RadialRecipe:
    r = cfg.recipe
    return RadialRecipe(r.get("family", "gaussian-density"), float(r.get("amplitude", 0.05)),
                        float(r.get("width", 1.0)), float(r.get("velocity_amplitude", 0.0)))


def _radial_run(cfg: ExperimentConfig, out: str):
    recipe = _radial_recipe(cfg)
    traj = evolve_linear_radial(cfg.params, recipe, cfg.time.times())
    path = os.path.join(out, "trajectory.csv")
    write_csv(path, traj.columns())
    return traj, [path]


def _fit_metrics(traj, names, window):
    fits = {n: fit_power_law(traj.t, traj.column(n), window) for n in names}
    return fits, {n: f.as_dict() for n, f in fits.items()}


def _write_fits(out, fits):
    path = os.path.join(out, "fits.csv")
    names = list(fits)
    write_csv(path, {"quantity": np.arange(len(names)),
                     "exponent": [fits[n].exponent for n in names],
                     "prefactor": [fits[n].prefactor for n in names],
                     "r_squared": [fits[n].r_squared for n in names],
                     "rms_residual": [fits[n].rms_residual for n in names]})
    # names are written alongside so the numeric CSV stays machine-parseable
    atomic_write_text(os.path.join(out, "fits_index.txt"),
                      "".join(f"{i} {n}\n" for i, n in enumerate(names)))
    return [path, os.path.join(out, "fits_index.txt")]


def run_l1_growth(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    recipe = _radial_recipe(cfg)
    traj, fits, report = l1_growth_experiment(cfg.params, recipe, cfg.time.times(),
                                              cfg.time.fit_window, require_condition=False)
    files = [os.path.join(out, "trajectory.csv")]
    write_csv(files[0], traj.columns())
    files += _write_fits(out, fits)
    control = radial_lowfreq_report(cfg.params, RadialRecipe(
        "gaussian-potential", recipe.amplitude, recipe.width, recipe.velocity_amplitude))
    metrics = {"fits": {n: f.as_dict() for n, f in fits.items()},
               "lowfreq": report.as_dict(), "lowfreq_control": control.as_dict()}
    checks = [
        _within("l1_exponent", fits["U_L1"].exponent, tol["l1_exponent"], tol["l1_tol"]),
        _within("linf_exponent", fits["U_Linf"].exponent, tol["linf_exponent"],
                tol["linf_tol"]),
        Check("lowfreq_recipe_passes", report.density_margin, "condition holds",
              report.passed),
        Check("lowfreq_control_fails", control.density_margin, "condition fails",
              not control.passed),
    ]
    return metrics, checks, files


def run_l2_decay(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    traj, files = _radial_run(cfg, out)
    fits, metrics = _fit_metrics(traj, ("U_L2", "U_grad1_L2", "U_grad2_L2"),
                                 cfg.time.fit_window)
    files += _write_fits(out, fits)
    checks = [
        _within("l2_exponent", fits["U_L2"].exponent, tol["l2_exponent"], tol["l2_tol"]),
        _within("grad1_l2_exponent", fits["U_grad1_L2"].exponent, tol["grad1_exponent"],
                tol["grad1_tol"]),
    ]
    return {"fits": metrics}, checks, files


def run_linf_decay(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    traj, files = _radial_run(cfg, out)
    fits, metrics = _fit_metrics(traj, ("U_Linf", "u_Linf"), cfg.time.fit_window)
    files += _write_fits(out, fits)
    checks = [_within("linf_exponent", fits["U_Linf"].exponent, tol["linf_exponent"],
                      tol["linf_tol"])]
    return {"fits": metrics}, checks, files


# ---------------------------------------------------------------- grid preset

def run_highfreq(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    traj, fit, bound = highfreq_experiment(cfg.params, cfg.grid, cfg.time.times(),
                                           seed=cfg.seed,
                                           smoothing=float(cfg.recipe.get("smoothing", 4.0)))
    path = os.path.join(out, "trajectory.csv")
    write_csv(path, traj.columns())
    rate = -fit.exponent
    metrics = {"fit": fit.as_dict(), "rate": rate, "band_rate_bound": bound}
    checks = [
        Check("semilog_slope_negative", fit.exponent, "< 0", fit.exponent < 0),
        Check("semilog_r_squared", fit.r_squared, f">= {tol['r2_min']!r}",
              fit.r_squared >= tol["r2_min"]),
        Check("rate_vs_band_bound", rate / bound, f">= {tol['bound_fraction']!r}",
              rate >= tol["bound_fraction"] * bound),
    ]
    return metrics, checks, [path]


# ---------------------------------------------------------------- symbol, quadrature

def run_symbol_oracle(cfg: ExperimentConfig, out: str):
    res = oracle_sweep(cfg.params, seed=cfg.seed)
    path = os.path.join(out, "oracle_errors.csv")
    write_csv(path, {"k": res["k"], "rel_error": res["errors"]})
    metrics = {"max_rel_error": res["max_rel_error"], "n": res["n"]}
    checks = [_at_most("max_rel_error", res["max_rel_error"],
                       cfg.tolerances["max_rel_error"])]
    return metrics, checks, [path]


def run_duhamel(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    t_max = cfg.time.t_end
    rep = duhamel_bound_check(t_max)
    rep2 = duhamel_bound_check(2 * t_max)
    path = os.path.join(out, "duhamel.csv")
    write_csv(path, {"t": rep.times, "ratio": rep.ratios})
    change = abs(rep2.sup_ratio - rep.sup_ratio) / rep.sup_ratio
    metrics = {"sup_ratio": rep.sup_ratio, "ratio_at_tmax": rep.ratio_at_tmax,
               "sup_ratio_doubled": rep2.sup_ratio, "doubling_change": change}
    checks = [
        Check("sup_ratio_finite", rep.sup_ratio, "finite", math.isfinite(rep.sup_ratio)),
        Check("ratio_at_tmax", rep.ratio_at_tmax,
              f"in [{tol['ratio_low']!r}, {tol['ratio_high']!r}]",
              tol["ratio_low"] <= rep.ratio_at_tmax <= tol["ratio_high"]),
        _at_most("doubling_change", change, tol["doubling_tol"]),
    ]
    return metrics, checks, [path]


# ---------------------------------------------------------------- nonlinear preset

def run_nonlinear_box(cfg: ExperimentConfig, out: str):
    tol = cfg.tolerances
    r = cfg.recipe
    recipe = NonlinearRecipe(float(r.get("epsilon", 1e-3)), float(r.get("width", 1.5)),
                             float(r.get("velocity_amplitude", 1.0)))
    psi, v = recipe.fields(cfg.grid)
    T = cfg.time.t_end
    traj = evolve_nonlinear(cfg.params, psi, v, T, cfg.time.dt, cfg.grid,
                            sample_times=cfg.time.times(), linear_reference=True)
    path = os.path.join(out, "trajectory.csv")
    write_csv(path, traj.columns())
    init = traj.meta["initial"]
    checks = []
    metrics = {"wall_time": traj.meta["wall_time"], "epsilon": recipe.epsilon}
    for name in ("res_det", "res_piola", "res_div"):
        worst = float(np.max(traj.column(name)))
        floor = max(init[name], float(np.max(traj.column("roundoff_floor"))))
        metrics[f"max_{name}"] = worst
        checks.append(_at_most(name, worst, tol["residual_factor"] * floor))
    u_inf = max(float(np.max(traj.column("u_Linf"))), 1e-300)
    drift = float(np.max(traj.column("trace_drift"))) / u_inf
    metrics["max_trace_drift_rel"] = drift
    checks.append(_at_most("trace_drift", drift,
                           tol["trace_factor"] * tol["integrator_tol"]))
    h3 = float(np.max(traj.column("u_H3"))) / init["u_H3"]
    metrics["h3_ratio"] = h3
    checks.append(_at_most("h3_ratio", h3, tol["h3_factor"]))
    sel = traj.t <= tol["linear_window"] + 1e-12
    dev = float(np.max(traj.column("linear_deviation")[sel]))
    metrics["max_linear_deviation"] = dev
    checks.append(_at_most("linear_deviation", dev, tol["linear_factor"] * recipe.epsilon))
    metrics["max_psi_consistency"] = float(np.max(traj.column("psi_consistency")))
    metrics["max_box_edge"] = float(np.max(traj.column("box_edge")))
    return metrics, checks, [path]


# ---------------------------------------------------------------- tables

def run_dispersion(cfg: ExperimentConfig, out: str):
    k = np.geomspace(cfg.time.t_start, cfg.time.t_end, cfg.time.n_samples)
    k = np.unique(np.concatenate([k, coalescence_radii(cfg.params)]))
    table = dispersion_table(cfg.params, k)
    path = os.path.join(out, "dispersion.csv")
    write_csv(path, table)
    r_lam, r_mu = vieta_residual(cfg.params, k)
    vieta = float(max(np.max(r_lam), np.max(r_mu)))
    re_max = float(max(np.max(table[c]) for c in table if c.startswith("re_")))
    checks = [_at_most("vieta_residual", vieta, cfg.tolerances["vieta_tol"]),
              _at_most("max_real_part", re_max, 0.0)]
    return {"vieta_residual": vieta, "max_real_part": re_max}, checks, [path]


def run_bands(cfg: ExperimentConfig, out: str):
    fam = CutoffFamily.from_params(cfg.params)
    k = np.linspace(0.0, 3 * fam.high_edges[1], cfg.time.n_samples)
    low, mid, high = cutoff_values(fam, k)
    path = os.path.join(out, "bands.csv")
    write_csv(path, {"k": k, "low": low, "mid": mid, "high": high,
                     "P1": low, "Pinf": 1.0 - low})
    defect = float(np.max(np.abs(low + mid + high - 1.0)))
    lo = float(min(low.min(), mid.min(), high.min()))
    hi = float(max(low.max(), mid.max(), high.max()))
    checks = [_at_most("partition_defect", defect, cfg.tolerances["partition_tol"]),
              Check("range", lo, "values in [0, 1]", lo >= 0.0 and hi <= 1.0)]
    metrics = {"M1": fam.M1, "M2": fam.M2, "low_edges": fam.low_edges,
               "high_edges": fam.high_edges, "partition_defect": defect}
    return metrics, checks, [path]


# ---------------------------------------------------------------- registry

def _simple(backend, tolerances, **sections):
    d = {"experiment": {"backend": backend}, "params": dict(_PARAMS),
         "tolerances": tolerances}
    d.update(sections)
    return d


PRESETS = {p.name: p for p in [
    Preset("thm32-l1-growth", "radial L1 growth and low-frequency condition",
           _radial_defaults({"l1_exponent": 0.5, "l1_tol": 0.08,
                             "linf_exponent": -2.0, "linf_tol": 0.15}), run_l1_growth),
    Preset("prop44-l2-decay", "radial L2 and gradient decay",
           _radial_defaults({"l2_exponent": -0.75, "l2_tol": 0.08,
                             "grad1_exponent": -1.25, "grad1_tol": 0.12}), run_l2_decay),
    Preset("linfty-decay", "radial sup-norm decay",
           _radial_defaults({"linf_exponent": -2.0, "linf_tol": 0.15}), run_linf_decay),
    Preset("highfreq-decay", "grid run on high-band data, exponential decay",
           _simple("grid", {"r2_min": 0.99, "bound_fraction": 0.5},
                   recipe={"smoothing": 4.0, "seed": 0},
                   time={"t_start": 0.0, "t_end": 20.0, "n_samples": 41},
                   grid={"N": 64, "R": 8 * math.pi}), run_highfreq),
    Preset("symbol-oracle", "closed-form semigroup versus matrix exponential",
           _simple("symbol", {"max_rel_error": 1e-8}, recipe={"seed": 0}),
           run_symbol_oracle),
    Preset("duhamel", "Duhamel convolution integral against (1+t)^(1/2)",
           _simple("quadrature", {"ratio_low": 0.95, "ratio_high": 1.05,
                                  "doubling_tol": 0.01},
                   time={"t_end": 1e4}), run_duhamel),
    Preset("nonlinear-box", "periodic nonlinear run, constraints and linear regime",
           _simple("nonlinear", {"residual_factor": 10.0, "trace_factor": 10.0,
                                 "integrator_tol": 1e-10, "h3_factor": 1.5,
                                 "linear_window": 5.0, "linear_factor": 10.0},
                   recipe={"epsilon": 1e-3, "width": 1.5, "velocity_amplitude": 1.0},
                   time={"t_end": 10.0, "dt": 0.2, "n_samples": 11},
                   grid={"N": 64, "R": 8.0}), run_nonlinear_box),
    Preset("dispersion", "branch eigenvalues over a wavenumber range",
           _simple("table", {"vieta_tol": 1e-12},
                   time={"t_start": 1e-3, "t_end": 1e3, "n_samples": 400,
                         "spacing": "log"}), run_dispersion),
    Preset("bands", "smooth frequency cutoff profiles",
           _simple("table", {"partition_tol": 1e-15}, time={"n_samples": 2001}),
           run_bands),
]}

ALIASES = {"symbol-check": "symbol-oracle"}


def resolve(name: str) -> str:
    name = ALIASES.get(name, name)
    if name not in PRESETS:
        raise KeyError(name)
    return name


def default_config(name: str) -> ExperimentConfig:
    name = resolve(name)
    return build_config({"experiment": {"preset": name}}, PRESETS[name].defaults)


def output_root(out=None, cfg: ExperimentConfig | None = None) -> str:
    if out:
        return os.fspath(out)
    if cfg is not None and cfg.output_dir:
        return cfg.output_dir
    return os.environ.get(OUT_ENV, DEFAULT_OUT)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def run_preset(name: str, out=None, config: ExperimentConfig | None = None,
               threads: int | None = None) -> RunManifest:
    """Run a preset, write its CSVs and ``manifest.json`` under ``<out>/<name>``.

    Unknown names raise KeyError before anything is written. Regime violations
    are recorded in the manifest and re-raised.
    """
    name = resolve(name)
    cfg = config if config is not None else default_config(name)
    if threads is not None:
        fields.set_fft_workers(threads)
    run_dir = os.path.join(output_root(out, cfg), name)
    os.makedirs(run_dir, exist_ok=True)
    manifest = RunManifest(name, cfg.echo(), _now(), code_version=code_version())
    t0 = _time.perf_counter()
    try:
        metrics, checks, files = PRESETS[name].runner(cfg, run_dir)
    except RegimeError as exc:
        manifest.status, manifest.error = "regime-abort", str(exc)
        manifest.finished = _now()
        manifest.write(os.path.join(run_dir, "manifest.json"))
        raise
    manifest.metrics = {**metrics, "wall_time_s": _time.perf_counter() - t0}
    manifest.checks = list(checks)
    manifest.files = [os.path.basename(f) for f in files]
    manifest.status = "ok"
    manifest.finished = _now()
    manifest.write(os.path.join(run_dir, "manifest.json"))
    return manifest


__all__ = ["Check", "RunManifest", "Preset", "PRESETS", "ALIASES", "resolve",
           "default_config", "run_preset", "output_root", "OUT_ENV", "ConfigError"]
