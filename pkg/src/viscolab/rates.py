"""Power-law and exponential rate fits, and the Duhamel-integral bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MIN_SAMPLES = 8


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class RateFit:
    """Least-squares fit of log(value) against log(1+t) (power) or t (exponential)."""

    kind: str
    exponent: float
    prefactor: float
    window: tuple
    rms_residual: float
    r_squared: float
    n_samples: int
    local_slopes: np.ndarray = field(repr=False, default_factory=lambda: np.empty((0, 2)))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind, "exponent": self.exponent, "prefactor": self.prefactor,
            "window": list(self.window), "rms_residual": self.rms_residual,
            "r_squared": self.r_squared, "n_samples": self.n_samples,
        }


def _select(times, values, window):
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if t.shape != v.shape or t.ndim != 1:
        raise FitError("times and values must be matching 1-d arrays")
    if window is None:
        window = (t.max() / 10, t.max())
    lo, hi = window
    if lo < t.min() - 1e-12 * abs(t.min()) or hi > t.max() * (1 + 1e-12):
        raise FitError(f"window {window} outside the data range [{t.min()}, {t.max()}]")
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12))
    if sel.sum() < MIN_SAMPLES:
        raise FitError(f"need at least {MIN_SAMPLES} samples in the window, got {sel.sum()}")
    if np.any(v[sel] <= 0) or not np.all(np.isfinite(v[sel])):
        raise FitError("values must be positive and finite")
    return t[sel], v[sel], (float(lo), float(hi))


def _linfit(x, y):
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return float(slope), float(intercept), math.sqrt(ss_res / x.size), r2


def local_slopes(x, y, span):
    """Regression slopes over sliding windows ``[x_i, x_i + span]`` in the fit variable.

    Returns rows (window centre, slope) for windows holding at least 3 samples.
    """
    rows = []
    for i in range(x.size):
        sel = (x >= x[i]) & (x <= x[i] + span * (1 + 1e-12))
        if sel.sum() >= 3 and x[sel][-1] - x[i] >= 0.9 * span:
            s = np.polyfit(x[sel], y[sel], 1)[0]
            rows.append((float(np.mean(x[sel])), float(s)))
    return np.array(rows).reshape(-1, 2)


def fit_power_law(times, values, window=None) -> RateFit:
    t, v, window = _select(times, values, window)
    x, y = np.log1p(t), np.log(v)
    slope, intercept, rms, r2 = _linfit(x, y)
    slopes = local_slopes(x, y, math.log(math.sqrt(10)))
    if slopes.size:
        slopes[:, 0] = np.expm1(slopes[:, 0])
    return RateFit("power", slope, math.exp(intercept), window, rms, r2, t.size, slopes)


def fit_exponential(times, values, window=None) -> RateFit:
    t = np.asarray(times, dtype=float)
    if window is None:
        window = (float(t.min()), float(t.max()))
    t, v, window = _select(times, values, window)
    y = np.log(v)
    slope, intercept, rms, r2 = _linfit(t, y)
    span = (window[1] - window[0]) / 4
    slopes = local_slopes(t, y, span) if span > 0 else np.empty((0, 2))
    return RateFit("exponential", slope, math.exp(intercept), window, rms, r2, t.size, slopes)


def onset_time(fit: RateFit, target: float, tol: float):
    """Earliest local-slope window centre after which every local slope stays
    within ``tol`` of ``target``; ``None`` if that never happens."""
    s = fit.local_slopes
    if s.size == 0:
        return None
    ok = np.abs(s[:, 1] - target) <= tol
    for i in range(len(ok)):
        if ok[i:].all():
            return float(s[i, 0])
    return None


# ---------------------------------------------------------------- Duhamel bound

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)


def _graded_edges(t: float):
    """Panels refined geometrically towards both ends of [0, t]."""
    if t <= 2:
        return np.linspace(0.0, t, 5)
    half = t / 2
    left = [0.0]
    h = 0.25
    while left[-1] + h < half:
        left.append(left[-1] + h)
        h *= 2
    left.append(half)
    right = [t - e for e in reversed(left[:-1])]
    return np.array(left + right)


def duhamel_integral(t: float) -> float:
    """I(t) = int_0^t (1 + t - s)^{1/2} (1 + s)^{-2} ds by graded Gauss-Legendre."""
    if t <= 0:
        return 0.0
    e = _graded_edges(float(t))
    a, b = e[:-1, None], e[1:, None]
    s = (b - a) / 2 * _GL_X + (b + a) / 2
    w = (b - a) / 2 * _GL_W
    return float(np.sum(w * np.sqrt(1 + t - s) / (1 + s) ** 2))


@dataclass(frozen=True)
class DuhamelReport:
    sup_ratio: float
    ratio_at_tmax: float
    times: np.ndarray
    ratios: np.ndarray

    def as_dict(self) -> dict:
        return {"sup_ratio": self.sup_ratio, "ratio_at_tmax": self.ratio_at_tmax,
                "n_times": int(self.times.size)}


def duhamel_bound_check(t_max: float, nodes: int = 400) -> DuhamelReport:
    """Ratio I(t) / (1+t)^{1/2} on ``nodes`` log-spaced times in (0, t_max], plus t = 0."""
    if t_max < 10:
        raise ValueError("t_max must be at least 10")
    times = np.concatenate([[0.0], np.geomspace(1e-3, t_max, nodes)])
    ratios = np.array([duhamel_integral(t) / math.sqrt(1 + t) for t in times])
    return DuhamelReport(float(ratios.max()), float(ratios[-1]), times, ratios)


__all__ = ["RateFit", "FitError", "fit_power_law", "fit_exponential", "local_slopes",
           "onset_time", "duhamel_integral", "DuhamelReport", "duhamel_bound_check"]
