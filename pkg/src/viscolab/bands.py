"""Smooth frequency cutoffs, the low/high projectors and Helmholtz projectors."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dispersion import band_thresholds
from .params import FluidParams, SpectralState

BANDS = ("low", "mid", "high", "P1", "Pinf")


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/s)."""
    x = np.asarray(x, dtype=float)
    xc = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        f0 = np.where(xc > 0, np.exp(-1.0 / np.where(xc > 0, xc, 1.0)), 0.0)
        f1 = np.where(xc < 1, np.exp(-1.0 / np.where(xc < 1, 1 - xc, 1.0)), 0.0)
    return f0 / (f0 + f1)


@dataclass(frozen=True)
class CutoffFamily:
    """Low cutoff equal to 1 on k <= M1/2 and 0 on k >= M1/sqrt(2); high
    cutoff equal to 0 on k <= sqrt(2) M2 and 1 on k >= 2 M2."""

    M1: float
    M2: float

    def __post_init__(self):
        if not 0 < self.M1 <= self.M2:
            raise ValueError("need 0 < M1 <= M2")

    @classmethod
    def from_params(cls, params: FluidParams) -> "CutoffFamily":
        return cls(*band_thresholds(params))

    @property
    def low_edges(self):
        return self.M1 / 2, self.M1 / math.sqrt(2)

    @property
    def high_edges(self):
        return math.sqrt(2) * self.M2, 2 * self.M2


def cutoff_values(family: CutoffFamily, k):
    """(low, mid, high) at wavenumber magnitude ``k``; mid = 1 - low - high."""
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wavenumber magnitude must be nonnegative")
    a, b = family.low_edges
    c, d = family.high_edges
    low = 1.0 - smooth_step((k - a) / (b - a))
    high = smooth_step((k - c) / (d - c))
    mid = 1.0 - low - high
    return low, mid, high


def band_multiplier(family: CutoffFamily, k, band: str):
    if band not in BANDS:
        raise ValueError(f"unknown band {band!r}; expected one of {BANDS}")
    low, mid, high = cutoff_values(family, k)
    return {"low": low, "mid": mid, "high": high, "P1": low,
            "Pinf": 1.0 - low}[band]


def project_band(state: SpectralState, band: str, family: CutoffFamily) -> SpectralState:
    k = state.grid.wavenumber_magnitude()
    return state.replace(state.data * band_multiplier(family, k, band))


def _unit(xi):
    k = np.sqrt(np.sum(xi * xi, axis=0))
    return xi / np.where(k == 0, 1.0, k), k == 0


def longitudinal_part(xi, data):
    """Q applied to (phi, w, G): phi kept, w and the rows of G projected on xi.

    At xi = 0 the longitudinal part of w and G is zero.
    """
    n, _ = _unit(np.asarray(xi, dtype=float))
    out = np.array(data, copy=True)
    w = data[1:4]
    out[1:4] = n * np.einsum("i...,i...->...", n, w)
    G = data[4:13].reshape((3, 3) + data.shape[1:])
    out[4:13] = (n[:, None] * np.einsum("m...,mj...->j...", n, G)[None]).reshape(
        (9,) + data.shape[1:])
    return out


def helmholtz_arrays(xi, data, which: str):
    q = longitudinal_part(xi, data)
    if which == "Q":
        return q
    if which == "P":
        return data - q
    raise ValueError("which must be 'P' or 'Q'")


def helmholtz(state: SpectralState, which: str) -> SpectralState:
    return state.replace(helmholtz_arrays(state.grid.wavevectors(), state.data, which))


__all__ = ["BANDS", "smooth_step", "CutoffFamily", "cutoff_values", "band_multiplier",
           "project_band", "helmholtz", "helmholtz_arrays", "longitudinal_part"]
