"""Eigenvalue branches of the linearized operator.

Transverse (elastic shear) branch: roots of ``z**2 + nu k**2 z + beta**2 k**2``.
Longitudinal (sound + elastic) branch: roots of
``z**2 + (nu + nu_tilde) k**2 z + (beta**2 + gamma**2) k**2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import FluidParams

COALESCENCE_TOL = 1e-9


@dataclass(frozen=True)
class BranchPair:
    plus: np.ndarray
    minus: np.ndarray
    coalesced: np.ndarray

    def __iter__(self):
        yield self.plus
        yield self.minus


def _quadratic_roots(p, c, k):
    """Roots of z**2 + p z + c with p, c >= 0, computed without cancellation.

    ``plus`` uses the principal square root of the discriminant, so it is the
    slower-decaying root when the discriminant is positive.
    """
    disc = p * p - 4 * c
    s = np.sqrt(disc.astype(complex))
    q = -(p + s) / 2
    safe = np.where(q == 0, 1.0, q)
    plus = np.where(q == 0, 0.0, c / safe)
    minus = q
    coalesced = np.abs(disc) < COALESCENCE_TOL * np.maximum(1.0, k ** 4)
    return plus, minus, coalesced


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(k < 0) or not np.all(np.isfinite(k)):
        raise ValueError("wavenumber magnitude must be finite and nonnegative")
    return k


def _pack(plus, minus, coalesced, scalar):
    if scalar:
        return BranchPair(complex(plus), complex(minus), bool(coalesced))
    return BranchPair(plus, minus, coalesced)


def lambda_pm(params: FluidParams, k) -> BranchPair:
    scalar = np.ndim(k) == 0
    k = _check_k(k)
    k2 = k * k
    return _pack(*_quadratic_roots(params.nu * k2, params.beta ** 2 * k2, k), scalar)


def mu_pm(params: FluidParams, k) -> BranchPair:
    scalar = np.ndim(k) == 0
    k = _check_k(k)
    k2 = k * k
    return _pack(*_quadratic_roots(params.longitudinal_viscosity * k2,
                                   params.wave_speed ** 2 * k2, k), scalar)


def band_thresholds(params: FluidParams):
    a = params.beta / params.nu
    b = params.wave_speed / params.longitudinal_viscosity
    return min(a, b), max(a, b)


def coalescence_radii(params: FluidParams):
    """Wavenumbers where the transverse and longitudinal discriminants vanish."""
    return (2 * params.beta / params.nu,
            2 * params.wave_speed / params.longitudinal_viscosity)


def vieta_residual(params: FluidParams, k):
    lam = lambda_pm(params, k)
    mu = mu_pm(params, k)
    k = np.asarray(k, dtype=float)
    k2 = k * k
    scale = np.maximum(1.0, k2 * k2)
    r_lam = np.maximum(np.abs(lam.plus + lam.minus + params.nu * k2),
                       np.abs(lam.plus * lam.minus - params.beta ** 2 * k2)) / scale
    r_mu = np.maximum(np.abs(mu.plus + mu.minus + params.longitudinal_viscosity * k2),
                      np.abs(mu.plus * mu.minus - params.wave_speed ** 2 * k2)) / scale
    return r_lam, r_mu


def slowest_rate(params: FluidParams, k) -> np.ndarray:
    """min over the four branches of |Re z| at each k."""
    lam = lambda_pm(params, k)
    mu = mu_pm(params, k)
    return np.min(np.abs(np.real([lam.plus, lam.minus, mu.plus, mu.minus])), axis=0)


def dispersion_table(params: FluidParams, k) -> dict:
    """Columns for the ``dispersion`` CSV."""
    k = _check_k(np.atleast_1d(k))
    lam = lambda_pm(params, k)
    mu = mu_pm(params, k)
    return {
        "k": k,
        "re_lambda_plus": lam.plus.real, "im_lambda_plus": lam.plus.imag,
        "re_lambda_minus": lam.minus.real, "im_lambda_minus": lam.minus.imag,
        "re_mu_plus": mu.plus.real, "im_mu_plus": mu.plus.imag,
        "re_mu_minus": mu.minus.real, "im_mu_minus": mu.minus.imag,
        "lambda_coalesced": lam.coalesced.astype(int),
        "mu_coalesced": mu.coalesced.astype(int),
    }


def lambda_asymptotic_low(params: FluidParams, k):
    return (-params.nu * k * k / 2 + 1j * params.beta * k,
            -params.nu * k * k / 2 - 1j * params.beta * k)


def mu_asymptotic_low(params: FluidParams, k):
    c = params.wave_speed
    d = params.longitudinal_viscosity
    return -d * k * k / 2 + 1j * c * k, -d * k * k / 2 - 1j * c * k


def lambda_asymptotic_high(params: FluidParams, k):
    return -params.beta ** 2 / params.nu, -params.nu * k * k


def mu_asymptotic_high(params: FluidParams, k):
    d = params.longitudinal_viscosity
    return -params.wave_speed ** 2 / d, -d * k * k


__all__ = [
    "BranchPair", "COALESCENCE_TOL", "lambda_pm", "mu_pm", "band_thresholds",
    "coalescence_radii", "vieta_residual", "slowest_rate", "dispersion_table",
]
