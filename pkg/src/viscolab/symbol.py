"""Fourier symbol of the linearized semigroup and its matrix-exponential oracle.

The closed form is written for a generic analytic scalar function ``f`` applied
to the two 2x2 subsystems (transverse branches lambda, longitudinal branches
mu). With ``D = f[a, b]`` the divided difference over a branch pair,
``A = f(a) - a D`` and ``V = f(a) + b D``, the multiplier acts as::

    phi -> A_mu phi - i D_mu (xi . w)
    w   -> -i gamma^2 D_mu xi phi + V_lam P w + V_mu Q w
           + i beta^2 (D_lam P G xi + D_mu Q G xi)
    G   -> i (D_lam P w + D_mu Q w) xi^T + A_lam P G + A_mu Q G

``f(z) = exp(z t)`` gives the semigroup itself; ``f(z) = phi_k(h z)`` gives
the exponential-integrator weights. The formula is valid on the constraint
subspace ``phi + tr G = 0``, ``G = i psi xi^T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import kernels
from .dispersion import lambda_pm, mu_pm
from .params import NCOMP, FluidParams

_SYM_SWITCH = 1.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _sinhc(z):
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    z2 = z * z
    return np.where(small, 1 + z2 / 6 + z2 * z2 / 120, np.sinh(zs) / zs)


def divided_diff(a, b, t):
    """(exp(a t) - exp(b t)) / (a - b), continuous through a = b.

    Nearby arguments use the symmetric form
    ``t exp((a+b) t / 2) sinhc((a-b) t / 2)``, which carries no cancellation.

    >>> abs(divided_diff(-1 + 1j, -1 - 1j, 1.0) - np.exp(-1) * np.sin(1)) < 1e-15
    True
    """
    scalar = np.ndim(a) == 0 and np.ndim(b) == 0 and np.ndim(t) == 0
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("t must be nonnegative")
    half = (a - b) * t / 2
    near = np.abs(half) <= _SYM_SWITCH
    sym = t * np.exp((a + b) * t / 2) * _sinhc(np.where(near, half, 0.0))
    gap = np.where(near, 1.0, a - b)
    direct = (np.exp(a * t) - np.exp(b * t)) / gap
    out = np.where(near, sym, direct)
    return complex(out) if scalar else out


def phi_function(k: int, z):
    """phi_k(z) = sum_j z**j / (j + k)!, with phi_0 = exp."""
    z = np.asarray(z, dtype=complex)
    if k == 0:
        return np.exp(z)
    small = np.abs(z) < 0.5
    ser = np.zeros_like(z)
    term = np.full_like(z, 1.0 / math.factorial(k))
    for j in range(30):
        ser = ser + term
        term = term * z / (j + k + 1)
    zz = np.where(small, 1.0, z)
    rec = np.exp(zz)
    for m in range(k):
        rec = (rec - 1.0 / math.factorial(m)) / zz
    return np.where(small, ser, rec)


class ExpFunction:
    """f(z) = exp(z t)."""

    def __init__(self, t: float):
        if not t >= 0:
            raise ValueError("t must be nonnegative")
        self.t = float(t)

    def value(self, z):
        return np.exp(np.asarray(z, dtype=complex) * self.t)

    def divided(self, a, b):
        return divided_diff(a, b, self.t)


class PhiFunction:
    """f(z) = phi_k(h z) with k >= 1."""

    def __init__(self, k: int, h: float):
        if k < 1:
            raise ValueError("order must be >= 1; use ExpFunction for k = 0")
        if not h >= 0:
            raise ValueError("step must be nonnegative")
        self.k = int(k)
        self.h = float(h)

    def value(self, z):
        return phi_function(self.k, self.h * np.asarray(z, dtype=complex))

    def divided(self, a, b):
        a = np.asarray(a, dtype=complex)
        b = np.asarray(b, dtype=complex)
        h, k = self.h, self.k
        near = np.abs(h * (a - b)) <= 0.5
        gap = np.where(near, 1.0, a - b)
        out = (self.value(a) - self.value(b)) / gap
        if np.any(near):
            an, bn = a[near], b[near]
            # integral representation, panels scaled to the exponential rate
            rate = float(np.max(np.abs(h * (an + bn) / 2), initial=0.0))
            panels = int(min(64, max(1, math.ceil(rate / 16))))
            acc = np.zeros(an.shape, dtype=complex)
            edges = np.linspace(0.0, 1.0, panels + 1)
            for lo, hi in zip(edges[:-1], edges[1:]):
                s = (hi - lo) / 2 * _GL_NODES + (hi + lo) / 2
                wts = (hi - lo) / 2 * _GL_WEIGHTS * s ** (k - 1) / math.factorial(k - 1)
                for sj, wj in zip(s, wts):
                    acc += wj * divided_diff(an, bn, h * (1 - sj))
            out = np.array(out)
            out[near] = acc
        return out


def _pair_coefficients(fn, a, b):
    d = fn.divided(a, b)
    fa = fn.value(a)
    fb = fn.value(b)
    # pick the algebraically equal form whose correction term is smaller
    a_small = np.abs(a) <= np.abs(b)
    A = np.where(a_small, fa - a * d, fb - b * d)
    V = np.where(a_small, fb + a * d, fa + b * d)
    return A, V, d


def branch_coefficients(params: FluidParams, k, fn) -> np.ndarray:
    """Array (6, *k.shape) of (A_lam, V_lam, D_lam, A_mu, V_mu, D_mu)."""
    k = np.asarray(k, dtype=float)
    lam = lambda_pm(params, k)
    mu = mu_pm(params, k)
    al, vl, dl = _pair_coefficients(fn, np.asarray(lam.plus), np.asarray(lam.minus))
    am, vm, dm = _pair_coefficients(fn, np.asarray(mu.plus), np.asarray(mu.minus))
    return np.stack([al, vl, dl, am, vm, dm]).astype(complex)


def apply_multiplier(params: FluidParams, xi, data, fn) -> np.ndarray:
    """Apply ``f(-L(xi))`` to 13-component data at every wavevector.

    ``xi`` has shape (3, *S) and ``data`` shape (13, *S).
    """
    xi = np.asarray(xi, dtype=float)
    data = np.asarray(data)
    shape = xi.shape[1:]
    xf = xi.reshape(3, -1)
    k = np.sqrt(np.einsum("in,in->n", xf, xf))
    coef = branch_coefficients(params, k, fn)
    out = kernels.apply_blocks(coef, xf, data.reshape(NCOMP, -1),
                               params.gamma ** 2, params.beta ** 2)
    return out.reshape((NCOMP,) + shape)


def apply_semigroup(params: FluidParams, xi, data, t: float) -> np.ndarray:
    return apply_multiplier(params, xi, data, ExpFunction(t))


@dataclass(frozen=True)
class SemigroupSymbol:
    """13x13 matrix of the semigroup at one wavevector and time."""

    matrix: np.ndarray
    xi: np.ndarray
    t: float
    params: FluidParams

    def __matmul__(self, v):
        return self.matrix @ v

    def block(self, row: int, col: int) -> np.ndarray:
        """Block (row, col) with indices 1 (phi), 2 (w) and 3 (G)."""
        sl = (slice(0, 1), slice(1, 4), slice(4, 13))
        return self.matrix[sl[row - 1], sl[col - 1]]


def semigroup_symbol(params: FluidParams, xi, t: float, fn=None) -> SemigroupSymbol:
    xi = np.asarray(xi, dtype=float).reshape(3)
    fn = fn if fn is not None else ExpFunction(t)
    eye = np.eye(NCOMP, dtype=complex)
    xis = np.repeat(xi[:, None], NCOMP, axis=1)
    cols = apply_multiplier(params, xis, eye, fn)
    return SemigroupSymbol(cols, xi, float(t), params)


def symbol_matrix_L(params: FluidParams, xi) -> np.ndarray:
    """Fourier symbol of the linear operator under d/dx_j -> i xi_j."""
    xi = np.asarray(xi, dtype=float).reshape(3)
    L = np.zeros((NCOMP, NCOMP), dtype=complex)
    k2 = float(xi @ xi)
    b2, g2 = params.beta ** 2, params.gamma ** 2
    L[0, 1:4] = 1j * xi
    W = params.nu * k2 * np.eye(3) + params.nu_tilde * np.outer(xi, xi)
    L[1:4, 0] = 1j * g2 * xi
    L[1:4, 1:4] = W
    for j in range(3):
        for m in range(3):
            L[1 + j, 4 + 3 * j + m] = -1j * b2 * xi[m]
            L[4 + 3 * j + m, 1 + j] = -1j * xi[m]
    return L


def symbol_oracle(params: FluidParams, xi, t: float) -> np.ndarray:
    """exp(-t L(xi)) by Pade scaling and squaring."""
    if not t >= 0:
        raise ValueError("t must be nonnegative")
    return scipy.linalg.expm(-t * symbol_matrix_L(params, xi))


def random_constraint_vector(xi, rng: np.random.Generator) -> np.ndarray:
    """Random amplitudes with G = i psi xi^T and phi = -tr G."""
    xi = np.asarray(xi, dtype=float).reshape(3)
    psi = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    G = 1j * np.outer(psi, xi)
    return np.concatenate([[-np.trace(G)], w, G.ravel()])


def constraint_defect(xi, v) -> tuple[float, float]:
    """(trace defect, gradient-form defect) of amplitudes ``v`` at ``xi``.

    The gradient-form defect is ``max |G_jk xi_l - G_jl xi_k|``.
    """
    xi = np.asarray(xi, dtype=float).reshape(3)
    v = np.asarray(v)
    G = v[4:13].reshape(3, 3)
    trace = abs(v[0] + np.trace(G))
    curl = np.einsum("jk,l->jkl", G, xi) - np.einsum("jl,k->jkl", G, xi)
    return float(trace), float(np.max(np.abs(curl)))


def oracle_sweep(params: FluidParams, n_samples=1000, n_coalescence=50,
                 k_range=(1e-3, 50.0), t_range=(0.0, 10.0), seed=0) -> dict:
    """Compare the closed form against the oracle on random admissible vectors.

    Relative error is ``|S v - O v| / |O v|``.
    """
    rng = np.random.default_rng(seed)
    lo, hi = np.log(k_range[0]), np.log(k_range[1])
    ks = list(np.exp(rng.uniform(lo, hi, n_samples)))
    radii = (2 * params.beta / params.nu,
             2 * params.wave_speed / params.longitudinal_viscosity)
    for rad in radii:
        ks += list(rad * (1 + rng.uniform(-1e-6, 1e-6, n_coalescence)))
    worst = 0.0
    errs = []
    for k in ks:
        direction = rng.standard_normal(3)
        xi = k * direction / np.linalg.norm(direction)
        t = rng.uniform(*t_range)
        v = random_constraint_vector(xi, rng)
        ref = symbol_oracle(params, xi, t) @ v
        got = apply_semigroup(params, xi[:, None], v[:, None], t)[:, 0]
        e = float(np.linalg.norm(got - ref) / np.linalg.norm(ref))
        errs.append(e)
        worst = max(worst, e)
    return {"max_rel_error": worst, "n": len(ks), "errors": np.array(errs),
            "k": np.array(ks)}


__all__ = [
    "divided_diff", "phi_function", "ExpFunction", "PhiFunction",
    "branch_coefficients", "apply_multiplier", "apply_semigroup",
    "SemigroupSymbol", "semigroup_symbol", "symbol_matrix_L", "symbol_oracle",
    "random_constraint_vector", "constraint_defect", "oracle_sweep",
]
