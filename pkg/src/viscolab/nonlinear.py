"""Nonlinear terms of the perturbation system in (phi, w, G) and in the
displacement formulation (phi_tilde, w, grad psi).

Conventions: ``(grad w)[j, k] = d_k w_j``, ``(div G)_j = d_k G[j, k]``.
All products are formed in physical space from spectrally differentiated
factors; results are passed through the two-thirds filter when ``dealias``
is set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import dealias_mask, forward, inverse
from .kinematics import RegimeError, frobenius, gradpsi_to_G, phi_from_gradpsi
from .params import FluidParams, GridDescriptor

VACUUM_FLOOR = 0.5


class SpectralOps:
    """Spectral derivatives on one grid, with cached wavevectors and filter."""

    def __init__(self, grid: GridDescriptor):
        self.grid = grid
        self.xi = grid.wavevectors()
        self.k2 = np.sum(self.xi ** 2, axis=0)
        self.mask = dealias_mask(grid)

    def fwd(self, f):
        return forward(f, self.grid)

    def inv(self, fh):
        return inverse(fh, self.grid)

    def grad(self, f):
        """Gradient with the derivative index last: shape (*f.shape[:-3], 3, N, N, N)."""
        fh = self.fwd(f)
        return np.stack([self.inv(1j * self.xi[m] * fh) for m in range(3)], axis=-4)

    def div(self, T):
        """Contract the last tensor index with the derivative: ``d_k T[..., k]``."""
        Th = self.fwd(T)
        acc = sum(1j * self.xi[k] * Th[..., k, :, :, :] for k in range(3))
        return self.inv(acc)

    def laplacian(self, f):
        return self.inv(-self.k2 * self.fwd(f))

    def dealias(self, f):
        return self.inv(self.mask * self.fwd(f))


def _vacuum_guard(phi):
    if np.min(1 + phi) < VACUUM_FLOOR:
        raise RegimeError(f"vacuum guard: min(1 + phi) = {np.min(1 + phi):.3f} "
                          f"< {VACUUM_FLOOR}")


def _matmul(A, B):
    return np.einsum("ij...,jk...->ik...", A, B)


def _transpose(A):
    return np.swapaxes(A, 0, 1)


def pressure_remainder(phi, params: FluidParams):
    """R(phi) = P(1 + phi) - P(1) - gamma^2 phi = q phi^2 for the quadratic law."""
    phi = np.asarray(phi, dtype=float)
    if np.min(1 + phi) < VACUUM_FLOOR:
        raise RegimeError("vacuum guard violated in pressure remainder")
    return params.pressure_quadratic * phi * phi


def g_terms(phi, w, G, params: FluidParams, ops: SpectralOps, dealias: bool = True):
    """(g1, g2, g3, g4) on physical arrays phi (S), w (3, S), G (3, 3, S)."""
    phi = np.asarray(phi, dtype=float)
    w = np.asarray(w, dtype=float)
    G = np.asarray(G, dtype=float)
    _vacuum_guard(phi)
    if dealias:
        phi, w, G = ops.dealias(phi), ops.dealias(w), ops.dealias(G)
    gw = ops.grad(w)          # [j, k] = d_k w_j
    gG = ops.grad(G)          # [j, l, k] = d_k G_jl
    inv_rho = 1 / (1 + phi)
    frac = phi * inv_rho
    b2, g2c = params.beta ** 2, params.gamma ** 2

    g1 = -ops.div(phi * w)
    adv_w = np.einsum("k...,jk...->j...", w, gw)
    divw = np.einsum("kk...->...", gw)
    visc = params.nu * ops.laplacian(w) + params.nu_tilde * ops.grad(divw)
    grad_phi = ops.grad(phi)
    grad_R = ops.grad(pressure_remainder(phi, params))
    GGt = _matmul(G, _transpose(G))
    elastic = ops.div(phi * G + GGt + phi * GGt)
    g2 = (-adv_w + frac * (-visc + g2c * grad_phi) - inv_rho * grad_R
          - b2 * frac * ops.div(G) + b2 * inv_rho * elastic)
    g3 = -np.einsum("k...,jlk...->jl...", w, gG) + _matmul(gw, G)
    g4 = -ops.div(phi * _transpose(G))
    if dealias:
        g1, g2, g3, g4 = (ops.dealias(x) for x in (g1, g2, g3, g4))
    return g1, g2, g3, g4


@dataclass(frozen=True)
class NonlinearTerms:
    N1: np.ndarray
    N2: np.ndarray
    N3: np.ndarray

    def trace_defect(self) -> np.ndarray:
        return self.N1 + np.einsum("ii...->...", self.N3)

    def stacked(self) -> np.ndarray:
        s = self.N1.shape
        return np.concatenate([self.N1[None], self.N2, self.N3.reshape((9,) + s)])


def reconstruct_u(gradpsi, bound: float = 0.5):
    """(phi, G) with I + G = (I - grad psi)^{-1} and 1 + phi = det(I - grad psi)."""
    return phi_from_gradpsi(gradpsi), gradpsi_to_G(gradpsi, bound=bound)


def N_terms(phi_tilde, w, gradpsi, params: FluidParams, ops: SpectralOps,
            u=None, dealias: bool = True) -> NonlinearTerms:
    """Nonlinear terms of the displacement formulation.

    ``N1 = div(q)``, ``N3 = -grad q`` with ``q = (w . grad) psi = (grad psi) w``,
    and ``N2 = g2(u) - gamma^2 grad(phi - phi_tilde) + beta^2 div(G - grad psi)``.
    ``u = (phi, G)`` is reconstructed from ``gradpsi`` unless supplied.
    """
    w = np.asarray(w, dtype=float)
    A = np.asarray(gradpsi, dtype=float)
    if u is None:
        phi, G = reconstruct_u(A)
    else:
        phi, G = u
    q = np.einsum("jk...,k...->j...", A, w)
    gq = ops.grad(q)
    N1 = np.einsum("kk...->...", gq)
    N3 = -gq
    _, g2, _, _ = g_terms(phi, w, G, params, ops, dealias=dealias)
    # phi - phi_tilde equals det(I - A) - 1 + tr A exactly
    dphi = phi + np.einsum("ii...->...", A)
    N2 = g2 - params.gamma ** 2 * ops.grad(dphi) + params.beta ** 2 * ops.div(G - A)
    if dealias:
        N1, N2, N3 = ops.dealias(N1), ops.dealias(N2), ops.dealias(N3)
    return NonlinearTerms(N1, N2, N3)


def displacement_rhs(psi, v, ops: SpectralOps) -> np.ndarray:
    """Time derivative of psi: v - (v . grad) psi."""
    v = np.asarray(v, dtype=float)
    gpsi = ops.grad(np.asarray(psi, dtype=float))
    return v - np.einsum("k...,jk...->j...", v, gpsi)


def regime_norm(gradpsi) -> float:
    return float(np.max(frobenius(gradpsi)))




class SpectralNonlinear:
    """Fast evaluation of the displacement-formulation terms from spectral U.

    Every field entering a product is differentiated once spectrally from the
    (filtered) state; derivatives of the reconstructed ``G`` and ``phi`` use
    ``d(I - A)^{-1} = (I - A)^{-1} dA (I - A)^{-1}`` and Jacobi's formula, and
    divergences of products are expanded by the product rule. The result is
    filtered again before it is returned. It agrees with :func:`N_terms` up to
    aliasing of the non-polynomial terms.
    """

    def __init__(self, params: FluidParams, grid: GridDescriptor, bound: float = 0.5):
        self.params = params
        self.grid = grid
        self.ops = SpectralOps(grid)
        self.bound = bound

    def __call__(self, Uh):
        from .kernels import inv_det3

        ops, p = self.ops, self.params
        xi, mask = ops.xi, ops.mask
        Um = Uh * mask
        sh = self.grid.shape
        U = ops.inv(Um)
        w, A = U[1:4], U[4:13].reshape((3, 3) + sh)
        if regime_norm(A) > self.bound:
            raise RegimeError(f"displacement gradient exceeds {self.bound} during the run")
        wh, Ah = Um[1:4], Um[4:13].reshape((3, 3) + Um.shape[1:])
        dw = ops.inv(1j * wh[:, None] * xi[None])                  # [j, k] = d_k w_j
        dA = ops.inv(1j * Ah[:, :, None] * xi[None, None])         # [j, l, k]
        lap_w = ops.inv(-ops.k2 * wh)
        div_wh = np.sum(1j * wh * xi, axis=0)
        grad_div_w = ops.inv(1j * xi * div_wh)

        eye = np.eye(3).reshape((3, 3) + (1,) * 3)
        B, det = inv_det3(eye - A)                                  # (I - A)^{-1}
        phi = det - 1
        _vacuum_guard(phi)
        G = B - eye
        # d_k G = B (d_k A) B, d_k phi = -det tr(B d_k A)
        dG = np.einsum("ja...,abk...,bl...->jlk...", B, dA, B)
        dphi = -det * np.einsum("ba...,abk...->k...", B, dA)

        inv_rho = 1 / (1 + phi)
        frac = phi * inv_rho
        b2, g2c, q = p.beta ** 2, p.gamma ** 2, p.pressure_quadratic
        divG = np.einsum("jkk...->j...", dG)
        GGt = np.einsum("jm...,km...->jk...", G, G)
        d_GGt = (np.einsum("jmk...,km...->j...", dG, G)
                 + np.einsum("jm...,kmk...->j...", G, dG))
        elastic = (np.einsum("k...,jk...->j...", dphi, G + GGt) + phi * divG
                   + (1 + phi) * d_GGt)
        adv = np.einsum("k...,jk...->j...", w, dw)
        visc = p.nu * lap_w + p.nu_tilde * grad_div_w
        grad_R = 2 * q * phi * dphi
        g2 = (-adv + frac * (-visc + g2c * dphi) - inv_rho * grad_R
              - b2 * frac * divG + b2 * inv_rho * elastic)

        # q_j = A_jk w_k and its gradient
        dq = np.einsum("jmk...,m...->jk...", dA, w) + np.einsum("jm...,mk...->jk...", A, dw)
        N1 = np.einsum("kk...->...", dq)
        N3 = -dq
        dtrA = np.einsum("iik...->k...", dA)
        divA = np.einsum("jkk...->j...", dA)
        N2 = g2 - g2c * (dphi + dtrA) + b2 * (divG - divA)
        out = np.concatenate([N1[None], N2, N3.reshape((9,) + sh)])
        return ops.fwd(out) * mask, U


__all__ = [
    "VACUUM_FLOOR", "SpectralOps", "pressure_remainder", "g_terms", "NonlinearTerms",
    "reconstruct_u", "N_terms", "displacement_rhs", "regime_norm",
    "SpectralNonlinear",
]
