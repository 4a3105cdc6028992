"""Displacement and deformation maps, constraint residuals and initial data.

Tensor fields carry their matrix indices first, shape (3, 3, *S), and the
gradient convention is ``(grad psi)[j, k] = d psi_j / d x_k``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .fields import forward, inverse, radial_analyze, RadialProfile
from .params import DisplacementField, GridDescriptor

INITIAL_REGIME = 0.3
WORKING_REGIME = 0.5
CONDITION_LIMIT = 1e6


class RegimeError(RuntimeError):
    """The state left the small-perturbation regime."""


def frobenius(A) -> np.ndarray:
    A = np.asarray(A)
    return np.sqrt(np.sum(np.abs(A) ** 2, axis=(0, 1)))


def _eye_like(A):
    return np.eye(3).reshape((3, 3) + (1,) * (A.ndim - 2))


def _matmul(A, B):
    return np.einsum("ij...,jk...->ik...", A, B)


def _checked_inverse(M, what: str):
    inv, det = kernels.inv_det3(M)
    cond = frobenius(M) * frobenius(inv)
    if not np.all(np.isfinite(cond)) or np.any(cond > CONDITION_LIMIT):
        raise RegimeError(f"{what} is near singular (condition estimate "
                          f"{np.nanmax(np.where(np.isfinite(cond), cond, np.inf)):.3e})")
    return inv, det


def gradpsi_to_G(gradpsi, bound: float = WORKING_REGIME) -> np.ndarray:
    """G = (I - grad psi)^{-1} - I, evaluated as (I - grad psi)^{-1} grad psi."""
    A = np.asarray(gradpsi, dtype=float)
    if np.any(frobenius(A) > bound):
        raise RegimeError(f"displacement gradient exceeds {bound} pointwise")
    inv, _ = _checked_inverse(_eye_like(A) - A, "I - grad psi")
    return _matmul(inv, A)


def G_to_gradpsi(G, bound: float = WORKING_REGIME) -> np.ndarray:
    """grad psi = I - (I + G)^{-1}, evaluated as (I + G)^{-1} G."""
    G = np.asarray(G, dtype=float)
    inv, _ = _checked_inverse(_eye_like(G) + G, "I + G")
    A = _matmul(inv, G)
    if np.any(frobenius(A) > bound):
        raise RegimeError(f"displacement gradient exceeds {bound} pointwise")
    return A


def det_expansion(A) -> np.ndarray:
    """det(I + A) = 1 + tr A + ((tr A)^2 - tr(A^2))/2 + det A."""
    A = np.asarray(A)
    tr = np.einsum("ii...->...", A)
    tr2 = np.einsum("ij...,ji...->...", A, A)
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    return 1 + tr + (tr * tr - tr2) / 2 + det


def phi_from_gradpsi(gradpsi) -> np.ndarray:
    """phi = det(I - grad psi) - 1 through the invariant expansion.

    The linear part is ``-div psi``; the remainder is quadratic and cubic.
    """
    A = -np.asarray(gradpsi, dtype=float)
    tr = np.einsum("ii...->...", A)
    tr2 = np.einsum("ij...,ji...->...", A, A)
    det = (A[0, 0] * (A[1, 1] * A[2, 2] - A[1, 2] * A[2, 1])
           - A[0, 1] * (A[1, 0] * A[2, 2] - A[1, 2] * A[2, 0])
           + A[0, 2] * (A[1, 0] * A[2, 1] - A[1, 1] * A[2, 0]))
    return tr + (tr * tr - tr2) / 2 + det


def h_remainder(gradpsi) -> np.ndarray:
    """h(A) = (I - A)^{-1} - I - A, the quadratic remainder of the inverse."""
    A = np.asarray(gradpsi, dtype=float)
    return gradpsi_to_G(A, bound=np.inf) - A


# ---------------------------------------------------------------- residuals

def tensor_gradient(T, grid: GridDescriptor) -> np.ndarray:
    """d_m T[...] stacked on a trailing index axis: shape (*T.shape[:-3], 3, N, N, N)."""
    Th = forward(T, grid)
    xi = grid.wavevectors()
    return np.stack([inverse(1j * xi[m] * Th, grid) for m in range(3)], axis=-4)


@dataclass(frozen=True)
class ConstraintResiduals:
    r_det: np.ndarray
    r_piola: np.ndarray
    r_div: np.ndarray
    dx: float

    def _summ(self, f):
        return float(np.max(np.abs(f))), float(np.sqrt(np.sum(f ** 2) * self.dx ** 3))

    def summary(self) -> dict:
        out = {}
        for name, f in (("det", self.r_det), ("piola", self.r_piola), ("div", self.r_div)):
            linf, l2 = self._summ(f)
            out[f"{name}_linf"] = linf
            out[f"{name}_l2"] = l2
        return out

    def max_linf(self) -> float:
        s = self.summary()
        return max(s["det_linf"], s["piola_linf"], s["div_linf"])


def constraint_residuals(rho, v, F, grid: GridDescriptor) -> ConstraintResiduals:
    """Pointwise residuals of rho det F = 1, the Piola identity and div(rho F^T) = 0."""
    rho = np.asarray(rho, dtype=float)
    F = np.asarray(F, dtype=float)
    _, det = kernels.inv_det3(F)
    r_det = np.abs(rho * det - 1)
    dF = tensor_gradient(F, grid)  # [j, k, m] = d_m F_jk
    # sum_m F_ml d_m F_jk, indexed [j, k, l]
    S = np.einsum("ml...,jkm...->jkl...", F, dF)
    r_piola = np.max(np.abs(S - np.swapaxes(S, 1, 2)).reshape((27,) + rho.shape), axis=0)
    dR = tensor_gradient(rho[None, None] * F, grid)  # [k, j, m] = d_m (rho F_kj)
    div = np.einsum("kjk...->j...", dR)
    r_div = np.sqrt(np.sum(div ** 2, axis=0))
    return ConstraintResiduals(r_det, r_piola, r_div, grid.dx)


@dataclass(frozen=True)
class InitialData:
    rho: np.ndarray
    v: np.ndarray
    F: np.ndarray
    gradpsi: np.ndarray
    residuals: ConstraintResiduals

    @property
    def phi(self):
        return self.rho - 1

    @property
    def G(self):
        return self.F - np.eye(3).reshape(3, 3, 1, 1, 1)


def displacement_gradient(psi, grid: GridDescriptor) -> np.ndarray:
    d = tensor_gradient(np.asarray(psi, dtype=float), grid)  # [j, k]
    return d


def build_initial_data(psi0: DisplacementField, v0) -> InitialData:
    """(rho0, v0, F0) with F0^{-1} = I - grad psi0 and rho0 = det F0^{-1}."""
    grid = psi0.grid
    v0 = np.asarray(v0, dtype=float)
    if v0.shape != (3,) + grid.shape:
        raise ValueError("v0 must have shape (3, N, N, N)")
    A = displacement_gradient(psi0.psi, grid)
    if np.max(frobenius(A)) > INITIAL_REGIME:
        raise RegimeError(f"initial displacement gradient exceeds {INITIAL_REGIME}")
    Finv = _eye_like(A) - A
    inv, det = _checked_inverse(Finv, "I - grad psi0")
    rho = 1 + phi_from_gradpsi(A)
    F = _eye_like(A) + _matmul(inv, A)
    res = constraint_residuals(rho, v0, F, grid)
    return InitialData(rho, v0, F, A, res)


# ---------------------------------------------------------------- low-frequency condition

@dataclass(frozen=True)
class LowFrequencyReport:
    passed: bool
    density_margin: float
    skew_margin: float
    min_abs_phi_hat: float
    worst_k: float
    n_samples: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def lowfreq_condition_check(k, phi_hat0, m_hat0, calG_hat0, r, c0, c1, eta0
                            ) -> LowFrequencyReport:
    """Check |phi_hat0| > c0 and |m_hat0| + |G_hat0 - G_hat0^T| <= c1 |xi|^eta0 on |xi| <= r.

    ``k`` are sample magnitudes, ``phi_hat0`` complex samples, ``m_hat0`` has
    shape (3, n) and ``calG_hat0`` shape (3, 3, n). Margins are positive when
    a clause holds with room to spare.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    inside = k <= r
    if not np.any(inside):
        raise ValueError("no samples inside the low-frequency ball")
    phi = np.abs(np.atleast_1d(phi_hat0))[inside]
    m = np.sqrt(np.sum(np.abs(np.asarray(m_hat0).reshape(3, -1)) ** 2, axis=0))[inside]
    Gh = np.asarray(calG_hat0).reshape(3, 3, -1)
    skew = frobenius(Gh - np.swapaxes(Gh, 0, 1))[inside]
    kk = k[inside]
    dens = float(phi.min() - c0)
    slack = c1 * kk ** eta0 - (m + skew)
    i = int(np.argmin(slack))
    skew_margin = float(slack[i])
    return LowFrequencyReport(bool(dens > 0 and skew_margin >= 0), dens, skew_margin,
                              float(phi.min()), float(kk[i]), int(kk.size))


def radial_potential_initial_fields(rule, chi_prime, chi_second, theta_prime=None):
    """Exact (phi0, m0 magnitude, sym(G0)) for psi0 = grad chi, v0 = grad theta.

    The Hessian of chi has eigenvalues (chi'', chi'/r, chi'/r), so
    ``rho0 = (1 - chi'') (1 - chi'/r)^2`` and ``rho0 F0 - I`` is a radial
    symmetric tensor.
    """
    r = rule.nodes
    a = chi_prime / r
    rho = (1 - chi_second) * (1 - a) ** 2
    phi = rho - 1
    # F0 = (I - H)^{-1} in the radial frame
    f_rad = 1 / (1 - chi_second)
    f_tan = 1 / (1 - a)
    calG_a = rho * f_tan - 1
    calG_b = rho * f_rad - 1 - calG_a
    m = np.zeros_like(r) if theta_prime is None else rho * theta_prime
    return phi, m, calG_a, calG_b


def radial_lowfreq_check(rule, phi0, m0, calG_a, calG_b, r, c0, c1, eta0,
                         n_samples: int = 64) -> LowFrequencyReport:
    """Forward-transform radial initial fields and run the low-frequency check.

    The radial tensor is symmetric, so its skew part vanishes identically.
    """
    ks = np.linspace(r / n_samples, r, n_samples)
    phi_hat = radial_analyze(RadialProfile(rule, phi0), ks, tail_tol=np.inf).values
    m_hat = radial_analyze(RadialProfile(rule, m0, "radial-vector"), ks,
                           tail_tol=np.inf).values
    t = radial_analyze(RadialProfile(rule, calG_a, "radial-tensor", aux=calG_b), ks,
                       tail_tol=np.inf)
    zeros = np.zeros_like(ks)
    m_vec = np.stack([m_hat, zeros, zeros])
    calG = np.zeros((3, 3, ks.size))
    for i in range(3):
        calG[i, i] = t.values
    calG[0, 0] += t.aux
    return lowfreq_condition_check(ks, phi_hat, m_vec, calG, r, c0, c1, eta0)


__all__ = [
    "RegimeError", "INITIAL_REGIME", "WORKING_REGIME", "frobenius", "gradpsi_to_G",
    "G_to_gradpsi", "det_expansion", "phi_from_gradpsi", "h_remainder",
    "ConstraintResiduals", "constraint_residuals", "InitialData", "build_initial_data",
    "displacement_gradient", "tensor_gradient", "LowFrequencyReport",
    "lowfreq_condition_check", "radial_potential_initial_fields", "radial_lowfreq_check",
]
