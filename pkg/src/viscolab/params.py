"""Physical parameters, grid descriptors and the 13-component state containers.

Component ordering used throughout the package is
``(phi; w1, w2, w3; G11, G12, G13, G21, ..., G33)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

NCOMP = 13


class ParameterError(ValueError):
    """Raised when physical parameters violate an admissibility inequality."""


@dataclass(frozen=True)
class FluidParams:
    """Viscosities, elastic speed and sound speed of the fluid about (1, 0, I).

    ``pressure_quadratic`` is the coefficient ``q`` of the optional pressure law
    ``P(1 + phi) = P(1) + gamma**2 phi + q phi**2``.
    """

    nu: float
    nu_prime: float
    beta: float
    gamma: float
    pressure_quadratic: float = 0.0
    nu_tilde: float = field(init=False)

    def __post_init__(self):
        values = (self.nu, self.nu_prime, self.beta, self.gamma, self.pressure_quadratic)
        if not all(math.isfinite(float(v)) for v in values):
            raise ParameterError("parameters must be finite real numbers")
        if not self.nu > 0:
            raise ParameterError("nu must be positive")
        if 2 * self.nu + 3 * self.nu_prime < 0:
            raise ParameterError("2nu+3nu' >= 0 violated")
        if not self.beta > 0:
            raise ParameterError("beta must be positive")
        if not self.gamma > 0:
            raise ParameterError("gamma must be positive")
        object.__setattr__(self, "nu_tilde", float(self.nu) + float(self.nu_prime))
        if not self.nu + self.nu_tilde > 0:
            raise ParameterError("nu + nu_tilde > 0 violated")

    @property
    def longitudinal_viscosity(self) -> float:
        """nu + nu_tilde, the damping coefficient of the longitudinal branch."""
        return self.nu + self.nu_tilde

    @property
    def wave_speed(self) -> float:
        """Coupled sound-elastic speed sqrt(beta**2 + gamma**2)."""
        return math.hypot(self.beta, self.gamma)

    def as_dict(self) -> dict:
        return {
            "nu": self.nu,
            "nu_prime": self.nu_prime,
            "beta": self.beta,
            "gamma": self.gamma,
            "pressure_quadratic": self.pressure_quadratic,
        }


def make_params(nu, nu_prime, beta, gamma, pressure_quadratic=0.0) -> FluidParams:
    return FluidParams(float(nu), float(nu_prime), float(beta), float(gamma),
                       float(pressure_quadratic))


@dataclass(frozen=True)
class GridDescriptor:
    """Periodic box [-R, R)^3 sampled with N points per axis.

    Wavevectors are returned in ``rfftn`` layout. The Nyquist component is
    zeroed so odd derivatives of real fields stay real.
    """

    N: int
    R: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 8 or self.N & (self.N - 1):
            raise ParameterError("grid N must be a power of two >= 8")
        if not self.R > 0:
            raise ParameterError("grid half-width R must be positive")

    @property
    def dx(self) -> float:
        return 2 * self.R / self.N

    @property
    def dk(self) -> float:
        return math.pi / self.R

    @property
    def shape(self) -> tuple:
        return (self.N, self.N, self.N)

    @property
    def spectral_shape(self) -> tuple:
        return (self.N, self.N, self.N // 2 + 1)

    def axis(self) -> np.ndarray:
        return -self.R + self.dx * np.arange(self.N)

    def coords(self):
        x = self.axis()
        return np.meshgrid(x, x, x, indexing="ij")

    def wavenumbers(self, zero_nyquist=True):
        n = self.N
        full = np.fft.fftfreq(n, d=1.0 / n)
        half = np.arange(n // 2 + 1, dtype=float)
        if zero_nyquist:
            full = np.where(np.abs(full) == n // 2, 0.0, full)
            half[-1] = 0.0
        s = self.dk
        return (s * full[:, None, None], s * full[None, :, None], s * half[None, None, :])

    def wavevectors(self, zero_nyquist=True) -> np.ndarray:
        """Array of shape (3, N, N, N//2+1)."""
        kx, ky, kz = self.wavenumbers(zero_nyquist)
        shp = self.spectral_shape
        return np.stack([np.broadcast_to(kx, shp), np.broadcast_to(ky, shp),
                         np.broadcast_to(kz, shp)]).astype(float)

    def wavenumber_magnitude(self) -> np.ndarray:
        """True |xi| on the half lattice (Nyquist components kept), for radial
        multipliers and analytic spectra."""
        return np.sqrt(np.sum(self.wavevectors(zero_nyquist=False) ** 2, axis=0))

    def half_weights(self) -> np.ndarray:
        """Multiplicity of each rfft mode in the full spectrum (1 or 2)."""
        w = np.full(self.N // 2 + 1, 2.0)
        w[0] = 1.0
        w[-1] = 1.0
        return np.broadcast_to(w[None, None, :], self.spectral_shape)


def _freeze(a):
    a = np.asarray(a)
    a.flags.writeable = False
    return a


class _Stacked:
    """Shared accessors for 13-component arrays of shape (13, *grid)."""

    data: np.ndarray

    @property
    def phi(self):
        return self.data[0]

    @property
    def w(self):
        return self.data[1:4]

    @property
    def G(self):
        return self.data[4:13].reshape((3, 3) + self.data.shape[1:])


@dataclass(frozen=True)
class PerturbationState(_Stacked):
    """(phi, w, G) sampled on the physical grid."""

    data: np.ndarray
    grid: GridDescriptor

    def __post_init__(self):
        if self.data.shape != (NCOMP,) + self.grid.shape:
            raise ValueError(f"state must have shape {(NCOMP,) + self.grid.shape}")
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError("state contains non-finite values")
        object.__setattr__(self, "data", _freeze(self.data))

    @classmethod
    def from_fields(cls, phi, w, G, grid):
        data = np.concatenate([np.asarray(phi, float)[None], np.asarray(w, float),
                               np.asarray(G, float).reshape((9,) + grid.shape)])
        return cls(data, grid)


@dataclass(frozen=True)
class SpectralState(_Stacked):
    """Fourier coefficients of (phi, w, G) on the rfft half lattice."""

    data: np.ndarray
    grid: GridDescriptor

    def __post_init__(self):
        if self.data.shape != (NCOMP,) + self.grid.spectral_shape:
            raise ValueError(f"spectral state must have shape "
                             f"{(NCOMP,) + self.grid.spectral_shape}")
        if not np.all(np.isfinite(self.data)):
            raise FloatingPointError("spectral state contains non-finite values")
        object.__setattr__(self, "data", _freeze(self.data.astype(complex, copy=False)))

    def replace(self, data) -> "SpectralState":
        return SpectralState(np.asarray(data), self.grid)


@dataclass(frozen=True)
class DisplacementField:
    """Displacement psi = x - X on the grid, shape (3, N, N, N)."""

    psi: np.ndarray
    grid: GridDescriptor

    def __post_init__(self):
        if self.psi.shape != (3,) + self.grid.shape:
            raise ValueError("displacement must have shape (3, N, N, N)")
        if not np.all(np.isfinite(self.psi)):
            raise FloatingPointError("displacement contains non-finite values")
        object.__setattr__(self, "psi", _freeze(self.psi))


def zero_state(grid: GridDescriptor) -> PerturbationState:
    return PerturbationState(np.zeros((NCOMP,) + grid.shape), grid)
