"""Linearized and weakly nonlinear dynamics of a compressible viscoelastic fluid.

Closed-form Fourier semigroup, band projections, radial and periodic
evolution backends, decay-rate fitting and an experiment CLI.
"""

__version__ = "0.1.0"

from .params import (FluidParams, GridDescriptor, ParameterError, PerturbationState,
                     SpectralState, make_params)
from .kernels import BACKEND

__all__ = ["__version__", "FluidParams", "GridDescriptor", "ParameterError",
           "PerturbationState", "SpectralState", "make_params", "BACKEND"]
