import numpy as np
import pytest

from viscolab.fields import forward
from viscolab.kinematics import RegimeError
from viscolab.nonlinear import (N_terms, SpectralNonlinear, SpectralOps, displacement_rhs,
                                g_terms, pressure_remainder, regime_norm)
from viscolab.params import GridDescriptor, make_params


def _fields(grid, eps, rng):
    X = grid.coords()
    r2 = sum(x * x for x in X)
    g = np.exp(-r2 / 2)
    psi = eps * np.stack([X[1] * g, -X[0] * g + 0.5 * X[2] * g, X[0] * X[1] * g])
    w = eps * np.stack([g, X[2] * g, -X[1] * g]) * rng.uniform(0.5, 1.5)
    return psi, w


def test_pressure_remainder(params):
    p = make_params(1, 0, 1, 1, pressure_quadratic=0.3)
    phi = np.linspace(-0.1, 0.1, 5)
    assert np.allclose(pressure_remainder(phi, p), 0.3 * phi ** 2)
    assert np.all(pressure_remainder(phi, params) == 0)


def test_fast_evaluator_matches_reference(params, rng):
    g = GridDescriptor(32, 6.0)
    ops = SpectralOps(g)
    psi, w = _fields(g, 1e-2, rng)
    A = ops.grad(psi)
    phi_t = -np.einsum("ii...->...", A)
    U = np.concatenate([phi_t[None], w, A.reshape((9,) + g.shape)])
    Uh = forward(U, g) * ops.mask
    Nh, Um = SpectralNonlinear(params, g)(Uh)
    ref = N_terms(Um[0], Um[1:4], Um[4:13].reshape((3, 3) + g.shape), params, ops)
    fast = ops.inv(Nh)
    scale = np.max(np.abs(ref.stacked()))
    assert np.max(np.abs(fast[0] - ref.N1)) <= 1e-10 * scale
    assert np.max(np.abs(fast[4:13] - ref.N3.reshape((9,) + g.shape))) <= 1e-10 * scale
    # momentum terms differ only by aliasing of non-polynomial products
    assert np.max(np.abs(fast[1:4] - ref.N2)) <= 1e-2 * scale


def test_quadratic_scaling(params, rng):
    g = GridDescriptor(16, 6.0)
    ops = SpectralOps(g)
    sizes = []
    for eps in (1e-3, 2e-3):
        psi, w = _fields(g, eps, np.random.default_rng(0))
        A = ops.grad(psi)
        nt = N_terms(-np.einsum("ii...->...", A), w, A, params, ops)
        sizes.append(np.max(np.abs(nt.stacked())))
    assert sizes[1] / sizes[0] == pytest.approx(4.0, rel=2e-2)


def test_guards(params, rng):
    g = GridDescriptor(16, 6.0)
    ops = SpectralOps(g)
    psi, w = _fields(g, 1.0, rng)
    A = 50 * ops.grad(psi)
    assert regime_norm(A) > 0.5
    with pytest.raises(RegimeError):
        N_terms(-np.einsum("ii...->...", A), w, A, params, ops)
    phi = np.full(g.shape, -0.6)
    with pytest.raises(RegimeError):
        g_terms(phi, w, np.zeros((3, 3) + g.shape), params, ops)


def test_displacement_rhs_transport(rng):
    g = GridDescriptor(16, 4.0)
    ops = SpectralOps(g)
    v = np.zeros((3,) + g.shape)
    v[0] = 0.1
    X = g.coords()
    psi = np.stack([np.sin(np.pi * X[0] / 4), np.zeros(g.shape), np.zeros(g.shape)])
    rhs = displacement_rhs(psi, v, ops)
    expect = 0.1 - 0.1 * (np.pi / 4) * np.cos(np.pi * X[0] / 4)
    assert np.allclose(rhs[0], expect, atol=1e-12)
