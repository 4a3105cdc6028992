import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from viscolab.kinematics import (G_to_gradpsi, RegimeError, build_initial_data,
                                 det_expansion, frobenius, gradpsi_to_G, h_remainder,
                                 lowfreq_condition_check, phi_from_gradpsi)
from viscolab.params import DisplacementField, GridDescriptor

small = arrays(float, (3, 3), elements=st.floats(-0.15, 0.15))


@settings(max_examples=200, deadline=None)
@given(A=small)
def test_det_expansion_matches_numpy(A):
    ref = np.linalg.det(np.eye(3) + A)
    assert abs(det_expansion(A[..., None])[0] - ref) <= 1e-15


@settings(max_examples=200, deadline=None)
@given(A=small)
def test_roundtrip_and_phi(A):
    B = A[..., None]
    if frobenius(B)[0] > 0.3:
        B = B * 0.3 / frobenius(B)[0]
    G = gradpsi_to_G(B)
    assert np.allclose(np.linalg.inv(np.eye(3) - B[..., 0]) - np.eye(3), G[..., 0],
                       atol=1e-15)
    assert np.max(np.abs(G_to_gradpsi(G) - B)) <= 1e-15
    phi = phi_from_gradpsi(B)[0]
    assert abs(phi - (np.linalg.det(np.eye(3) - B[..., 0]) - 1)) <= 1e-15
    h = h_remainder(B)[..., 0]
    f = frobenius(B)[0]
    assert np.max(np.abs(h - B[..., 0] @ B[..., 0])) <= 1.5 * f ** 3 + 8e-16 * f


def test_regime_guard():
    A = np.zeros((3, 3, 2))
    A[0, 0, 1] = 0.9
    with pytest.raises(RegimeError):
        gradpsi_to_G(A)


def test_initial_data_residuals_at_roundoff():
    g = GridDescriptor(64, 10.0)
    X = g.coords()
    r2 = sum(x * x for x in X)
    psi = np.stack([-2 * x / 4 * 0.01 * np.exp(-r2 / 4) for x in X])
    data = build_initial_data(DisplacementField(psi, g), np.zeros((3,) + g.shape))
    assert data.residuals.max_linf() < 1e-13
    assert np.allclose(data.rho * np.linalg.det(np.moveaxis(data.F, (0, 1), (-2, -1))), 1)
    with pytest.raises(RegimeError):
        build_initial_data(DisplacementField(100 * psi, g), np.zeros((3,) + g.shape))


def test_lowfreq_check_clauses():
    k = np.linspace(1e-3, 0.1, 20)
    m = np.zeros((3, k.size))
    G = np.zeros((3, 3, k.size))
    good = lowfreq_condition_check(k, np.full(k.size, 1.0), m, G, 0.1, 0.5, 1.0, 1.0)
    assert good.passed and good.density_margin > 0
    bad = lowfreq_condition_check(k, k ** 2, m, G, 0.1, 0.5, 1.0, 1.0)
    assert not bad.passed
    skew = G.copy()
    skew[0, 1] = 1.0
    assert not lowfreq_condition_check(k, np.ones(k.size), m, skew, 0.1, 0.5, 1.0, 1.0).passed
