import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from viscolab.symbol import (ExpFunction, PhiFunction, apply_multiplier, apply_semigroup,
                             constraint_defect, divided_diff, phi_function,
                             random_constraint_vector, semigroup_symbol, symbol_matrix_L,
                             symbol_oracle)


def _xi(k, rng):
    d = rng.standard_normal(3)
    return k * d / np.linalg.norm(d)


def test_divided_difference_frozen_values():
    # exact: (e^{-1} - e^{-2}) / 1 and t e^{a t} at coalescence
    assert divided_diff(-1.0, -2.0, 1.0) == pytest.approx(math.exp(-1) - math.exp(-2),
                                                          rel=1e-15)
    assert divided_diff(-0.5, -0.5, 2.0) == pytest.approx(2 * math.exp(-1.0), rel=1e-15)


@settings(max_examples=200, deadline=None)
@given(a=st.floats(-50, 0), d=st.floats(-1e-3, 1e-3), t=st.floats(0, 10))
def test_divided_difference_continuous_across_coalescence(a, d, t):
    b = a + d
    got = complex(divided_diff(a, b, t))
    # midpoint expansion of (e^{at} - e^{bt})/(a - b)
    m, h = (a + b) / 2, (a - b) / 2
    x = h * t
    ref = t * math.exp(m * t) * (1 + x * x / 6 + x ** 4 / 120)
    assert abs(got - ref) <= 1e-12 * max(abs(ref), 1e-300) + 1e-300


def test_phi_functions_small_argument():
    z = np.array([1e-9, -1e-3, -1.0, -30.0])
    assert np.allclose(phi_function(1, z), np.expm1(z) / z, rtol=1e-14)
    p2 = (np.expm1(z[2:]) - z[2:]) / z[2:] ** 2
    assert np.allclose(phi_function(2, z)[2:], p2, rtol=1e-13)
    assert phi_function(2, np.array([0.0]))[0] == pytest.approx(0.5)


def test_identity_at_time_zero(params, rng):
    xi = _xi(2.0, rng)
    S = semigroup_symbol(params, xi, 0.0).matrix
    v = random_constraint_vector(xi, rng)
    assert np.allclose(S @ v, v, atol=1e-15)


@pytest.mark.parametrize("k", [1e-3, 0.3, 1.0, np.sqrt(2), 2.0, 7.0, 50.0])
def test_matches_oracle(params, rng, k):
    xi = _xi(k, rng)
    v = random_constraint_vector(xi, rng)
    for t in (0.1, 1.0, 5.0):
        ref = symbol_oracle(params, xi, t) @ v
        got = apply_semigroup(params, xi[:, None], v[:, None], t)[:, 0]
        assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)


def test_semigroup_property(params, rng):
    xi = _xi(1.3, rng)
    v = random_constraint_vector(xi, rng)
    a = apply_semigroup(params, xi[:, None], v[:, None], 0.7)
    ab = apply_semigroup(params, xi[:, None], a, 1.1)
    direct = apply_semigroup(params, xi[:, None], v[:, None], 1.8)
    assert np.allclose(ab, direct, rtol=1e-12, atol=1e-15)


def test_preserves_constraints(params, rng):
    for k in (0.5, 2.0, 9.0):
        xi = _xi(k, rng)
        v = random_constraint_vector(xi, rng)
        out = apply_semigroup(params, xi[:, None], v[:, None], 2.0)[:, 0]
        tr, curl = constraint_defect(xi, out)
        assert tr <= 1e-13 * np.linalg.norm(v)
        assert curl <= 1e-13 * np.linalg.norm(v) * k


def _phi_oracle(M, k):
    n = M.shape[0]
    big = np.zeros(((k + 1) * n, (k + 1) * n), dtype=complex)
    big[:n, :n] = M
    for j in range(k):
        big[j * n:(j + 1) * n, (j + 1) * n:(j + 2) * n] = np.eye(n)
    return scipy.linalg.expm(big)[:n, k * n:(k + 1) * n]


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("k", [0.05, 1.0, 2.0, 10.0])
def test_phi_multipliers_match_block_oracle(params, rng, order, k):
    h = 0.2
    xi = _xi(k, rng)
    v = random_constraint_vector(xi, rng)
    M = -h * symbol_matrix_L(params, xi)
    ref = _phi_oracle(M, order) @ v
    got = apply_multiplier(params, xi[:, None], v[:, None], PhiFunction(order, h))[:, 0]
    assert np.linalg.norm(got - ref) <= 1e-10 * np.linalg.norm(ref)


def test_multiplier_rejects_bad_arguments():
    with pytest.raises(ValueError):
        ExpFunction(-1.0)
    with pytest.raises(ValueError):
        PhiFunction(0, 0.1)


def test_block_accessor(params, rng):
    xi = _xi(1.0, rng)
    S = semigroup_symbol(params, xi, 1.0)
    assert S.matrix.shape == (13, 13)
    assert S.block(1, 1).shape == (1, 1)
    assert S.block(2, 3).shape == (3, 9)
    v = random_constraint_vector(xi, rng)
    assert np.allclose(S @ v, symbol_oracle(params, xi, 1.0) @ v, atol=1e-12)
