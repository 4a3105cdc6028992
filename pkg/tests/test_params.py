import numpy as np
import pytest

from viscolab.params import (NCOMP, GridDescriptor, ParameterError, PerturbationState,
                             SpectralState, make_params, zero_state)


@pytest.mark.parametrize("kw, msg", [
    (dict(nu=0.0), "nu must be positive"),
    (dict(beta=-1.0), "beta must be positive"),
    (dict(gamma=0.0), "gamma must be positive"),
    (dict(nu_prime=-1.0), r"2nu\+3nu'"),
    (dict(nu=float("nan")), "finite"),
])
def test_inadmissible_parameters(kw, msg):
    base = dict(nu=1.0, nu_prime=0.0, beta=1.0, gamma=1.0)
    base.update(kw)
    with pytest.raises(ParameterError, match=msg):
        make_params(**base)


def test_derived_parameters():
    p = make_params(1.0, 0.5, 3.0, 4.0)
    assert p.nu_tilde == 1.5
    assert p.longitudinal_viscosity == 2.5
    assert p.wave_speed == 5.0
    assert p.as_dict()["nu_prime"] == 0.5


@pytest.mark.parametrize("N", [7, 12, 4])
def test_grid_rejects_bad_sizes(N):
    with pytest.raises(ParameterError):
        GridDescriptor(N, 1.0)


def test_grid_geometry():
    g = GridDescriptor(16, 4.0)
    assert g.dx == 0.5
    assert g.axis()[0] == -4.0 and g.axis()[-1] == 3.5
    xi = g.wavevectors()
    assert xi.shape == (3, 16, 16, 9)
    assert np.all(xi[2, :, :, -1] == 0)
    true = g.wavenumber_magnitude()
    assert true[0, 0, -1] == pytest.approx(8 * g.dk)
    w = g.half_weights()
    assert w.sum() == 16 ** 3


def test_state_containers_validate_and_freeze():
    g = GridDescriptor(8, 1.0)
    s = zero_state(g)
    assert s.G.shape == (3, 3, 8, 8, 8)
    with pytest.raises(ValueError):
        s.data[0, 0, 0, 0] = 1.0
    with pytest.raises(ValueError):
        PerturbationState(np.zeros((NCOMP, 4, 4, 4)), g)
    bad = np.zeros((NCOMP,) + g.spectral_shape)
    bad[0, 0, 0, 0] = np.nan
    with pytest.raises(FloatingPointError):
        SpectralState(bad, g)
