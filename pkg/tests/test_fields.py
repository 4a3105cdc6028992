import math
import warnings

import numpy as np
import pytest

from viscolab import fields
from viscolab.fields import (RadialProfile, TruncationWarning, forward, gauss_panels,
                             grid_lp_norm, hankel, inverse, lp_norm, plancherel_sum,
                             radial_analyze, radial_synthesize, sobolev_seminorm,
                             spherical_jn, write_csv, format_number)
from viscolab.params import GridDescriptor, PerturbationState


def test_spherical_bessel_against_scipy():
    from scipy.special import spherical_jn as ref
    z = np.concatenate([np.geomspace(1e-8, 1e-2, 20), np.linspace(0.1, 80, 200)])
    for n in (0, 1, 2):
        assert np.allclose(spherical_jn(n, z), ref(n, z), rtol=1e-12, atol=1e-15)


def test_gaussian_transform_oracle():
    # exp(-r^2/2) is its own unitary Fourier transform in three dimensions
    rule = gauss_panels(0.0, 12.0, 24)
    prof = RadialProfile(rule, np.exp(-rule.nodes ** 2 / 2))
    k = np.linspace(0, 6, 13)
    out = radial_analyze(prof, k)
    assert np.allclose(out.values, np.exp(-k ** 2 / 2), atol=1e-14)


@pytest.mark.parametrize("tag", ["radial-vector", "radial-tensor"])
def test_radial_roundtrip(tag):
    rule = gauss_panels(0.0, 14.0, 28)
    r = rule.nodes
    a = r * np.exp(-r ** 2 / 2)
    aux = r ** 2 * np.exp(-r ** 2 / 2) if tag == "radial-tensor" else None
    vals = np.exp(-r ** 2 / 2) if tag == "radial-tensor" else a
    prof = RadialProfile(rule, vals, tag, aux=aux)
    back = radial_synthesize(radial_analyze(prof, rule), rule)
    assert np.allclose(back.values, prof.values, atol=1e-12)
    if aux is not None:
        assert np.allclose(back.aux, prof.aux, atol=1e-12)


def test_truncation_warning():
    rule = gauss_panels(0.0, 2.0, 4)
    prof = RadialProfile(rule, np.exp(-rule.nodes ** 2 / 2))
    with pytest.warns(TruncationWarning):
        radial_analyze(prof, [0.0, 1.0])


def test_radial_lp_norms():
    rule = gauss_panels(0.0, 12.0, 24)
    prof = RadialProfile(rule, np.exp(-rule.nodes ** 2 / 2))
    assert lp_norm(prof, 1) == pytest.approx((2 * math.pi) ** 1.5, rel=1e-13)
    assert lp_norm(prof, 2) == pytest.approx(math.pi ** 0.75, rel=1e-13)
    # sup over quadrature nodes; the first node sits slightly off the origin
    assert lp_norm(prof, np.inf) == pytest.approx(np.exp(-rule.nodes[0] ** 2 / 2))


def test_grid_plancherel_and_derivative():
    g = GridDescriptor(32, math.pi)
    X = g.coords()
    f = np.sin(2 * X[0]) * np.cos(X[1])
    spec = forward(f, g)
    assert plancherel_sum(spec, g) == pytest.approx(grid_lp_norm(f, g, 2) ** 2, rel=1e-13)
    assert np.allclose(inverse(spec, g), f, atol=1e-14)
    d = fields.derivative(spec, g, 0)
    assert np.allclose(inverse(d, g), 2 * np.cos(2 * X[0]) * np.cos(X[1]), atol=1e-12)
    with pytest.raises(ValueError):
        sobolev_seminorm(PerturbationState(np.zeros((13,) + g.shape), g), 5)


def test_dealias_and_nyquist_masks():
    g = GridDescriptor(16, 1.0)
    m = fields.dealias_mask(g)
    assert m[0, 0, 0] and not m[8, 0, 0]
    ny = fields.nyquist_mask(g)
    assert not ny[0, 0, -1] and ny[0, 0, 1]


def test_csv_round_trip(tmp_path):
    path = tmp_path / "c.csv"
    vals = np.array([0.1, 1 / 3, 1e-300, 2.0])
    write_csv(path, {"x": vals, "n": np.arange(4)})
    rows = path.read_text().splitlines()
    assert rows[0] == "x,n"
    assert [float(r.split(",")[0]) for r in rows[1:]] == list(vals)
    assert format_number(np.float64(0.1)) == "0.1"
    with pytest.raises(ValueError):
        write_csv(path, {"a": [1, 2], "b": [1]})


def test_constant_field_spectrum():
    g = GridDescriptor(8, 2.0)
    spec = forward(np.full(g.shape, 3.0), g)
    assert abs(spec[0, 0, 0]) == pytest.approx(3.0 * (2 * g.R) ** 3 / (2 * math.pi) ** 1.5,
                                               rel=1e-14)
    assert np.max(np.abs(spec.ravel()[1:])) < 1e-12


def test_gaussian_l1_and_vector_oracle():
    rule = gauss_panels(0.0, 8.0, 16)
    s = rule.nodes
    assert lp_norm(RadialProfile(rule, np.exp(-s ** 2)), 1) == pytest.approx(
        math.pi ** 1.5, rel=1e-12)
    k_rule = gauss_panels(0.0, 16.0, 32)
    k = k_rule.nodes
    g_hat = 2 ** -1.5 * np.exp(-k ** 2 / 4)
    # the frequency-side vector profile of grad f is -k f_hat
    prof = RadialProfile(k_rule, -k * g_hat, "radial-vector", domain="frequency")
    out = radial_synthesize(prof, s)
    assert np.allclose(out.values, -2 * s * np.exp(-s ** 2), atol=1e-12)
    scal = radial_synthesize(RadialProfile(k_rule, g_hat, domain="frequency"), s)
    assert np.allclose(scal.values, np.exp(-s ** 2), atol=1e-13)


def test_random_field_roundtrip(rng):
    g = GridDescriptor(16, 3.0)
    f = rng.standard_normal((2,) + g.shape)
    assert np.max(np.abs(inverse(forward(f, g), g) - f)) < 1e-13
