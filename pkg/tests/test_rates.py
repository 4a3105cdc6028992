import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from viscolab.rates import (FitError, duhamel_bound_check, duhamel_integral,
                            fit_exponential, fit_power_law, onset_time)


@settings(max_examples=50, deadline=None)
@given(exponent=st.floats(-3, 3), c=st.floats(0.1, 10))
def test_power_law_recovered(exponent, c):
    t = np.geomspace(100, 1000, 12)
    fit = fit_power_law(t, c * (1 + t) ** exponent)
    assert fit.exponent == pytest.approx(exponent, abs=1e-10)
    assert fit.prefactor == pytest.approx(c, rel=1e-8)
    assert fit.r_squared == pytest.approx(1.0) or exponent == pytest.approx(0.0, abs=1e-12)


def test_exponential_and_onset():
    t = np.linspace(0, 20, 41)
    fit = fit_exponential(t, 3 * np.exp(-0.4 * t))
    assert fit.exponent == pytest.approx(-0.4, rel=1e-12)
    assert fit.r_squared == pytest.approx(1.0)
    tp = np.geomspace(1, 1000, 40)
    v = (1 + tp) ** 0.5 * (1 + 5 / tp)
    pfit = fit_power_law(tp, v, window=(1, 1000))
    onset = onset_time(pfit, 0.5, 0.05)
    assert onset is not None and onset > 1


def test_fit_errors():
    t = np.geomspace(1, 10, 5)
    with pytest.raises(FitError, match="at least"):
        fit_power_law(t, t)
    t = np.geomspace(100, 1000, 10)
    with pytest.raises(FitError, match="positive"):
        fit_power_law(t, -t)
    with pytest.raises(FitError, match="outside"):
        fit_power_law(t, t, window=(10, 1000))


def test_duhamel_integral_against_scipy():
    from scipy.integrate import quad
    for t in (0.5, 10.0, 300.0):
        ref = quad(lambda s: math.sqrt(1 + t - s) / (1 + s) ** 2, 0, t, limit=200,
                   epsabs=0, epsrel=1e-13)[0]
        assert duhamel_integral(t) == pytest.approx(ref, rel=1e-12)
    assert duhamel_integral(0.0) == 0.0


def test_duhamel_ratio_tends_to_one():
    rep = duhamel_bound_check(1e4)
    assert rep.ratios[0] == 0.0
    assert 0.995 < rep.ratio_at_tmax < 1.0
    with pytest.raises(ValueError):
        duhamel_bound_check(1.0)
