import numpy as np
import pytest

from viscolab.evolution import (ConstraintViolation, NonPotentialData, NonlinearRecipe,
                                RadialRecipe, StepRejected, Trajectory, check_constraints,
                                constraint_state, constraint_state_from_fields,
                                evolve_linear_grid, evolve_nonlinear, radial_domain,
                                radial_norms, radial_snapshot)
from viscolab.fields import grid_lp_norm, inverse
from viscolab.kinematics import RegimeError
from viscolab.params import GridDescriptor


def test_trajectory_bookkeeping():
    tr = Trajectory()
    tr.add(0.0, a=1.0)
    tr.add(1.0, a=2.0, b=3.0)
    assert np.isnan(tr.column("b")[0]) and tr.column("a").tolist() == [1.0, 2.0]
    with pytest.raises(ValueError):
        tr.add(1.0, a=1.0)
    with pytest.raises(FloatingPointError):
        tr.add(2.0, a=float("inf"))
    assert list(tr.columns())[0] == "t"


def test_recipe_validation():
    with pytest.raises(ValueError):
        RadialRecipe("unknown")
    with pytest.raises(NonPotentialData):
        RadialRecipe("gaussian-shear").amplitudes(np.array([1.0]))


def test_radial_domain_grows_with_wave_speed(params):
    assert radial_domain(params, 0.0, 5.0) == 5.0
    assert radial_domain(params, 100.0, 5.0) > params.wave_speed * 100.0


def test_grid_and_radial_backends_agree(params):
    g = GridDescriptor(64, 20.0)
    rec = RadialRecipe("gaussian-potential", 0.05, 2.0, 0.03)
    xi = g.wavevectors()
    chi, th = rec.amplitudes(g.wavenumber_magnitude())
    s0 = constraint_state(g, 1j * xi * chi, 1j * xi * th)
    for t in (0.0, 1.0):
        u = inverse(evolve_linear_grid(params, s0, t).data, g)
        n = radial_norms(radial_snapshot(params, rec, t), reconstruct=False)
        assert grid_lp_norm(u, g, 2) == pytest.approx(n["U_L2"], rel=1e-10)
        assert grid_lp_norm(u, g, 1) == pytest.approx(n["U_L1"], rel=1e-5)
        assert grid_lp_norm(u, g, np.inf) == pytest.approx(n["U_Linf"], rel=1e-5)


def test_grid_evolution_stays_on_constraints(params, rng):
    g = GridDescriptor(16, 4.0)
    X = g.coords()
    r2 = sum(x * x for x in X)
    psi = np.stack([0.01 * X[1] * np.exp(-r2), 0.01 * np.exp(-r2), 0 * r2])
    s0 = constraint_state_from_fields(g, psi, psi)
    s1 = evolve_linear_grid(params, s0, 3.0)
    assert check_constraints(s1) < 1e-12
    bad = s0.data.copy()
    bad[0] += 1.0
    with pytest.raises(ConstraintViolation, match="wavevector"):
        check_constraints(s0.replace(bad))


def test_grid_semigroup_decreases_energy(params):
    g = GridDescriptor(16, 4.0)
    X = g.coords()
    r2 = sum(x * x for x in X)
    psi = np.stack([0.01 * np.exp(-r2 / 2)] * 3)
    s0 = constraint_state_from_fields(g, psi, 0 * psi)
    e = [grid_lp_norm(inverse(evolve_linear_grid(params, s0, t).data, g), g, 2)
         for t in (0.0, 1.0, 2.0)]
    assert e[0] > e[1] > e[2]


def test_nonlinear_short_run(params):
    g = GridDescriptor(16, 6.0)
    psi, v = NonlinearRecipe(epsilon=1e-3, width=1.5).fields(g)
    tr = evolve_nonlinear(params, psi, v, 0.4, 0.2, g, sample_times=[0, 0.2, 0.4],
                          linear_reference=True)
    assert tr.t.tolist() == [0.0, 0.2, 0.4]
    assert np.all(tr.column("linear_deviation") <= 1e-2)
    assert np.all(tr.column("res_det") < 1e-12)
    with pytest.raises(ValueError):
        evolve_nonlinear(params, psi, v, 0.3, 0.2, g)
    with pytest.raises(RegimeError):
        evolve_nonlinear(params, 500 * psi, v, 0.2, 0.2, g)


def test_cfl_guard(params):
    g = GridDescriptor(16, 6.0)
    psi, v = NonlinearRecipe(epsilon=1e-3).fields(g)
    with pytest.raises(StepRejected, match="CFL"):
        evolve_nonlinear(params, psi, 2e3 * v, 2.0, 2.0, g)
