import numpy as np
import pytest

from viscolab import kernels
from viscolab.params import make_params
from viscolab.symbol import ExpFunction, PhiFunction, branch_coefficients

IMPLS = sorted(kernels.implementations())


def _problem(n, seed=0):
    rng = np.random.default_rng(seed)
    xi = rng.standard_normal((3, n)) * 3
    xi[:, 0] = 0.0
    data = rng.standard_normal((13, n)) + 1j * rng.standard_normal((13, n))
    return xi, data


@pytest.mark.parametrize("fn", [ExpFunction(0.7), PhiFunction(1, 0.2), PhiFunction(2, 0.2)])
def test_backends_agree(fn):
    p = make_params(1.0, 0.2, 1.5, 0.8)
    xi, data = _problem(500)
    coef = branch_coefficients(p, np.linalg.norm(xi, axis=0), fn)
    outs = [kernels.apply_blocks(coef, xi, data, p.gamma ** 2, p.beta ** 2, impl=i)
            for i in IMPLS]
    for o in outs[1:]:
        assert np.allclose(o, outs[0], rtol=1e-13, atol=1e-15)


def test_identity_at_origin_and_time_zero():
    p = make_params(1.0, 0.0, 1.0, 1.0)
    xi, data = _problem(50)
    coef = branch_coefficients(p, np.linalg.norm(xi, axis=0), ExpFunction(3.0))
    out = kernels.apply_blocks(coef, xi, data, 1.0, 1.0)
    assert np.allclose(out[:, 0], data[:, 0])


def test_inverse_determinant():
    rng = np.random.default_rng(3)
    A = np.eye(3)[:, :, None, None] + 0.2 * rng.standard_normal((3, 3, 4, 5))
    for impl in IMPLS:
        inv, det = kernels.inv_det3(A, impl=impl)
        M = np.moveaxis(A, (0, 1), (-2, -1))
        assert np.allclose(det, np.linalg.det(M), rtol=1e-14)
        assert np.allclose(np.moveaxis(inv, (0, 1), (-2, -1)), np.linalg.inv(M), rtol=1e-12)


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")
    assert "python" in kernels.implementations()


def test_fallback_selected_by_environment():
    import subprocess
    import sys
    out = subprocess.run(
        [sys.executable, "-c", "from viscolab import kernels; print(kernels.BACKEND)"],
        env={"VISCOLAB_PURE_PYTHON": "1", "PATH": ""}, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
