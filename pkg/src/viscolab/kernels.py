"""Backend selection for the per-point kernels.

The compiled extension is used when it imports; set ``VISCOLAB_PURE_PYTHON=1``
to force the numpy fallback.
"""

import os

import numpy as np

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("VISCOLAB_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        pass
    else:
        _impl = _compiled
        BACKEND = "cython"


def _select(impl):
    if impl is None:
        return _impl
    if isinstance(impl, str):
        return implementations()[impl]
    return impl


def apply_blocks(coef, xi, data, gamma2, beta2, impl=None):
    """Block multiplier on flattened points; see ``_kernels_py.apply_blocks``.

    ``impl`` is a backend name or module; the active backend by default.
    """
    impl = _select(impl)
    coef = np.ascontiguousarray(coef, dtype=complex)
    xi = np.ascontiguousarray(xi, dtype=float)
    data = np.ascontiguousarray(data, dtype=complex)
    return impl.apply_blocks(coef, xi, data, float(gamma2), float(beta2))


def inv_det3(A, impl=None):
    """Pointwise inverse and determinant of a (3, 3, ...) field."""
    impl = _select(impl)
    A = np.asarray(A, dtype=float)
    shape = A.shape[2:]
    flat = np.ascontiguousarray(A.reshape(3, 3, -1))
    inv, det = impl.inv_det3(flat)
    return np.asarray(inv).reshape((3, 3) + shape), np.asarray(det).reshape(shape)


def implementations():
    """All importable backends, keyed by name."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels as _compiled
        out["cython"] = _compiled
    except ImportError:
        pass
    return out
