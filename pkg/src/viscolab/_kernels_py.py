"""Pure numpy implementations of the hot per-point kernels.

These define the reference behaviour; the Cython module ``_kernels`` must
agree with them to rounding.
"""

import numpy as np


def apply_blocks(coef, xi, data, gamma2, beta2):
    """Apply the block-structured multiplier at every wavevector.

    ``coef`` holds (A_lam, V_lam, D_lam, A_mu, V_mu, D_mu) with shape (6, n),
    ``xi`` the wavevectors (3, n) and ``data`` the 13 components (13, n).
    """
    a_l, v_l, d_l, a_m, v_m, d_m = coef
    phi = data[0]
    w = data[1:4]
    G = data[4:13].reshape(3, 3, -1)

    k2 = np.einsum("in,in->n", xi, xi)
    origin = k2 == 0
    k = np.sqrt(np.where(origin, 1.0, k2))
    n = xi / k

    xw = np.einsum("in,in->n", xi, w)
    wl = np.einsum("in,in->n", n, w)
    qw = n * wl
    pw = w - qw
    g = np.einsum("ijn,jn->in", G, xi)
    gl = np.einsum("in,in->n", n, g)
    qg = n * gl
    pg = g - qg
    nG = np.einsum("in,ijn->jn", n, G)
    QG = n[:, None, :] * nG[None, :, :]
    PG = G - QG

    out = np.empty_like(data, dtype=complex)
    out[0] = a_m * phi - 1j * d_m * xw
    out[1:4] = (-1j * gamma2 * d_m * phi * xi + v_l * pw + v_m * qw
                + 1j * beta2 * (d_l * pg + d_m * qg))
    Gout = (1j * (d_l * pw + d_m * qw)[:, None, :] * xi[None, :, :]
            + a_l * PG + a_m * QG)
    out[4:13] = Gout.reshape(9, -1)
    if np.any(origin):
        out[0, origin] = a_m[origin] * phi[origin]
        out[1:4, origin] = v_l[origin] * w[:, origin]
        out[4:13, origin] = a_l[origin] * data[4:13, origin]
    return out


def inv_det3(A):
    """Pointwise adjugate inverse and determinant of (3, 3, n) real matrices."""
    a = A
    c00 = a[1, 1] * a[2, 2] - a[1, 2] * a[2, 1]
    c01 = a[1, 2] * a[2, 0] - a[1, 0] * a[2, 2]
    c02 = a[1, 0] * a[2, 1] - a[1, 1] * a[2, 0]
    det = a[0, 0] * c00 + a[0, 1] * c01 + a[0, 2] * c02
    inv = np.empty_like(a, dtype=float)
    inv[0, 0] = c00
    inv[1, 0] = c01
    inv[2, 0] = c02
    inv[0, 1] = a[0, 2] * a[2, 1] - a[0, 1] * a[2, 2]
    inv[1, 1] = a[0, 0] * a[2, 2] - a[0, 2] * a[2, 0]
    inv[2, 1] = a[0, 1] * a[2, 0] - a[0, 0] * a[2, 1]
    inv[0, 2] = a[0, 1] * a[1, 2] - a[0, 2] * a[1, 1]
    inv[1, 2] = a[0, 2] * a[1, 0] - a[0, 0] * a[1, 2]
    inv[2, 2] = a[0, 0] * a[1, 1] - a[0, 1] * a[1, 0]
    with np.errstate(divide="ignore", invalid="ignore"):
        inv /= det
    return inv, det
