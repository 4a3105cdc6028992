# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-point kernels; see ``_kernels_py`` for the reference versions."""

import numpy as np
from libc.math cimport sqrt


def apply_blocks(const double complex[:, ::1] coef, const double[:, ::1] xi,
                 const double complex[:, ::1] data, double gamma2, double beta2):
    cdef Py_ssize_t npts = data.shape[1]
    out_arr = np.empty((13, npts), dtype=complex)
    cdef double complex[:, ::1] out = out_arr
    cdef Py_ssize_t p, i, j, m
    cdef double k2, k
    cdef double n[3]
    cdef double x[3]
    cdef double complex phi, xw, wl, gl, t
    cdef double complex w[3]
    cdef double complex pw[3]
    cdef double complex qw[3]
    cdef double complex g[3]
    cdef double complex pg[3]
    cdef double complex qg[3]
    cdef double complex nG[3]
    cdef double complex G[3][3]
    cdef double complex al, vl, dl, am, vm, dm
    cdef double complex I = 1j

    for p in range(npts):
        al = coef[0, p]; vl = coef[1, p]; dl = coef[2, p]
        am = coef[3, p]; vm = coef[4, p]; dm = coef[5, p]
        phi = data[0, p]
        for i in range(3):
            x[i] = xi[i, p]
            w[i] = data[1 + i, p]
            for j in range(3):
                G[i][j] = data[4 + 3 * i + j, p]
        k2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2]
        if k2 == 0.0:
            out[0, p] = am * phi
            for i in range(3):
                out[1 + i, p] = vl * w[i]
            for i in range(9):
                out[4 + i, p] = al * data[4 + i, p]
            continue
        k = sqrt(k2)
        xw = 0; wl = 0
        for i in range(3):
            n[i] = x[i] / k
            xw = xw + x[i] * w[i]
            wl = wl + n[i] * w[i]
        gl = 0
        for i in range(3):
            qw[i] = n[i] * wl
            pw[i] = w[i] - qw[i]
            t = 0
            for j in range(3):
                t = t + G[i][j] * x[j]
            g[i] = t
            gl = gl + n[i] * t
        for j in range(3):
            t = 0
            for m in range(3):
                t = t + n[m] * G[m][j]
            nG[j] = t
        out[0, p] = am * phi - I * dm * xw
        for i in range(3):
            qg[i] = n[i] * gl
            pg[i] = g[i] - qg[i]
            out[1 + i, p] = (-I * gamma2 * dm * phi * x[i] + vl * pw[i] + vm * qw[i]
                             + I * beta2 * (dl * pg[i] + dm * qg[i]))
        for i in range(3):
            t = I * (dl * pw[i] + dm * qw[i])
            for j in range(3):
                out[4 + 3 * i + j, p] = (t * x[j] + al * (G[i][j] - n[i] * nG[j])
                                         + am * n[i] * nG[j])
    return out_arr


def inv_det3(const double[:, :, ::1] A):
    cdef Py_ssize_t npts = A.shape[2]
    inv_arr = np.empty((3, 3, npts))
    det_arr = np.empty(npts)
    cdef double[:, :, ::1] inv = inv_arr
    cdef double[::1] det = det_arr
    cdef Py_ssize_t p
    cdef double a00, a01, a02, a10, a11, a12, a20, a21, a22, c00, c01, c02, d
    for p in range(npts):
        a00 = A[0, 0, p]; a01 = A[0, 1, p]; a02 = A[0, 2, p]
        a10 = A[1, 0, p]; a11 = A[1, 1, p]; a12 = A[1, 2, p]
        a20 = A[2, 0, p]; a21 = A[2, 1, p]; a22 = A[2, 2, p]
        c00 = a11 * a22 - a12 * a21
        c01 = a12 * a20 - a10 * a22
        c02 = a10 * a21 - a11 * a20
        d = a00 * c00 + a01 * c01 + a02 * c02
        det[p] = d
        inv[0, 0, p] = c00 / d
        inv[1, 0, p] = c01 / d
        inv[2, 0, p] = c02 / d
        inv[0, 1, p] = (a02 * a21 - a01 * a22) / d
        inv[1, 1, p] = (a00 * a22 - a02 * a20) / d
        inv[2, 1, p] = (a01 * a20 - a00 * a21) / d
        inv[0, 2, p] = (a01 * a12 - a02 * a11) / d
        inv[1, 2, p] = (a02 * a10 - a00 * a12) / d
        inv[2, 2, p] = (a00 * a11 - a01 * a10) / d
    return inv_arr, det_arr
