# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Bartlett kernel; see _bartlett_py for the reference fallback."""

import numpy as np

from cython.parallel cimport parallel, prange
from libc.math cimport floor
from libc.stdlib cimport free, malloc

cdef double TWO_PI = 6.283185307179586


cdef inline void _expi_cycles(double x, double* re, double* im) noexcept nogil:
    # exp(-2 pi i x): reduce to the nearest quarter cycle, then Taylor
    # polynomials on |a| <= pi/4 (truncation error below 1e-16)
    cdef double q = floor(4.0 * x + 0.5)
    cdef double a = TWO_PI * (x - 0.25 * q)
    cdef double a2 = a * a
    cdef double s = a * (1.0 + a2 * (-1.6666666666666666e-01 + a2 * (8.3333333333333332e-03
        + a2 * (-1.9841269841269841e-04 + a2 * (2.7557319223985893e-06
        + a2 * (-2.5052108385441720e-08 + a2 * (1.6059043836821613e-10
        + a2 * -7.6471637318198164e-13)))))))
    cdef double c = 1.0 + a2 * (-0.5 + a2 * (4.1666666666666664e-02
        + a2 * (-1.3888888888888889e-03 + a2 * (2.4801587301587302e-05
        + a2 * (-2.7557319223985888e-07 + a2 * (2.0876756987868100e-09
        + a2 * (-1.1470745597729725e-11 + a2 * 4.7794773323873853e-14)))))))
    # branch-free quadrant mapping so the caller's loop vectorises:
    # k=0 -> (c, -s), 1 -> (-s, -c), 2 -> (-c, s), 3 -> (s, c)
    cdef int k = (<int>q) & 3
    cdef double swap = <double>(k & 1)
    cdef double sign_re = 1.0 - 2.0 * <double>(((k + 1) >> 1) & 1)
    cdef double sign_im = 2.0 * <double>(k >> 1) - 1.0
    re[0] = sign_re * (c + swap * (s - c))
    im[0] = sign_im * (s + swap * (c - s))


def bartlett_power(h2, disp, directions, int order=2):
    """|sum_t h2[t] exp(-2 pi i order u.disp[t])|^2 for every direction u.

    ``disp`` holds (T, 3) offsets in wavelengths, ``directions`` (C, 3) unit
    vectors. Each cell is summed in time order with Kahan compensation, so
    the result does not depend on how cells are split across threads.
    """
    cdef double[::1] hr = np.ascontiguousarray(np.real(h2), dtype=np.float64)
    cdef double[::1] hi = np.ascontiguousarray(np.imag(h2), dtype=np.float64)
    cdef double[:, ::1] dv = np.ascontiguousarray(disp, dtype=np.float64)
    cdef double[:, ::1] uv = np.ascontiguousarray(directions, dtype=np.float64)
    cdef Py_ssize_t n_t = hr.shape[0]
    cdef Py_ssize_t n_c = uv.shape[0]
    if dv.shape[0] != n_t or dv.shape[1] != 3 or uv.shape[1] != 3:
        raise ValueError("shape mismatch between h2, disp and directions")
    out_arr = np.empty(n_c, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] dx = np.ascontiguousarray(dv[:, 0])
    cdef double[::1] dy = np.ascontiguousarray(dv[:, 1])
    cdef double[::1] dz = np.ascontiguousarray(dv[:, 2])
    cdef Py_ssize_t c, t
    cdef double ux, uy, uz, er, ei, re, im, yr, yi, tr, ti, cr, ci
    cdef double m = order
    cdef double* ei_buf
    cdef double* er_buf
    if n_t == 0:
        out_arr[:] = 0.0
        return out_arr
    with nogil, parallel():
        ei_buf = <double*> malloc(2 * n_t * sizeof(double))
        er_buf = ei_buf + n_t
        for c in prange(n_c, schedule="static"):
            ux = m * uv[c, 0]
            uy = m * uv[c, 1]
            uz = m * uv[c, 2]
            # phase and sincos pass has no loop-carried dependency and vectorises
            for t in range(n_t):
                _expi_cycles(ux * dx[t] + uy * dy[t] + uz * dz[t], &er_buf[t], &ei_buf[t])
            re = 0.0
            im = 0.0
            cr = 0.0
            ci = 0.0
            for t in range(n_t):
                er = er_buf[t]
                ei = ei_buf[t]
                yr = (hr[t] * er - hi[t] * ei) - cr
                tr = re + yr
                cr = (tr - re) - yr
                re = tr
                yi = (hr[t] * ei + hi[t] * er) - ci
                ti = im + yi
                ci = (ti - im) - yi
                im = ti
            out[c] = re * re + im * im
        free(ei_buf)
    return out_arr
