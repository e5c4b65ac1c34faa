# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled memory-kernel stepper; same contract as ``_volterra_py.volterra_midpoint``.

Both midpoint stages of a step need a history sum over the same stored
values: stage one pairs y_{m-k} with K_k, stage two pairs it with K_{k+1}
(plus a K_0 y_{m+1} term added once y_{m+1} is known).  A single pass over
the kernel table accumulates both, so each block is streamed from memory
once per step instead of twice.

Layout: real and imaginary parts live in separate planes and every kernel
block is stored transposed (``[k, j, i]``), so the innermost loop is a
vertical multiply-add over output rows ``i``.
"""
import numpy as np
from libc.stdlib cimport calloc, free


cdef inline void _matvec_acc(const double* Kr, const double* Ki,
                             const double* yr, const double* yi,
                             double* ar, double* ai, int r, double w) noexcept nogil:
    # (ar + i ai) += w * K y, K given transposed: K[i, j] = Kr[j*r + i] + i Ki[j*r + i]
    cdef int i, j
    cdef double br, bi
    for j in range(r):
        br = w * yr[j]
        bi = w * yi[j]
        for i in range(r):
            ar[i] += Kr[j * r + i] * br - Ki[j * r + i] * bi
            ai[i] += Kr[j * r + i] * bi + Ki[j * r + i] * br


cdef extern from "_volterra_core.h":
    void qr_history_sums(int m, int r, const double* Kr, const double* Ki,
                         const double* hr, const double* hi,
                         double* s1r, double* s1i, double* s2r, double* s2i) noexcept nogil


cdef void _history_sums(int m, int r, const double* Kr, const double* Ki,
                        const double* hr, const double* hi,
                        double* s1r, double* s1i, double* s2r, double* s2i) noexcept nogil:
    # s1 = trapz_k K_k y_{m-k} (k = 0..m); s2 = sum_k K_{k+1} y_{m-k} with half
    # weight on the oldest (k = m) term.
    cdef int i
    cdef Py_ssize_t blk = r * r
    qr_history_sums(m, r, Kr, Ki, hr, hi, s1r, s1i, s2r, s2i)
    if m == 0:
        for i in range(r):
            s1r[i] = 0.0
            s1i[i] = 0.0
    else:
        _matvec_acc(Kr, Ki, hr + m * r, hi + m * r, s1r, s1i, r, -0.5)
        _matvec_acc(Kr + m * blk, Ki + m * blk, hr, hi, s1r, s1i, r, -0.5)
    _matvec_acc(Kr + (m + 1) * blk, Ki + (m + 1) * blk, hr, hi, s2r, s2i, r, -0.5)


def volterra_midpoint(A, kernel, forcing, y0, double dt, int steps):
    K = np.asarray(kernel, dtype=complex)
    f = np.asarray(forcing, dtype=complex)
    A = np.asarray(A, dtype=complex)
    cdef int r = A.shape[0]
    cdef int M = 2 * steps
    if K.shape != (M + 1, r, r) or f.shape != (M + 1, r):
        raise ValueError("kernel/forcing must be tabulated on 2*steps+1 half-step points")
    Kt = K.transpose(0, 2, 1)
    cdef double[::1] Kr = np.ascontiguousarray(Kt.real).reshape(-1)
    cdef double[::1] Ki = np.ascontiguousarray(Kt.imag).reshape(-1)
    cdef double[::1] Ar = np.ascontiguousarray(A.T.real).reshape(-1)
    cdef double[::1] Ai = np.ascontiguousarray(A.T.imag).reshape(-1)
    cdef double[:, ::1] fr = np.ascontiguousarray(f.real)
    cdef double[:, ::1] fi = np.ascontiguousarray(f.imag)
    hr_arr = np.zeros((M + 1, r))
    hi_arr = np.zeros((M + 1, r))
    cdef double[:, ::1] hr = hr_arr
    cdef double[:, ::1] hi = hi_arr
    cdef double s = 0.5 * dt
    cdef int n, m, q
    cdef double* buf = <double*> calloc(6 * r, sizeof(double))
    if buf == NULL:
        raise MemoryError()
    cdef double* s1r = buf
    cdef double* s1i = buf + r
    cdef double* s2r = buf + 2 * r
    cdef double* s2i = buf + 3 * r
    cdef double* Fr = buf + 4 * r
    cdef double* Fi = buf + 5 * r
    y = np.asarray(y0, dtype=complex)
    hr_arr[0] = y.real
    hi_arr[0] = y.imag
    try:
        with nogil:
            for n in range(steps):
                m = 2 * n
                _history_sums(m, r, &Kr[0], &Ki[0], &hr[0, 0], &hi[0, 0], s1r, s1i, s2r, s2i)
                for q in range(r):
                    Fr[q] = fr[m, q] - s * s1r[q]
                    Fi[q] = fi[m, q] - s * s1i[q]
                _matvec_acc(&Ar[0], &Ai[0], &hr[m, 0], &hi[m, 0], Fr, Fi, r, 1.0)
                for q in range(r):
                    hr[m + 1, q] = hr[m, q] + s * Fr[q]
                    hi[m + 1, q] = hi[m, q] + s * Fi[q]
                # complete stage-two sum with the fresh K_0 y_{m+1} term
                _matvec_acc(&Kr[0], &Ki[0], &hr[m + 1, 0], &hi[m + 1, 0], s2r, s2i, r, 0.5)
                for q in range(r):
                    Fr[q] = fr[m + 1, q] - s * s2r[q]
                    Fi[q] = fi[m + 1, q] - s * s2i[q]
                _matvec_acc(&Ar[0], &Ai[0], &hr[m + 1, 0], &hi[m + 1, 0], Fr, Fi, r, 1.0)
                for q in range(r):
                    hr[m + 2, q] = hr[m, q] + dt * Fr[q]
                    hi[m + 2, q] = hi[m, q] + dt * Fi[q]
    finally:
        free(buf)
    return (hr_arr + 1j * hi_arr)[::2].copy()
