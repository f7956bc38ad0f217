# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-mode kernels on component-major compact arrays.

Layout: matrices M[p, i, j] for mode p, vectors y[j, p].  Complex products
are spelled out on real and imaginary parts so the compiler does not route
them through the Annex G helper.
"""

import numpy as np
cimport numpy as cnp

cnp.import_array()

DEF QMAX = 64


def block_matvec(const double complex[:, :, ::1] M, const double complex[:, ::1] y):
    """out[i, p] = sum_j M[p, i, j] * y[j, p]."""
    cdef Py_ssize_t nm = M.shape[0], q = M.shape[1]
    cdef Py_ssize_t p, i, j
    cdef double ar, ai, mr, mi
    cdef double yr[QMAX]
    cdef double yi[QMAX]
    if q > QMAX:
        raise ValueError("block size too large for the compiled kernel")
    out = np.empty((q, nm), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for p in range(nm):
            for j in range(q):
                yr[j] = y[j, p].real
                yi[j] = y[j, p].imag
            for i in range(q):
                ar = 0.0
                ai = 0.0
                for j in range(q):
                    mr = M[p, i, j].real
                    mi = M[p, i, j].imag
                    ar = ar + mr * yr[j] - mi * yi[j]
                    ai = ai + mr * yi[j] + mi * yr[j]
                o[i, p].real = ar
                o[i, p].imag = ai
    return out


def etd_combine(const double complex[:, :, ::1] A, const double complex[:, ::1] x,
                const double complex[:, :, ::1] P, const double complex[:, ::1] n, double h):
    """out[:, p] = A[p] @ x[:, p] + h * P[p] @ n[:, p] in one pass."""
    cdef Py_ssize_t nm = A.shape[0], q = A.shape[1]
    cdef Py_ssize_t p, i, j
    cdef double ar, ai, mr, mi
    cdef double xr[QMAX]
    cdef double xi[QMAX]
    cdef double nr[QMAX]
    cdef double ni[QMAX]
    if q > QMAX:
        raise ValueError("block size too large for the compiled kernel")
    out = np.empty((q, nm), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for p in range(nm):
            for j in range(q):
                xr[j] = x[j, p].real
                xi[j] = x[j, p].imag
                nr[j] = h * n[j, p].real
                ni[j] = h * n[j, p].imag
            for i in range(q):
                ar = 0.0
                ai = 0.0
                for j in range(q):
                    mr = A[p, i, j].real
                    mi = A[p, i, j].imag
                    ar = ar + mr * xr[j] - mi * xi[j]
                    ai = ai + mr * xi[j] + mi * xr[j]
                    mr = P[p, i, j].real
                    mi = P[p, i, j].imag
                    ar = ar + mr * nr[j] - mi * ni[j]
                    ai = ai + mr * ni[j] + mi * nr[j]
                o[i, p].real = ar
                o[i, p].imag = ai
    return out


def scalar_combine(const double[::1] a, const double complex[:, ::1] x,
                   const double[::1] b, const double complex[:, ::1] n, double h):
    """out[i, p] = a[p] x[i, p] + h b[p] n[i, p] (closed-form velocity block)."""
    cdef Py_ssize_t q = x.shape[0], nm = x.shape[1]
    cdef Py_ssize_t p, i
    cdef double s, t
    out = np.empty((q, nm), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(q):
            for p in range(nm):
                s = a[p]
                t = h * b[p]
                o[i, p].real = s * x[i, p].real + t * n[i, p].real
                o[i, p].imag = s * x[i, p].imag + t * n[i, p].imag
    return out
