# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled time-stepping kernels: RK4 and Crank-Nicolson over CSR operators.

Signatures mirror ``rombox._accel_py``; see that module for semantics.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs
from scipy.linalg.cython_lapack cimport dgetrs, dpotrs

cnp.import_array()


cdef void _matvec(const int[::1] indptr, const int[::1] indices,
                  const double[::1] data, const double[::1] x,
                  double[::1] out) noexcept nogil:
    cdef Py_ssize_t i, k, n = out.shape[0]
    cdef double acc
    for i in range(n):
        acc = 0.0
        for k in range(indptr[i], indptr[i + 1]):
            acc += data[k] * x[indices[k]]
        out[i] = acc


cdef bint _exceeds(const double[::1] u, double limit) noexcept nogil:
    # True when any |u_i| > limit or u_i is NaN.
    cdef Py_ssize_t i
    for i in range(u.shape[0]):
        if not (fabs(u[i]) <= limit):
            return True
    return False


def rk4_integrate(const int[::1] indptr, const int[::1] indices,
                  const double[::1] data, const double[::1] u0, double dt,
                  long n_steps, long stride, double limit, chol=None):
    cdef Py_ssize_t n = u0.shape[0]
    cdef long step, cnt = 1
    cdef Py_ssize_t i
    rec_arr = np.empty((n_steps // stride + 1, n), dtype=np.float64)
    cdef double[:, ::1] rec = rec_arr
    cdef double[::1] u = np.array(u0, dtype=np.float64, copy=True)
    cdef double[::1] k1 = np.empty(n)
    cdef double[::1] k2 = np.empty(n)
    cdef double[::1] k3 = np.empty(n)
    cdef double[::1] k4 = np.empty(n)
    cdef double[::1] y = np.empty(n)
    cdef double half = 0.5 * dt, sixth = dt / 6.0
    cdef bint use_gram = chol is not None
    cdef double[::1, :] ch
    cdef char uplo = b'L'
    cdef int ni = <int> n, one = 1, info = 0
    cdef bint stable = True
    if use_gram:
        ch = chol

    for i in range(n):
        rec[0, i] = u[i]

    with nogil:
        for step in range(1, n_steps + 1):
            _matvec(indptr, indices, data, u, k1)
            if use_gram:
                dpotrs(&uplo, &ni, &one, &ch[0, 0], &ni, &k1[0], &ni, &info)
            for i in range(n):
                y[i] = u[i] + half * k1[i]
            _matvec(indptr, indices, data, y, k2)
            if use_gram:
                dpotrs(&uplo, &ni, &one, &ch[0, 0], &ni, &k2[0], &ni, &info)
            for i in range(n):
                y[i] = u[i] + half * k2[i]
            _matvec(indptr, indices, data, y, k3)
            if use_gram:
                dpotrs(&uplo, &ni, &one, &ch[0, 0], &ni, &k3[0], &ni, &info)
            for i in range(n):
                y[i] = u[i] + dt * k3[i]
            _matvec(indptr, indices, data, y, k4)
            if use_gram:
                dpotrs(&uplo, &ni, &one, &ch[0, 0], &ni, &k4[0], &ni, &info)
            for i in range(n):
                u[i] += sixth * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i])
            if _exceeds(u, limit):
                stable = False
                break
            if step % stride == 0:
                for i in range(n):
                    rec[cnt, i] = u[i]
                cnt += 1

    return rec_arr[:cnt], bool(stable)


def cn_integrate(const int[::1] indptr, const int[::1] indices,
                 const double[::1] data, double[::1, :] lu, piv,
                 const double[::1] a0, long n_steps, long stride, double limit):
    cdef Py_ssize_t n = a0.shape[0]
    cdef long step, cnt = 1
    cdef Py_ssize_t i
    rec_arr = np.empty((n_steps // stride + 1, n), dtype=np.float64)
    cdef double[:, ::1] rec = rec_arr
    cdef double[::1] a = np.array(a0, dtype=np.float64, copy=True)
    cdef double[::1] b = np.empty(n)
    # LAPACK wants 1-based pivots; scipy's lu_factor hands out 0-based.
    cdef int[::1] ipiv = np.asarray(piv, dtype=np.int32) + 1
    cdef char trans = b'N'
    cdef int ni = <int> n, one = 1, info = 0
    cdef bint stable = True

    for i in range(n):
        rec[0, i] = a[i]

    with nogil:
        for step in range(1, n_steps + 1):
            _matvec(indptr, indices, data, a, b)
            dgetrs(&trans, &ni, &one, &lu[0, 0], &ni, &ipiv[0], &b[0], &ni, &info)
            for i in range(n):
                a[i] = b[i]
            if _exceeds(a, limit):
                stable = False
                break
            if step % stride == 0:
                for i in range(n):
                    rec[cnt, i] = a[i]
                cnt += 1

    return rec_arr[:cnt], bool(stable)
