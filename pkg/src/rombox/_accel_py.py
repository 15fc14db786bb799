"""Pure-NumPy implementations of the time-stepping kernels.

Mirrors the call signatures of the compiled module so either can sit
behind :mod:`rombox.backend`.  Operators arrive as raw CSR arrays
(indptr, indices, data) of a square matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp


def _wrap_csr(indptr, indices, data, n):
    return sp.csr_matrix((data, indices, indptr), shape=(n, n))


def rk4_integrate(indptr, indices, data, u0, dt, n_steps, stride, limit, chol=None):
    """March du/dt = G^{-1} M u with classical RK4.

    ``chol`` is the lower Cholesky factor of G (or None for G = I).
    Returns (records, stable); records include the initial state and then
    every ``stride``-th step until t_end or blow-up.
    """
    n = u0.shape[0]
    op = _wrap_csr(indptr, indices, data, n)
    rec = np.empty((n_steps // stride + 1, n))
    u = np.array(u0, dtype=float, copy=True)
    rec[0] = u
    cnt = 1
    half, sixth = 0.5 * dt, dt / 6.0

    if chol is None:
        def deriv(v):
            return op @ v
    else:
        factor = (chol, True)

        def deriv(v):
            return scipy.linalg.cho_solve(factor, op @ v)

    for step in range(1, n_steps + 1):
        k1 = deriv(u)
        k2 = deriv(u + half * k1)
        k3 = deriv(u + half * k2)
        k4 = deriv(u + dt * k3)
        u = u + sixth * (k1 + 2.0 * (k2 + k3) + k4)
        if not np.max(np.abs(u)) <= limit:  # False for NaN -> flagged
            return rec[:cnt], False
        if step % stride == 0:
            rec[cnt] = u
            cnt += 1
    return rec[:cnt], True


def cn_integrate(indptr, indices, data, lu, piv, a0, n_steps, stride, limit):
    """March the pre-factored Crank-Nicolson recurrence.

    The CSR arrays hold (G + dt/2 B); ``lu``/``piv`` factor (G - dt/2 B)
    as returned by ``scipy.linalg.lu_factor``.
    """
    n = a0.shape[0]
    plus = _wrap_csr(indptr, indices, data, n)
    rec = np.empty((n_steps // stride + 1, n))
    a = np.array(a0, dtype=float, copy=True)
    rec[0] = a
    cnt = 1
    for step in range(1, n_steps + 1):
        a = scipy.linalg.lu_solve((lu, piv), plus @ a)
        if not np.max(np.abs(a)) <= limit:
            return rec[:cnt], False
        if step % stride == 0:
            rec[cnt] = a
            cnt += 1
    return rec[:cnt], True
