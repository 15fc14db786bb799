"""Selects the time-stepping kernel implementation.

The compiled extension is used when it imported cleanly; setting
``ROMBOX_PURE_PYTHON=1`` (read once, at import) forces the NumPy
fallback.  ``ACTIVE`` names the selected implementation so tests and
benchmarks can assert on it.
"""

from __future__ import annotations

import os

import numpy as np

from . import _accel_py

try:
    from . import _accel
except ImportError:  # pragma: no cover - depends on build environment
    _accel = None


def _select():
    forced = os.environ.get("ROMBOX_PURE_PYTHON", "").strip()
    if forced not in ("", "0") or _accel is None:
        return _accel_py, "python"
    return _accel, "compiled"


_impl, ACTIVE = _select()


def active_backend() -> str:
    """Name of the implementation in use: "compiled" or "python"."""
    return ACTIVE


def csr_parts(matrix):
    """CSR arrays (indptr, indices, data) in the dtypes the kernels expect."""
    m = matrix.tocsr()
    indptr = np.ascontiguousarray(m.indptr, dtype=np.int32)
    indices = np.ascontiguousarray(m.indices, dtype=np.int32)
    data = np.ascontiguousarray(m.data, dtype=np.float64)
    return indptr, indices, data


def rk4_integrate(op, u0, dt, n_steps, stride, limit, chol=None):
    indptr, indices, data = csr_parts(op)
    u0 = np.ascontiguousarray(u0, dtype=np.float64)
    if chol is not None:
        chol = np.asfortranarray(chol, dtype=np.float64)
    return _impl.rk4_integrate(indptr, indices, data, u0, dt, int(n_steps),
                               int(stride), float(limit), chol)


def cn_integrate(plus, lu, piv, a0, n_steps, stride, limit):
    indptr, indices, data = csr_parts(plus)
    lu = np.asfortranarray(lu, dtype=np.float64)
    piv = np.ascontiguousarray(piv, dtype=np.int32)
    a0 = np.ascontiguousarray(a0, dtype=np.float64)
    return _impl.cn_integrate(indptr, indices, data, lu, piv, a0, int(n_steps),
                              int(stride), float(limit))
