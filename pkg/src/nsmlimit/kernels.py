"""Per-mode propagator kernels: compiled when available, NumPy otherwise.

Set ``NSMLIMIT_PURE_PYTHON=1`` to force the NumPy path.
"""

from __future__ import annotations

import os

import numpy as np


def _np_block_matvec(M, y):
    return np.einsum("pij,jp->ip", M, y, optimize=False)


def _np_etd_combine(A, x, P, n, h):
    return np.einsum("pij,jp->ip", A, x, optimize=False) + h * np.einsum("pij,jp->ip", P, n, optimize=False)


def _np_scalar_combine(a, x, b, n, h):
    return a * x + h * b * n


numpy_kernels = {
    "block_matvec": _np_block_matvec,
    "etd_combine": _np_etd_combine,
    "scalar_combine": _np_scalar_combine,
}

compiled_kernels = None
if not os.environ.get("NSMLIMIT_PURE_PYTHON"):
    try:
        from . import _kernels as _ck

        compiled_kernels = {
            "block_matvec": _ck.block_matvec,
            "etd_combine": _ck.etd_combine,
            "scalar_combine": _ck.scalar_combine,
        }
    except ImportError:
        compiled_kernels = None

BACKEND = "cython" if compiled_kernels is not None else "numpy"
_active = compiled_kernels or numpy_kernels


def _c(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def block_matvec(M, y):
    return _active["block_matvec"](_c(M), _c(y))


def etd_combine(A, x, P, n, h: float):
    return _active["etd_combine"](_c(A), _c(x), _c(P), _c(n), float(h))


def scalar_combine(a, x, b, n, h: float):
    return _active["scalar_combine"](
        np.ascontiguousarray(a, dtype=float), _c(x), np.ascontiguousarray(b, dtype=float), _c(n), float(h)
    )
