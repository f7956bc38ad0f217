"""Batched matrix exponentials and phi-functions.

``expm_batch`` is scaling and squaring with a fixed [13/13] Pade approximant
(coefficients and the threshold theta_13 = 5.371920351148152 follow Higham's
2005 analysis).  Each matrix in the batch gets its own scaling exponent.

``phi_batch`` returns e^X, phi_1(X) and phi_2(X) from one exponential of the
block matrix [[X, I, 0], [0, 0, I], [0, 0, 0]], whose first block row is
[e^X, phi_1(X), phi_2(X)].
"""

from __future__ import annotations

import numpy as np

THETA_13 = 5.371920351148152
_B13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)


def _onenorm(A: np.ndarray) -> np.ndarray:
    return np.abs(A).sum(axis=-2).max(axis=-1)


def expm_batch(A: np.ndarray) -> np.ndarray:
    """e^A for a stack of square matrices, shape (..., q, q)."""
    A = np.asarray(A)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ValueError("expm_batch expects (..., q, q) input")
    lead = A.shape[:-2]
    q = A.shape[-1]
    A = A.reshape((-1, q, q)).astype(np.result_type(A.dtype, np.float64), copy=True)
    norms = _onenorm(A)
    s = np.maximum(0, np.ceil(np.log2(np.maximum(norms, 1e-300) / THETA_13))).astype(int)
    A *= (2.0 ** -s)[:, None, None]

    b = _B13
    I = np.eye(q, dtype=A.dtype)
    A2 = A @ A
    A4 = A2 @ A2
    A6 = A4 @ A2
    U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * I)
    V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I
    R = np.linalg.solve(V - U, V + U)

    for level in range(int(s.max(initial=0))):
        sel = s > level
        R[sel] = R[sel] @ R[sel]
    return R.reshape(lead + (q, q))


def phi_batch(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e^X, phi_1(X), phi_2(X)) for a stack of matrices."""
    X = np.asarray(X)
    q = X.shape[-1]
    lead = X.shape[:-2]
    aug = np.zeros(lead + (3 * q, 3 * q), dtype=np.result_type(X.dtype, np.float64))
    I = np.eye(q)
    aug[..., :q, :q] = X
    aug[..., :q, q : 2 * q] = I
    aug[..., q : 2 * q, 2 * q :] = I
    F = expm_batch(aug)
    return F[..., :q, :q], F[..., :q, q : 2 * q], F[..., :q, 2 * q :]


def phi_scalar(z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(e^z, phi_1(z), phi_2(z)) elementwise, accurate for small |z|."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    e = np.exp(z)
    p1 = np.where(small, 1 + z / 2 + z**2 / 6 + z**3 / 24, np.expm1(zs) / zs)
    p2 = np.where(small, 0.5 + z / 6 + z**2 / 24 + z**3 / 120, (np.expm1(zs) - zs) / zs**2)
    return e, p1, p2
