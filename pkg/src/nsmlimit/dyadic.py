"""Littlewood-Paley blocks on the integer lattice.

The radial profile is fixed in closed form so norms are reproducible:

    psi(t)   = exp(-1/t) for t > 0, else 0
    theta(t) = psi(t) / (psi(t) + psi(1 - t))          smooth step, 0 -> 1 on [0, 1]
    chi(r)   = theta((4/3 - r) / (4/3 - 3/4))          1 for r <= 3/4, 0 for r >= 4/3
    phi(r)   = chi(r / 2) - chi(r)                     supported in [3/4, 8/3]

Block multipliers are ``chi(|xi|)`` for k = -1 and ``phi(|xi| / 2**k)`` for
k >= 0, so the sum over blocks telescopes to ``chi(|xi| / 2**(K+1)) = 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectral import Grid

CHI_INNER = 3.0 / 4.0
CHI_OUTER = 4.0 / 3.0


def _psi(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    t = np.asarray(t, dtype=float)
    a = _psi(t)
    b = _psi(1.0 - t)
    return a / (a + b)


def chi(r):
    return smooth_step((CHI_OUTER - np.asarray(r, dtype=float)) / (CHI_OUTER - CHI_INNER))


def phi(r):
    r = np.asarray(r, dtype=float)
    return chi(r / 2.0) - chi(r)


def block_multiplier(r, k: int):
    if k < -1:
        return np.zeros_like(np.asarray(r, dtype=float))
    if k == -1:
        return chi(r)
    return phi(np.asarray(r, dtype=float) / 2.0**k)


def top_block(max_radius: float) -> int:
    """Largest k whose annulus (3/4 * 2**k, 8/3 * 2**k) meets the ball of the given radius."""
    k = -1
    while CHI_INNER * 2.0 ** (k + 1) < max_radius:
        k += 1
    return k


@dataclass(frozen=True, eq=False)
class DyadicProfile:
    """Tabulated block multipliers on a grid.

    ``mult[k + 1]`` holds the multiplier of block k for k = -1, ..., top.
    """

    grid: Grid
    top: int
    mult: np.ndarray

    @property
    def nblocks(self) -> int:
        return self.top + 2

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-1, self.top + 1)

    def multiplier(self, k: int) -> np.ndarray:
        if k < -1 or k > self.top:
            return np.zeros(self.grid.shape)
        return self.mult[k + 1]

    @property
    def chi(self) -> np.ndarray:
        return self.mult[0]

    @property
    def phi(self) -> np.ndarray:
        return self.mult[1:]


@lru_cache(maxsize=None)
def dyadic_profile(grid: Grid) -> DyadicProfile:
    r = grid.kmag
    top = top_block(grid.max_radius)
    mult = np.empty((top + 2,) + grid.shape)
    mult[0] = chi(r)
    for k in range(top + 1):
        # telescoping form keeps the partition of unity at rounding level
        mult[k + 1] = chi(r / 2.0 ** (k + 1)) - chi(r / 2.0**k)
    mult.setflags(write=False)
    return DyadicProfile(grid, top, mult)


def dyadic_block(f, k: int):
    if k < -1:
        raise ValueError("block index must be >= -1")
    prof = dyadic_profile(f.grid)
    return type(f)(f.grid, prof.multiplier(k) * f.coeffs)


def low_pass(f, k: int):
    """S_k f = sum of blocks m <= k - 1."""
    if k < 0:
        raise ValueError("low-pass index must be >= 0")
    prof = dyadic_profile(f.grid)
    hi = min(k - 1, prof.top)
    m = prof.mult[: hi + 2].sum(axis=0) if hi >= -1 else 0.0
    return type(f)(f.grid, m * f.coeffs)


def block_energies(f) -> np.ndarray:
    """||Delta_k f||_{L2}^2 for k = -1, ..., top (summed over components)."""
    prof = dyadic_profile(f.grid)
    power = np.abs(f.coeffs) ** 2
    if f.rank == 1:
        power = power.sum(axis=0)
    return (prof.mult.reshape(prof.nblocks, -1) ** 2) @ power.ravel()
