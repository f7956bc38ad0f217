"""Compact storage of a Galerkin mode set and alias-free real transforms.

A ``ModeSet`` lists the lattice points with |xi| <= radius that do not lie on
a -n/2 row.  It is closed under xi -> -xi, so real fields are represented
exactly by their coefficients on the set.  Coefficient arrays have the mode
axis last: shape (..., nmodes).

Physical products are formed on the 3n/2 padded grid using real FFTs; the
padded half spectrum is filled from the modes with xi_last >= 0 and read
back through Hermitian symmetry.
"""

from __future__ import annotations

from functools import cached_property, lru_cache
from typing import Optional

import numpy as np
import scipy.fft as sfft

from . import spectral
from .dyadic import dyadic_profile
from .spectral import Grid


class ModeSet:
    def __init__(self, grid: Grid, radius: Optional[float] = None):
        self.grid = grid
        nyq = grid.nyquist_mask
        if radius is None:
            keep = ~nyq
        else:
            if radius <= 0:
                raise ValueError("mode-set radius must be positive")
            keep = (grid.k2 <= radius * radius) & ~nyq
        self.radius = radius
        self.mask = keep
        self.flat = np.flatnonzero(keep.ravel())
        self.nmodes = self.flat.size
        k = grid.kvec.reshape(3, -1)[:, self.flat]
        self.kvec = np.ascontiguousarray(k)
        self.k2 = np.sum(k**2, axis=0)
        self.inv_k2 = np.divide(1.0, self.k2, out=np.zeros_like(self.k2), where=self.k2 > 0)
        self._setup_padding()

    # ------------------------------------------------------------------
    def _setup_padding(self):
        g = self.grid
        d, M = g.d, 3 * g.n // 2
        self.M = M
        self.half_shape = (M,) * (d - 1) + (M // 2 + 1,)
        self.phys_shape = (M,) * d
        ki = self.kvec[:d].astype(int)
        last = ki[d - 1]
        self.scatter_sel = np.flatnonzero(last >= 0)
        self.scatter_pos = np.ravel_multi_index(
            tuple(np.mod(ki[a, self.scatter_sel], M) for a in range(d - 1))
            + (last[self.scatter_sel],),
            self.half_shape,
        )
        direct = last >= 0
        src = np.where(direct, ki, -ki)
        self.gather_pos = np.ravel_multi_index(
            tuple(np.mod(src[a], M) for a in range(d - 1)) + (src[d - 1],), self.half_shape
        )
        self.gather_conj = ~direct
        self.axes = tuple(range(-d, 0))

    # ------------------------------------------------------------------
    def compress(self, full: np.ndarray) -> np.ndarray:
        lead = full.shape[: full.ndim - self.grid.d]
        return full.reshape(lead + (-1,))[..., self.flat]

    def expand(self, compact: np.ndarray) -> np.ndarray:
        lead = compact.shape[:-1]
        out = np.zeros(lead + (self.grid.size,), dtype=complex)
        out[..., self.flat] = compact
        return out.reshape(lead + self.grid.shape)

    def to_physical(self, compact: np.ndarray) -> np.ndarray:
        """Real samples on the padded grid, shape (..., M, ..., M)."""
        lead = compact.shape[:-1]
        half = np.zeros(lead + (int(np.prod(self.half_shape)),), dtype=complex)
        half[..., self.scatter_pos] = compact[..., self.scatter_sel]
        half = half.reshape(lead + self.half_shape)
        return sfft.irfftn(
            half, s=self.phys_shape, axes=self.axes, norm="forward", workers=spectral.fft_workers()
        )

    def to_compact(self, values: np.ndarray) -> np.ndarray:
        lead = values.shape[: values.ndim - self.grid.d]
        half = sfft.rfftn(values, axes=self.axes, norm="forward", workers=spectral.fft_workers())
        half = half.reshape(lead + (-1,))[..., self.gather_pos]
        half[..., self.gather_conj] = np.conj(half[..., self.gather_conj])
        return half

    # ------------------------------------------------------------------
    def leray(self, v: np.ndarray) -> np.ndarray:
        """Leray projection of compact vector coefficients (..., 3, nmodes)."""
        kdotv = np.einsum("a...m,am->...m", np.moveaxis(v, -2, 0), self.kvec)
        return v - self.kvec * (kdotv * self.inv_k2)[..., None, :]

    def curl(self, v: np.ndarray) -> np.ndarray:
        k = self.kvec
        return 1j * np.stack(
            [
                k[1] * v[..., 2, :] - k[2] * v[..., 1, :],
                k[2] * v[..., 0, :] - k[0] * v[..., 2, :],
                k[0] * v[..., 1, :] - k[1] * v[..., 0, :],
            ],
            axis=-2,
        )

    def gradient(self, v: np.ndarray) -> np.ndarray:
        """d_a v_b for a < d: shape (d, 3, nmodes) from (3, nmodes)."""
        d = self.grid.d
        return 1j * self.kvec[:d, None, :] * v[None, :, :]

    @cached_property
    def kvec_max(self) -> float:
        return float(np.sqrt(self.k2.max())) if self.nmodes else 0.0

    @cached_property
    def block_weights(self) -> np.ndarray:
        """Squared block multipliers on the set, shape (nblocks, nmodes)."""
        prof = dyadic_profile(self.grid)
        return np.ascontiguousarray(prof.mult.reshape(prof.nblocks, -1)[:, self.flat] ** 2)

    def block_energies(self, v: np.ndarray) -> np.ndarray:
        """Block L2 energies of compact coefficients, summing all leading axes."""
        power = np.abs(v) ** 2
        power = power.reshape(-1, self.nmodes).sum(axis=0)
        return self.block_weights @ power

    def grad_block_energies(self, v: np.ndarray) -> np.ndarray:
        power = (np.abs(v) ** 2).reshape(-1, self.nmodes).sum(axis=0)
        return self.block_weights @ (self.k2 * power)


@lru_cache(maxsize=32)
def mode_set(grid: Grid, radius: Optional[float] = None) -> ModeSet:
    return ModeSet(grid, radius)


def default_radius(grid: Grid) -> float:
    """Largest ball free of the -n/2 rows: the dealiased Nyquist ball."""
    return grid.n / 2 - 1


def cross(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Cross product along axis 0 of physical arrays."""
    return np.stack(
        [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
    )


def advect_phys(u: np.ndarray, gv: np.ndarray) -> np.ndarray:
    """(u . grad) v in physical space from u (3, ...) and gv[a, b] = d_a v_b."""
    out = u[0] * gv[0]
    for a in range(1, gv.shape[0]):
        out = out + u[a] * gv[a]
    return out
