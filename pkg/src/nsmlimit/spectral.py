"""Periodic Fourier discretization on the torus [0, 2*pi)^d.

Fields are stored as complex coefficient arrays on the integer lattice
``xi in [-n/2, n/2)^d`` in numpy FFT ordering, with the convention

    f(x) = sum_xi fhat(xi) exp(i xi . x)

so that ``fhat = fftn(samples) / n**d`` and the Plancherel identity reads
``||f||_{L2}^2 = sum |fhat|^2`` (the (2*pi)^d volume factor is dropped).

Vector fields always carry three components.  For ``d == 2`` they depend on
(x1, x2) only and the third wavenumber is identically zero.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
import scipy.fft as sfft

HERMITIAN_TOL = 1e-10

# FFT worker count; set through ``set_fft_workers`` (the CLI ``--threads`` flag).
_FFT_WORKERS = 1


def set_fft_workers(workers: int) -> None:
    global _FFT_WORKERS
    _FFT_WORKERS = max(1, int(workers))


def fft_workers() -> int:
    return _FFT_WORKERS


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` modes per axis in ``d`` dimensions."""

    d: int
    n: int

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"unsupported dimension d={self.d}; expected 2 or 3")
        if self.n < 8:
            raise ValueError(f"n={self.n} too small; need n >= 8")
        if self.n % 2:
            raise ValueError(f"n={self.n} must be even")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def spacing(self) -> float:
        return 2 * np.pi / self.n

    @property
    def max_radius(self) -> float:
        """Largest |xi| on the lattice (a corner with all components -n/2)."""
        return 0.5 * self.n * np.sqrt(self.d)

    @cached_property
    def freqs(self) -> np.ndarray:
        return np.fft.fftfreq(self.n, 1.0 / self.n)

    @cached_property
    def kvec(self) -> np.ndarray:
        """Wavevector components, shape (3, *shape); third row zero for d=2."""
        axes = np.meshgrid(*([self.freqs] * self.d), indexing="ij")
        k = np.zeros((3,) + self.shape)
        for a in range(self.d):
            k[a] = axes[a]
        k.setflags(write=False)
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        k2 = np.sum(self.kvec**2, axis=0)
        k2.setflags(write=False)
        return k2

    @cached_property
    def kmag(self) -> np.ndarray:
        r = np.sqrt(self.k2)
        r.setflags(write=False)
        return r

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True on lattice points with some component equal to -n/2."""
        mask = np.zeros(self.shape, dtype=bool)
        for a in range(self.d):
            mask |= self.kvec[a] == -self.n // 2
        return mask

    def points(self) -> list[np.ndarray]:
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(*([x] * self.d), indexing="ij")


def build_grid(d: int, n: int) -> Grid:
    return Grid(d, n)


class _Field:
    __slots__ = ()

    def _check_same_grid(self, other):
        if other.grid != self.grid:
            raise ValueError(f"grid mismatch: {self.grid} vs {other.grid}")

    def __add__(self, other):
        self._check_same_grid(other)
        return type(self)(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other):
        self._check_same_grid(other)
        return type(self)(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar):
        return type(self)(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return type(self)(self.grid, self.coeffs / scalar)

    def __neg__(self):
        return type(self)(self.grid, -self.coeffs)

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.coeffs) ** 2)))

    def inner(self, other) -> float:
        """Real L2 inner product (Plancherel normalization)."""
        self._check_same_grid(other)
        return float(np.real(np.vdot(self.coeffs, other.coeffs)))

    def map_coeffs(self, fn):
        return type(self)(self.grid, fn(self.coeffs))


@dataclass(frozen=True, eq=False)
class ScalarField(_Field):
    grid: Grid
    coeffs: np.ndarray

    rank = 0

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != grid shape {self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape, dtype=complex))


@dataclass(frozen=True, eq=False)
class VectorField(_Field):
    """Three-component field; ``coeffs`` has shape (3, *grid.shape)."""

    grid: Grid
    coeffs: np.ndarray

    rank = 1

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != (3,) + self.grid.shape:
            raise ValueError(f"coefficient shape {c.shape} != {(3,) + self.grid.shape}")
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "VectorField":
        return cls(grid, np.zeros((3,) + grid.shape, dtype=complex))

    @classmethod
    def from_components(cls, comps) -> "VectorField":
        comps = list(comps)
        if len(comps) != 3:
            raise ValueError("a vector field needs exactly three components")
        grid = comps[0].grid
        for c in comps[1:]:
            comps[0]._check_same_grid(c)
        return cls(grid, np.stack([c.coeffs for c in comps]))

    @property
    def components(self) -> tuple[ScalarField, ScalarField, ScalarField]:
        return tuple(ScalarField(self.grid, self.coeffs[a]) for a in range(3))


# --------------------------------------------------------------------------
# transforms


def _axes(grid: Grid) -> tuple[int, ...]:
    return tuple(range(-grid.d, 0))


def to_spectral(samples, grid: Grid) -> ScalarField:
    samples = np.asarray(samples)
    if samples.size != grid.size:
        raise ValueError(f"expected {grid.size} samples, got {samples.size}")
    samples = samples.reshape(grid.shape)
    coeffs = sfft.fftn(samples, workers=_FFT_WORKERS) / grid.size
    return ScalarField(grid, coeffs)


def vector_to_spectral(samples, grid: Grid) -> VectorField:
    samples = np.asarray(samples)
    if samples.shape != (3,) + grid.shape:
        raise ValueError(f"expected shape {(3,) + grid.shape}, got {samples.shape}")
    coeffs = sfft.fftn(samples, axes=_axes(grid), workers=_FFT_WORKERS) / grid.size
    return VectorField(grid, coeffs)


def _conj_reflect(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Return conj(c(-xi)) on the wrapped lattice."""
    out = coeffs
    for ax in range(-d, 0):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return np.conj(out)


def hermitian_defect(coeffs: np.ndarray, d: int) -> float:
    """max |c(xi) - conj(c(-xi))| relative to max |c|; zero for real data."""
    scale = np.max(np.abs(coeffs)) if coeffs.size else 0.0
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(coeffs - _conj_reflect(coeffs, d))) / scale)


def from_spectral(f) -> np.ndarray:
    """Physical samples of a real field (scalar: shape grid.shape; vector: (3, ...))."""
    grid = f.grid
    defect = hermitian_defect(f.coeffs, grid.d)
    if defect > HERMITIAN_TOL:
        raise ValueError(f"field is not Hermitian-symmetric (defect {defect:.2e})")
    vals = sfft.ifftn(f.coeffs, axes=_axes(grid), workers=_FFT_WORKERS) * grid.size
    return np.ascontiguousarray(vals.real)


def complex_samples(f) -> np.ndarray:
    """Physical samples without the reality check (complex valued)."""
    grid = f.grid
    return sfft.ifftn(f.coeffs, axes=_axes(grid), workers=_FFT_WORKERS) * grid.size


def strip_nyquist(f):
    """Zero the unpaired -n/2 rows so the field is exactly representable as real."""
    c = f.coeffs.copy()
    c[..., f.grid.nyquist_mask] = 0
    return type(f)(f.grid, c)


# --------------------------------------------------------------------------
# calculus


def _cross_coeffs(k: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.stack(
        [
            k[1] * v[2] - k[2] * v[1],
            k[2] * v[0] - k[0] * v[2],
            k[0] * v[1] - k[1] * v[0],
        ]
    )


def apply_derivative(f, kind: str):
    """Spectral derivative: ``grad``, ``div``, ``curl`` or ``laplacian``."""
    grid = f.grid
    k = grid.kvec
    if kind == "laplacian":
        return type(f)(grid, -grid.k2 * f.coeffs)
    if kind == "grad":
        if f.rank != 0:
            raise ValueError("grad expects a ScalarField")
        return VectorField(grid, 1j * k * f.coeffs)
    if kind == "div":
        if f.rank != 1:
            raise ValueError("div expects a VectorField")
        return ScalarField(grid, 1j * np.sum(k * f.coeffs, axis=0))
    if kind == "curl":
        if f.rank != 1:
            raise ValueError("curl expects a VectorField")
        return VectorField(grid, 1j * _cross_coeffs(k, f.coeffs))
    raise ValueError(f"unknown derivative kind {kind!r}")


def grad(f: ScalarField) -> VectorField:
    return apply_derivative(f, "grad")


def div(v: VectorField) -> ScalarField:
    return apply_derivative(v, "div")


def curl(v: VectorField) -> VectorField:
    return apply_derivative(v, "curl")


def laplacian(f):
    return apply_derivative(f, "laplacian")


def gradient_norm_sq(f) -> float:
    """||grad f||_{L2}^2 summed over components, without forming the gradient."""
    return float(np.sum(f.grid.k2 * np.abs(f.coeffs) ** 2))


def leray_coeffs(v: np.ndarray, k: np.ndarray, k2: np.ndarray) -> np.ndarray:
    """v - k (k.v)/|k|^2 for k != 0; the k = 0 column is passed through."""
    kdotv = np.sum(k * v, axis=0)
    inv = np.divide(1.0, k2, out=np.zeros_like(k2, dtype=float), where=k2 > 0)
    return v - k * (kdotv * inv)


def leray_project(v: VectorField) -> VectorField:
    g = v.grid
    return VectorField(g, leray_coeffs(v.coeffs, g.kvec, g.k2))


def friedrichs_cutoff(f, m: float):
    """Sharp truncation to the ball |xi| <= m."""
    if m <= 0:
        raise ValueError("Friedrichs radius must be positive")
    mask = f.grid.k2 <= m * m
    return type(f)(f.grid, np.where(mask, f.coeffs, 0))


# --------------------------------------------------------------------------
# dealiased products


class Padder:
    """Zero-padding to M = 3n/2 points per axis for alias-free quadratic products.

    With both inputs free of the -n/2 rows, every lattice coefficient of the
    product is exact; in general all coefficients with |xi_a| < n/2 are.
    """

    def __init__(self, grid: Grid):
        self.grid = grid
        self.M = 3 * grid.n // 2
        self.index = np.mod(grid.freqs.astype(int), self.M)
        self._ix = np.ix_(*([self.index] * grid.d))

    @property
    def axes(self):
        return _axes(self.grid)

    def to_physical(self, coeffs: np.ndarray) -> np.ndarray:
        lead = coeffs.shape[: coeffs.ndim - self.grid.d]
        big = np.zeros(lead + (self.M,) * self.grid.d, dtype=complex)
        big[(Ellipsis,) + self._ix] = coeffs
        return sfft.ifftn(big, axes=self.axes, norm="forward", workers=_FFT_WORKERS)

    def to_spectral(self, values: np.ndarray) -> np.ndarray:
        big = sfft.fftn(values, axes=self.axes, norm="forward", workers=_FFT_WORKERS)
        return big[(Ellipsis,) + self._ix]


@lru_cache(maxsize=None)
def padder(grid: Grid) -> Padder:
    return Padder(grid)


def pointwise_product(f: ScalarField, g: ScalarField) -> ScalarField:
    f._check_same_grid(g)
    p = padder(f.grid)
    prod = p.to_physical(f.coeffs) * p.to_physical(g.coeffs)
    return ScalarField(f.grid, p.to_spectral(prod))


def dot_product(u: VectorField, v: VectorField) -> ScalarField:
    u._check_same_grid(v)
    p = padder(u.grid)
    prod = np.sum(p.to_physical(u.coeffs) * p.to_physical(v.coeffs), axis=0)
    return ScalarField(u.grid, p.to_spectral(prod))


def cross_product(u: VectorField, v: VectorField) -> VectorField:
    u._check_same_grid(v)
    p = padder(u.grid)
    a, b = p.to_physical(u.coeffs), p.to_physical(v.coeffs)
    return VectorField(u.grid, p.to_spectral(_cross_coeffs(a, b)))


def advect(u: VectorField, v: VectorField) -> VectorField:
    """(u . grad) v, dealiased."""
    u._check_same_grid(v)
    p = padder(u.grid)
    k = u.grid.kvec
    up = p.to_physical(u.coeffs)
    out = np.zeros_like(up)
    for a in range(u.grid.d):
        out += up[a] * p.to_physical(1j * k[a] * v.coeffs)
    return VectorField(u.grid, p.to_spectral(out))
