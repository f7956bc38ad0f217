"""Besov norms, frequency splits, frequency envelopes and Bony calculus."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dyadic import block_energies, dyadic_profile
from .spectral import ScalarField, VectorField, complex_samples, padder


@dataclass(frozen=True, eq=False)
class FrequencyWeight:
    """Dyadic weight omega_k for k = -1, ..., len(omega) - 2.

    Acceptable (class AF(delta)) when 1 <= omega_k <= omega_{k+1} <= 2**delta * omega_k.
    """

    omega: np.ndarray
    delta: float

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("omega must be a non-empty 1-D sequence")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "omega", w)

    def __len__(self):
        return self.omega.size

    def __getitem__(self, k: int) -> float:
        return float(self.omega[k + 1])

    def violations(self) -> list[str]:
        w, out = self.omega, []
        if np.any(w < 1.0):
            out.append("omega_k < 1")
        steps = w[1:] / w[:-1]
        if np.any(steps < 1.0):
            out.append("omega not non-decreasing")
        if np.any(steps > 2.0**self.delta * (1 + 1e-15)):
            out.append(f"growth exceeds 2**{self.delta}")
        return out

    def is_acceptable(self) -> bool:
        return not self.violations()


@dataclass(frozen=True)
class BesovSpec:
    s: float
    p: float = 2
    r: float = 2
    weight: Optional[FrequencyWeight] = None

    def __post_init__(self):
        if self.p not in (2, np.inf):
            raise ValueError(f"unsupported Lebesgue exponent p={self.p}; use 2 or inf")
        if self.r not in (1, 2, np.inf):
            raise ValueError(f"unsupported summation exponent r={self.r}; use 1, 2 or inf")


def _weights(nblocks: int, weight: Optional[FrequencyWeight]) -> np.ndarray:
    if weight is None:
        return np.ones(nblocks)
    if len(weight) < nblocks:
        raise ValueError(f"weight covers {len(weight)} blocks, field has {nblocks}")
    return weight.omega[:nblocks]


def block_lp_norms(f, p) -> np.ndarray:
    """||Delta_k f||_{L^p}, k = -1..top.  L-infinity is a max over grid points."""
    if p == 2:
        return np.sqrt(block_energies(f))
    prof = dyadic_profile(f.grid)
    out = np.empty(prof.nblocks)
    for i in range(prof.nblocks):
        vals = complex_samples(type(f)(f.grid, prof.mult[i] * f.coeffs))
        mag = np.abs(vals) if f.rank == 0 else np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))
        out[i] = mag.max()
    return out


def _combine(terms: np.ndarray, r) -> float:
    if r == np.inf:
        return float(terms.max()) if terms.size else 0.0
    return float(np.sum(terms**r) ** (1.0 / r))


def besov_norm(f, spec: BesovSpec) -> float:
    norms = block_lp_norms(f, spec.p)
    k = np.arange(-1, norms.size - 1)
    w = _weights(norms.size, spec.weight)
    return _combine(w * 2.0 ** (k * spec.s) * norms, spec.r)


def sobolev_norm(f, s: float, weight: Optional[FrequencyWeight] = None) -> float:
    return besov_norm(f, BesovSpec(s, 2, 2, weight))


def hs_block_terms(energies: np.ndarray, s: float, weight=None) -> np.ndarray:
    """omega_k**2 * 2**(2ks) * ||Delta_k f||^2 from precomputed block energies."""
    k = np.arange(-1, energies.size - 1)
    w = _weights(energies.size, weight)
    return w**2 * 2.0 ** (2 * k * s) * energies


def sobolev_split(f, s: float, k0: int) -> tuple[float, float]:
    """(||f||_{H^s_{<=k0}}, ||f||_{H^s_{>k0}})."""
    if k0 < -1:
        raise ValueError("k0 must be >= -1")
    terms = hs_block_terms(block_energies(f), s)
    cut = k0 + 2
    return float(np.sqrt(terms[:cut].sum())), float(np.sqrt(terms[cut:].sum()))


# --------------------------------------------------------------------------
# Bony decomposition


def _block_samples(f: ScalarField) -> np.ndarray:
    """Padded physical samples of every block of f, shape (nblocks, M, ...)."""
    prof = dyadic_profile(f.grid)
    return padder(f.grid).to_physical(prof.mult * f.coeffs)


def _check(f, g):
    if not isinstance(f, ScalarField) or not isinstance(g, ScalarField):
        raise TypeError("Bony calculus is defined here for scalar fields")
    f._check_same_grid(g)


def paraproduct(f: ScalarField, g: ScalarField) -> ScalarField:
    """T_f g = sum_{l >= 1} S_{l-1} f * Delta_l g, dealiased."""
    _check(f, g)
    fb, gb = _block_samples(f), _block_samples(g)
    low = np.cumsum(fb, axis=0)  # low[i] = S_{i} f  (sum of blocks -1..i-1)
    acc = np.zeros(fb.shape[1:], dtype=complex)
    for l in range(1, fb.shape[0] - 1):
        # S_{l-1} f = blocks -1..l-2 -> low[l - 1]
        acc += low[l - 1] * gb[l + 1]
    return ScalarField(f.grid, padder(f.grid).to_spectral(acc))


def remainder(f: ScalarField, g: ScalarField) -> ScalarField:
    """R(f, g) = sum_l Delta_l f * (Delta_{l-1} + Delta_l + Delta_{l+1}) g."""
    _check(f, g)
    fb, gb = _block_samples(f), _block_samples(g)
    nb = fb.shape[0]
    acc = np.zeros(fb.shape[1:], dtype=complex)
    for i in range(nb):
        acc += fb[i] * gb[max(i - 1, 0) : min(i + 2, nb)].sum(axis=0)
    return ScalarField(f.grid, padder(f.grid).to_spectral(acc))


# --------------------------------------------------------------------------
# frequency envelopes


def envelope_from_tails(tails: np.ndarray) -> tuple[FrequencyWeight, list[int]]:
    """Staircase weight from tail sums ``tails[i] = sup_n sum_{k >= i-1} (...)``.

    ``N_m`` is the smallest index with ``N_m > N_{m-1}`` (starting from
    ``N_0 = -1``) whose tail is at most ``2**(-2m)``; omega equals 1 below
    ``N_1`` and ``2**(m/2)`` on ``[N_m, N_{m+1})``.
    """
    nb = tails.size
    top = nb - 2
    omega = np.ones(nb)
    levels = []
    prev, m = -1, 1
    while prev < top:
        k = prev + 1
        while k <= top and tails[k + 1] > 2.0 ** (-2 * m):
            k += 1
        if k > top:
            break
        levels.append(k)
        omega[k + 1 :] = 2.0 ** (m / 2)
        prev, m = k, m + 1
    return FrequencyWeight(omega, 0.5), levels


def hs_tails(terms: np.ndarray) -> np.ndarray:
    """Reverse cumulative sums: tails[i] = sum_{j >= i} terms[j]."""
    return np.cumsum(terms[::-1])[::-1]


def build_frequency_envelope(family: Sequence, s: float) -> FrequencyWeight:
    family = list(family)
    if not family:
        raise ValueError("frequency envelope needs a non-empty family")
    grid = family[0].grid
    for f in family[1:]:
        family[0]._check_same_grid(f)
    tails = np.max([hs_tails(hs_block_terms(block_energies(f), s)) for f in family], axis=0)
    return envelope_from_tails(tails)[0]


def envelope_levels(family: Sequence, s: float) -> list[int]:
    tails = np.max([hs_tails(hs_block_terms(block_energies(f), s)) for f in family], axis=0)
    return envelope_from_tails(tails)[1]


# --------------------------------------------------------------------------


def linf_norm(u) -> float:
    vals = complex_samples(u)
    mag = np.abs(vals) if u.rank == 0 else np.sqrt(np.sum(np.abs(vals) ** 2, axis=0))
    return float(mag.max())


def grad_sobolev_norm(u: VectorField, s: float, weight=None) -> float:
    """||grad u||_{H^s} with all nine derivative components."""
    prof = dyadic_profile(u.grid)
    power = (u.grid.k2 * np.sum(np.abs(u.coeffs) ** 2, axis=0)).ravel()
    e = (prof.mult.reshape(prof.nblocks, -1) ** 2) @ power
    return float(np.sqrt(hs_block_terms(e, s, weight).sum()))


def linf_bound_check(u: VectorField, s_prime: float) -> float:
    """||u||_{L-inf} / ||grad u||_{H^{s'}} for the embedding with s' > 1/2."""
    if s_prime <= 0.5:
        raise ValueError("the embedding needs s' > 1/2")
    den = grad_sobolev_norm(u, s_prime)
    if den == 0.0:
        raise ZeroDivisionError("||grad u||_{H^s'} vanishes")
    return linf_norm(u) / den
