"""Initial-data recipes.

Every recipe returns Leray-projected, zero-mean, real fields free of the
-n/2 rows.  ``make_initial_state`` rescales the whole state so the energy
functional of the bulk system equals a requested target.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .modes import default_radius, mode_set
from .spectral import Grid, VectorField, leray_project, strip_nyquist, vector_to_spectral
from .systems import LimitState, Params, PlasmaState, ohm_current

RECIPES = ("random", "taylor-green", "maxwell-mode", "zero")


def _realify(grid: Grid, coeffs: np.ndarray) -> VectorField:
    """Project arbitrary coefficients onto real, mean-free, solenoidal fields."""
    phys = np.fft.ifftn(coeffs, axes=tuple(range(-grid.d, 0))).real * grid.size
    v = strip_nyquist(vector_to_spectral(phys, grid))
    v = leray_project(v)
    c = v.coeffs.copy()
    c[(slice(None),) + (0,) * grid.d] = 0
    return VectorField(grid, c)


def random_solenoidal(grid: Grid, rng: np.random.Generator, decay: float = 3.0,
                      kmax: Optional[float] = None) -> VectorField:
    """Random field with amplitude ~ (1 + |xi|^2)^(-decay/2), band-limited to |xi| <= kmax."""
    kmax = default_radius(grid) if kmax is None else kmax
    shape = (3,) + grid.shape
    z = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    amp = (1.0 + grid.k2) ** (-decay / 2) * (grid.k2 <= kmax * kmax)
    return _realify(grid, z * amp)


def taylor_green(grid: Grid) -> VectorField:
    x = grid.points()
    if grid.d == 2:
        u = np.stack([np.sin(x[0]) * np.cos(x[1]), -np.cos(x[0]) * np.sin(x[1]), np.zeros(grid.shape)])
    else:
        u = np.stack([
            np.sin(x[0]) * np.cos(x[1]) * np.cos(x[2]),
            -np.cos(x[0]) * np.sin(x[1]) * np.cos(x[2]),
            np.zeros(grid.shape),
        ])
    return leray_project(strip_nyquist(vector_to_spectral(u, grid)))


def maxwell_mode(grid: Grid, wave=(1, 0, 0)) -> tuple[VectorField, VectorField]:
    """Transverse plane-wave pair: E along e_z, B along e_y, wavevector along ``wave``."""
    x = grid.points()
    k = np.zeros(3)
    k[: len(wave)] = wave
    phase = sum(k[a] * x[a] for a in range(grid.d))
    kn = np.linalg.norm(k)
    if kn == 0:
        raise ValueError("Maxwell mode needs a nonzero wavevector")
    khat = k / kn
    # a polarization orthogonal to k (third axis is always orthogonal for d=2)
    e1 = np.array([0.0, 0.0, 1.0]) if abs(khat[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = e1 - khat * (e1 @ khat)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(khat, e1)
    E = np.stack([e1[a] * np.cos(phase) for a in range(3)])
    B = np.stack([-e2[a] * np.cos(phase) for a in range(3)])
    return (leray_project(strip_nyquist(vector_to_spectral(E, grid))),
            leray_project(strip_nyquist(vector_to_spectral(B, grid))))


def energy_of(u, j, E, B, params: Params) -> float:
    from .diagnostics import energy_E

    return energy_E(PlasmaState(u, j, E, B), params)


def make_initial_state(grid: Grid, params: Params, recipe: str = "random", seed: int = 0,
                       target_energy: Optional[float] = 0.01, decay: float = 3.0,
                       kmax: Optional[float] = None, j_init: str = "zero") -> PlasmaState:
    """Build (u, j, E, B) for the bulk system.

    ``j_init``: ``zero`` (eps j = 0), ``ohm`` (j = sigma (c E + P(u x B)) after
    scaling) or ``random`` (an independent random field, scaled with the rest).
    """
    if recipe not in RECIPES:
        raise ValueError(f"unknown initial-data recipe {recipe!r}; choose from {RECIPES}")
    if j_init not in ("zero", "ohm", "random"):
        raise ValueError(f"unknown j_init {j_init!r}")
    zero = VectorField.zeros(grid)
    rng = np.random.default_rng(seed)
    if recipe == "zero":
        return PlasmaState(zero, zero, zero, zero)
    if recipe == "random":
        u, j, E, B = (random_solenoidal(grid, rng, decay, kmax) for _ in range(4))
    elif recipe == "taylor-green":
        u = taylor_green(grid)
        E, B = maxwell_mode(grid, (1, 1, 0))
        j = random_solenoidal(grid, rng, decay, kmax)
    else:
        u = zero
        E, B = maxwell_mode(grid)
        j = zero
    if j_init != "random":
        j = zero
    if target_energy is not None:
        e = energy_of(u, j, E, B, params)
        if e > 0:
            lam = np.sqrt(target_energy / e)
            u, j, E, B = (lam * f for f in (u, j, E, B))
    if j_init == "ohm":
        ms = mode_set(grid, None)
        Y = ms.compress(np.stack([u.coeffs, E.coeffs, B.coeffs]))
        j = VectorField(grid, ms.expand(ohm_current(ms, Y, params)))
    return PlasmaState(u, j, E, B)


def limit_state_from(state: PlasmaState) -> LimitState:
    return LimitState(state.u, state.E, state.B, t=state.t)
