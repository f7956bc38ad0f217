"""Right-hand sides of the bulk two-fluid system and of its eps -> 0 limit.

Bulk system (pressures removed by the Leray projector P)::

    du/dt = P(-u.grad u - eps^2 j.grad j + j x B) + mu lap u
    dj/dt = P(-u.grad j - j.grad u) + P(u x B)/eps^2 + (c/eps^2) E - j/(sigma eps^2) + mu lap j
    dE/dt = c curl B - c j
    dB/dt = -c curl E

Limit system, with the current given by the solenoidal Ohm law
``j = sigma (c E + P(u x B))``::

    du/dt = P(-u.grad u + j x B) + mu lap u
    dE/dt = c curl B - c j
    dB/dt = -c curl E

All array-level evaluators work on compact coefficients of a ``ModeSet``;
stacked states have shape (nfields, 3, nmodes).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .modes import ModeSet, advect_phys, cross, mode_set
from .spectral import Grid, VectorField, leray_project

DIV_TOL = 1e-10


@dataclass(frozen=True)
class Params:
    mu: float = 0.1
    sigma: float = 1.0
    c: float = 1.0
    eps: float = 0.1
    s: float = 1.6
    s_prime: float = 1.6

    def __post_init__(self):
        for name in ("mu", "sigma", "c"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.eps <= 1:
            raise ValueError(f"eps={self.eps} outside (0, 1]")
        if not self.s > 1.5:
            raise ValueError(f"s={self.s} violates the well-posedness hypothesis s > 3/2")
        if not self.s - 1 <= self.s_prime <= self.s + 1:
            raise ValueError(f"s'={self.s_prime} violates s - 1 <= s' <= s + 1")

    def with_eps(self, eps: float) -> "Params":
        return Params(self.mu, self.sigma, self.c, eps, self.s, self.s_prime)


# --------------------------------------------------------------------------
# states


def _check_grids(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ValueError("all state fields must share one grid")
    return g


@dataclass(frozen=True, eq=False)
class PlasmaState:
    u: VectorField
    j: VectorField
    E: VectorField
    B: VectorField
    t: float = 0.0

    names = ("u", "j", "E", "B")

    @property
    def grid(self) -> Grid:
        return _check_grids(self.u, self.j, self.E, self.B)

    def fields(self):
        return (self.u, self.j, self.E, self.B)

    def stacked(self) -> np.ndarray:
        return np.stack([f.coeffs for f in self.fields()])

    @classmethod
    def from_stacked(cls, grid: Grid, arr: np.ndarray, t: float = 0.0) -> "PlasmaState":
        return cls(*(VectorField(grid, arr[i]) for i in range(4)), t=t)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "PlasmaState":
        return cls.from_stacked(grid, np.zeros((4, 3) + grid.shape, dtype=complex), t)

    def scaled(self, lam: float) -> "PlasmaState":
        return PlasmaState(*(lam * f for f in self.fields()), t=self.t)


@dataclass(frozen=True, eq=False)
class SpeciesState:
    u_plus: VectorField
    u_minus: VectorField
    E: VectorField
    B: VectorField
    t: float = 0.0

    names = ("u_plus", "u_minus", "E", "B")

    @property
    def grid(self) -> Grid:
        return _check_grids(self.u_plus, self.u_minus, self.E, self.B)

    def fields(self):
        return (self.u_plus, self.u_minus, self.E, self.B)

    def stacked(self) -> np.ndarray:
        return np.stack([f.coeffs for f in self.fields()])


@dataclass(frozen=True, eq=False)
class LimitState:
    u: VectorField
    E: VectorField
    B: VectorField
    t: float = 0.0

    names = ("u", "E", "B")

    @property
    def grid(self) -> Grid:
        return _check_grids(self.u, self.E, self.B)

    def fields(self):
        return (self.u, self.E, self.B)

    def stacked(self) -> np.ndarray:
        return np.stack([f.coeffs for f in self.fields()])

    @classmethod
    def from_stacked(cls, grid: Grid, arr: np.ndarray, t: float = 0.0) -> "LimitState":
        return cls(*(VectorField(grid, arr[i]) for i in range(3)), t=t)

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "LimitState":
        return cls.from_stacked(grid, np.zeros((3, 3) + grid.shape, dtype=complex), t)


def species_to_bulk(S: SpeciesState, params: Params) -> PlasmaState:
    eps = params.eps
    u = 0.5 * (S.u_plus + S.u_minus)
    j = (S.u_plus - S.u_minus) / (2 * eps)
    return PlasmaState(u, j, S.E, S.B, t=S.t)


def bulk_to_species(P: PlasmaState, params: Params) -> SpeciesState:
    eps = params.eps
    return SpeciesState(P.u + eps * P.j, P.u - eps * P.j, P.E, P.B, t=P.t)


def max_relative_divergence(fields) -> float:
    """max over fields of ||div f|| / ||grad f|| (0 for constant fields)."""
    worst = 0.0
    for f in fields:
        g = f.grid
        num = np.sqrt(np.sum(np.abs(np.sum(g.kvec * f.coeffs, axis=0)) ** 2))
        den = np.sqrt(np.sum(g.k2 * np.abs(f.coeffs) ** 2))
        if den > 0:
            worst = max(worst, num / den)
    return float(worst)


def _require_solenoidal(state):
    defect = max_relative_divergence(state.fields())
    if defect > DIV_TOL:
        raise ValueError(f"state violates the divergence constraints (relative defect {defect:.2e})")


# --------------------------------------------------------------------------
# array-level evaluators on a mode set

EQNSM_TERM_DEGREE = {"advection": 2, "lorentz": 2, "relaxation": 1, "maxwell": 1, "diffusion": 1}
NSMO_TERM_DEGREE = {
    "advection": 2,
    "lorentz": 2,
    "lorentz_motional": 3,
    "ohm_linear": 1,
    "ohm_motional": 2,
    "maxwell": 1,
    "diffusion": 1,
}


def eqnsm_linear(ms: ModeSet, Y: np.ndarray, p: Params) -> np.ndarray:
    u, j, E, B = Y
    ie2 = 1.0 / p.eps**2
    out = np.empty_like(Y)
    out[0] = -p.mu * ms.k2 * u
    out[1] = -p.mu * ms.k2 * j - (ie2 / p.sigma) * j + p.c * ie2 * E
    out[2] = p.c * ms.curl(B) - p.c * j
    out[3] = -p.c * ms.curl(E)
    return out


def eqnsm_nonlinear(ms: ModeSet, Y: np.ndarray, p: Params, want_uxb: bool = False):
    """Projected quadratic terms (N_u, N_j, 0, 0); optionally also P(u x B)."""
    u, j, E, B = Y
    d = ms.grid.d
    phys = ms.to_physical(np.concatenate([u, j, B, ms.gradient(u).reshape(3 * d, -1),
                                          ms.gradient(j).reshape(3 * d, -1)]))
    up, jp, Bp = phys[0:3], phys[3:6], phys[6:9]
    gu = phys[9 : 9 + 3 * d].reshape((d, 3) + phys.shape[1:])
    gj = phys[9 + 3 * d :].reshape((d, 3) + phys.shape[1:])
    eps2 = p.eps**2
    fu = -advect_phys(up, gu) - eps2 * advect_phys(jp, gj) + cross(jp, Bp)
    fj = -advect_phys(up, gj) - advect_phys(jp, gu)
    uxb = cross(up, Bp)
    spec = ms.leray(ms.to_compact(np.concatenate([fu, fj, uxb])).reshape(3, 3, -1))
    N = np.zeros_like(Y)
    N[0] = spec[0]
    N[1] = spec[1] + spec[2] / eps2
    if want_uxb:
        return N, spec[2]
    return N


def eqnsm_terms(ms: ModeSet, Y: np.ndarray, p: Params) -> dict[str, np.ndarray]:
    u, j, E, B = Y
    d = ms.grid.d
    phys = ms.to_physical(np.concatenate([u, j, B, ms.gradient(u).reshape(3 * d, -1),
                                          ms.gradient(j).reshape(3 * d, -1)]))
    up, jp, Bp = phys[0:3], phys[3:6], phys[6:9]
    gu = phys[9 : 9 + 3 * d].reshape((d, 3) + phys.shape[1:])
    gj = phys[9 + 3 * d :].reshape((d, 3) + phys.shape[1:])
    eps2 = p.eps**2
    parts = [
        -advect_phys(up, gu) - eps2 * advect_phys(jp, gj),
        -advect_phys(up, gj) - advect_phys(jp, gu),
        cross(jp, Bp),
        cross(up, Bp),
    ]
    adv_u, adv_j, jxb, uxb = ms.leray(ms.to_compact(np.concatenate(parts)).reshape(4, 3, -1))
    z = np.zeros_like(Y)
    terms = {k: z.copy() for k in EQNSM_TERM_DEGREE}
    terms["advection"][0], terms["advection"][1] = adv_u, adv_j
    terms["lorentz"][0], terms["lorentz"][1] = jxb, uxb / eps2
    terms["relaxation"][1] = p.c / eps2 * E - j / (p.sigma * eps2)
    terms["maxwell"][2] = p.c * ms.curl(B) - p.c * j
    terms["maxwell"][3] = -p.c * ms.curl(E)
    terms["diffusion"][0] = -p.mu * ms.k2 * u
    terms["diffusion"][1] = -p.mu * ms.k2 * j
    return terms


def nsmo_linear(ms: ModeSet, Y: np.ndarray, p: Params) -> np.ndarray:
    u, E, B = Y
    out = np.empty_like(Y)
    out[0] = -p.mu * ms.k2 * u
    out[1] = p.c * ms.curl(B) - p.sigma * p.c**2 * E
    out[2] = -p.c * ms.curl(E)
    return out


def _nsmo_pieces(ms: ModeSet, Y: np.ndarray, p: Params):
    u, E, B = Y
    d = ms.grid.d
    phys = ms.to_physical(np.concatenate([u, B, ms.gradient(u).reshape(3 * d, -1)]))
    up, Bp = phys[0:3], phys[3:6]
    gu = phys[6:].reshape((d, 3) + phys.shape[1:])
    puxb = ms.leray(ms.to_compact(cross(up, Bp)))
    j = p.sigma * (p.c * E + puxb)
    jp = ms.to_physical(j)
    adv, jxb = ms.leray(ms.to_compact(np.concatenate([-advect_phys(up, gu), cross(jp, Bp)])).reshape(2, 3, -1))
    return puxb, j, adv, jxb


def nsmo_nonlinear(ms: ModeSet, Y: np.ndarray, p: Params, want_j: bool = False):
    puxb, j, adv, jxb = _nsmo_pieces(ms, Y, p)
    N = np.zeros_like(Y)
    N[0] = adv + jxb
    N[1] = -p.c * p.sigma * puxb
    if want_j:
        return N, j
    return N


def nsmo_terms(ms: ModeSet, Y: np.ndarray, p: Params) -> dict[str, np.ndarray]:
    u, E, B = Y
    d = ms.grid.d
    phys = ms.to_physical(np.concatenate([u, E, B, ms.gradient(u).reshape(3 * d, -1)]))
    up, Ep, Bp = phys[0:3], phys[3:6], phys[6:9]
    gu = phys[9:].reshape((d, 3) + phys.shape[1:])
    puxb = ms.leray(ms.to_compact(cross(up, Bp)))
    mp = ms.to_physical(p.sigma * puxb)
    adv, exb, mxb = ms.leray(
        ms.to_compact(np.concatenate([-advect_phys(up, gu), cross(p.sigma * p.c * Ep, Bp), cross(mp, Bp)])).reshape(3, 3, -1)
    )
    z = np.zeros_like(Y)
    terms = {k: z.copy() for k in NSMO_TERM_DEGREE}
    terms["advection"][0] = adv
    terms["lorentz"][0] = exb
    terms["lorentz_motional"][0] = mxb
    terms["ohm_linear"][1] = -p.sigma * p.c**2 * E
    terms["ohm_motional"][1] = -p.c * p.sigma * puxb
    terms["maxwell"][1] = p.c * ms.curl(B)
    terms["maxwell"][2] = -p.c * ms.curl(E)
    terms["diffusion"][0] = -p.mu * ms.k2 * u
    return terms


def ohm_current(ms: ModeSet, Y: np.ndarray, p: Params) -> np.ndarray:
    """sigma (c E + P(u x B)) from compact (u, E, B) or (u, j, E, B)."""
    u, E, B = (Y[0], Y[1], Y[2]) if Y.shape[0] == 3 else (Y[0], Y[2], Y[3])
    phys = ms.to_physical(np.concatenate([u, B]))
    puxb = ms.leray(ms.to_compact(cross(phys[0:3], phys[3:6])))
    return p.sigma * (p.c * E + puxb)


# --------------------------------------------------------------------------
# field-level API


@dataclass(frozen=True, eq=False)
class Tendency:
    """Time derivative of a state plus its per-term breakdown (same layout)."""

    values: dict
    terms: dict = field(default_factory=dict)

    def __getattr__(self, name):
        try:
            return self.__dict__["values"][name]
        except KeyError:
            raise AttributeError(name) from None


def _wrap(grid: Grid, ms: ModeSet, arr: np.ndarray, names) -> dict:
    return {n: VectorField(grid, ms.expand(arr[i])) for i, n in enumerate(names)}


def eqnsm_rhs(state: PlasmaState, params: Params, radius: Optional[float] = None,
              check: bool = True) -> Tendency:
    """Tendency of (u, j, E, B), optionally Galerkin-truncated to |xi| <= radius.

    Coefficients on the -n/2 rows lie outside the Galerkin space and are ignored.
    """
    grid = state.grid
    if check:
        _require_solenoidal(state)
    ms = mode_set(grid, radius)
    Y = ms.compress(state.stacked())
    terms = eqnsm_terms(ms, Y, params)
    total = sum(terms.values())
    return Tendency(
        _wrap(grid, ms, total, PlasmaState.names),
        {k: _wrap(grid, ms, v, PlasmaState.names) for k, v in terms.items()},
    )


def nsmo_ohm(u: VectorField, E: VectorField, B: VectorField, params: Params,
             radius: Optional[float] = None) -> VectorField:
    grid = _check_grids(u, E, B)
    ms = mode_set(grid, radius)
    Y = ms.compress(np.stack([u.coeffs, E.coeffs, B.coeffs]))
    return VectorField(grid, ms.expand(ohm_current(ms, Y, params)))


def nsmo_rhs(state: LimitState, params: Params, radius: Optional[float] = None,
             check: bool = True) -> Tendency:
    grid = state.grid
    if check:
        _require_solenoidal(state)
    ms = mode_set(grid, radius)
    Y = ms.compress(state.stacked())
    terms = nsmo_terms(ms, Y, params)
    total = sum(terms.values())
    return Tendency(
        _wrap(grid, ms, total, LimitState.names),
        {k: _wrap(grid, ms, v, LimitState.names) for k, v in terms.items()},
    )


def nsm_species_rhs(S: SpeciesState, params: Params, radius: Optional[float] = None) -> Tendency:
    """Tendency of the species form, evaluated directly from the two momentum equations.

    du+/dt = P(-u+.grad u+ + (c E + u+ x B)/eps) + mu lap u+ - (u+ - u-)/(2 sigma eps^2)
    du-/dt = P(-u-.grad u- - (c E + u- x B)/eps) + mu lap u- + (u+ - u-)/(2 sigma eps^2)
    dE/dt  = c curl B - c (u+ - u-)/(2 eps),   dB/dt = -c curl E
    """
    grid = S.grid
    p = params
    ms = mode_set(grid, radius)
    up, um, E, B = ms.compress(S.stacked())
    d = grid.d
    phys = ms.to_physical(np.concatenate([up, um, B, ms.gradient(up).reshape(3 * d, -1),
                                          ms.gradient(um).reshape(3 * d, -1)]))
    upp, ump, Bp = phys[0:3], phys[3:6], phys[6:9]
    gp = phys[9 : 9 + 3 * d].reshape((d, 3) + phys.shape[1:])
    gm = phys[9 + 3 * d :].reshape((d, 3) + phys.shape[1:])
    Ep = ms.to_physical(E)
    fp = -advect_phys(upp, gp) + (p.c * Ep + cross(upp, Bp)) / p.eps
    fm = -advect_phys(ump, gm) - (p.c * Ep + cross(ump, Bp)) / p.eps
    np_, nm_ = ms.leray(ms.to_compact(np.concatenate([fp, fm])).reshape(2, 3, -1))
    drag = (up - um) / (2 * p.sigma * p.eps**2)
    out = np.stack([
        np_ - p.mu * ms.k2 * up - drag,
        nm_ - p.mu * ms.k2 * um + drag,
        p.c * ms.curl(B) - p.c * (up - um) / (2 * p.eps),
        -p.c * ms.curl(E),
    ])
    return Tendency(_wrap(grid, ms, out, SpeciesState.names))


# --------------------------------------------------------------------------
# per-mode linear operator


def _cross_matrix(xi) -> np.ndarray:
    x, y, z = xi
    return np.array([[0, -z, y], [z, 0, -x], [-y, x, 0]], dtype=float)


def linear_block(xi, params: Params, system: str = "eqnsm") -> np.ndarray:
    """Dense per-mode matrix of the linear part acting on stacked coefficients.

    ``eqnsm``: 12 x 12 on (u, j, E, B); ``nsmo``: 9 x 9 on (u, E, B).
    """
    xi = np.asarray(xi, dtype=float).ravel()
    xi = np.concatenate([xi, np.zeros(3 - xi.size)])
    p = params
    k2 = float(xi @ xi)
    I = np.eye(3)
    C = 1j * _cross_matrix(xi)
    if system == "eqnsm":
        A = np.zeros((12, 12), dtype=complex)
        ie2 = 1.0 / p.eps**2
        A[0:3, 0:3] = -p.mu * k2 * I
        A[3:6, 3:6] = (-p.mu * k2 - ie2 / p.sigma) * I
        A[3:6, 6:9] = p.c * ie2 * I
        A[6:9, 3:6] = -p.c * I
        A[6:9, 9:12] = p.c * C
        A[9:12, 6:9] = -p.c * C
        return A
    if system == "nsmo":
        A = np.zeros((9, 9), dtype=complex)
        A[0:3, 0:3] = -p.mu * k2 * I
        A[3:6, 3:6] = -p.sigma * p.c**2 * I
        A[3:6, 6:9] = p.c * C
        A[6:9, 3:6] = -p.c * C
        return A
    raise ValueError(f"unknown system {system!r}")


def kvec_sq(kvec: np.ndarray) -> np.ndarray:
    return np.sum(kvec**2, axis=0)


def field_blocks(kvec: np.ndarray, params: Params, system: str) -> np.ndarray:
    """Batched electromagnetic sub-blocks for the mode set, shape (nmodes, q, q).

    ``eqnsm``: q = 9 on (j, E, B); ``nsmo``: q = 6 on (E, B).  The velocity
    block is the scalar -mu |xi|^2 and is propagated in closed form.
    """
    p = params
    nm = kvec.shape[1]
    C = np.zeros((nm, 3, 3), dtype=complex)
    x, y, z = kvec
    C[:, 0, 1], C[:, 0, 2] = -1j * z, 1j * y
    C[:, 1, 0], C[:, 1, 2] = 1j * z, -1j * x
    C[:, 2, 0], C[:, 2, 1] = -1j * y, 1j * x
    I = np.eye(3)
    if system == "eqnsm":
        ie2 = 1.0 / p.eps**2
        A = np.zeros((nm, 9, 9), dtype=complex)
        A[:, 0:3, 0:3] = -(p.mu * kvec_sq(kvec)[:, None, None] + ie2 / p.sigma) * I
        A[:, 0:3, 3:6] = p.c * ie2 * I
        A[:, 3:6, 0:3] = -p.c * I
        A[:, 3:6, 6:9] = p.c * C
        A[:, 6:9, 3:6] = -p.c * C
        return A
    if system == "nsmo":
        A = np.zeros((nm, 6, 6), dtype=complex)
        A[:, 0:3, 0:3] = -p.sigma * p.c**2 * I
        A[:, 0:3, 3:6] = p.c * C
        A[:, 3:6, 0:3] = -p.c * C
        return A
    raise ValueError(f"unknown system {system!r}")


def project_state(state):
    """Leray-project every field of a state."""
    return type(state)(*(leray_project(f) for f in state.fields()), t=state.t)
