"""Exponential time stepping for the Galerkin-truncated systems.

The linear part of both systems is block diagonal in frequency: a scalar
viscous factor on u and a small dense block on the electromagnetic variables
((j, E, B) for the bulk system, (E, B) for the limit one).  Those blocks are
propagated exactly through matrix exponentials and phi-functions cached per
step size; the quadratic terms are explicit.

Schemes
-------
``etd2``
    Second-order exponential Runge-Kutta (Cox-Matthews)::

        a  = e^{hL} y + h phi_1(hL) N(y)
        y' = a + h phi_2(hL) (N(a) - N(y))

    As eps -> 0 the current rows of ``h phi_2`` tend to sigma eps^2, so the
    update reproduces Ohm's law including the motional term.  Default.
``strang-exp``
    e^{hL/2}, explicit midpoint for N, e^{hL/2}.  Second order for fixed eps
    but the current lags the motional EMF by O(h) when eps^2 << h.

Step sizes follow a graded schedule: dt ~ t/grade, floored at ``dt_min`` and
capped by the advective limit, snapped to dt_max / 2^k so only a handful of
propagator sets are ever built.  This resolves the initial current layer of
width sigma eps^2 without shrinking the step for the rest of the run.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels
from .expm import expm_batch, phi_batch, phi_scalar
from .modes import ModeSet, cross, default_radius, mode_set
from .spectral import Grid, VectorField
from .systems import (
    LimitState,
    Params,
    PlasmaState,
    _require_solenoidal,
    eqnsm_nonlinear,
    field_blocks,
    nsmo_nonlinear,
)

SCHEMES = ("etd2", "strang-exp")
SYSTEMS = ("eqnsm", "nsmo")
BLOWUP_FACTOR = 10.0
# steps per relaxation time sigma eps^2 at the start of a bulk run
LAYER_STEPS = 64


class IntegrationError(RuntimeError):
    pass


class NonFiniteError(IntegrationError):
    pass


class BlowUpError(IntegrationError):
    pass


@dataclass(frozen=True)
class StepperConfig:
    """Time-stepping controls.

    ``dt`` is the largest step used (dt_max).  ``dt_min=None`` picks
    ``sigma eps^2 / LAYER_STEPS`` for the bulk system so its initial layer is resolved.
    ``m`` is the Friedrichs radius (None: the dealiased Nyquist ball).
    ``nonlinear=False`` and ``maxwell_only=True`` are harness modes for
    linear-exactness and conservation checks.
    """

    dt: float = 5e-3
    scheme: str = "etd2"
    cfl_safety: float = 0.5
    m: Optional[float] = None
    dt_min: Optional[float] = None
    grade: float = 32.0
    nonlinear: bool = True
    maxwell_only: bool = False
    save_every: int = 0
    cache_size: int = 24

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
        if self.m is not None and not self.m > 0:
            raise ValueError("Friedrichs radius m must be positive")
        if self.dt_min is not None and not 0 < self.dt_min <= self.dt:
            raise ValueError("dt_min must lie in (0, dt]")
        if not self.grade > 0:
            raise ValueError("grade must be positive")
        if self.save_every < 0:
            raise ValueError("save_every must be >= 0")

    def radius(self, grid: Grid) -> float:
        m = default_radius(grid) if self.m is None else self.m
        if m > grid.max_radius:
            raise ValueError(f"Friedrichs radius {m} exceeds the grid radius {grid.max_radius:.3f}")
        return m


def system_of(state) -> str:
    if isinstance(state, PlasmaState):
        return "eqnsm"
    if isinstance(state, LimitState):
        return "nsmo"
    raise TypeError(f"cannot integrate a {type(state).__name__}")


# --------------------------------------------------------------------------
# propagators


@dataclass
class _Propagator:
    eu: np.ndarray
    p1u: np.ndarray
    p2u: np.ndarray
    eF: np.ndarray
    p1F: np.ndarray
    p2F: np.ndarray


class Solver:
    """Stepper bound to one grid, parameter set, system and configuration.

    Works on compact arrays Y of shape (nfields, 3, nmodes).
    """

    def __init__(self, grid: Grid, params: Params, system: str = "eqnsm",
                 config: StepperConfig = StepperConfig()):
        if system not in SYSTEMS:
            raise ValueError(f"unknown system {system!r}")
        self.grid, self.params, self.system, self.config = grid, params, system, config
        self.ms: ModeSet = mode_set(grid, config.radius(grid))
        self.nfields = 4 if system == "eqnsm" else 3
        blocks = field_blocks(self.ms.kvec, params, system)
        if config.maxwell_only and system == "eqnsm":
            blocks[:, 0:3, :] = 0
            blocks[:, :, 0:3] = 0
        self._blocks = blocks
        self._cache: OrderedDict = OrderedDict()

    # -- linear part ------------------------------------------------------
    def linear(self, Y: np.ndarray) -> np.ndarray:
        out = np.empty_like(Y)
        out[0] = -self.params.mu * self.ms.k2 * Y[0]
        f = Y[1:].reshape(-1, self.ms.nmodes)
        out[1:] = kernels.block_matvec(self._blocks, f).reshape(Y[1:].shape)
        return out

    def propagator(self, h: float) -> _Propagator:
        key = float(h)
        prop = self._cache.get(key)
        if prop is not None:
            self._cache.move_to_end(key)
            return prop
        eu, p1u, p2u = phi_scalar(-self.params.mu * self.ms.k2 * h)
        if self.config.scheme == "etd2":
            eF, p1F, p2F = phi_batch(h * self._blocks)
        else:
            eF = expm_batch(h * self._blocks)
            p1F = p2F = None
        prop = _Propagator(eu, p1u, p2u, np.ascontiguousarray(eF),
                           None if p1F is None else np.ascontiguousarray(p1F),
                           None if p2F is None else np.ascontiguousarray(p2F))
        self._cache[key] = prop
        if len(self._cache) > self.config.cache_size:
            self._cache.popitem(last=False)
        return prop

    def apply_linear_flow(self, Y: np.ndarray, h: float) -> np.ndarray:
        """e^{hL} Y."""
        prop = self.propagator(h)
        out = np.empty_like(Y)
        out[0] = prop.eu * Y[0]
        out[1:] = kernels.block_matvec(prop.eF, Y[1:].reshape(-1, self.ms.nmodes)).reshape(Y[1:].shape)
        return out

    # -- nonlinear part ---------------------------------------------------
    def nonlinear(self, Y: np.ndarray):
        """(N(Y), aux) with aux = P(u x B) for the bulk system, the Ohm current for the limit."""
        if not self.config.nonlinear:
            aux = np.zeros_like(Y[0])
            if self.system == "nsmo":
                aux = self.params.sigma * self.params.c * Y[1]
            return np.zeros_like(Y), aux
        if self.system == "eqnsm":
            return eqnsm_nonlinear(self.ms, Y, self.params, want_uxb=True)
        return nsmo_nonlinear(self.ms, Y, self.params, want_j=True)

    # -- one step ---------------------------------------------------------
    def step(self, Y: np.ndarray, h: float, N0: Optional[np.ndarray] = None) -> np.ndarray:
        if self.config.scheme == "etd2":
            Y1 = self._etd2(Y, h, N0)
        else:
            Y1 = self._strang(Y, h)
        Y1 = self.ms.leray(Y1)
        if not np.all(np.isfinite(Y1)):
            raise NonFiniteError(f"non-finite coefficients after a step of size {h:g}")
        return Y1

    def _etd2(self, Y, h, N0):
        prop = self.propagator(h)
        nm = self.ms.nmodes
        shape_f = Y[1:].shape
        if N0 is None:
            N0 = self.nonlinear(Y)[0]
        A = np.empty_like(Y)
        A[0] = kernels.scalar_combine(prop.eu, Y[0], prop.p1u, N0[0], h)
        A[1:] = kernels.etd_combine(prop.eF, Y[1:].reshape(-1, nm), prop.p1F,
                                    N0[1:].reshape(-1, nm), h).reshape(shape_f)
        if not self.config.nonlinear:
            return A
        dN = self.nonlinear(A)[0] - N0
        out = np.empty_like(Y)
        out[0] = A[0] + h * prop.p2u * dN[0]
        out[1:] = A[1:] + h * kernels.block_matvec(prop.p2F, dN[1:].reshape(-1, nm)).reshape(shape_f)
        return out

    def _strang(self, Y, h):
        half = 0.5 * h
        Y = self.apply_linear_flow(Y, half)
        if self.config.nonlinear:
            Ym = Y + half * self.nonlinear(Y)[0]
            Y = Y + h * self.nonlinear(Ym)[0]
        return self.apply_linear_flow(Y, half)

    # -- conversions ------------------------------------------------------
    def compress(self, state) -> np.ndarray:
        return self.ms.compress(state.stacked())

    def expand(self, Y: np.ndarray, t: float):
        arr = self.ms.expand(Y)
        if self.system == "eqnsm":
            return PlasmaState.from_stacked(self.grid, arr, t)
        return LimitState.from_stacked(self.grid, arr, t)

    def dt_floor(self) -> float:
        """Smallest step the graded schedule uses for this member."""
        cfg = self.config
        if cfg.dt_min is not None:
            return cfg.dt_min
        if self.system == "eqnsm" and not cfg.maxwell_only:
            return min(cfg.dt, self.params.sigma * self.params.eps**2 / LAYER_STEPS)
        return cfg.dt

    def advective_speed(self, Y: np.ndarray) -> float:
        """k_max (||u||_inf + eps ||j||_inf) from padded-grid samples."""
        if self.system == "eqnsm":
            phys = self.ms.to_physical(Y[0:2])
            vu = np.sqrt(np.sum(phys[0] ** 2, axis=0)).max()
            vj = np.sqrt(np.sum(phys[1] ** 2, axis=0)).max()
            v = vu + self.params.eps * vj
        else:
            phys = self.ms.to_physical(Y[0])
            v = np.sqrt(np.sum(phys**2, axis=0)).max()
        return float(self.ms.kvec_max * v)


@lru_cache(maxsize=16)
def get_solver(grid: Grid, params: Params, system: str, config: StepperConfig) -> Solver:
    return Solver(grid, params, system, config)


# --------------------------------------------------------------------------
# field-level entry points


def stable_dt(state, params: Params, config: StepperConfig = StepperConfig()) -> float:
    """Advective step limit, capped at ``config.dt``.

    Only cfl_safety / (k_max ||u||_inf + k_max eps ||j||_inf) binds: the stiff
    linear terms are propagated exactly.
    """
    solver = get_solver(state.grid, params, system_of(state), config)
    speed = solver.advective_speed(solver.compress(state))
    if speed <= 0.0:
        return config.dt
    return min(config.dt, config.cfl_safety / speed)


def step(state, dt: float, params: Params, config: StepperConfig = StepperConfig()):
    """Advance a bulk or limit state by one step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    solver = get_solver(state.grid, params, system_of(state), config)
    Y = solver.step(solver.compress(state), dt)
    return solver.expand(Y, state.t + dt)


def graded_dt(t: float, dt_max: float, dt_floor: float, grade: float, cfl_dt: float) -> float:
    """dt_max / 2^k closest from below to min(cfl_dt, max(dt_floor, t / grade))."""
    target = min(dt_max, cfl_dt, max(dt_floor, t / grade))
    k = max(0, math.ceil(math.log2(dt_max / target) - 1e-12))
    return dt_max / 2.0**k


# --------------------------------------------------------------------------
# trajectories


@dataclass
class Trajectory:
    """Snapshots plus per-step diagnostic records.

    ``records[i]`` belongs to ``times[i]``; ``snapshots`` holds (t, state)
    pairs at the save interval, always including both ends.
    """

    system: str
    params: Params
    grid: Grid
    times: list = field(default_factory=list)
    records: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    max_divergence: float = 0.0

    @property
    def dts(self) -> np.ndarray:
        return np.diff(np.asarray(self.times))

    @property
    def uniform(self) -> bool:
        d = self.dts
        return d.size == 0 or bool(np.allclose(d, d[0], rtol=1e-12, atol=0))

    def series(self, key: str) -> np.ndarray:
        return np.array([r[key] for r in self.records])

    def block_series(self, key: str) -> np.ndarray:
        """(nrecords, nblocks) block energies of one recorded quantity."""
        return np.array([r["blocks"][key] for r in self.records])

    @property
    def final(self):
        return self.snapshots[-1][1]

    @property
    def states(self):
        return [s for _, s in self.snapshots]


def _record(solver: Solver, Y: np.ndarray, N: np.ndarray, aux: np.ndarray) -> dict:
    """Block energies, L2 energy, dissipation and its time derivative at one instant."""
    ms, p = solver.ms, solver.params
    mu, sig = p.mu, p.sigma
    dY = solver.linear(Y) + N
    k2 = ms.k2
    be = ms.block_energies
    gbe = ms.grad_block_energies
    u = Y[0]
    if solver.system == "eqnsm":
        j, E, B = Y[1], Y[2], Y[3]
        eps2 = p.eps**2
        dtj = eps2 * dY[1]
        ohm = j - sig * (p.c * E + aux)
        blocks = {"u": be(u), "j": be(j), "E": be(E), "B": be(B), "gu": gbe(u), "gj": gbe(j),
                  "dtj": be(dtj), "ohm": be(ohm)}
        e_l2 = 0.5 * float(np.vdot(Y[0], Y[0]).real + eps2 * np.vdot(j, j).real
                           + np.vdot(E, E).real + np.vdot(B, B).real)
        gu2 = float(np.sum(k2 * np.abs(u) ** 2))
        gj2 = float(np.sum(k2 * np.abs(j) ** 2))
        j2 = float(np.vdot(j, j).real)
        diss = mu * gu2 + mu * eps2 * gj2 + j2 / sig
        diss_dot = 2 * float(np.sum(k2 * np.conj(u) * dY[0]).real * mu
                             + mu * eps2 * np.sum(k2 * np.conj(j) * dY[1]).real
                             + np.vdot(j, dY[1]).real / sig)
    else:
        E, B = Y[1], Y[2]
        j = aux
        blocks = {"u": be(u), "j": be(j), "E": be(E), "B": be(B), "gu": gbe(u)}
        e_l2 = 0.5 * float(np.vdot(u, u).real + np.vdot(E, E).real + np.vdot(B, B).real)
        gu2 = float(np.sum(k2 * np.abs(u) ** 2))
        j2 = float(np.vdot(j, j).real)
        diss = mu * gu2 + j2 / sig
        jt = sig * p.c * dY[1]
        if solver.config.nonlinear:
            phys = ms.to_physical(np.concatenate([u, B, dY[0], dY[2]]))
            jt = jt + sig * ms.leray(ms.to_compact(cross(phys[6:9], phys[3:6]) + cross(phys[0:3], phys[9:12])))
        diss_dot = 2 * float(mu * np.sum(k2 * np.conj(u) * dY[0]).real + np.vdot(j, jt).real / sig)
    return {"blocks": blocks, "e_l2": e_l2, "diss": diss, "diss_dot": diss_dot, "j": j}


class Member:
    """One run inside a lockstep ensemble."""

    def __init__(self, solver: Solver, Y: np.ndarray, t0: float, record: bool = True):
        self.solver = solver
        self.Y = Y
        self.t = t0
        self.record = record
        self.N = None
        self.aux = None
        self.last = None
        self.traj = Trajectory(solver.system, solver.params, solver.grid)

    def evaluate(self):
        self.N, self.aux = self.solver.nonlinear(self.Y)
        rec = _record(self.solver, self.Y, self.N, self.aux)
        self.last = rec
        return rec

    @property
    def state(self):
        return self.solver.expand(self.Y, self.t)


@dataclass
class StepView:
    """What observers see after each step (and once at t0)."""

    index: int
    t: float
    members: Sequence[Member]


def integrate_lockstep(members: Sequence[Member], T: float, config: StepperConfig,
                       observers: Sequence[Callable[[StepView], None]] = (),
                       check_blowup: bool = True) -> list[Trajectory]:
    """Advance all members with one shared step sequence up to time T."""
    if not T >= 0:
        raise ValueError("final time must be non-negative")
    t0 = members[0].t
    floor = min(m.solver.dt_floor() for m in members)
    e0 = []
    for m in members:
        rec = m.evaluate()
        m.traj.times.append(m.t)
        if m.record:
            m.traj.records.append(_strip(rec))
        m.traj.snapshots.append((m.t, m.state))
        e0.append(max(rec["e_l2"], 1e-300))
    for obs in observers:
        obs(StepView(0, t0, members))
    t, n, end = t0, 0, t0 + T
    while end - t > 1e-12 * max(1.0, abs(end)):
        speed = max(m.solver.advective_speed(m.Y) for m in members)
        cfl_dt = config.cfl_safety / speed if speed > 0 else config.dt
        h = graded_dt(t - t0, config.dt, floor, config.grade, cfl_dt)
        last = end - t - h < 1e-6 * h
        if last:
            h = end - t  # absorb rounding leftovers into the final step
        for i, m in enumerate(members):
            try:
                m.Y = m.solver.step(m.Y, h, m.N if m.solver.config.scheme == "etd2" else None)
            except NonFiniteError as exc:
                raise NonFiniteError(f"member {i} at t={t:.6g}, step {n}: {exc}") from None
        t = end if last else t + h
        n += 1
        for i, m in enumerate(members):
            m.t = t
            rec = m.evaluate()
            if check_blowup and rec["e_l2"] > BLOWUP_FACTOR * e0[i]:
                raise BlowUpError(
                    f"member {i}: L2 energy grew from {e0[i]:.3e} to {rec['e_l2']:.3e} by t={t:.6g}"
                )
            m.traj.times.append(t)
            if m.record:
                m.traj.records.append(_strip(rec))
            save = m.solver.config.save_every
            if (save and n % save == 0) or last:
                if m.traj.snapshots[-1][0] != t:
                    m.traj.snapshots.append((t, m.state))
            div = _max_rel_div(m.solver.ms, m.Y)
            m.traj.max_divergence = max(m.traj.max_divergence, div)
        for obs in observers:
            obs(StepView(n, t, members))
    return [m.traj for m in members]


def _strip(rec: dict) -> dict:
    return {k: v for k, v in rec.items() if k != "j"}


def _max_rel_div(ms: ModeSet, Y: np.ndarray) -> float:
    num = np.sqrt(np.sum(np.abs(np.einsum("fam,am->fm", Y, ms.kvec)) ** 2, axis=-1))
    den = np.sqrt(np.sum(ms.k2 * np.sum(np.abs(Y) ** 2, axis=1), axis=-1))
    ok = den > 0
    return float((num[ok] / den[ok]).max()) if ok.any() else 0.0


def integrate(state0, T: float, params: Params, config: StepperConfig = StepperConfig(),
              observers: Sequence[Callable[[StepView], None]] = (), k0s: Sequence[int] = (),
              weight=None, check: bool = True):
    """Integrate a bulk or limit state to time T.

    Returns ``(trajectory, report)`` where the report is the diagnostics
    time series built from the per-step records.
    """
    from .diagnostics import build_report

    if check:
        _require_solenoidal(state0)
    system = system_of(state0)
    solver = get_solver(state0.grid, params, system, config)
    member = Member(solver, solver.compress(state0), state0.t)
    traj = integrate_lockstep([member], T, config, observers)[0]
    return traj, build_report(traj, params, k0s=k0s, weight=weight)
