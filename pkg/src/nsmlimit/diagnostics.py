"""Energy functionals, residuals and time-series reports.

Everything is assembled from dyadic block energies, so the same code serves
single states (blocks computed on the spot) and trajectories (blocks
recorded by the integrator at every step).
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .besov import FrequencyWeight, _weights, envelope_from_tails, hs_tails
from .dyadic import block_energies, dyadic_profile
from .systems import LimitState, Params, PlasmaState, nsmo_ohm


def _grad_blocks(f) -> np.ndarray:
    prof = dyadic_profile(f.grid)
    power = (f.grid.k2 * np.sum(np.abs(f.coeffs) ** 2, axis=0)).ravel()
    return (prof.mult.reshape(prof.nblocks, -1) ** 2) @ power


def _sw(nb: int, s: float, weight: Optional[FrequencyWeight]) -> np.ndarray:
    """omega_k^2 2^{2ks} for k = -1..nb-2."""
    k = np.arange(-1, nb - 1)
    return _weights(nb, weight) ** 2 * 2.0 ** (2 * k * s)


def state_blocks(state, params: Params) -> dict:
    """Block energies of u, j, E, B, grad u, grad j (j from Ohm's law for limit states)."""
    if isinstance(state, PlasmaState):
        j = state.j
    elif isinstance(state, LimitState):
        j = nsmo_ohm(state.u, state.E, state.B, params)
    else:
        raise TypeError(f"unsupported state type {type(state).__name__}")
    return {
        "u": block_energies(state.u),
        "j": block_energies(j),
        "E": block_energies(state.E),
        "B": block_energies(state.B),
        "gu": _grad_blocks(state.u),
        "gj": _grad_blocks(j),
        "bulk": isinstance(state, PlasmaState),
    }


def energy_terms(blocks: dict, params: Params, weight=None, bulk: bool = True) -> np.ndarray:
    """Per-block contributions to the energy functional, shape (nblocks,)."""
    nb = blocks["u"].size
    ws, wsp = _sw(nb, params.s, weight), _sw(nb, params.s_prime, weight)
    out = wsp * blocks["u"] + ws * (blocks["E"] + blocks["B"])
    if bulk:
        out = out + ws * params.eps**2 * blocks["j"]
    return out


def dissipation_terms(blocks: dict, params: Params, weight=None, bulk: bool = True) -> np.ndarray:
    nb = blocks["u"].size
    ws, wsp = _sw(nb, params.s, weight), _sw(nb, params.s_prime, weight)
    out = params.mu * wsp * blocks["gu"] + ws * blocks["j"] / params.sigma
    if bulk:
        out = out + params.mu * params.eps**2 * ws * blocks["gj"]
    return out


def energy_E(state, params: Params, weight: Optional[FrequencyWeight] = None) -> float:
    """||u||^2_{H^s'} + ||eps j||^2_{H^s} + ||E||^2_{H^s} + ||B||^2_{H^s} (no j term for limit states)."""
    b = state_blocks(state, params)
    return float(energy_terms(b, params, weight, b["bulk"]).sum())


def dissipation_D(state, params: Params, weight: Optional[FrequencyWeight] = None) -> float:
    """mu ||grad u||^2_{H^s'} + mu ||eps grad j||^2_{H^s} + ||j||^2_{H^s} / sigma."""
    b = state_blocks(state, params)
    return float(dissipation_terms(b, params, weight, b["bulk"]).sum())


def tail_fraction(state, k0: int, params: Params) -> float:
    """Share of the energy functional carried by blocks k > k0 (0 for the zero state)."""
    if k0 < -1:
        raise ValueError("k0 must be >= -1")
    b = state_blocks(state, params)
    terms = energy_terms(b, params, None, b["bulk"])
    total = terms.sum()
    if total == 0:
        return 0.0
    return float(terms[k0 + 2 :].sum() / total)


def _diff_fields(A, B, params):
    if A.grid != B.grid:
        raise ValueError("difference functionals need states on one grid")
    ja = A.j if isinstance(A, PlasmaState) else nsmo_ohm(A.u, A.E, A.B, params)
    jb = B.j if isinstance(B, PlasmaState) else nsmo_ohm(B.u, B.E, B.B, params)
    return A.u - B.u, ja - jb, A.E - B.E, A.B - B.B


def diff_terms(blocks: dict, params: Params, weight=None) -> tuple[np.ndarray, np.ndarray]:
    """Per-block terms of the difference energy and dissipation from difference block energies."""
    nb = blocks["u"].size
    ws, wsp = _sw(nb, params.s, weight), _sw(nb, params.s_prime, weight)
    e = wsp * blocks["u"] + ws * (blocks["E"] + blocks["B"])
    d = params.mu * wsp * blocks["gu"] + ws * blocks["j"] / params.sigma
    return e, d


def diff_functionals(A, B, params: Params, weight=None) -> tuple[float, float]:
    """(||du||^2_{H^s'} + ||dE||^2_{H^s} + ||dB||^2_{H^s},  mu ||grad du||^2_{H^s'} + ||dj||^2_{H^s} / sigma)."""
    du, dj, dE, dB = _diff_fields(A, B, params)
    blocks = {"u": block_energies(du), "j": block_energies(dj), "E": block_energies(dE),
              "B": block_energies(dB), "gu": _grad_blocks(du)}
    e, d = diff_terms(blocks, params, weight)
    return float(e.sum()), float(d.sum())


def nsmo_residual(state: PlasmaState, params: Params) -> float:
    """||j - sigma (c E + P(u x B))||_{H^s} / (1 + sqrt(energy functional))."""
    defect = state.j - nsmo_ohm(state.u, state.E, state.B, params)
    return _residual_from(block_energies(defect), energy_E(state, params), params.s)


def _residual_from(blocks_ohm: np.ndarray, e_cal: float, s: float) -> float:
    num = math.sqrt(float((_sw(blocks_ohm.size, s, None) * blocks_ohm).sum()))
    return num / (1.0 + math.sqrt(e_cal))


# --------------------------------------------------------------------------
# trajectory functionals


def _need_records(traj, n: int = 2):
    if len(traj.records) < n:
        raise ValueError(f"trajectory needs at least {n} records, has {len(traj.records)}")


def energy_law_defects(traj) -> np.ndarray:
    """Per-step defect of the L2 energy law, divided by the step size.

    Each step contributes (E1 - E0)/h + (D0 + D1)/2 - h (D1' - D0')/12: the
    trapezoid rule with its endpoint-derivative correction, using the
    recorded derivative of the dissipation.
    """
    _need_records(traj)
    t = np.asarray(traj.times)
    h = np.diff(t)
    e = traj.series("e_l2")
    d = traj.series("diss")
    dd = traj.series("diss_dot")
    return (np.diff(e) + 0.5 * h * (d[1:] + d[:-1]) - h**2 / 12 * (dd[1:] - dd[:-1])) / h


def l2_energy_residual(traj, params: Params = None) -> float:
    """max_steps |dE_l2/dt + dissipation| / E_l2(0); 0 for the zero run."""
    defects = energy_law_defects(traj)
    e0 = traj.records[0]["e_l2"]
    if e0 == 0:
        return 0.0 if not np.any(defects) else float("inf")
    return float(np.abs(defects).max() / e0)


def _trapezoid(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Running trapezoid integral, same length as t."""
    out = np.zeros_like(y, dtype=float)
    if y.size > 1:
        out[1:] = np.cumsum(0.5 * np.diff(t) * (y[1:] + y[:-1]))
    return out


def dtj_lowfreq_series(traj, k0: int, params: Params) -> np.ndarray:
    """||eps^2 d_t j||^2_{H^s_{<=k0}} at every record."""
    if traj.system != "eqnsm" or "dtj" not in traj.records[0]["blocks"]:
        raise ValueError("trajectory carries no current-tendency records")
    b = traj.block_series("dtj")
    w = _sw(b.shape[1], params.s, None)
    return (b[:, : k0 + 2] * w[: k0 + 2]).sum(axis=1)


def dtj_lowfreq_integral(traj, k0: int, params: Params) -> float:
    """Trapezoid quadrature of ||eps^2 d_t j||^2_{H^s_{<=k0}} over the run."""
    if k0 < -1:
        raise ValueError("k0 must be >= -1")
    _need_records(traj)
    y = dtj_lowfreq_series(traj, k0, params)
    return float(_trapezoid(np.asarray(traj.times), y)[-1])


# --------------------------------------------------------------------------
# envelopes


def energy_envelope(blocks: dict, params: Params, bulk: bool = True):
    """Frequency envelope (delta = 1/2) from the block tails of the energy functional."""
    return envelope_from_tails(hs_tails(energy_terms(blocks, params, None, bulk)))


def envelope_from_state(state, params: Params) -> FrequencyWeight:
    b = state_blocks(state, params)
    return energy_envelope(b, params, b["bulk"])[0]


# --------------------------------------------------------------------------
# reports


@dataclass
class EnergyReport:
    """Column-oriented time series plus a JSON-ready summary.

    Column order: t, dt, E_l2, diss, E_cal, D_cal, [E_cal_w, D_cal_w],
    then E_low_k0 / E_high_k0 for every k0, law_residual, then dtj_int_k0
    for every k0 and nsmo_residual (bulk runs only).
    """

    columns: dict = field(default_factory=dict)
    summary: dict = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.columns)

    def __getitem__(self, key: str) -> np.ndarray:
        return self.columns[key]

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def to_csv(self, path) -> None:
        names = self.names
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(names)
            for i in range(len(self)):
                w.writerow([repr(float(self.columns[n][i])) for n in names])

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.summary, fh, indent=2, sort_keys=True)


def build_report(traj, params: Params, k0s: Sequence[int] = (), weight=None) -> EnergyReport:
    if not traj.records:
        return EnergyReport()
    bulk = traj.system == "eqnsm"
    t = np.asarray(traj.times, dtype=float)
    nrec = len(traj.records)
    cols = {"t": t, "dt": np.concatenate([[0.0], np.diff(t)])}
    cols["E_l2"] = traj.series("e_l2")
    cols["diss"] = traj.series("diss")
    e_cal = np.array([energy_terms(r["blocks"], params, None, bulk).sum() for r in traj.records])
    d_cal = np.array([dissipation_terms(r["blocks"], params, None, bulk).sum() for r in traj.records])
    cols["E_cal"], cols["D_cal"] = e_cal, d_cal
    if weight is not None:
        cols["E_cal_w"] = np.array([energy_terms(r["blocks"], params, weight, bulk).sum() for r in traj.records])
        cols["D_cal_w"] = np.array([dissipation_terms(r["blocks"], params, weight, bulk).sum()
                                    for r in traj.records])
    for k0 in k0s:
        terms = np.array([energy_terms(r["blocks"], params, None, bulk) for r in traj.records])
        cols[f"E_low_{k0}"] = terms[:, : k0 + 2].sum(axis=1)
        cols[f"E_high_{k0}"] = terms[:, k0 + 2 :].sum(axis=1)
    law = np.zeros(nrec)
    if nrec > 1:
        law[1:] = energy_law_defects(traj)
    cols["law_residual"] = law
    if bulk:
        for k0 in k0s:
            cols[f"dtj_int_{k0}"] = _trapezoid(t, dtj_lowfreq_series(traj, k0, params))
        cols["nsmo_residual"] = np.array(
            [_residual_from(r["blocks"]["ohm"], e, params.s) for r, e in zip(traj.records, e_cal)]
        )
    e0 = cols["E_l2"][0]
    summary = {
        "system": traj.system,
        "params": {k: getattr(params, k) for k in ("mu", "sigma", "c", "eps", "s", "s_prime")},
        "steps": nrec - 1,
        "t_final": float(t[-1]),
        "uniform_dt": traj.uniform,
        "E_l2_initial": float(e0),
        "E_l2_final": float(cols["E_l2"][-1]),
        "E_cal_initial": float(e_cal[0]),
        "E_cal_final": float(e_cal[-1]),
        "E_cal_max": float(e_cal.max()),
        "D_cal_integral": float(_trapezoid(t, d_cal)[-1]),
        "energy_law_residual": float(np.abs(law).max() / e0) if e0 > 0 else 0.0,
        "max_relative_divergence": float(traj.max_divergence),
        "E_cal_nonincreasing_violation": float(max(0.0, np.diff(e_cal).max(initial=0.0)) / e_cal[0])
        if e_cal[0] > 0 else 0.0,
    }
    if weight is not None:
        summary["E_cal_w_initial"] = float(cols["E_cal_w"][0])
        summary["E_cal_w_max"] = float(cols["E_cal_w"].max())
    if bulk:
        summary["nsmo_residual_final"] = float(cols["nsmo_residual"][-1])
        for k0 in k0s:
            summary[f"dtj_integral_{k0}"] = float(cols[f"dtj_int_{k0}"][-1])
    return EnergyReport(cols, summary)
