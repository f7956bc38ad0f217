import json
import math

import numpy as np
import pytest
import scipy.integrate
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from nsmlimit.diagnostics import (
    build_report,
    diff_functionals,
    dissipation_D,
    dtj_lowfreq_integral,
    energy_E,
    envelope_from_state,
    l2_energy_residual,
    nsmo_residual,
    tail_fraction,
)
from nsmlimit.initial import make_initial_state
from nsmlimit.integrator import StepperConfig, integrate
from nsmlimit.spectral import VectorField, build_grid, vector_to_spectral
from nsmlimit.systems import LimitState, Params, PlasmaState, linear_block

G = build_grid(2, 16)
X, Y = G.points()
ZERO = VectorField.zeros(G)


def wave(k, comp, amp=1.0):
    """amp * e_comp cos(k . x); comp is chosen orthogonal to k so the field is solenoidal."""
    v = np.zeros((3,) + G.shape)
    v[comp] = amp * np.cos(k[0] * X + k[1] * Y)
    return vector_to_spectral(v, G)


# |xi| = sqrt 2, 2 sqrt 2 and 4 sqrt 2 sit where a single dyadic block has multiplier 1
# (blocks 0, 1 and 2), so every H^s weight is an exact power of two.


def test_single_block_energy_and_dissipation():
    p = Params(mu=0.3, sigma=2.0, eps=0.2, s=1.7, s_prime=1.2)
    u, j = wave((1, 1), 2, 1.0), wave((1, 1), 2, 0.5)
    E, B = wave((2, 2), 2, 0.7), wave((4, 4), 2, 0.3)
    s = PlasmaState(u, j, E, B)
    w = lambda k, r: 2.0 ** (2 * k * r)
    expect_e = w(0, 1.2) * 0.5 + p.eps**2 * 0.125 + w(1, 1.7) * 0.245 + w(2, 1.7) * 0.045
    expect_d = p.mu * w(0, 1.2) * 2 * 0.5 + p.mu * p.eps**2 * 2 * 0.125 + 0.125 / p.sigma
    assert energy_E(s, p) == pytest.approx(expect_e, rel=1e-12)
    assert dissipation_D(s, p) == pytest.approx(expect_d, rel=1e-12)
    lim = LimitState(u, E, B)
    assert energy_E(lim, p) == pytest.approx(expect_e - p.eps**2 * 0.125, rel=1e-12)


@given(st.floats(0.05, 20.0), st.integers(0, 50))
def test_quadratic_scaling(lam, seed):
    p = Params()
    s = make_initial_state(G, p, "random", seed=seed, target_energy=0.3, j_init="random")
    assert energy_E(s.scaled(lam), p) == pytest.approx(lam**2 * energy_E(s, p), rel=1e-11)
    assert dissipation_D(s.scaled(lam), p) == pytest.approx(lam**2 * dissipation_D(s, p), rel=1e-11)


def test_tail_fraction_examples():
    p = Params(s=2.0, s_prime=2.0)
    s = PlasmaState(wave((1, 1), 2), ZERO, ZERO, wave((4, 4), 2))
    share = 16**2 * 0.5 / (0.5 + 16**2 * 0.5)
    assert tail_fraction(s, 0, p) == pytest.approx(share, rel=1e-12)
    assert tail_fraction(s, 1, p) == pytest.approx(share, rel=1e-12)
    assert tail_fraction(s, 2, p) == pytest.approx(0.0, abs=1e-15)
    assert tail_fraction(s, -1, p) == pytest.approx(1.0, abs=1e-15)
    assert tail_fraction(PlasmaState.zeros(G), 0, p) == 0.0
    with pytest.raises(ValueError):
        tail_fraction(s, -2, p)


def test_diff_functionals_examples():
    p = Params(mu=0.5, sigma=2.0, s=1.6)
    a = PlasmaState(wave((1, 1), 2), wave((1, 1), 2, 0.4), wave((2, 2), 2), ZERO)
    assert diff_functionals(a, a, p) == (0.0, 0.0)
    e, d = diff_functionals(a, PlasmaState.zeros(G), p)
    assert e == pytest.approx(0.5 + 2 ** (3.2) * 0.5, rel=1e-12)
    assert d == pytest.approx(0.5 * 2 * 0.5 + 0.08 / 2.0, rel=1e-12)
    # the limit member contributes its Ohm current
    lim = LimitState(ZERO, wave((1, 1), 2), ZERO)
    e, d = diff_functionals(PlasmaState.zeros(G), lim, p)
    assert e == pytest.approx(0.5, rel=1e-12)
    assert d == pytest.approx((p.sigma * p.c) ** 2 * 0.5 / p.sigma, rel=1e-12)
    with pytest.raises(ValueError):
        diff_functionals(a, PlasmaState.zeros(build_grid(2, 8)), p)


def test_nsmo_residual_closed_form():
    p = Params(sigma=1.5, c=0.8, eps=0.3)
    E = wave((1, 1), 2)
    s = PlasmaState(ZERO, E * (2 * p.sigma * p.c), E, ZERO)
    e_cal = 0.5 + p.eps**2 * (2 * p.sigma * p.c) ** 2 * 0.5
    expect = p.sigma * p.c * math.sqrt(0.5) / (1 + math.sqrt(e_cal))
    assert nsmo_residual(s, p) == pytest.approx(expect, rel=1e-12)
    ohm = make_initial_state(G, p, "random", seed=3, target_energy=0.2, j_init="ohm")
    assert nsmo_residual(ohm, p) <= 1e-14


def test_dtj_integral_closed_form():
    # with u = 0 and every field a function of x + y, the Lorentz forces are
    # gradients and the dynamics reduce to one linear 12 x 12 system per mode
    p = Params(eps=0.6, sigma=1.2, mu=0.2)
    s = PlasmaState(ZERO, wave((1, 1), 2, 0.2), wave((1, 1), 2), ZERO)
    T = 0.5
    traj, _ = integrate(s, T, p, StepperConfig(dt=2.5e-4, dt_min=2.5e-4))
    got = dtj_lowfreq_integral(traj, 3, p)
    A = linear_block((1, 1), p)
    y0 = np.zeros(12, dtype=complex)
    y0[5], y0[8] = 0.1, 0.5  # cos coefficient 1/2 at +xi

    def integrand(t):
        dj = p.eps**2 * (A @ (scipy.linalg.expm(t * A) @ y0))[3:6]
        return 2 * float(np.sum(np.abs(dj) ** 2))

    ref, _ = scipy.integrate.quad(integrand, 0, T, epsabs=0, epsrel=1e-12, limit=200)
    assert got == pytest.approx(ref, rel=1e-6)
    assert np.abs(traj.final.u.coeffs).max() <= 1e-14
    # the low-pass cut excludes the mode once k0 drops below its block
    assert dtj_lowfreq_integral(traj, -1, p) <= 1e-30 * ref


def test_l2_energy_residual():
    p = Params()
    s = make_initial_state(G, p, "random", seed=0, target_energy=0.05, j_init="random")
    # halving the whole graded schedule (step cap, floor and grade together)
    layer = p.sigma * p.eps**2 / 64
    res = [l2_energy_residual(integrate(s, 0.2, p, StepperConfig(dt=4e-3 / f, dt_min=layer / f, grade=32 * f,
                                                                 nonlinear=False))[0])
           for f in (1, 2)]
    # the linear flow is exact, so only the corrected trapezoid's fourth-order error is left
    assert res[1] <= 1e-9
    assert 12.0 <= res[0] / res[1] <= 20.0
    traj, _ = integrate(PlasmaState.zeros(G), 0.1, p)
    assert l2_energy_residual(traj) == 0.0


def test_envelope_from_state_dominates_weights():
    p = Params()
    s = make_initial_state(G, p, "random", seed=1, target_energy=0.1)
    w = envelope_from_state(s, p)
    assert w.omega[0] == 1.0 and np.all(np.diff(w.omega) >= 0)


def test_report_columns_and_files(tmp_path):
    p = Params()
    s = make_initial_state(G, p, "random", seed=2, target_energy=0.05, j_init="ohm")
    traj, rep = integrate(s, 0.05, p, StepperConfig(dt=0.01), k0s=(1, 2))
    names = rep.names
    assert names[:6] == ["t", "dt", "E_l2", "diss", "E_cal", "D_cal"]
    for col in ("E_low_1", "E_high_2", "law_residual", "dtj_int_1", "nsmo_residual"):
        assert col in names
    np.testing.assert_allclose(rep["E_low_1"] + rep["E_high_1"], rep["E_cal"], rtol=1e-13)
    # records see the solver's truncated mode set, where Ohm-prepared data has no defect
    assert rep["E_cal"][0] == pytest.approx(energy_E(traj.states[0], p), rel=1e-12)
    assert rep["nsmo_residual"][0] <= 1e-14
    rep.to_csv(tmp_path / "a.csv")
    rows = (tmp_path / "a.csv").read_text().splitlines()
    assert rows[0].split(",") == names and len(rows) == len(rep) + 1
    rep.to_json(tmp_path / "a.json")
    summary = json.loads((tmp_path / "a.json").read_text())
    assert summary["steps"] == len(rep) - 1 and summary["system"] == "eqnsm"
    again = build_report(traj, p, (1, 2))
    assert again.summary == rep.summary
