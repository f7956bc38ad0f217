import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_scalar, random_vector
from nsmlimit import dyadic, spectral
from nsmlimit.spectral import Grid, ScalarField, VectorField, build_grid, to_spectral


def brute_dft(samples, n, d):
    """O(n^{2d}) forward DFT with the 1/n^d normalization."""
    freqs = np.fft.fftfreq(n, 1.0 / n).astype(int)
    pts = list(itertools.product(range(n), repeat=d))
    out = np.zeros((n,) * d, dtype=complex)
    for idx in itertools.product(range(n), repeat=d):
        xi = [freqs[i] for i in idx]
        acc = 0j
        for p in pts:
            acc += samples[p] * np.exp(-2j * np.pi * sum(a * b for a, b in zip(xi, p)) / n)
        out[idx] = acc / n**d
    return out


def brute_idft(coeffs, n, d):
    freqs = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = np.zeros((n,) * d, dtype=complex)
    for p in itertools.product(range(n), repeat=d):
        acc = 0j
        for idx in itertools.product(range(n), repeat=d):
            xi = [freqs[i] for i in idx]
            acc += coeffs[idx] * np.exp(2j * np.pi * sum(a * b for a, b in zip(xi, p)) / n)
        out[p] = acc
    return out


def chi_ref(r):
    """Scalar evaluation of the documented cutoff, written independently of the package."""
    t = (4.0 / 3.0 - r) / (4.0 / 3.0 - 3.0 / 4.0)
    a = math.exp(-1.0 / t) if t > 0 else 0.0
    b = math.exp(-1.0 / (1.0 - t)) if t < 1 else 0.0
    return a / (a + b)


# ---------------------------------------------------------------- grid


def test_grid_sizes():
    g = build_grid(2, 8)
    assert g.size == 64 and g.shape == (8, 8)
    assert g.spacing == pytest.approx(np.pi / 4)
    assert build_grid(3, 32).size == 32768


@pytest.mark.parametrize("d,n", [(1, 8), (4, 8), (2, 7), (2, 6)])
def test_grid_rejects_bad_shapes(d, n):
    with pytest.raises(ValueError):
        Grid(d, n)


def test_lattice_closed_under_negation_except_nyquist():
    g = build_grid(2, 8)
    k = g.kvec[:2].reshape(2, -1).T
    lattice = {tuple(v) for v in k}
    missing = [tuple(v) for v in k if tuple(-v) not in lattice]
    assert missing and all(-4 in v for v in missing)
    assert g.nyquist_mask.sum() == 8 + 8 - 1


# ---------------------------------------------------------------- transforms


def test_cosine_has_two_half_coefficients():
    g = build_grid(2, 8)
    x, _ = g.points()
    f = to_spectral(np.cos(x), g)
    expected = np.zeros(g.shape, complex)
    expected[1, 0] = expected[-1, 0] = 0.5
    np.testing.assert_allclose(f.coeffs, expected, atol=1e-15)
    np.testing.assert_allclose(spectral.from_spectral(f), np.cos(x), atol=1e-14)


def test_constant_and_zero():
    g = build_grid(2, 8)
    f = to_spectral(np.full(g.shape, 2.5), g)
    assert f.coeffs[0, 0] == pytest.approx(2.5)
    assert np.abs(f.coeffs).sum() == pytest.approx(2.5)
    assert not spectral.from_spectral(ScalarField.zeros(g)).any()


@pytest.mark.parametrize("d,n", [(2, 8), (3, 8)])
def test_forward_transform_matches_brute_force(d, n, rng):
    g = build_grid(d, n)
    s = rng.standard_normal(g.shape)
    f = to_spectral(s, g)
    np.testing.assert_allclose(f.coeffs, brute_dft(s, n, d), atol=1e-12, rtol=0)
    assert spectral.hermitian_defect(f.coeffs, d) < 1e-14


@pytest.mark.parametrize("d,n", [(2, 8), (3, 8)])
def test_inverse_transform_matches_brute_force(d, n, rng):
    g = build_grid(d, n)
    f = to_spectral(rng.standard_normal(g.shape), g)
    np.testing.assert_allclose(spectral.from_spectral(f), brute_idft(f.coeffs, n, d).real, atol=1e-12)


def test_non_hermitian_coefficients_rejected(g2):
    c = np.zeros(g2.shape, complex)
    c[1, 2] = 1.0
    with pytest.raises(ValueError):
        spectral.from_spectral(ScalarField(g2, c))


def test_plancherel(g2, rng):
    s = rng.standard_normal(g2.shape)
    f = to_spectral(s, g2)
    assert f.l2_norm() ** 2 == pytest.approx(np.mean(s**2), rel=1e-13)


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 8), (2, 16), (3, 8)]))
def test_round_trip_property(seed, dn):
    g = build_grid(*dn)
    s = np.random.default_rng(seed).standard_normal(g.shape)
    back = spectral.from_spectral(to_spectral(s, g))
    assert np.abs(back - s).max() <= 1e-13 * np.abs(s).max()


# ---------------------------------------------------------------- calculus


def test_laplacian_eigenfunction(g2):
    c = np.zeros(g2.shape, complex)
    c[1, 2] = 1.0  # |xi|^2 = 5
    f = ScalarField(g2, c)
    np.testing.assert_allclose(spectral.laplacian(f).coeffs, -5 * c)


def test_derivative_identities(g3, rng):
    f = random_scalar(g3, rng)
    lap = spectral.laplacian(f)
    dg = spectral.div(spectral.grad(f))
    assert (dg - lap).l2_norm() <= 1e-14 * lap.l2_norm()
    assert spectral.curl(spectral.grad(f)).l2_norm() <= 1e-13 * f.l2_norm()


def test_derivative_matches_finite_difference_of_smooth_field():
    g = build_grid(2, 32)
    x, y = g.points()
    f = to_spectral(np.sin(2 * x) * np.cos(y), g)
    gx = spectral.from_spectral(spectral.grad(f))
    np.testing.assert_allclose(gx[0], 2 * np.cos(2 * x) * np.cos(y), atol=1e-12)
    np.testing.assert_allclose(gx[1], -np.sin(2 * x) * np.sin(y), atol=1e-12)
    assert not gx[2].any()


def test_derivative_kind_checks(g2, rng):
    f = random_scalar(g2, rng)
    with pytest.raises(ValueError):
        spectral.div(f)
    with pytest.raises(ValueError):
        spectral.apply_derivative(f, "hessian")


# ---------------------------------------------------------------- Leray


def test_leray_kills_gradients(g3, rng):
    phi = random_scalar(g3, rng)
    phi = ScalarField(g3, np.where(g3.k2 > 0, phi.coeffs, 0))
    out = spectral.leray_project(spectral.grad(phi))
    assert out.l2_norm() <= 1e-14 * spectral.grad(phi).l2_norm()


def test_leray_matches_per_mode_projector(g3, rng):
    v = random_vector(g3, rng)
    out = spectral.leray_project(v)
    k = g3.kvec.reshape(3, -1)
    vc = v.coeffs.reshape(3, -1)
    ref = np.empty_like(vc)
    for q in range(k.shape[1]):
        kk = k[:, q]
        n2 = kk @ kk
        P = np.eye(3) - (np.outer(kk, kk) / n2 if n2 > 0 else 0)
        ref[:, q] = P @ vc[:, q]
    np.testing.assert_allclose(out.coeffs.reshape(3, -1), ref, atol=1e-14)
    assert spectral.div(out).l2_norm() <= 1e-12 * out.l2_norm()


@given(st.integers(0, 2**32 - 1), st.sampled_from([(2, 16), (3, 8)]))
def test_leray_idempotent_property(seed, dn):
    g = build_grid(*dn)
    v = random_vector(g, np.random.default_rng(seed))
    p = spectral.leray_project(v)
    assert (spectral.leray_project(p) - p).l2_norm() <= 1e-12 * max(p.l2_norm(), 1e-300)
    assert p.l2_norm() <= v.l2_norm() * (1 + 1e-14)


# ---------------------------------------------------------------- products


def test_mode_addition_and_identity(g2, rng):
    c = np.zeros(g2.shape, complex)
    c[1, 0] = 1.0
    e = ScalarField(g2, c)
    sq = spectral.pointwise_product(e, e)
    ref = np.zeros(g2.shape, complex)
    ref[2, 0] = 1.0
    np.testing.assert_allclose(sq.coeffs, ref, atol=1e-15)
    f = random_scalar(g2, rng)
    one = ScalarField(g2, np.where(g2.k2 == 0, 1.0, 0.0))
    assert (spectral.pointwise_product(f, one) - f).l2_norm() <= 1e-14 * f.l2_norm()


def direct_convolution(a, b, n, d):
    freqs = np.fft.fftfreq(n, 1.0 / n).astype(int)
    out = np.zeros((n,) * d, complex)
    nz_a = [(i, a[i]) for i in itertools.product(range(n), repeat=d) if a[i] != 0]
    nz_b = [(i, b[i]) for i in itertools.product(range(n), repeat=d) if b[i] != 0]
    for ia, va in nz_a:
        for ib, vb in nz_b:
            xi = [freqs[p] + freqs[q] for p, q in zip(ia, ib)]
            if all(-n // 2 <= x < n // 2 for x in xi):
                out[tuple(x % n for x in xi)] += va * vb
    return out


@pytest.mark.parametrize("d,n", [(2, 16), (3, 8)])
def test_product_matches_direct_convolution(d, n, rng):
    g = build_grid(d, n)
    f, h = random_scalar(g, rng), random_scalar(g, rng)
    p = spectral.pointwise_product(f, h)
    ref = direct_convolution(f.coeffs, h.coeffs, n, d)
    assert np.abs(p.coeffs - ref).max() <= 1e-12 * np.abs(ref).max()


def test_cross_and_dot_products_against_physical(rng):
    g = build_grid(2, 16)
    lim = spectral.friedrichs_cutoff
    u = lim(random_vector(g, rng), 3)
    v = lim(random_vector(g, rng), 3)
    # band-limited below n/4: products are exactly representable
    up, vp = spectral.from_spectral(u), spectral.from_spectral(v)
    np.testing.assert_allclose(spectral.from_spectral(spectral.cross_product(u, v)), np.cross(up, vp, axis=0),
                               atol=1e-13)
    np.testing.assert_allclose(spectral.from_spectral(spectral.dot_product(u, v)), np.sum(up * vp, axis=0),
                               atol=1e-13)
    adv = spectral.from_spectral(spectral.advect(u, v))
    gv = [spectral.from_spectral(spectral.grad(c)) for c in v.components]
    ref = np.stack([sum(up[a] * gv[b][a] for a in range(3)) for b in range(3)])
    np.testing.assert_allclose(adv, ref, atol=1e-13)


def test_grid_mismatch_rejected(rng):
    a = random_scalar(build_grid(2, 8), rng)
    b = random_scalar(build_grid(2, 16), rng)
    with pytest.raises(ValueError):
        spectral.pointwise_product(a, b)


# ---------------------------------------------------------------- Friedrichs


def test_friedrichs_examples(g2, rng):
    f = random_scalar(g2, rng)
    full = spectral.friedrichs_cutoff(f, g2.n / 2 * np.sqrt(2))
    np.testing.assert_array_equal(full.coeffs, f.coeffs)
    c = np.zeros(g2.shape, complex)
    c[3, 4] = 1.0  # |xi| = 5
    assert spectral.friedrichs_cutoff(ScalarField(g2, c), 3).l2_norm() == 0
    J = spectral.friedrichs_cutoff(f, 4)
    lattice_sum = sum(abs(f.coeffs[i]) ** 2 for i in np.ndindex(g2.shape) if g2.k2[i] <= 16)
    assert J.l2_norm() ** 2 == pytest.approx(lattice_sum, rel=1e-13)
    np.testing.assert_array_equal(spectral.friedrichs_cutoff(J, 4).coeffs, J.coeffs)
    with pytest.raises(ValueError):
        spectral.friedrichs_cutoff(f, 0)


# ---------------------------------------------------------------- dyadic blocks


def test_profile_matches_independent_formula():
    r = np.linspace(0, 4, 97)
    np.testing.assert_allclose(dyadic.chi(r), [chi_ref(x) for x in r], atol=1e-15)
    assert np.all(dyadic.chi(np.array([0.0, 0.5, 0.74])) == 1.0)
    assert np.all(dyadic.chi(np.array([4 / 3, 2.0])) == 0.0)


@pytest.mark.parametrize("d,n", [(2, 64), (3, 32)])
def test_partition_of_unity(d, n):
    prof = dyadic.dyadic_profile(build_grid(d, n))
    assert np.abs(prof.mult.sum(axis=0) - 1).max() <= 1e-14
    assert np.all(prof.mult >= -1e-15)


def test_plane_wave_below_three_quarters_is_low_block():
    g = build_grid(2, 16)
    c = np.zeros(g.shape, complex)
    c[0, 0] = 1.0
    f = ScalarField(g, c)
    assert (dyadic.dyadic_block(f, -1) - f).l2_norm() == 0
    assert all(dyadic.dyadic_block(f, k).l2_norm() == 0 for k in range(4))


def test_plane_wave_radius_two_splits_between_blocks_zero_and_one():
    g = build_grid(2, 16)
    c = np.zeros(g.shape, complex)
    c[2, 0] = 1.0
    f = ScalarField(g, c)
    amps = {k: dyadic.dyadic_block(f, k).coeffs[2, 0].real for k in range(-1, 4)}
    ref0 = chi_ref(1.0) - chi_ref(2.0)
    ref1 = chi_ref(0.5) - chi_ref(1.0)
    assert amps[0] == pytest.approx(ref0, abs=1e-15)
    assert amps[1] == pytest.approx(ref1, abs=1e-15)
    assert amps[-1] == 0 and amps[2] == 0 and amps[3] == 0
    assert amps[0] + amps[1] == pytest.approx(1.0, abs=1e-15)


def test_low_pass(g2, rng):
    f = random_scalar(g2, rng)
    assert (dyadic.low_pass(f, 0) - dyadic.dyadic_block(f, -1)).l2_norm() == 0
    s3 = sum((dyadic.dyadic_block(f, k) for k in range(-1, 3)), ScalarField.zeros(g2))
    assert (dyadic.low_pass(f, 3) - s3).l2_norm() <= 1e-15 * f.l2_norm()
    assert (dyadic.low_pass(f, 50) - f).l2_norm() <= 1e-15 * f.l2_norm()
    with pytest.raises(ValueError):
        dyadic.low_pass(f, -1)
    with pytest.raises(ValueError):
        dyadic.dyadic_block(f, -2)


@given(st.integers(0, 2**32 - 1))
def test_reconstruction_and_quasi_orthogonality(seed):
    g = build_grid(2, 32)
    f = random_scalar(g, np.random.default_rng(seed))
    prof = dyadic.dyadic_profile(g)
    blocks = prof.mult * f.coeffs
    assert np.linalg.norm(blocks.sum(axis=0) - f.coeffs) <= 1e-13 * f.l2_norm()
    for m in range(prof.nblocks):
        for k in range(prof.nblocks):
            if abs(m - k) >= 2:
                assert np.abs(prof.mult[m] * blocks[k]).max() == 0


def test_paraproduct_blocks_are_localized(rng):
    # Delta_m (S_{k-1} f Delta_k f) vanishes for |m - k| >= 5
    g = build_grid(2, 64)
    f = random_scalar(g, rng, decay=0.0)
    prof = dyadic.dyadic_profile(g)
    for k in range(1, prof.top + 1):
        prod = spectral.pointwise_product(dyadic.low_pass(f, k - 1), dyadic.dyadic_block(f, k))
        for m in range(-1, prof.top + 1):
            if abs(m - k) >= 5:
                assert dyadic.dyadic_block(prod, m).l2_norm() <= 1e-14 * prod.l2_norm()


@pytest.mark.parametrize("k", range(5))
def test_bernstein_ratio_bounds(k, rng):
    g = build_grid(2, 64)
    prof = dyadic.dyadic_profile(g)
    for _ in range(40):
        b = prof.multiplier(k) * random_scalar(g, rng, decay=0.0).coeffs
        ratio = np.sqrt(np.sum(g.k2 * np.abs(b) ** 2)) / (2.0**k * np.sqrt(np.sum(np.abs(b) ** 2)))
        assert 0.75 * (1 - 1e-6) <= ratio <= 8 / 3


def test_vector_field_shape_checks(g2):
    with pytest.raises(ValueError):
        VectorField(g2, np.zeros(g2.shape))
    with pytest.raises(ValueError):
        VectorField.from_components([ScalarField.zeros(g2)] * 2)
    with pytest.raises(ValueError):
        to_spectral(np.zeros(5), g2)
