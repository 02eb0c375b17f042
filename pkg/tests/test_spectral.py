import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pfcbdf.matrix_analysis import M1, build_Theta_lower, m2_constant
from pfcbdf.spectral import DomainError, Grid2D, GridMismatchError, convolution_h2_slacks

G8 = Grid2D(32, 32, 8.0, 8.0)


def mean_zero(grid, seed, smooth=True):
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(grid.shape)
    if smooth:
        f = np.fft.irfft2(np.fft.rfft2(f) * np.exp(-grid.ksq / 4), s=grid.shape)
    return f - f.mean()


def test_grid_validation():
    for bad in [(3, 8, 1, 1), (8, 7, 1, 1), (2, 2, 1, 1), (8, 8, 0, 1), (8, 8, 1, -1)]:
        with pytest.raises(ValueError):
            Grid2D(*bad)


def test_wavenumbers_signed():
    g = Grid2D(8, 8, 2 * np.pi, 2 * np.pi)
    # kx along axis 0 runs 0,1,2,3,-4,-3,-2,-1 ; ky along the half axis 0..4
    assert np.allclose(g.ksq[:, 0], [0, 1, 4, 9, 16, 9, 4, 1])
    assert np.allclose(g.ksq[0, :], [0, 1, 4, 9, 16])


def test_laplacian_eigenfunctions():
    X, Y = G8.coords()
    s = np.sin(np.pi * X / 2)
    assert np.max(np.abs(G8.laplacian(s) + (np.pi / 2) ** 2 * s)) < 1e-12
    f = s * np.sin(np.pi * Y / 2)
    assert np.max(np.abs(G8.laplacian(f) + np.pi**2 / 2 * f)) < 1e-12
    assert np.max(np.abs(G8.laplacian(np.full(G8.shape, 3.0)))) < 1e-14


def test_one_plus_lap_sq():
    X, Y = G8.coords()
    s = np.sin(np.pi * X / 2)
    # high modes are amplified ~2e4 by the multiplier, so rounding noise sits near 1e-12
    assert np.allclose(G8.one_plus_lap_sq(s), (1 - np.pi**2 / 4) ** 2 * s, atol=1e-11)
    assert np.allclose(G8.one_plus_lap_sq(np.full(G8.shape, 2.5)), 2.5, atol=1e-14)
    g = Grid2D(16, 16, 2 * np.pi, 2 * np.pi)
    Xg, _ = g.coords()
    assert np.max(np.abs(g.one_plus_lap_sq(np.cos(Xg)))) < 1e-12


def test_inv_neg_laplacian():
    X, _ = G8.coords()
    kap = np.pi / 2
    s = np.sin(kap * X)
    assert np.allclose(G8.inv_neg_laplacian(s), s / kap**2, atol=1e-13)
    f = mean_zero(G8, 1, smooth=False)
    assert np.allclose(G8.laplacian(G8.inv_neg_laplacian(f)), -f, atol=1e-11)
    assert abs(G8.inv_neg_laplacian(f).mean()) < 1e-14
    with pytest.raises(DomainError):
        G8.inv_neg_laplacian(np.ones(G8.shape))
    # atol widens the mean-zero test
    G8.inv_neg_laplacian(f + 1e-9, atol=1e-8)


def test_quadrature():
    X, Y = G8.coords()
    one = np.ones(G8.shape)
    assert G8.inner(one, one) == pytest.approx(64.0)
    assert G8.norm_l2(np.sin(np.pi * X / 2)) == pytest.approx(math.sqrt(32))
    f = np.sin(np.pi * X / 2) * np.sin(np.pi * Y / 2)
    assert G8.norm_hm1(f) == pytest.approx(G8.norm_l2(f) / math.sqrt(np.pi**2 / 2))
    assert G8.volume(np.full(G8.shape, 0.7)) == pytest.approx(64 * 0.7)
    assert G8.volume(np.zeros(G8.shape)) == 0.0
    with pytest.raises(GridMismatchError):
        G8.inner(one, np.ones((16, 16)))


def test_gradient_norm():
    X, _ = G8.coords()
    kap = np.pi / 2
    s = np.sin(kap * X)
    assert G8.gradient_norm_sq(s) == pytest.approx(kap**2 * G8.norm_l2(s) ** 2)
    assert G8.gradient_norm_sq(np.full(G8.shape, 4.0)) == pytest.approx(0.0, abs=1e-20)
    # Nyquist column and row are counted once
    g = Grid2D(8, 8, 8.0, 8.0)
    Xg, Yg = g.coords()
    nyq = np.cos(np.pi * Xg) * np.cos(np.pi * Yg)
    assert g.gradient_norm_sq(nyq) == pytest.approx(2 * np.pi**2 * g.norm_l2(nyq) ** 2)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), smooth=st.booleans())
def test_green_identities(seed, smooth):
    v, w = mean_zero(G8, seed, smooth), mean_zero(G8, seed + 1, smooth)
    a, b = G8.inner(-G8.laplacian(v), w), G8.grad_inner(v, w)
    assert abs(a - b) <= 1e-11 * (abs(a) + abs(b) + 1)
    lv = G8.laplacian(v)
    a, b = G8.inner(G8.laplacian(lv), w), G8.inner(lv, G8.laplacian(w))
    assert abs(a - b) <= 1e-11 * (abs(a) + abs(b) + 1)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), band=st.floats(0.2, 4.0))
def test_embedding_and_hoelder(seed, band):
    g = Grid2D(32, 32, 32.0, 32.0)
    rng = np.random.default_rng(seed)
    v = np.fft.irfft2(np.fft.rfft2(rng.standard_normal(g.shape)) * np.exp(-(g.ksq - band) ** 2), s=g.shape)
    v -= v.mean()
    vv = g.inner(v, v)
    lin = g.one_plus_lap(v)
    assert vv <= g.inner(lin, lin) / 3 + 1.5 * g.norm_hm1(v) ** 2 + 1e-10
    assert vv <= math.sqrt(g.gradient_norm_sq(v)) * g.norm_hm1(v) * (1 + 1e-12) + 1e-10


def test_round_trip():
    f = np.random.default_rng(5).standard_normal(G8.shape)
    assert np.max(np.abs(G8.ifft(G8.fft(f)) - f)) <= 1e-12 * np.max(np.abs(f))
    with pytest.raises(GridMismatchError):
        G8.fft(np.zeros((8, 8)))


def test_dealias_mask():
    g = Grid2D(12, 12, 1.0, 1.0)
    X, _ = g.coords()
    low = np.cos(2 * np.pi * 3 * X)     # index 3 < 12/3: kept
    high = np.cos(2 * np.pi * 5 * X)    # index 5 > 4: removed
    assert np.allclose(g.dealias(low), low)
    assert np.max(np.abs(g.dealias(high))) < 1e-14


def test_convolution_h2_slacks_matches_loop():
    m = 6
    rng = np.random.default_rng(2)
    seq = np.stack([mean_zero(G8, s) for s in rng.integers(0, 1000, m)])
    T = build_Theta_lower(4, m)
    m2 = m2_constant(4, m)
    laps = [G8.laplacian(f) for f in seq]
    lhs = sum(T[a, b] * G8.inner(laps[a], laps[b]) for a in range(m) for b in range(m))
    gg = sum(T[a, b] * G8.grad_inner(laps[a], laps[b]) for a in range(m) for b in range(m))
    l2 = sum(G8.inner(f, f) for f in seq)
    for eps in (0.4, 1.0):
        expect = eps * gg + 8 * m2**2 / (M1[4] ** 5 * eps**2) * l2 - lhs
        assert convolution_h2_slacks(G8, seq, eps, T, M1[4], m2) == pytest.approx(expect, rel=1e-12)
    with pytest.raises(GridMismatchError):
        convolution_h2_slacks(G8, np.zeros((2, 8, 8)), 1.0, T, M1[4], m2)


@settings(max_examples=15, deadline=None)
@given(k=st.sampled_from([3, 4, 5]), m=st.integers(1, 40), seed=st.integers(0, 10**6),
       eps=st.sampled_from([0.4, 1.0]))
def test_field_inequality(k, m, seed, eps):
    g = Grid2D(32, 32, 16.0, 16.0)
    seq = np.stack([mean_zero(g, seed + i) for i in range(m)])
    seq /= np.sqrt(g.cell * np.sum(seq**2))
    s = convolution_h2_slacks(g, seq, eps, build_Theta_lower(k, m), M1[k], m2_constant(k, m))
    assert s >= -1e-9
