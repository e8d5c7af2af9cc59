import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from levyhj.grid import (
    Field,
    PeriodicGrid,
    apply_multiplier,
    forward_transform,
    holder_seminorm,
    inverse_transform,
    read_snapshot,
    spectral_gradient,
    spectral_hessian,
    write_snapshot,
)
from levyhj.heatkernel import semigroup_multiplier
from levyhj.symbols import symbol_fractional

G = PeriodicGrid(1, 64, 2 * np.pi)


def test_grid_geometry():
    g = PeriodicGrid(1, 128, 16 * np.pi)
    assert g.h * g.n == g.L
    k = np.sort(g.freqs * g.L / (2 * np.pi))
    np.testing.assert_allclose(k, np.arange(-64, 64), atol=1e-9)
    with pytest.raises(ValueError):
        PeriodicGrid(1, 100, 1.0)


def test_constant_and_cosine_coefficients():
    c = forward_transform(Field(G, np.full(G.shape, 3.0)))
    assert c[0] == pytest.approx(3.0)
    assert np.max(np.abs(c[1:])) < 1e-14
    cos = forward_transform(Field.from_function(G, lambda x: np.cos(2 * np.pi * x / G.L)))
    assert abs(cos[1]) == pytest.approx(0.5) and abs(cos[-1]) == pytest.approx(0.5)
    mask = np.ones(G.n, bool)
    mask[[1, -1]] = False
    assert np.max(np.abs(cos[mask])) < 1e-14


@given(arrays(np.float64, 64, elements=st.floats(-1e3, 1e3)))
def test_round_trip(values):
    f = Field(G, values)
    back = inverse_transform(forward_transform(f), G)
    np.testing.assert_allclose(back.values, values, rtol=1e-12, atol=1e-12 * (1 + np.max(np.abs(values))))


def test_round_trip_2d():
    g = PeriodicGrid(2, 32, 3.0)
    v = np.random.default_rng(1).normal(size=g.shape)
    np.testing.assert_allclose(inverse_transform(forward_transform(Field(g, v)), g).values, v, atol=1e-12)


def test_gradient_of_sine():
    g = PeriodicGrid(1, 128, 5.0)
    k = 2 * np.pi / g.L
    (du,) = spectral_gradient(Field.from_function(g, lambda x: np.sin(k * x)))
    np.testing.assert_allclose(du.values, k * np.cos(k * g.x), atol=1e-10)
    (dc,) = spectral_gradient(Field(g, np.full(g.shape, 2.0)))
    assert np.max(np.abs(dc.values)) == 0


def test_gradient_matches_finite_differences():
    # band-limited field: centred differences converge at O(h^2)
    errs = []
    for n in (128, 256, 512):
        g = PeriodicGrid(1, n, 2 * np.pi)
        u = Field.from_function(g, lambda x: np.sin(3 * x) + 0.5 * np.cos(5 * x + 1))
        (du,) = spectral_gradient(u)
        fd = (np.roll(u.values, -1) - np.roll(u.values, 1)) / (2 * g.h)
        errs.append(np.max(np.abs(fd - du.values)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.9)


def test_hessian_2d():
    g = PeriodicGrid(2, 32, 2 * np.pi)
    u = Field.from_function(g, lambda x, y: np.sin(x) * np.cos(2 * y))
    H = spectral_hessian(u)
    x, y = g.coords
    np.testing.assert_allclose(H[0][1].values, -2 * np.cos(x) * np.sin(2 * y), atol=1e-10)
    np.testing.assert_allclose(H[1][1].values, -4 * np.sin(x) * np.cos(2 * y), atol=1e-10)


def test_multipliers():
    g = PeriodicGrid(1, 64, 4.0)
    k = 2 * np.pi / g.L
    u = Field.from_function(g, lambda x: np.sin(k * x))
    np.testing.assert_allclose(apply_multiplier(u, lambda xi: np.ones_like(xi)).values, u.values, atol=1e-15)
    lap = apply_multiplier(u, lambda xi: -(xi**2))
    np.testing.assert_allclose(lap.values, -(k**2) * u.values, atol=1e-10)


def test_semigroup_multiplier_composes():
    sym = symbol_fractional(1, 1.5)
    g = PeriodicGrid(1, 128, 2 * np.pi)
    u = Field(g, np.random.default_rng(0).normal(size=g.shape))
    full = semigroup_multiplier(sym, 0.3, g)
    two = semigroup_multiplier(sym, 0.1, g) * semigroup_multiplier(sym, 0.2, g)
    np.testing.assert_allclose(full, two, atol=1e-12)
    a = apply_multiplier(apply_multiplier(u, semigroup_multiplier(sym, 0.1, g)), semigroup_multiplier(sym, 0.2, g))
    np.testing.assert_allclose(a.values, apply_multiplier(u, full).values, atol=1e-10)


def test_holder_of_constant_and_sine():
    assert holder_seminorm(Field(G, np.full(G.shape, 4.0)), 0.5) == 0
    g = PeriodicGrid(1, 64, 2 * np.pi)
    k = 2 * np.pi / g.L
    u = Field.from_function(g, lambda x: np.sin(k * x))
    # brute force over every pair of grid points within L/4
    v = u.values
    brute = max(
        np.max(np.abs(np.roll(v, s) - v)) / (s * g.h) for s in range(1, g.n // 4 + 1)
    )
    got = holder_seminorm(u, 1.0)
    assert got == pytest.approx(brute)
    assert k * (1 - g.h) <= got <= k + g.h


@given(shift=st.integers(0, 63), scale=st.floats(0.1, 10))
def test_holder_translation_and_scaling(shift, scale):
    v = np.random.default_rng(3).normal(size=G.shape)
    a = holder_seminorm(Field(G, v), 0.6)
    assert holder_seminorm(Field(G, np.roll(v, shift)), 0.6) == pytest.approx(a)
    assert holder_seminorm(Field(G, scale * v), 0.6) == pytest.approx(scale * a)


def test_snapshot_round_trip(tmp_path):
    g = PeriodicGrid(2, 16, 3.5)
    u = Field(g, np.random.default_rng(2).normal(size=g.shape))
    write_snapshot(tmp_path / "u.lhj", u, 0.25)
    raw = (tmp_path / "u.lhj").read_bytes()
    assert raw[:4] == b"LHJ1"
    v, t = read_snapshot(tmp_path / "u.lhj")
    assert t == 0.25 and v.grid == g
    assert np.array_equal(v.values, u.values)


def test_field_rejects_nonfinite():
    with pytest.raises(ValueError):
        Field(G, np.full(G.shape, np.nan))
