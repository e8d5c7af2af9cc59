import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from levyhj.estimates import (
    bernstein_gamma,
    bernstein_inequality_check,
    blowup_study,
    comparison_check,
    decay_integral,
    fit_rate,
    lipschitz_bound_check,
    schauder_norms,
    schauder_uniform_check,
    supbound_check,
)
from levyhj.grid import Field, PeriodicGrid, spectral_gradient
from levyhj.hamiltonians import ham_quadratic, ham_smooth_lipschitz, ham_with_zero_order, ham_zero
from levyhj.oracles import cole_hopf, gaussian_bump
from levyhj.solver import Problem, SolverConfig, march
from levyhj.symbols import (
    fractional_density,
    symbol_anisotropic,
    symbol_cgmy,
    symbol_drift,
    symbol_fractional,
    symbol_laplacian,
    symbol_riesz_feller,
    symbol_sum,
)

LAP = symbol_laplacian(1)
FRAC = symbol_fractional(1, 1.5)
G256 = PeriodicGrid(1, 256, 2 * np.pi)


def band_limited(grid, rng, modes=8):
    kmax = grid.n // 4
    vals = np.zeros(grid.shape)
    for _ in range(modes):
        k = rng.integers(1, kmax, size=grid.d)
        arg = sum(kk * 2 * np.pi * c / grid.L for kk, c in zip(k, grid.coords))
        vals += rng.normal() * np.cos(arg + rng.uniform(0, 2 * np.pi))
    return Field(grid, vals)


# ---------------------------------------------------------------- rate fits


@given(slope=st.floats(-2, 2), c=st.floats(0.1, 10))
def test_fit_rate_recovers_power_law(slope, c):
    t = np.geomspace(1e-4, 1e-1, 20)
    fit = fit_rate("q", t, c * t**slope, (1e-4, 1e-1), slope)
    assert fit.fitted == pytest.approx(slope, abs=1e-9)
    assert fit.status == "PASS" and fit.residual < 1e-9


def test_fit_rate_needs_points():
    t = np.geomspace(1e-3, 1e-1, 5)
    assert fit_rate("q", t, t, (1e-3, 1e-1), 1.0).status == "INCONCLUSIVE"
    assert fit_rate("q", np.geomspace(1e-3, 1e-1, 9), np.ones(9), (1e-3, 1e-1), 0.0, judge=False).status == "REPORT"


# ---------------------------------------------------------------- comparison


def test_comparison_constant_shift():
    g = PeriodicGrid(1, 256, 16 * np.pi)
    u0 = gaussian_bump(g, 1.0, 1.0)
    p = Problem(LAP, ham_smooth_lipschitz(1.0), u0, 0.2)
    cfg = SolverConfig(dt=1e-2, picard_tol=1e-13)
    rep = comparison_check(p, u0, u0 + 0.3, cfg)
    assert rep.min_difference == pytest.approx(0.3, abs=1e-10)
    same = comparison_check(p, u0, u0, cfg)
    assert abs(same.min_difference) <= 2 * cfg.picard_tol


def test_comparison_burgers_bump():
    g = PeriodicGrid(1, 512, 16 * np.pi)
    u0 = gaussian_bump(g, 1.0, 1.0)
    bump = gaussian_bump(g, 0.5, 0.5, center=1.0)
    p = Problem(LAP, ham_quadratic(1.0), u0, 0.5)
    rep = comparison_check(p, u0, u0 + bump, SolverConfig(dt=1e-2, picard_tol=1e-12))
    assert rep.passed and rep.min_difference >= -1e-6
    # the Cole-Hopf transform is monotone, so the exact solutions are ordered too
    assert np.min(cole_hopf(u0 + bump, 0.5).values - cole_hopf(u0, 0.5).values) >= -1e-14


def test_comparison_rejects_unordered():
    u0 = gaussian_bump(G256, 1.0, 1.0)
    with pytest.raises(ValueError):
        comparison_check(Problem(LAP, ham_zero(), u0, 0.1), u0 + 1, u0, SolverConfig())


# ---------------------------------------------------------------- sup bound


def test_decay_integral():
    assert decay_integral(0.0, 2.0) == 2.0
    assert decay_integral(1.0, 1.0) == pytest.approx(1 - math.exp(-1))
    assert decay_integral(1e-12, 1.0) == pytest.approx(1.0)


def test_supbound_maximum_principle():
    u0 = gaussian_bump(G256, 1.0, 0.5)
    p = Problem(FRAC, ham_zero(), u0, 0.5)
    traj = march(p, SolverConfig(dt=0.05))
    assert max(np.max(np.abs(f.values)) for f in traj.fields) <= 1.0 + 1e-12
    assert supbound_check(p, traj).passed


def test_supbound_decay():
    u0 = Field(G256, np.cos(G256.x))
    p = Problem(LAP, ham_with_zero_order(ham_zero(), 1.0), u0, 1.0)
    cfg = SolverConfig(dt=1e-2, picard_tol=1e-12)
    rep = supbound_check(p, march(p, cfg), 1e-6 + 5 * cfg.picard_tol)
    np.testing.assert_allclose(rep.bound, np.exp(-rep.times), rtol=1e-12)
    assert rep.passed


def test_supbound_forced_is_sharp():
    g = PeriodicGrid(1, 256, 16 * np.pi)
    u0 = gaussian_bump(g, 1.0, 0.5)
    c = 0.3
    p = Problem(LAP, ham_zero(), u0, 0.1, forcing=lambda t: Field(g, np.full(g.shape, c)))
    traj = march(p, SolverConfig(dt=1e-2))
    rep = supbound_check(p, traj, 1e-6)
    assert rep.passed
    assert np.max(np.abs(rep.bound - (1 + c * rep.times))) < 1e-14
    assert rep.slack[0] == pytest.approx(1e-6)


# ---------------------------------------------------------------- carre du champ


def test_gamma_of_constant():
    assert np.max(np.abs(bernstein_gamma(FRAC, Field(G256, np.full(G256.shape, 3.0))).values)) < 1e-12


def test_gamma_laplacian_is_gradient_squared():
    rng = np.random.default_rng(0)
    for _ in range(5):
        u = band_limited(G256, rng)
        (du,) = spectral_gradient(u)
        np.testing.assert_allclose(bernstein_gamma(LAP, u).values, du.values**2, atol=1e-8)


def test_gamma_fractional_against_quadrature():
    # 1/2 int (u(x+y) - u(x))^2 nu(dy) for u = sin x and the density of |xi|^1.5.
    # Symmetrized, the integrand is (1 - c/2) - (1 - c) cos y - (c/2) cos 2y
    # times the density, c = cos 2x; the tail uses Fourier-weight quadrature.
    dens = fractional_density(1, 1.5)
    u = Field(G256, np.sin(G256.x))
    G = bernstein_gamma(FRAC, u).values
    for i in np.linspace(0, G256.n - 1, 16).astype(int):
        x = G256.x[i]
        c = np.cos(2 * x)
        head = integrate.quad(lambda y: (np.sin(x + y) - np.sin(x)) ** 2 * dens(y), 0, 1, limit=200)[0]
        head += integrate.quad(lambda y: (np.sin(x - y) - np.sin(x)) ** 2 * dens(y), 0, 1, limit=200)[0]
        tail = 2 * (1 - c / 2) * dens(1.0) / 1.5
        tail -= 2 * (1 - c) * integrate.quad(dens, 1, np.inf, weight="cos", wvar=1.0)[0]
        tail -= c * integrate.quad(dens, 1, np.inf, weight="cos", wvar=2.0)[0]
        assert G[i] == pytest.approx(0.5 * (head + tail), rel=1e-6, abs=1e-9)
    assert G.min() >= -1e-6 * G.max()


GAMMA_SYMBOLS = [
    LAP,
    FRAC,
    symbol_riesz_feller(1.5),
    symbol_cgmy(1, 5, 5, 1.5),
    symbol_sum(LAP, symbol_drift([2.0])),
]


@pytest.mark.parametrize("sym", GAMMA_SYMBOLS, ids=lambda s: s.describe())
@given(seed=st.integers(0, 2**32))
def test_gamma_nonnegative(sym, seed):
    u = band_limited(G256, np.random.default_rng(seed))
    G = bernstein_gamma(sym, u).values
    assert G.min() >= -1e-6 * np.max(np.abs(G))


def test_gamma_nonnegative_2d():
    g = PeriodicGrid(2, 64, 2 * np.pi)
    u = band_limited(g, np.random.default_rng(1))
    G = bernstein_gamma(symbol_anisotropic((1.2, 2.0)), u).values
    assert G.min() >= -1e-6 * np.max(np.abs(G))


# ---------------------------------------------------------------- Lipschitz / Bernstein


def test_gradient_contraction_linear():
    u0 = Field(G256, np.cos(G256.x) + 0.3 * np.sin(5 * G256.x))
    p = Problem(FRAC, ham_zero(), u0, 0.3)
    traj = march(p, SolverConfig(dt=0.03))
    top = max(np.max(np.abs(spectral_gradient(f)[0].values)) for f in traj.fields)
    assert top <= np.max(np.abs(spectral_gradient(u0)[0].values)) + 1e-12


def test_bernstein_constant_field():
    u0 = Field(G256, np.full(G256.shape, 1.0))
    p = Problem(LAP, ham_smooth_lipschitz(1.0), u0, 0.1)
    rep = bernstein_inequality_check(p, march(p, SolverConfig(dt=0.02)))
    assert np.all(np.abs(rep.max_excess) < 1e-12)


def test_bernstein_holds_for_burgers():
    g = PeriodicGrid(1, 512, 16 * np.pi)
    p = Problem(LAP, ham_quadratic(1.0), gaussian_bump(g, 1.0, 1.0), 0.2)
    traj = march(p, SolverConfig(dt=1e-3, picard_tol=1e-12), stride=10)
    assert bernstein_inequality_check(p, traj).passed


def test_burgers_gradient_stable_under_refinement():
    levels = []
    for n, dt, stride in ((512, 2e-3, 10), (1024, 1e-3, 20)):
        g = PeriodicGrid(1, n, 16 * np.pi)
        p = Problem(LAP, ham_quadratic(1.0), gaussian_bump(g, 1.0, 1.0), 1.0)
        levels.append((p, march(p, SolverConfig(dt=dt, picard_tol=1e-12), stride=stride)))
    rep = lipschitz_bound_check(levels, bernstein_tol=None)
    assert rep.spread < 1e-2
    # exact gradient from the Cole-Hopf solution
    p, traj = levels[-1]
    exact = max(np.max(np.abs(spectral_gradient(cole_hopf(p.u0, t))[0].values)) for t in traj.times[1:])
    top = max(np.max(np.abs(spectral_gradient(f)[0].values)) for f in traj.fields[1:])
    assert top == pytest.approx(exact, rel=1e-5)


# ---------------------------------------------------------------- Schauder


def test_schauder_norm_of_sine():
    u = Field(G256, np.sin(G256.x))
    # ||u|| + ||Du|| + [Du]_1 for sin: 1 + 1 + 1 (up to grid sampling)
    assert schauder_norms(u, 2.0) == pytest.approx(3.0, rel=1e-3)
    with pytest.raises(ValueError):
        schauder_norms(u, 3.5)


def test_schauder_linear_scaling():
    u0 = Field(G256, np.cos(G256.x) + 0.2 * np.cos(3 * G256.x))
    p = Problem(FRAC, ham_zero(), u0, 0.2)
    rep = schauder_uniform_check(p, SolverConfig(dt=5e-3), scales=(1.0, 2.0))
    assert rep.lhs[1] == pytest.approx(2 * rep.lhs[0], rel=1e-12)
    assert rep.spread < 1e-12


@pytest.mark.parametrize("sym", [LAP, FRAC], ids=lambda s: s.describe())
def test_schauder_uniform_smooth_lipschitz(sym):
    u0 = Field(G256, np.cos(G256.x) + 0.2 * np.cos(3 * G256.x))
    p = Problem(sym, ham_smooth_lipschitz(1.0), u0, 0.2)
    rep = schauder_uniform_check(p, SolverConfig(dt=5e-3, picard_tol=1e-12))
    assert rep.passed, rep.ratios


# ---------------------------------------------------------------- blow-up


def test_blowup_requires_global_lipschitz():
    with pytest.raises(ValueError, match="globally Lipschitz"):
        blowup_study(LAP, ham_quadratic(1.0), PeriodicGrid(1, 4096, 2 * np.pi), 0.5)


def test_blowup_floor_too_high():
    rep = blowup_study(LAP, ham_zero(), PeriodicGrid(1, 64, 2 * np.pi), 0.5)
    assert rep.status == "INCONCLUSIVE" and "need n >=" in rep.note


def test_blowup_claimed_exponents():
    g = PeriodicGrid(1, 4096, 2 * np.pi)
    rep = blowup_study(LAP, ham_zero(), g, 0.5)
    assert rep.case == "ii"
    assert rep.fit("sup_Du").claimed == pytest.approx(-0.25)
    frac = blowup_study(symbol_fractional(1, 1.4), ham_zero(), g, 0.5)
    assert frac.case == "i"
    assert frac.fit("sup_Du").claimed == pytest.approx(-0.5 / 1.4)
    assert frac.fit("holder_top_Du").claimed == pytest.approx(-(1.4 - 0.1) / 1.4)


@pytest.mark.parametrize("alpha,beta", [(2.0, 0.5), (1.5, 0.3)])
def test_blowup_linear_sanity(alpha, beta):
    sym = LAP if alpha == 2.0 else symbol_fractional(1, alpha)
    rep = blowup_study(sym, ham_zero(), PeriodicGrid(1, 4096, 2 * np.pi), beta)
    fit = rep.fit("sup_Du")
    assert fit.fitted == pytest.approx(-(1 - beta) / alpha, abs=0.05)
