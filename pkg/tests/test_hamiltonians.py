import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from levyhj.grid import Field, PeriodicGrid
from levyhj.hamiltonians import (
    Hamiltonian,
    HamiltonianMetadataError,
    apply_hamiltonian,
    ham_quadratic,
    ham_smooth_lipschitz,
    ham_with_zero_order,
    ham_x_dependent,
    ham_zero,
    verify_metadata,
)

X0 = np.zeros((2, 1))


def _at(H, p, u=0.0):
    p = np.asarray(p, float).reshape(len(p), 1)
    return H.eval(0.0, np.zeros_like(p), np.array([u]), p)


def test_zero():
    H = ham_zero()
    assert _at(H, [1.0, -2.0]) == 0
    assert np.all(H.grad_p(0.0, X0, np.zeros(1), np.ones((2, 1))) == 0)
    assert H.lipschitz_p == 0


def test_quadratic():
    H = ham_quadratic(1.0)
    assert _at(H, [0.0, 0.0]) == 0
    assert _at(H, [3.0, 4.0]) == pytest.approx(12.5)
    np.testing.assert_allclose(H.grad_p(0.0, X0, np.zeros(1), np.array([[3.0], [4.0]])).ravel(), [3, 4])
    assert not H.globally_lipschitz


def test_smooth_lipschitz():
    a = 2.5
    H = ham_smooth_lipschitz(a)
    assert _at(H, [0.0]) == 0
    big = 1e8
    slope = (_at(H, [2 * big]) - _at(H, [big])) / big
    assert slope == pytest.approx(a, rel=1e-6)
    p = np.random.default_rng(0).normal(scale=100, size=(2, 10_000))
    g = H.grad_p(0.0, np.zeros_like(p), np.zeros(p.shape[1]), p)
    assert np.max(np.sqrt(np.sum(g**2, axis=0))) <= a


def test_zero_order():
    H = ham_with_zero_order(ham_zero(), 1.0)
    assert _at(H, [0.0], u=2.0) == pytest.approx(2.0)
    assert H.monotonicity == 1.0
    assert ham_with_zero_order(ham_smooth_lipschitz(1.0), 0.5).monotonicity == 0.5
    verify_metadata(H, d=1)


def test_x_dependent_identity():
    base = ham_smooth_lipschitz(1.0)
    H = ham_x_dependent(base, lambda x: np.ones_like(x[0]), lambda x: np.zeros_like(x), 0.0)
    rng = np.random.default_rng(1)
    p, x = rng.normal(size=(1, 50)), rng.normal(size=(1, 50))
    np.testing.assert_allclose(H.eval(0.0, x, np.zeros(50), p), base.eval(0.0, x, np.zeros(50), p))


def test_x_dependent_lipschitz_quotient():
    # brute-force maximum of |H(x,p) - H(y,p)| / ((1 + |p|) |x - y|) over 1e4 tuples
    L, a = 2 * np.pi, 1.0
    k = 2 * np.pi / L
    base = ham_smooth_lipschitz(a)
    H = ham_x_dependent(
        base, lambda x: 1 + 0.5 * np.sin(k * x[0]), lambda x: 0.5 * k * np.cos(k * x)[:1], 0.5 * k
    )
    rng = np.random.default_rng(2)
    x = rng.uniform(-L / 2, L / 2, (1, 10_000))
    y = x + rng.normal(scale=0.3, size=x.shape)
    p = rng.normal(size=(1, 10_000)) * 10.0 ** rng.uniform(-2, 3, 10_000)
    u = np.zeros(10_000)
    quot = np.abs(H.eval(0, x, u, p) - H.eval(0, y, u, p)) / ((1 + np.abs(p[0])) * np.abs(x - y)[0])
    assert quot.max() <= (np.pi / L) * a * 2
    assert H.x_lipschitz_constant <= (np.pi / L) * a * 2
    rep = verify_metadata(H, d=1)
    assert rep["x_lipschitz_ratio"] <= H.x_lipschitz_constant
    # grad_p' = c(x) grad_p
    np.testing.assert_allclose(H.grad_p(0, x, u, p), (1 + 0.5 * np.sin(k * x[0])) * base.grad_p(0, x, u, p))


@pytest.mark.parametrize(
    "H",
    [ham_zero(), ham_quadratic(0.7), ham_smooth_lipschitz(1.3), ham_with_zero_order(ham_quadratic(1.0), 2.0)],
    ids=lambda h: h.name,
)
@pytest.mark.parametrize("d", [1, 2])
def test_catalog_metadata(H, d):
    rep = verify_metadata(H, d=d, samples=1000)
    assert rep["grad_p_error"] < 1e-6


def test_false_metadata_detected():
    good = ham_smooth_lipschitz(1.0)
    liar = Hamiltonian("liar", good.eval, good.grad_p, globally_lipschitz=True, lipschitz_p=0.5)
    with pytest.raises(HamiltonianMetadataError):
        verify_metadata(liar)
    bad_grad = Hamiltonian("bad_grad", good.eval, lambda t, x, u, p: 2 * good.grad_p(t, x, u, p))
    with pytest.raises(HamiltonianMetadataError):
        verify_metadata(bad_grad)
    bad_mono = Hamiltonian("bad_mono", good.eval, good.grad_p, monotonicity=1.0)
    with pytest.raises(HamiltonianMetadataError):
        verify_metadata(bad_mono)


def test_apply_hamiltonian_fields():
    g = PeriodicGrid(1, 32, 2 * np.pi)
    u = Field(g, np.zeros(g.shape))
    assert np.all(apply_hamiltonian(ham_zero(), 0.0, u, [u]).values == 0)
    two = Field(g, np.full(g.shape, 2.0))
    np.testing.assert_allclose(apply_hamiltonian(ham_quadratic(1.0), 0.0, u, [two]).values, 2.0)


@given(shift=st.integers(0, 31))
def test_apply_hamiltonian_translation(shift):
    g = PeriodicGrid(1, 32, 2 * np.pi)
    rng = np.random.default_rng(5)
    u, p = rng.normal(size=32), rng.normal(size=32)
    H = ham_smooth_lipschitz(1.0)
    a = apply_hamiltonian(H, 0.0, Field(g, u), [Field(g, p)]).values
    b = apply_hamiltonian(H, 0.0, Field(g, np.roll(u, shift)), [Field(g, np.roll(p, shift))]).values
    np.testing.assert_allclose(np.roll(a, shift), b)


@given(v=st.floats(-10, 10), du=st.floats(0, 10), p=st.floats(-1e3, 1e3), lam=st.floats(0, 5))
def test_monotonicity_invariant(v, du, p, lam):
    H = ham_with_zero_order(ham_smooth_lipschitz(1.0), lam)
    gap = _at(H, [p], u=v + du) - _at(H, [p], u=v) - lam * du
    assert gap[0] >= -1e-10 * (1 + abs(v) + du)


def test_apply_hamiltonian_reports_bad_point():
    g = PeriodicGrid(1, 8, 1.0)
    H = Hamiltonian("log", lambda t, x, u, p: np.log(p[0]), lambda t, x, u, p: 1 / p)
    p = np.ones(8)
    p[3] = -1.0
    with pytest.raises(FloatingPointError, match=r"\(3,\)"):
        with np.errstate(invalid="ignore"):
            apply_hamiltonian(H, 0.0, Field(g, np.zeros(8)), [Field(g, p)])
