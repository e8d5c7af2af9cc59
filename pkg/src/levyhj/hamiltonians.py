"""Hamiltonian catalog with declared, sample-verified regularity metadata.

Every evaluator takes ``(t, x, u, p)`` with ``x`` and ``p`` of shape
``(d, ...)`` and ``u`` of shape ``(...)``, and broadcasts.

Metadata flags:

* ``smooth`` -- second derivatives in ``(x, u, p)`` locally bounded uniformly in x.
* ``x_lipschitz`` -- ``|H(x,p) - H(y,p)| <= C (1 + |p|) |x - y|`` with
  ``C = x_lipschitz_constant``.
* ``globally_lipschitz`` -- ``H = H(p)`` and both ``H`` and ``D_p H`` are
  globally Lipschitz; ``lipschitz_p`` is the constant for ``H``.
* ``monotonicity`` -- ``H(v) - H(u) >= monotonicity * (v - u)`` for ``v >= u``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .grid import Field

__all__ = [
    "Hamiltonian",
    "HamiltonianMetadataError",
    "ham_zero",
    "ham_quadratic",
    "ham_smooth_lipschitz",
    "ham_with_zero_order",
    "ham_x_dependent",
    "apply_hamiltonian",
    "verify_metadata",
]


def _zeros_like_p(t, x, u, p):
    return np.zeros_like(np.asarray(p, dtype=float))


def _zeros_like_u(t, x, u, p):
    return np.zeros(np.broadcast_shapes(np.shape(u), np.shape(p)[1:]))


@dataclass(frozen=True, eq=False)
class Hamiltonian:
    name: str
    eval: Callable
    grad_p: Callable
    grad_u: Callable = _zeros_like_u
    grad_x: Callable = _zeros_like_p
    monotonicity: float = 0.0
    smooth: bool = True
    x_lipschitz: bool = True
    globally_lipschitz: bool = False
    lipschitz_p: Union[float, str] = "local"
    lipschitz_dp: Optional[float] = None
    x_lipschitz_constant: float = 0.0
    x_independent: bool = True

    def __call__(self, t, x, u, p):
        return self.eval(t, x, u, p)

    @property
    def params(self) -> str:
        return self.name


class HamiltonianMetadataError(AssertionError):
    pass


def _pnorm(p):
    p = np.asarray(p, dtype=float)
    return np.sqrt(np.sum(p * p, axis=0))


def ham_zero() -> Hamiltonian:
    """``H = 0``: the linear baseline."""
    return Hamiltonian(
        "zero",
        lambda t, x, u, p: _zeros_like_u(t, x, u, p),
        _zeros_like_p,
        globally_lipschitz=True,
        lipschitz_p=0.0,
        lipschitz_dp=0.0,
    )


def ham_quadratic(c: float = 1.0) -> Hamiltonian:
    """``H = c |p|^2 / 2``; only locally Lipschitz in ``p``."""
    if not c > 0:
        raise ValueError("c must be positive")
    c = float(c)
    return Hamiltonian(
        f"quadratic(c={c:g})",
        lambda t, x, u, p: 0.5 * c * np.sum(np.asarray(p, float) ** 2, axis=0),
        lambda t, x, u, p: c * np.asarray(p, float),
        lipschitz_p="local",
    )


def ham_smooth_lipschitz(a: float = 1.0) -> Hamiltonian:
    """``H = a (sqrt(1 + |p|^2) - 1)``, globally Lipschitz with constant ``a``."""
    if not a > 0:
        raise ValueError("a must be positive")
    a = float(a)
    return Hamiltonian(
        f"smooth_lipschitz(a={a:g})",
        lambda t, x, u, p: a * (np.sqrt(1.0 + _pnorm(p) ** 2) - 1.0),
        lambda t, x, u, p: a * np.asarray(p, float) / np.sqrt(1.0 + _pnorm(p) ** 2),
        globally_lipschitz=True,
        lipschitz_p=a,
        lipschitz_dp=a,
    )


def ham_with_zero_order(base: Hamiltonian, lam: float) -> Hamiltonian:
    """``H + lam * u``; shifts the monotonicity constant by ``lam``."""
    lam = float(lam)
    be, bu = base.eval, base.grad_u
    return Hamiltonian(
        f"{base.name}+{lam:g}u",
        lambda t, x, u, p: be(t, x, u, p) + lam * np.asarray(u, float),
        base.grad_p,
        lambda t, x, u, p: bu(t, x, u, p) + lam,
        base.grad_x,
        monotonicity=base.monotonicity + lam,
        smooth=base.smooth,
        x_lipschitz=base.x_lipschitz,
        globally_lipschitz=base.globally_lipschitz and lam == 0.0,
        lipschitz_p=base.lipschitz_p,
        lipschitz_dp=base.lipschitz_dp,
        x_lipschitz_constant=base.x_lipschitz_constant,
        x_independent=base.x_independent,
    )


def ham_x_dependent(
    base: Hamiltonian, c: Callable, dc: Callable, dc_sup: float, name: str = "c(x)"
) -> Hamiltonian:
    """``c(x) * H``.

    ``dc(x)`` returns the gradient of ``c`` with shape ``(d, ...)`` and
    ``dc_sup`` bounds its norm.  If the base grows at most linearly in ``p``
    the result satisfies the x-Lipschitz condition with constant
    ``dc_sup * max(|H(0)|, lipschitz_p)``.
    """
    be, bp, bu = base.eval, base.grad_p, base.grad_u

    def ev(t, x, u, p):
        return c(x) * be(t, x, u, p)

    linear_growth = isinstance(base.lipschitz_p, float) and base.x_independent
    if linear_growth:
        h0 = float(np.abs(be(0.0, np.zeros((1, 1)), np.zeros(1), np.zeros((1, 1)))).max())
        const = dc_sup * max(h0, base.lipschitz_p)
        lip_p = base.lipschitz_p
    else:
        const = np.inf
        lip_p = base.lipschitz_p
    return Hamiltonian(
        f"{name}*{base.name}",
        ev,
        lambda t, x, u, p: c(x) * bp(t, x, u, p),
        lambda t, x, u, p: c(x) * bu(t, x, u, p),
        lambda t, x, u, p: np.asarray(dc(x)) * be(t, x, u, p),
        monotonicity=base.monotonicity if base.monotonicity == 0.0 else np.nan,
        smooth=base.smooth,
        x_lipschitz=bool(linear_growth),
        globally_lipschitz=False,
        lipschitz_p=lip_p,
        lipschitz_dp=None,
        x_lipschitz_constant=float(const),
        x_independent=False,
    )


def apply_hamiltonian(H: Hamiltonian, t: float, u: Field, Du) -> Field:
    """Pointwise ``H(t, x, u(x), Du(x))`` as a field."""
    grid = u.grid
    if any(g.grid != grid for g in Du):
        raise ValueError("gradient fields live on a different grid")
    p = np.array([g.values for g in Du])
    vals = np.broadcast_to(H.eval(t, grid.coords, u.values, p), grid.shape)
    bad = ~np.isfinite(vals)
    if np.any(bad):
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        raise FloatingPointError(f"Hamiltonian {H.name} is not finite at grid point {idx}")
    return Field(grid, vals)


def verify_metadata(H: Hamiltonian, d: int = 1, samples: int = 1000, seed: int = 0, p_max: float = 1e6) -> dict:
    """Check declared metadata by random sampling; raise on any violation.

    Checks: ``grad_p`` against central differences, the monotonicity
    constant, and (if flagged) the global Lipschitz constants of ``H`` and
    ``D_p H`` for ``|p|`` up to ``p_max``.
    """
    rng = np.random.default_rng(seed)
    t = rng.uniform(0, 1, samples)
    x = rng.uniform(-10, 10, (d, samples))
    u = rng.uniform(-3, 3, samples)
    p = rng.normal(size=(d, samples)) * 10.0 ** rng.uniform(-2, 2, samples)
    report = {}

    # gradient consistency, central differences in p with relative step
    g = np.asarray(H.grad_p(t, x, u, p), float)
    worst = 0.0
    for k in range(d):
        step = 1e-5 * np.maximum(1.0, np.abs(p[k]))
        e = np.zeros_like(p)
        e[k] = step
        fd = (H.eval(t, x, u, p + e) - H.eval(t, x, u, p - e)) / (2 * step)
        scale = np.maximum(1.0, np.abs(g[k]))
        worst = max(worst, float(np.max(np.abs(fd - g[k]) / scale)))
    report["grad_p_error"] = worst
    if worst > 1e-6:
        raise HamiltonianMetadataError(f"{H.name}: grad_p deviates from finite differences by {worst:.2e}")

    if np.isfinite(H.monotonicity):
        v = u + rng.uniform(0, 5, samples)
        gap = H.eval(t, x, v, p) - H.eval(t, x, u, p) - H.monotonicity * (v - u)
        report["monotonicity_gap"] = float(gap.min())
        if gap.min() < -1e-10 * (1 + np.abs(H.eval(t, x, u, p)).max()):
            raise HamiltonianMetadataError(f"{H.name}: monotonicity {H.monotonicity} violated by {gap.min():.2e}")

    if H.globally_lipschitz:
        q = rng.normal(size=(d, samples)) * 10.0 ** rng.uniform(-2, np.log10(p_max), samples)
        pp = rng.normal(size=(d, samples)) * 10.0 ** rng.uniform(-2, np.log10(p_max), samples)
        dist = _pnorm(pp - q)
        ok = dist > 0
        dh = np.abs(H.eval(t, x, u, pp) - H.eval(t, x, u, q))[ok] / dist[ok]
        report["lipschitz_ratio"] = float(dh.max())
        if dh.max() > H.lipschitz_p * (1 + 1e-9) + 1e-12:
            raise HamiltonianMetadataError(f"{H.name}: Lipschitz constant {H.lipschitz_p} exceeded ({dh.max():.6g})")
        if H.lipschitz_dp is not None:
            dg = _pnorm(np.asarray(H.grad_p(t, x, u, pp)) - np.asarray(H.grad_p(t, x, u, q)))[ok] / dist[ok]
            report["grad_lipschitz_ratio"] = float(dg.max())
            if dg.max() > H.lipschitz_dp * (1 + 1e-9) + 1e-12:
                raise HamiltonianMetadataError(f"{H.name}: D_p H Lipschitz constant {H.lipschitz_dp} exceeded")

    if H.x_lipschitz and not H.x_independent:
        y = x + rng.normal(scale=0.5, size=x.shape)
        dist = _pnorm(x - y)
        quot = np.abs(H.eval(t, x, u, p) - H.eval(t, y, u, p)) / ((1 + _pnorm(p)) * dist)
        report["x_lipschitz_ratio"] = float(quot.max())
        if quot.max() > H.x_lipschitz_constant * (1 + 1e-9):
            raise HamiltonianMetadataError(f"{H.name}: x-Lipschitz constant exceeded ({quot.max():.6g})")
    return report
