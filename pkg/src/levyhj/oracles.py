"""Closed-form reference solutions used to validate the solver."""

from __future__ import annotations

import numpy as np

from .grid import Field, PeriodicGrid, apply_multiplier
from .heatkernel import kernel_convolve
from .symbols import Symbol, symbol_laplacian

__all__ = [
    "cole_hopf",
    "cole_hopf_trajectory",
    "gaussian_bump",
    "gaussian_derivative_l1",
    "translated_heat_flow",
]


def gaussian_bump(grid: PeriodicGrid, amplitude: float = 1.0, width: float = 1.0, center: float = 0.0) -> Field:
    """``amplitude * exp(-|x - center|^2 / width^2)``."""
    r2 = sum((c - center) ** 2 for c in grid.coords)
    return Field(grid, amplitude * np.exp(-r2 / width**2))


def cole_hopf(u0: Field, t: float, c: float = 1.0) -> Field:
    """Solution of ``d_t u - Laplace u + c |Du|^2 / 2 = 0`` at time ``t``.

    Uses ``u = -(2/c) log(K_t * exp(-c u0 / 2))`` with the periodic Gaussian
    kernel.
    """
    lap = symbol_laplacian(u0.grid.d)
    v = kernel_convolve(lap, t, Field(u0.grid, np.exp(-0.5 * c * u0.values)))
    if np.min(v.values) <= 0:
        raise FloatingPointError("heat flow of the transformed datum is not positive")
    return Field(u0.grid, -(2.0 / c) * np.log(v.values))


def cole_hopf_trajectory(u0: Field, times, c: float = 1.0):
    return [cole_hopf(u0, t, c) if t > 0 else u0 for t in times]


def gaussian_derivative_l1(t: float) -> float:
    """``||d_x K_t||_{L1(R)} = (pi t)^(-1/2)`` for the kernel of ``Laplace``."""
    return 1.0 / np.sqrt(np.pi * t)


def translated_heat_flow(u0: Field, t: float, drift) -> Field:
    """``(K_t * u0)(x + drift t)`` for the Laplacian kernel.

    With symbol ``|xi|^2 - i drift . xi`` the generator is
    ``Laplace + drift . D``, whose flow transports data toward ``-drift``.
    The shift is applied spectrally, so it need not be a whole cell.
    """
    grid = u0.grid
    drift = np.atleast_1d(np.asarray(drift, float))
    sym: Symbol = symbol_laplacian(grid.d)
    heat = kernel_convolve(sym, t, u0) if t > 0 else u0
    return apply_multiplier(heat, lambda *xi: np.exp(1j * t * sum(b * k for b, k in zip(drift, xi))))
