"""Periodic grids, real fields and Fourier multipliers on the torus.

The torus ``[-L/2, L/2)^d`` stands in for R^d.  Multipliers are applied on
the real-FFT half spectrum.  A frequency with a Nyquist component has no
negative partner on the grid, so the multiplier is replaced there by its
Hermitian part ``(m(xi) + conj m(-xi~)) / 2`` with ``-xi~`` the aliased
negation; for odd multipliers such as ``i xi_k`` this zeroes the Nyquist
mode of axis ``k``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable, Sequence, Union

import numpy as np
from scipy import fft as sfft

__all__ = [
    "PeriodicGrid",
    "Field",
    "forward_transform",
    "inverse_transform",
    "spectral_gradient",
    "spectral_hessian",
    "multiplier_array",
    "apply_multiplier",
    "sup_norm",
    "holder_seminorm",
    "write_snapshot",
    "read_snapshot",
    "SNAPSHOT_MAGIC",
]

SNAPSHOT_MAGIC = b"LHJ1"

Multiplier = Union[Callable[..., np.ndarray], np.ndarray]


@dataclass(frozen=True)
class PeriodicGrid:
    d: int
    n: int
    L: float = 16 * np.pi

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError("grid dimension must be 1 or 2")
        if self.n < 2 or self.n & (self.n - 1):
            raise ValueError(f"points per axis must be a power of two, got {self.n}")
        if not self.L > 0:
            raise ValueError("period must be positive")
        object.__setattr__(self, "L", float(self.L))

    @property
    def h(self) -> float:
        return self.L / self.n

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @cached_property
    def x(self) -> np.ndarray:
        """1-D node coordinates, ``-L/2 + j h``."""
        return -0.5 * self.L + self.h * np.arange(self.n)

    @cached_property
    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``(d, n, ..., n)``."""
        return np.array(np.meshgrid(*([self.x] * self.d), indexing="ij"))

    @cached_property
    def freqs(self) -> np.ndarray:
        """1-D angular frequencies ``2 pi k / L``, ``k = -n/2 .. n/2-1``, FFT order."""
        return 2 * np.pi * np.fft.fftfreq(self.n, self.h)

    @cached_property
    def half_wavenumbers(self) -> tuple:
        """Broadcastable frequency arrays matching the ``rfftn`` layout.

        The last axis holds ``k = 0 .. n/2``; index ``n/2`` is the Nyquist
        frequency, identified with ``-n/2``.
        """
        full = self.freqs
        last = full[: self.n // 2 + 1].copy()
        last[-1] = full[self.n // 2]  # -n/2
        axes = [full] * (self.d - 1) + [last]
        out = []
        for i, k in enumerate(axes):
            shp = [1] * self.d
            shp[i] = k.size
            out.append(k.reshape(shp))
        return tuple(out)

    @cached_property
    def nyquist_mask(self) -> tuple:
        """Per-axis boolean masks (broadcastable) marking Nyquist frequencies."""
        kn = self.freqs[self.n // 2]
        return tuple(k == kn for k in self.half_wavenumbers)

    @cached_property
    def aliased_negation(self) -> tuple:
        """``-xi`` on the half spectrum, keeping Nyquist components fixed."""
        return tuple(np.where(m, k, -k) for k, m in zip(self.half_wavenumbers, self.nyquist_mask))


@dataclass(frozen=True, eq=False)
class Field:
    """Real field sampled on a :class:`PeriodicGrid`; values are read-only."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"values of shape {v.shape} do not match grid {self.grid.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def from_function(cls, grid: PeriodicGrid, f: Callable[..., np.ndarray]) -> "Field":
        return cls(grid, np.broadcast_to(f(*grid.coords), grid.shape))

    def __add__(self, other):
        return Field(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return Field(self.grid, self.values - _vals(other))

    def __mul__(self, other):
        return Field(self.grid, self.values * _vals(other))

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


def _vals(other):
    return other.values if isinstance(other, Field) else other


# --------------------------------------------------------------------------
# transforms


def forward_transform(f: Field) -> np.ndarray:
    """Fourier coefficients ``c_k = n^{-d} sum_j u_j exp(-i xi_k x_j)``.

    Coefficients are in FFT order over the full spectrum, so a constant
    field ``c`` maps to ``c`` at ``xi = 0`` and ``cos(2 pi x / L)`` to ``1/2``
    at ``k = +-1``.
    """
    g = f.grid
    c = sfft.fftn(f.values) / g.size
    phase = np.exp(-1j * g.freqs * g.x[0])
    for axis in range(g.d):
        shp = [1] * g.d
        shp[axis] = g.n
        c = c * phase.reshape(shp)
    return c


def inverse_transform(coeffs: np.ndarray, grid: PeriodicGrid, imag_tol: float = 1e-10) -> Field:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != grid.shape:
        raise ValueError(f"coefficients of shape {coeffs.shape} do not match grid {grid.shape}")
    c = coeffs
    phase = np.exp(1j * grid.freqs * grid.x[0])
    for axis in range(grid.d):
        shp = [1] * grid.d
        shp[axis] = grid.n
        c = c * phase.reshape(shp)
    v = sfft.ifftn(c) * grid.size
    scale = max(1.0, float(np.max(np.abs(v))))
    if np.max(np.abs(v.imag)) > imag_tol * scale:
        raise ValueError("coefficients are not Hermitian; inverse transform would be complex")
    return Field(grid, v.real)


def rfft(values: np.ndarray) -> np.ndarray:
    return sfft.rfftn(values)


def irfft(spec: np.ndarray, grid: PeriodicGrid) -> np.ndarray:
    return sfft.irfftn(spec, s=grid.shape)


# --------------------------------------------------------------------------
# multipliers


def multiplier_array(grid: PeriodicGrid, m: Multiplier, check: bool = True, tol: float = 1e-10) -> np.ndarray:
    """Evaluate ``m`` on the half spectrum with Nyquist symmetrization.

    Raises ``ValueError`` if ``m(-xi) != conj(m(xi))`` at a frequency whose
    negation lies on the grid (the output field would not be real).
    """
    if isinstance(m, np.ndarray):
        return m
    k = grid.half_wavenumbers
    mk = np.asarray(m(*k), dtype=complex)
    mk = np.broadcast_to(mk, np.broadcast_shapes(*(kk.shape for kk in k))).copy()
    mneg = np.asarray(m(*grid.aliased_negation), dtype=complex)
    mneg = np.broadcast_to(mneg, mk.shape)
    nyq = np.zeros(mk.shape, dtype=bool)
    for mask in grid.nyquist_mask:
        nyq = nyq | mask
    if check:
        interior = ~nyq
        gap = np.abs(mk - np.conj(mneg))[interior]
        scale = 1.0 + np.abs(mk)[interior]
        if gap.size and np.max(gap / scale) > tol:
            raise ValueError("multiplier is not Hermitian (m(-xi) != conj m(xi)); output would be complex")
    return np.where(nyq, 0.5 * (mk + np.conj(mneg)), mk)


def apply_multiplier(u: Field, m: Multiplier, check: bool = True) -> Field:
    """Real field with Fourier coefficients ``m(xi) * u_hat(xi)``."""
    arr = multiplier_array(u.grid, m, check=check)
    return Field(u.grid, irfft(rfft(u.values) * arr, u.grid))


def gradient_multipliers(grid: PeriodicGrid) -> list:
    """``i xi_k`` on the half spectrum, Nyquist of axis ``k`` zeroed."""
    out = []
    for axis in range(grid.d):
        out.append(multiplier_array(grid, lambda *xi, a=axis: 1j * xi[a], check=False))
    return out


def spectral_gradient(u: Field) -> tuple:
    spec = rfft(u.values)
    return tuple(Field(u.grid, irfft(spec * m, u.grid)) for m in gradient_multipliers(u.grid))


def spectral_hessian(u: Field) -> list:
    """Second derivatives ``D_i D_j u`` as a nested list of fields."""
    grid = u.grid
    spec = rfft(u.values)
    g = gradient_multipliers(grid)
    return [[Field(grid, irfft(spec * g[i] * g[j], grid)) for j in range(grid.d)] for i in range(grid.d)]


# --------------------------------------------------------------------------
# norms


def sup_norm(u) -> float:
    if isinstance(u, (tuple, list)):
        return max(sup_norm(v) for v in u)
    return float(np.max(np.abs(_vals(u))))


def _shifts(grid: PeriodicGrid, max_cells: int):
    if grid.d == 1:
        return [(s,) for s in range(1, max_cells + 1)]
    # half plane suffices: |u(x+s) - u(x)| and |u(x-s) - u(x)| have equal sup
    out = []
    for s1 in range(0, max_cells + 1):
        for s2 in range(-max_cells, max_cells + 1):
            if s1 == 0 and s2 <= 0:
                continue
            if s1 * s1 + s2 * s2 <= max_cells * max_cells:
                out.append((s1, s2))
    return out


def holder_seminorm(u, beta: float, max_shift: float = None) -> float:
    """``max_s ||u(. + s) - u||_inf / |s|^beta`` over grid shifts ``0 < |s| <= L/4``.

    Shifts are whole cells with periodic wrap; ``max_shift`` (a length)
    narrows the range.  Sequences of fields return the maximum over
    components.
    """
    if isinstance(u, (tuple, list)):
        return max(holder_seminorm(v, beta, max_shift) for v in u)
    if not 0.0 < beta <= 1.0:
        raise ValueError(f"Holder exponent must lie in (0, 1], got {beta}")
    grid = u.grid
    limit = grid.L / 4 if max_shift is None else min(max_shift, grid.L / 4)
    cells = int(np.floor(limit / grid.h + 1e-9))
    v = u.values
    best = 0.0
    for s in _shifts(grid, cells):
        diff = np.max(np.abs(np.roll(v, s, axis=tuple(range(grid.d))) - v))
        dist = grid.h * np.sqrt(sum(c * c for c in s))
        best = max(best, diff / dist**beta)
    return float(best)


# --------------------------------------------------------------------------
# snapshots


def write_snapshot(path, field: Field, t: float = 0.0) -> None:
    """Write ``field`` in the LHJ1 binary layout (little-endian, row-major)."""
    g = field.grid
    header = SNAPSHOT_MAGIC + struct.pack("<I", g.d) + struct.pack("<" + "I" * g.d, *g.shape)
    header += struct.pack("<dd", g.L, float(t))
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(field.values, dtype="<f8").tobytes(order="C"))


def read_snapshot(path) -> tuple:
    """Return ``(field, t)`` from an LHJ1 file."""
    data = Path(path).read_bytes()
    if data[:4] != SNAPSHOT_MAGIC:
        raise ValueError(f"{path}: not an LHJ1 snapshot")
    (d,) = struct.unpack_from("<I", data, 4)
    ns = struct.unpack_from("<" + "I" * d, data, 8)
    off = 8 + 4 * d
    L, t = struct.unpack_from("<dd", data, off)
    off += 16
    if len(set(ns)) != 1:
        raise ValueError("snapshots with unequal points per axis are not supported")
    grid = PeriodicGrid(d, ns[0], L)
    count = int(np.prod(ns))
    if len(data) - off != 8 * count:
        raise ValueError(f"{path}: expected {count} values, found {(len(data) - off) // 8}")
    values = np.frombuffer(data, dtype="<f8", count=count, offset=off).reshape(ns)
    return Field(grid, values), t


def as_fields(grid: PeriodicGrid, arrays: Sequence[np.ndarray]) -> tuple:
    return tuple(Field(grid, a) for a in arrays)
