"""Fourier multipliers of translation-invariant Levy operators.

Convention: for an operator ``L`` with Levy triplet ``(B, A, nu)``,

    L u = B.Du + div(A Du) + int (u(x+z) - u(x) - Du(x).z 1_{|z|<1}) nu(dz),

the symbol ``psi`` satisfies ``F(L u)(xi) = -psi(xi) F(u)(xi)`` with
``F(u)(xi) = int e^{-i xi.x} u(x) dx``, hence

    psi(xi) = -i B.xi + xi.A xi + int (1 - e^{i xi.z} + i xi.z 1_{|z|<1}) nu(dz).

The heat kernel of ``L`` has Fourier transform ``exp(-t psi)``.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy import integrate, special

__all__ = [
    "Symbol",
    "LevyTriplet",
    "QuadConfig",
    "QuadratureError",
    "symbol_laplacian",
    "symbol_fractional",
    "symbol_anisotropic",
    "symbol_riesz_feller",
    "symbol_cgmy",
    "symbol_sum",
    "symbol_drift",
    "symbol_zero",
    "symbol_from_triplet",
    "fractional_constant",
    "fractional_density",
    "riesz_feller_triplet",
    "cgmy_triplet",
    "levy_khintchine_halfline",
]

KINDS = ("laplacian", "fractional", "anisotropic", "riesz_feller", "cgmy", "drift", "sum", "quadrature")

_counter = itertools.count()


@dataclass(frozen=True, eq=False)
class Symbol:
    """Immutable Fourier multiplier ``psi`` with a declared order.

    ``func`` takes ``d`` broadcastable frequency arrays (one per axis) and
    returns complex values.  ``axis_orders`` is set for operators whose
    kernel bound differs per coordinate direction.
    """

    func: Callable[..., np.ndarray]
    order: float
    kind: str
    d: int = 1
    params: tuple = ()
    heavy_tailed: bool = False
    axis_orders: Optional[tuple] = None
    key: tuple = field(default=None)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.d not in (1, 2):
            raise ValueError("only d in {1, 2} is supported")
        if not 0.0 <= self.order <= 2.0:
            raise ValueError(f"order must lie in [0, 2], got {self.order}")
        if self.key is None:
            object.__setattr__(self, "key", (self.kind, self.d, self.params))

    def __call__(self, *xi) -> np.ndarray:
        if len(xi) != self.d:
            raise ValueError(f"symbol of dimension {self.d} called with {len(xi)} frequency arrays")
        xi = [np.asarray(x, dtype=float) for x in xi]
        shape = np.broadcast_shapes(*(x.shape for x in xi))
        return np.broadcast_to(np.asarray(self.func(*xi), dtype=complex), shape)

    @property
    def subcritical(self) -> bool:
        """True when the declared order lies in (1, 2]."""
        return 1.0 < self.order <= 2.0

    def adjoint(self) -> "Symbol":
        """Symbol of the adjoint operator, ``xi -> conj(psi(xi))``."""
        f = self.func
        return Symbol(
            lambda *xi: np.conj(f(*xi)),
            self.order,
            self.kind,
            self.d,
            self.params,
            self.heavy_tailed,
            self.axis_orders,
            key=("adjoint",) + tuple(self.key),
        )

    def describe(self) -> str:
        if not self.params:
            return self.kind
        return self.kind + "(" + ",".join(f"{p:g}" if isinstance(p, float) else str(p) for p in self.params) + ")"


def _norm(xi) -> np.ndarray:
    if len(xi) == 1:
        return np.abs(xi[0])
    return np.sqrt(sum(x * x for x in xi))


def _check_open_order(alpha: float, name: str = "alpha") -> float:
    alpha = float(alpha)
    if not 1.0 < alpha < 2.0:
        raise ValueError(f"{name} must lie in (1, 2), got {alpha}")
    return alpha


def symbol_laplacian(d: int = 1) -> Symbol:
    """``psi(xi) = |xi|^2``, the symbol of the Laplacian."""
    if d < 1:
        raise ValueError("d must be >= 1")
    return Symbol(lambda *xi: sum(x * x for x in xi) + 0j, 2.0, "laplacian", d)


def symbol_fractional(d: int, alpha: float) -> Symbol:
    """``psi(xi) = |xi|^alpha``; the constant ``c_alpha`` is absorbed into time."""
    alpha = _check_open_order(alpha)
    return Symbol(
        lambda *xi: _norm(xi) ** alpha + 0j, alpha, "fractional", d, (alpha,), heavy_tailed=True
    )


def symbol_anisotropic(orders: Sequence[float]) -> Symbol:
    """``psi(xi) = sum_i |xi_i|^{alpha_i}``; the declared order is the smallest one."""
    orders = tuple(float(a) for a in orders)
    for a in orders:
        if not 1.0 < a <= 2.0:
            raise ValueError(f"each order must lie in (1, 2], got {a}")

    def func(*xi):
        return sum(np.abs(x) ** a for x, a in zip(xi, orders)) + 0j

    return Symbol(
        func,
        min(orders),
        "anisotropic",
        len(orders),
        orders,
        heavy_tailed=min(orders) < 2.0,
        axis_orders=orders,
    )


def symbol_riesz_feller(alpha: float, one_sided: bool = True) -> Symbol:
    """Stable operator with density ``z^{-1-alpha}`` on ``z > 0``.

    With ``one_sided=False`` the mirror density on ``z < 0`` is added, which
    gives ``c_alpha |xi|^alpha``.  Compensation is on the unit ball, so the
    one-sided symbol carries the drift ``-i xi / (alpha - 1)``.
    """
    alpha = _check_open_order(alpha)
    g = special.gamma(-alpha)  # positive for alpha in (1, 2)

    def right(x):
        # int_0^inf (1 - e^{ixz} + ixz 1_{z<1}) z^{-1-alpha} dz
        return -g * (-1j * x) ** alpha - 1j * x / (alpha - 1.0)

    def func(x):
        x = np.asarray(x, dtype=float)
        val = right(x + 0j)
        if not one_sided:
            val = val + right(-x + 0j)
        return np.where(x == 0.0, 0.0, val)

    return Symbol(func, alpha, "riesz_feller", 1, (alpha, bool(one_sided)), heavy_tailed=True)


def _upper_gamma_neg(s: float, x: float) -> float:
    """Upper incomplete gamma ``Gamma(s, x)`` for ``s`` in (-1, 0), ``x > 0``."""
    return (special.gammaincc(s + 1.0, x) * special.gamma(s + 1.0) - x**s * math.exp(-x)) / s


def symbol_cgmy(C: float, G: float, M: float, Y: float) -> Symbol:
    """CGMY tempered stable symbol with unit-ball compensation."""
    if not (C > 0 and G > 0 and M > 0):
        raise ValueError("CGMY parameters C, G, M must be positive")
    Y = _check_open_order(Y, "Y")
    C, G, M = float(C), float(G), float(M)
    cg = C * special.gamma(-Y)
    # int_{|z|>=1} z nu(dz): fully compensated form is corrected by this drift
    big_jump_mean = C * (M ** (Y - 1) * _upper_gamma_neg(1 - Y, M) - G ** (Y - 1) * _upper_gamma_neg(1 - Y, G))

    def func(x):
        x = np.asarray(x, dtype=float) + 0j
        full = cg * (
            (M - 1j * x) ** Y - M**Y + 1j * x * Y * M ** (Y - 1)
            + (G + 1j * x) ** Y - G**Y - 1j * x * Y * G ** (Y - 1)
        )
        return -full - 1j * x * big_jump_mean

    return Symbol(func, Y, "cgmy", 1, (C, G, M, Y))


def symbol_sum(a: Symbol, b: Symbol) -> Symbol:
    """Pointwise sum; the declared order is the larger of the two."""
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    fa, fb = a.func, b.func
    axis = None
    if a.order >= b.order:
        axis = a.axis_orders
    else:
        axis = b.axis_orders
    return Symbol(
        lambda *xi: fa(*xi) + fb(*xi),
        max(a.order, b.order),
        "sum",
        a.d,
        (a.describe(), b.describe()),
        heavy_tailed=a.heavy_tailed or b.heavy_tailed,
        axis_orders=axis,
        key=("sum", a.key, b.key),
    )


def symbol_drift(drift: Sequence[float]) -> Symbol:
    """``psi(xi) = -i B . xi``: the transport generator ``B . D`` (order 1)."""
    B = tuple(float(b) for b in np.atleast_1d(drift))
    if len(B) not in (1, 2):
        raise ValueError("drift must have 1 or 2 components")

    def func(*xi):
        return -1j * sum(b * x for b, x in zip(B, xi))

    return Symbol(func, 1.0, "drift", len(B), B)


def symbol_zero(d: int = 1) -> Symbol:
    """The zero operator (order 0); useful as an identity for sums."""
    return symbol_from_triplet(LevyTriplet(drift=np.zeros(d)), order=0.0)


# --------------------------------------------------------------------------
# Levy-Khintchine quadrature


@dataclass(frozen=True)
class QuadConfig:
    epsabs: float = 1e-13
    epsrel: float = 1e-11
    limit: int = 400
    max_error: float = 1e-7  # relative to 1 + |psi|


class QuadratureError(RuntimeError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True, eq=False)
class LevyTriplet:
    """Levy triplet.

    ``levy_density`` is a density on R^d minus the origin, taking ``d``
    coordinate arrays.  ``line_densities`` holds measures concentrated on
    lines through the origin as ``(direction, density_1d)`` pairs, where the
    1-D density is defined on R minus 0; axis-aligned stable parts of
    anisotropic operators live here.
    """

    drift: np.ndarray
    diffusion: Optional[np.ndarray] = None
    levy_density: Optional[Callable[..., float]] = None
    line_densities: tuple = ()
    truncation: float = 1e6

    def __post_init__(self):
        drift = np.atleast_1d(np.asarray(self.drift, dtype=float))
        object.__setattr__(self, "drift", drift)
        d = drift.size
        A = np.zeros((d, d)) if self.diffusion is None else np.atleast_2d(np.asarray(self.diffusion, float))
        if A.shape != (d, d):
            raise ValueError(f"diffusion must be {d}x{d}")
        if not np.allclose(A, A.T, atol=1e-12):
            raise ValueError("diffusion matrix must be symmetric")
        if np.linalg.eigvalsh(A).min() < -1e-12:
            raise ValueError("diffusion matrix must be positive semidefinite")
        object.__setattr__(self, "diffusion", A)
        lines = []
        for direction, dens in self.line_densities:
            w = np.asarray(direction, dtype=float)
            if w.size != d:
                raise ValueError("line direction has wrong dimension")
            lines.append((w / np.linalg.norm(w), dens))
        object.__setattr__(self, "line_densities", tuple(lines))

    @property
    def d(self) -> int:
        return self.drift.size

    def small_jump_moment(self) -> float:
        """``int (1 ^ |z|^2) nu(dz)`` on the truncation box; must be finite."""
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                total = self._moment()
            except (integrate.IntegrationWarning, OverflowError, ZeroDivisionError) as err:
                raise ValueError(f"Levy measure does not integrate 1 ^ |z|^2 ({err})") from err
        if not np.isfinite(total):
            raise ValueError("Levy measure does not integrate 1 ^ |z|^2")
        return total

    def _moment(self) -> float:
        R = self.truncation
        total = 0.0
        for _, dens in self.line_densities:
            for sgn in (1.0, -1.0):
                total += _quad(lambda z: z * z * dens(sgn * z), 0.0, 1.0)[0]
                total += _log_quad(lambda z: dens(sgn * z), R)
        if self.levy_density is not None:
            if self.d == 1:
                for sgn in (1.0, -1.0):
                    total += _quad(lambda z: z * z * self.levy_density(sgn * z), 0.0, 1.0)[0]
                    total += _log_quad(lambda z: self.levy_density(sgn * z), R)
            else:
                f = self.levy_density

                def radial(theta):
                    c, s = math.cos(theta), math.sin(theta)
                    inner = _quad(lambda r: r**3 * f(r * c, r * s), 0.0, 1.0)[0]
                    outer = _log_quad(lambda r: r * f(r * c, r * s), R)
                    return inner + outer

                total += _quad(radial, 0.0, 2 * math.pi)[0]
        return total


def _quad(f, a, b, **kw):
    kw.setdefault("limit", 400)
    return integrate.quad(f, a, b, **kw)


def _log_quad(f, R):
    """``int_1^R f(z) dz`` in the variable ``log z`` (tails span many decades)."""
    return _quad(lambda s: f(math.exp(s)) * math.exp(s), 0.0, math.log(R))[0]


def _one_minus_cos(theta):
    s = np.sin(0.5 * theta)
    return 2.0 * s * s


def _theta_minus_sin(theta):
    if abs(theta) < 1e-2:
        t2 = theta * theta
        return theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    return theta - math.sin(theta)


def levy_khintchine_halfline(rho: Callable[[float], float], xi: float, cfg: QuadConfig = QuadConfig()):
    """``int_0^inf (1 - e^{i xi z} + i xi z 1_{z<1}) rho(z) dz`` and an error estimate.

    Split at ``z = 1`` and at the first period ``z = 1/|xi|``.  Below
    ``1/|xi|`` the integrand is evaluated in Taylor-stable form; oscillatory
    stretches inside the unit ball are chunked by period; the far tail uses
    the infinite-interval Fourier rule at unit frequency after rescaling.
    """
    xi = float(xi)
    if xi == 0.0:
        return 0j, 0.0
    opts = dict(epsabs=cfg.epsabs, epsrel=cfg.epsrel, limit=cfg.limit)
    k = abs(xi)
    a = 1.0 / k
    re = im = err = 0.0

    def add(f_re, f_im, lo, hi):
        nonlocal re, im, err
        r, e1 = _quad(f_re, lo, hi, **opts)
        i, e2 = _quad(f_im, lo, hi, **opts)
        re += r
        im += i
        err += e1 + e2

    lo = min(a, 1.0)
    add(lambda z: _one_minus_cos(xi * z) * rho(z), lambda z: _theta_minus_sin(xi * z) * rho(z), 0.0, lo)
    if a < 1.0:
        # finite-interval Fourier-weighted quadrature misreports its error at
        # tight tolerances, so use the plain rule on chunks of a few periods
        edges = np.linspace(a, 1.0, int(math.ceil((1.0 - a) * k / (8 * math.pi))) + 1)
        for p, q in zip(edges[:-1], edges[1:]):
            add(lambda z: _one_minus_cos(xi * z) * rho(z), lambda z: _theta_minus_sin(xi * z) * rho(z), p, q)
    elif a > 1.0:
        edges = np.geomspace(1.0, a, int(math.ceil(math.log10(a))) + 1)
        for p, q in zip(edges[:-1], edges[1:]):
            add(lambda z: _one_minus_cos(xi * z) * rho(z), lambda z: -math.sin(xi * z) * rho(z), p, q)
    b = max(a, 1.0)
    tail, e1 = integrate.quad(rho, b, np.inf, **opts)
    scaled = lambda s: rho(s * a) * a  # noqa: E731
    c, e2 = integrate.quad(scaled, b * k, np.inf, weight="cos", wvar=1.0, epsabs=cfg.epsabs, limlst=200)
    sn, e3 = integrate.quad(scaled, b * k, np.inf, weight="sin", wvar=1.0, epsabs=cfg.epsabs, limlst=200)
    re += tail - c
    im -= math.copysign(1.0, xi) * sn
    err += e1 + e2 + e3
    return complex(re, im), err


def _line_value(dens, xi_proj: float, cfg: QuadConfig):
    """Contribution of a 1-D density on R minus 0 at projected frequency."""
    vp, ep = levy_khintchine_halfline(lambda z: dens(z), xi_proj, cfg)
    vn, en = levy_khintchine_halfline(lambda z: dens(-z), -xi_proj, cfg)
    return vp + vn, ep + en


def _planar_value(dens, xi, cfg: QuadConfig):
    """Polar-coordinate quadrature of a 2-D density."""
    x1, x2 = xi

    def ray(theta):
        c, s = math.cos(theta), math.sin(theta)
        return levy_khintchine_halfline(lambda r: r * dens(r * c, r * s), x1 * c + x2 * s, cfg)

    # the integrand in angle has kinks where xi.omega = 0
    phi0 = math.atan2(x2, x1)
    pts = sorted((phi0 + math.pi / 2) % math.pi + k * math.pi for k in (0, 1))
    opts = dict(epsabs=cfg.epsabs, epsrel=cfg.epsrel, limit=cfg.limit)
    errs = []

    def part(th, which):
        v, e = ray(th)
        if which == 0:
            errs.append(e)
        return v.real if which == 0 else v.imag

    re, e1 = _quad(lambda th: part(th, 0), 0.0, 2 * math.pi, points=pts, **opts)
    im, e2 = _quad(lambda th: part(th, 1), 0.0, 2 * math.pi, points=pts, **opts)
    return complex(re, im), e1 + e2 + 2 * math.pi * (max(errs) if errs else 0.0)


def symbol_from_triplet(
    triplet: LevyTriplet,
    quad: QuadConfig = QuadConfig(),
    order: Optional[float] = None,
    heavy_tailed: Optional[bool] = None,
) -> Symbol:
    """Symbol of a Levy triplet by Levy-Khintchine quadrature.

    Drift and diffusion parts are exact.  Each jump part is integrated
    pointwise in ``xi``; a failure to reach ``quad.max_error`` raises
    :class:`QuadratureError`.
    """
    B, A, d = triplet.drift, triplet.diffusion, triplet.d
    has_jumps = triplet.levy_density is not None or bool(triplet.line_densities)
    if has_jumps:
        triplet.small_jump_moment()
    if order is None:
        if np.any(A != 0):
            order = 2.0
        elif not has_jumps:
            order = 0.0
        else:
            raise ValueError("order must be given for a triplet with a pure-jump part")

    cache: dict = {}

    def jump_part(point):
        if point in cache:
            return cache[point]
        val, err = 0j, 0.0
        xi = np.array(point)
        for w, dens in triplet.line_densities:
            v, e = _line_value(dens, float(w @ xi), quad)
            val += v
            err += e
        if triplet.levy_density is not None:
            if d == 1:
                v, e = _line_value(triplet.levy_density, float(xi[0]), quad)
            else:
                v, e = _planar_value(triplet.levy_density, xi, quad)
            val += v
            err += e
        if err > quad.max_error * (1.0 + abs(val)):
            raise QuadratureError(f"Levy-Khintchine quadrature did not converge at xi={point}", err)
        cache[point] = val
        return val

    def func(*xi):
        xi = np.broadcast_arrays(*xi)
        shape = xi[0].shape
        out = -1j * sum(b * x for b, x in zip(B, xi)) + 0j
        out = out + sum(A[i, j] * xi[i] * xi[j] for i in range(d) for j in range(d))
        out = np.array(np.broadcast_to(out, shape), dtype=complex)
        if has_jumps:
            flat = [x.ravel() for x in xi]
            jumps = np.array([jump_part(tuple(float(f[k]) for f in flat)) for k in range(flat[0].size)])
            out = out + jumps.reshape(shape)
        return out

    if heavy_tailed is None:
        heavy_tailed = has_jumps
    return Symbol(
        func, float(order), "quadrature", d, (), heavy_tailed=heavy_tailed, key=("quadrature", next(_counter))
    )


# --------------------------------------------------------------------------
# Densities matching the closed-form catalog


def fractional_constant(alpha: float) -> float:
    """``c_alpha = 2 int_0^inf (1 - cos s) s^{-1-alpha} ds`` in closed form."""
    return -2.0 * special.gamma(-alpha) * math.cos(math.pi * alpha / 2)


def fractional_density(d: int, alpha: float) -> Callable[..., float]:
    """Levy density of the operator with symbol ``|xi|^alpha`` on R^d."""
    cd = alpha * 2 ** (alpha - 1) * special.gamma((d + alpha) / 2) / (math.pi ** (d / 2) * special.gamma(1 - alpha / 2))

    def dens(*z):
        r = math.sqrt(sum(v * v for v in z))
        return cd * r ** (-d - alpha)

    return dens


def riesz_feller_triplet(alpha: float, one_sided: bool = True) -> LevyTriplet:
    def dens(z):
        if z > 0 or not one_sided:
            return abs(z) ** (-1 - alpha)
        return 0.0

    return LevyTriplet(drift=[0.0], levy_density=dens)


def cgmy_triplet(C: float, G: float, M: float, Y: float) -> LevyTriplet:
    def dens(z):
        if z > 0:
            return C * math.exp(-M * z) * z ** (-1 - Y)
        return C * math.exp(G * z) * (-z) ** (-1 - Y)

    return LevyTriplet(drift=[0.0], levy_density=dens)
