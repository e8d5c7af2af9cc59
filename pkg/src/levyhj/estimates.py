"""Numerical checks of a priori estimates for viscous HJ equations.

Each check runs on solver trajectories and returns a small report
dataclass with a ``passed`` verdict and the measured quantities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from .grid import Field, PeriodicGrid, gradient_multipliers, holder_seminorm, irfft, multiplier_array, rfft
from .hamiltonians import Hamiltonian
from .heatkernel import DEFAULT_GUARD
from .solver import (
    Problem,
    SolverConfig,
    Trajectory,
    _spectral,
    _time_derivative,
    march,
    picard_solve,
    weierstrass_datum,
)
from .symbols import Symbol

__all__ = [
    "RateFit",
    "fit_rate",
    "ComparisonReport",
    "comparison_check",
    "SupBoundReport",
    "supbound_check",
    "decay_integral",
    "bernstein_gamma",
    "BernsteinReport",
    "bernstein_inequality_check",
    "LipschitzReport",
    "lipschitz_bound_check",
    "SchauderReport",
    "schauder_norms",
    "schauder_uniform_check",
    "BlowupReport",
    "blowup_study",
    "resolution_floor",
]


# --------------------------------------------------------------------------
# rate fitting


@dataclass
class RateFit:
    quantity: str
    times: np.ndarray
    values: np.ndarray
    window: tuple
    claimed: float
    fitted: float = math.nan
    residual: float = math.nan
    tol: float = 0.1
    points: int = 0
    status: str = "INCONCLUSIVE"
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "PASS"


def fit_rate(
    quantity: str,
    times,
    values,
    window: tuple,
    claimed: float,
    tol: float = 0.1,
    min_points: int = 8,
    judge: bool = True,
) -> RateFit:
    """Least-squares slope of ``log value`` against ``log t`` inside ``window``.

    ``residual`` is the RMS of the log-log fit residuals.  With ``judge``
    the status is PASS when ``|fitted - claimed| <= tol``; otherwise it is
    REPORT.
    """
    t = np.asarray(times, float)
    v = np.asarray(values, float)
    lo, hi = window
    sel = (t >= lo * (1 - 1e-12)) & (t <= hi * (1 + 1e-12)) & (v > 0) & np.isfinite(v)
    fit = RateFit(quantity, t, v, (float(lo), float(hi)), float(claimed), tol=tol, points=int(sel.sum()))
    if fit.points < min_points:
        fit.note = f"only {fit.points} samples in window, need {min_points}"
        return fit
    x, y = np.log(t[sel]), np.log(v[sel])
    slope, icpt = np.polyfit(x, y, 1)
    fit.fitted = float(slope)
    fit.residual = float(np.sqrt(np.mean((y - (slope * x + icpt)) ** 2)))
    if judge:
        fit.status = "PASS" if abs(fit.fitted - claimed) <= tol else "FAIL"
    else:
        fit.status = "REPORT"
    return fit


# --------------------------------------------------------------------------
# comparison principle


@dataclass
class ComparisonReport:
    min_difference: float
    tol: float
    times: np.ndarray
    min_per_time: np.ndarray

    @property
    def passed(self) -> bool:
        return self.min_difference >= -self.tol


def _require_comparison(H: Hamiltonian):
    if not H.x_lipschitz:
        raise ValueError(f"{H.name}: comparison needs H Lipschitz in x with linear growth in p")
    if not np.isfinite(H.monotonicity):
        raise ValueError(f"{H.name}: comparison needs a finite monotonicity constant in u")


def comparison_check(
    p: Problem, u0_low: Field, u0_high: Field, cfg: SolverConfig, tol: Optional[float] = None
) -> ComparisonReport:
    """March both data and report ``min (v - u)`` over all stored times."""
    _require_comparison(p.hamiltonian)
    if np.any(u0_low.values > u0_high.values):
        raise ValueError("lower datum exceeds upper datum somewhere")
    scale = max(1.0, float(np.max(np.abs(u0_low.values))), float(np.max(np.abs(u0_high.values))))
    tol = 1e-6 * scale if tol is None else tol
    lo = march(replace(p, u0=u0_low), cfg)
    hi = march(replace(p, u0=u0_high), cfg)
    # adaptive windows may place nodes differently; compare at shared times
    idx_hi = np.searchsorted(hi.times, lo.times).clip(0, hi.times.size - 1)
    shared = np.abs(hi.times[idx_hi] - lo.times) <= 1e-12 * max(1.0, p.T)
    times = lo.times[shared]
    mins = np.array(
        [float(np.min(hi.fields[j].values - lo.fields[i].values)) for i, j in zip(np.flatnonzero(shared), idx_hi[shared])]
    )
    return ComparisonReport(float(mins.min()), tol, times, mins)


# --------------------------------------------------------------------------
# sup bound


def decay_integral(gamma: float, t):
    """``int_0^t exp(-gamma s) ds``, i.e. ``(1 - exp(-gamma t)) / gamma``."""
    t = np.asarray(t, float)
    if gamma == 0:
        return t
    return -np.expm1(-gamma * t) / gamma


@dataclass
class SupBoundReport:
    times: np.ndarray
    sup_u: np.ndarray
    bound: np.ndarray
    tol: float
    gamma: float

    @property
    def slack(self) -> np.ndarray:
        return self.bound + self.tol - self.sup_u

    @property
    def passed(self) -> bool:
        return bool(np.all(self.slack >= 0))


def supbound_check(p: Problem, traj: Trajectory, tol: float = 1e-6) -> SupBoundReport:
    """``||u(t)|| <= e^{-gamma t} ||u0|| + I_gamma(t) (||f|| + ||H(., ., 0, 0)||)``."""
    gamma = p.hamiltonian.monotonicity
    if not np.isfinite(gamma):
        raise ValueError(f"{p.hamiltonian.name}: no monotonicity constant declared")
    grid = p.grid
    zero_p = np.zeros((grid.d,) + grid.shape)
    zero_u = np.zeros(grid.shape)
    f_sup, h_sup = 0.0, 0.0
    for t in traj.times:
        f = p.forcing_at(t)
        if f is not None:
            f_sup = max(f_sup, float(np.max(np.abs(f.values))))
        h0 = p.hamiltonian.eval(t, grid.coords, zero_u, zero_p)
        h_sup = max(h_sup, float(np.max(np.abs(h0))))
    t = traj.times - traj.times[0]
    u0 = float(np.max(np.abs(traj.fields[0].values)))
    bound = np.exp(-gamma * t) * u0 + decay_integral(gamma, t) * (f_sup + h_sup)
    sup_u = np.array([float(np.max(np.abs(f.values))) for f in traj.fields])
    return SupBoundReport(traj.times, sup_u, bound, tol, gamma)


# --------------------------------------------------------------------------
# carre du champ and the gradient bound


def bernstein_gamma(symbol: Symbol, u: Field) -> Field:
    """``(L(u^2) - 2 u L u) / 2`` computed spectrally.

    ``u^2`` doubles the bandwidth; for an alias-free result keep ``u``
    band-limited to half the Nyquist frequency.
    """
    grid = u.grid
    gen = -multiplier_array(grid, lambda *xi: symbol(*xi))
    Lu = irfft(gen * rfft(u.values), grid)
    Lu2 = irfft(gen * rfft(u.values**2), grid)
    return Field(grid, 0.5 * (Lu2 - 2 * u.values * Lu))


@dataclass
class BernsteinReport:
    times: np.ndarray
    max_excess: np.ndarray  # max_x (q - B) / scale, should be <= tol
    measured_C: float  # max q / (1 + w)
    bound_C: float  # max B / (1 + w)
    tol: float

    @property
    def passed(self) -> bool:
        return bool(np.all(self.max_excess <= self.tol))


def bernstein_inequality_check(
    p: Problem, traj: Trajectory, indices: Optional[Sequence[int]] = None, tol: float = 1e-3
) -> BernsteinReport:
    """Differential inequality for ``w = |Du|^2 / 2``.

    Differentiating the equation gives the identity
    ``w_t - L w + H_p . Dw = -sum_i Gamma(u_i) - Du . H_x - 2 w H_u + Df . Du``.
    Since ``Gamma >= 0`` the left side ``q`` is bounded by the last three
    terms ``B``; we check ``q - B <= tol * (1 + max w)`` at each sampled
    index, with ``w_t`` from second-order time differences.  The constant
    ``max q / (1 + w)`` is reported, not assumed.
    """
    H = p.hamiltonian
    sp = _spectral(p.symbol, p.grid)
    grid = p.grid
    n = len(traj)
    if n < 3:
        raise ValueError("need at least three stored times")
    if indices is None:
        indices = range(1, n - 1)
    w_fields: Dict[int, np.ndarray] = {}

    def w_of(i):
        if i not in w_fields:
            _, Du = sp.physical(rfft(traj.fields[i].values))
            w_fields[i] = 0.5 * np.sum(Du**2, axis=0)
        return w_fields[i]

    w_traj = Trajectory(
        traj.times, [Field(grid, w_of(i)) for i in range(n)], traj.picard_iters, traj.rho_last
    )
    excess, Cq, CB = [], -math.inf, -math.inf
    times = []
    for i in indices:
        t = float(traj.times[i])
        spec = rfft(traj.fields[i].values)
        u, Du = sp.physical(spec)
        w = w_of(i)
        w_spec = rfft(w)
        Lw = irfft(-sp.psi * w_spec, grid)
        Dw = np.array([irfft(w_spec * g, grid) for g in sp.grads])
        Hp = np.asarray(H.grad_p(t, grid.coords, u, Du), float)
        Hx = np.asarray(H.grad_x(t, grid.coords, u, Du), float)
        Hu = np.broadcast_to(np.asarray(H.grad_u(t, grid.coords, u, Du), float), grid.shape)
        wt = _time_derivative(w_traj, i)
        q = wt - Lw + np.sum(Hp * Dw, axis=0)
        B = -np.sum(Du * Hx, axis=0) - 2 * w * Hu
        f = p.forcing_at(t)
        if f is not None:
            fs = rfft(f.values)
            Df = np.array([irfft(fs * g, grid) for g in sp.grads])
            B = B + np.sum(Df * Du, axis=0)
        scale = 1.0 + float(np.max(w))
        excess.append(float(np.max(q - B)) / scale)
        Cq = max(Cq, float(np.max(q / (1 + w))))
        CB = max(CB, float(np.max(B / (1 + w))))
        times.append(t)
    return BernsteinReport(np.array(times), np.array(excess), Cq, CB, tol)


@dataclass
class LipschitzReport:
    quantities: List[float]  # sup_t ||Du(t)|| / (1 + ||Du0||) per level
    spread: float
    tol: float
    bernstein: Optional[BernsteinReport] = None

    @property
    def passed(self) -> bool:
        ok = self.spread <= self.tol and all(np.isfinite(self.quantities))
        if self.bernstein is not None:
            ok = ok and self.bernstein.passed
        return ok


def _sup_grad(sp, f: Field) -> float:
    _, Du = sp.physical(rfft(f.values))
    return float(np.max(np.sqrt(np.sum(Du**2, axis=0))))


def lipschitz_bound_check(
    levels: Sequence[tuple], tol: float = 0.1, bernstein_tol: Optional[float] = 1e-3
) -> LipschitzReport:
    """``sup_t ||Du|| / (1 + ||Du0||)`` across refinement levels.

    ``levels`` is a sequence of ``(problem, trajectory)`` pairs, coarse to
    fine.  The check passes when the quantity varies by at most ``tol``
    (relative to the finest level) and, if requested, the Bernstein
    inequality holds on the finest level.
    """
    vals = []
    for p, traj in levels:
        sp = _spectral(p.symbol, p.grid)
        top = max(_sup_grad(sp, f) for f in traj.fields)
        vals.append(top / (1 + _sup_grad(sp, traj.fields[0])))
    spread = float((max(vals) - min(vals)) / vals[-1]) if vals[-1] > 0 else 0.0
    bern = None
    if bernstein_tol is not None:
        p, traj = levels[-1]
        bern = bernstein_inequality_check(p, traj, tol=bernstein_tol)
    return LipschitzReport(vals, spread, tol, bern)


# --------------------------------------------------------------------------
# Schauder-type uniform bound


def schauder_norms(u: Field, order: float) -> float:
    """Holder norm of order ``order`` in ``(1, 3)`` from spectral derivatives.

    For ``order = 1 + s`` with ``s <= 1`` this is
    ``||u|| + ||Du|| + [Du]_s``; above 2 it is
    ``||u|| + ||Du|| + ||D^2 u|| + [D^2 u]_{order - 2}``.
    """
    if not 1 < order < 3:
        raise ValueError("order must lie in (1, 3)")
    grid = u.grid
    spec = rfft(u.values)
    gm = gradient_multipliers(grid)
    Du = [Field(grid, irfft(spec * g, grid)) for g in gm]
    total = float(np.max(np.abs(u.values))) + max(float(np.max(np.abs(f.values))) for f in Du)
    if order <= 2:
        return total + holder_seminorm(Du, order - 1)
    D2 = [Field(grid, irfft(spec * gi * gj, grid)) for gi in gm for gj in gm]
    total += max(float(np.max(np.abs(f.values))) for f in D2)
    return total + holder_seminorm(D2, order - 2)


@dataclass
class SchauderReport:
    scales: List[float]
    lhs: List[float]
    data_norms: List[float]
    ratios: List[float]
    spread: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.spread <= self.tol and all(np.isfinite(self.ratios))


def _w1inf(p: Problem, times) -> float:
    sp = _spectral(p.symbol, p.grid)
    out = 0.0
    for t in times:
        f = p.forcing_at(t)
        if f is not None:
            out = max(out, float(np.max(np.abs(f.values))) + _sup_grad(sp, f))
    return out


def schauder_uniform_check(
    p: Problem,
    cfg: SolverConfig,
    eps: float = 0.1,
    scales: Sequence[float] = (1.0, 2.0, 4.0),
    tol: float = 0.2,
    hamiltonian_constant: Optional[float] = None,
) -> SchauderReport:
    """Uniformity of ``LHS / data`` across scaled data ``lam * u0``.

    ``LHS = max ||d_t u|| + max_t ||u(t)||_{C^{1+alpha-eps}}`` with the time
    derivative from difference quotients of stored fields, and
    ``data = c_H + sup ||f||_{W^{1,inf}} + ||lam u0||_{C^{1+alpha-eps}}``.
    ``c_H`` defaults to ``sup |H(., ., 0, 0)| + lipschitz_p`` (0 for H = 0).
    Passes when ``max ratio / min ratio - 1 <= tol``.
    """
    order = 1 + p.symbol.order - eps
    H = p.hamiltonian
    if hamiltonian_constant is None:
        lip = H.lipschitz_p if isinstance(H.lipschitz_p, float) else 0.0
        grid = p.grid
        h0 = H.eval(0.0, grid.coords, np.zeros(grid.shape), np.zeros((grid.d,) + grid.shape))
        hamiltonian_constant = float(np.max(np.abs(h0))) + lip
    lhs, data, ratios = [], [], []
    for lam in scales:
        q = replace(p, u0=p.u0 * lam)
        traj = march(q, cfg)
        dts = np.diff(traj.times)
        quot = max(
            float(np.max(np.abs(b.values - a.values))) / h for a, b, h in zip(traj.fields, traj.fields[1:], dts)
        )
        reg = max(schauder_norms(f, order) for f in traj.fields)
        L = quot + reg
        D = hamiltonian_constant + _w1inf(q, traj.times) + schauder_norms(q.u0, order)
        lhs.append(L)
        data.append(D)
        ratios.append(L / D)
    spread = max(ratios) / min(ratios) - 1.0
    return SchauderReport(list(scales), lhs, data, ratios, spread, tol)


# --------------------------------------------------------------------------
# blow-up rates for Holder data


def resolution_floor(symbol: Symbol, grid: PeriodicGrid, guard: float = DEFAULT_GUARD) -> float:
    """``ln(1/guard) / Re psi(xi_max)``: earliest time with a resolved kernel."""
    kmax = abs(grid.freqs[grid.n // 2])
    xi = [np.array([kmax])] + [np.array([0.0])] * (grid.d - 1)
    edge = float(np.real(symbol(*xi))[0])
    # anisotropic symbols: weakest direction governs
    if grid.d == 2:
        edge = min(edge, float(np.real(symbol(np.array([0.0]), np.array([kmax])))[0]))
    return math.log(1.0 / guard) / edge


@dataclass
class BlowupReport:
    alpha: float
    beta: float
    eps: float
    case: str
    fits: List[RateFit]
    status: str
    t_floor: float
    note: str = ""
    times: np.ndarray = field(default_factory=lambda: np.zeros(0))
    series: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status == "PASS"

    def fit(self, name: str) -> RateFit:
        for f in self.fits:
            if f.quantity == name:
                return f
        raise KeyError(name)


def blowup_study(
    symbol: Symbol,
    H: Hamiltonian,
    grid: PeriodicGrid,
    beta: float,
    T: float = 0.04,
    eps: float = 0.1,
    seed: int = 0,
    cfg: Optional[SolverConfig] = None,
    forcing: Optional[Callable[[float], Field]] = None,
    guard: float = DEFAULT_GUARD,
    grad_tol: float = 0.1,
    preserved_tol: float = 0.05,
    min_points: int = 8,
    steps_per_doubling: int = 4,
) -> BlowupReport:
    """Fit small-time rates of norms for a Weierstrass datum of order ``beta``.

    Time is marched in doubling segments ``[t_k, 2 t_k]`` starting at the
    resolution floor, with ``steps_per_doubling`` macro steps per segment.
    Rates are fitted on ``[t_floor, T/4]``.  The gradient rate is judged
    against ``-(1 - beta)/alpha`` within ``grad_tol`` and the sup norm and
    ``C^beta`` seminorm against 0 within ``preserved_tol``; the top-order
    seminorm rate is reported only.
    """
    if not H.globally_lipschitz:
        raise ValueError(f"{H.name}: the blow-up study needs H = H(p) with H and D_p H globally Lipschitz")
    alpha = symbol.order
    if not symbol.subcritical:
        raise ValueError("order must lie in (1, 2]")
    cfg = cfg or SolverConfig(quad_rule="exponential_trapezoid", picard_tol=1e-10, picard_max=100)
    t_floor = resolution_floor(symbol, grid, guard)
    hi = T / 4
    case = "i" if alpha + beta <= 2 else "ii"
    top = alpha + beta - eps - (1 if case == "i" else 2)
    report = BlowupReport(alpha, beta, eps, case, [], "INCONCLUSIVE", t_floor)
    needed = min_points
    if t_floor * 2 ** ((needed - 1) / steps_per_doubling) > hi:
        n_min = grid.n
        while resolution_floor(symbol, PeriodicGrid(grid.d, n_min, grid.L), guard) * 2 ** (
            (needed - 1) / steps_per_doubling
        ) > hi:
            n_min *= 2
            if n_min > 2**24:
                break
        report.note = f"resolution floor {t_floor:.2e} leaves too few samples below T/4; need n >= {n_min}"
        return report

    u0 = weierstrass_datum(grid, beta, seed)
    p = Problem(symbol, H, u0, T, forcing)
    # first resolved time: one window from 0
    first, _ = picard_solve(p, 0.0, t_floor, replace(cfg, dt=t_floor / steps_per_doubling), u_start=u0)
    times, fields = [t_floor], [first.final]
    t = t_floor
    while t < T * (1 - 1e-12):
        end = min(2 * t, T)
        seg = march(replace(p, T=end), replace(cfg, dt=(end - t) / steps_per_doubling), t_start=t, u_start=fields[-1])
        times.extend(seg.times[1:])
        fields.extend(seg.fields[1:])
        t = end

    sp = _spectral(symbol, grid)
    gm = sp.grads
    sup_u, hol_u, sup_Du, sup_D2u, hol_top = [], [], [], [], []
    tt = np.array(times)
    in_window = tt <= hi * (1 + 1e-12)
    for f, inside in zip(fields, in_window):
        spec = rfft(f.values)
        Du = np.array([irfft(spec * g, grid) for g in gm])
        sup_u.append(float(np.max(np.abs(f.values))))
        sup_Du.append(float(np.max(np.sqrt(np.sum(Du**2, axis=0)))))
        if not inside:
            hol_u.append(math.nan)
            sup_D2u.append(math.nan)
            hol_top.append(math.nan)
            continue
        hol_u.append(holder_seminorm(f, beta))
        D2 = [Field(grid, irfft(spec * gi * gj, grid)) for gi in gm for gj in gm]
        sup_D2u.append(max(float(np.max(np.abs(d.values))) for d in D2))
        if case == "i":
            hol_top.append(holder_seminorm([Field(grid, d) for d in Du], top))
        else:
            hol_top.append(holder_seminorm(D2, top))
    window = (t_floor, hi)
    fits = [
        fit_rate("sup_Du", tt, sup_Du, window, -(1 - beta) / alpha, grad_tol, min_points),
        fit_rate("sup_u", tt, sup_u, window, 0.0, preserved_tol, min_points),
        fit_rate("holder_beta_u", tt, hol_u, window, 0.0, preserved_tol, min_points),
    ]
    if case == "ii":
        fits.append(fit_rate("sup_D2u", tt, sup_D2u, window, -(2 - beta) / alpha, grad_tol, min_points, judge=False))
        fits.append(fit_rate("holder_top_D2u", tt, hol_top, window, -(alpha - eps) / alpha, grad_tol, min_points, judge=False))
    else:
        fits.append(fit_rate("holder_top_Du", tt, hol_top, window, -(alpha - eps) / alpha, grad_tol, min_points, judge=False))
    report.fits = fits
    report.times = tt
    report.series = {
        "sup_u": np.array(sup_u),
        "holder_beta_u": np.array(hol_u),
        "sup_Du": np.array(sup_Du),
        "sup_D2u": np.array(sup_D2u),
        "holder_top": np.array(hol_top),
    }
    judged = fits[:3]
    if any(f.status == "INCONCLUSIVE" for f in judged):
        report.status = "INCONCLUSIVE"
        report.note = "; ".join(f.note for f in judged if f.note)
        return report
    report.status = "PASS" if all(f.passed for f in judged) else "FAIL"
    return report
